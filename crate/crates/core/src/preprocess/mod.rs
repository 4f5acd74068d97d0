//! Dataset construction from slides: tissue boxes, areas of interest,
//! balanced patch sampling, overlapping tile grids and stitching.
//!
//! Everything works at the resolution of the image it is given. Callers that
//! mask a downsampled slide must rescale boxes themselves.

mod grid;
mod sampling;
mod tissue;

pub use grid::{
    extract_tiles, make_grid, seam_report, stitch, Blend, PlacedTiles, Seam, SeamAxis, SeamReport, TileGrid, DEFAULT_OVERLAP,
    DEFAULT_TILE,
};
pub use sampling::{sample_patches, PatchSpec, Polarity, MAX_ATTEMPTS_PER_PATCH};
pub use tissue::{areas_of_interest, tissue_boxes, tissue_boxes_with, AoiPair, AoiParams, TissueParams, TissuePolarity};

use crate::imaging::ImagingError;
use crate::stain::StainError;

#[derive(Debug, thiserror::Error)]
pub enum PreprocessError {
    #[error(transparent)]
    Imaging(#[from] ImagingError),
    #[error(transparent)]
    Stain(#[from] StainError),
    #[error("could not place {needed} {polarity} patches of size {size}: found {found}")]
    InsufficientArea {
        polarity: Polarity,
        needed: usize,
        found: usize,
        size: usize,
    },
    #[error("image {width}x{height} is smaller than tile {tile}")]
    ImageSmallerThanTile { width: usize, height: usize, tile: usize },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("missing tiles at origins {0:?}")]
    MissingTile(Vec<(usize, usize)>),
    #[error("tile at {origin:?} is {got_w}x{got_h}, expected {tile}x{tile}")]
    SizeMismatch {
        origin: (usize, usize),
        got_w: usize,
        got_h: usize,
        tile: usize,
    },
    #[error("tile at {0:?} is not on the grid or appears twice")]
    UnexpectedTile((usize, usize)),
}
