//! Pixel-level primitives: rasters, grayscale conversion, Otsu thresholding,
//! binary morphology, connected components and image file IO.

mod components;
mod io;
mod morphology;
mod raster;
pub(crate) mod threshold;

pub use components::{connected_components, BoundingBox, Component};
pub use io::{read_image, read_mask, write_image, write_mask};
pub use morphology::{close, dilate, erode, open};
pub use raster::{BinaryMask, GrayImage, ImageTile, StructuringElement};
pub use threshold::{otsu_threshold, otsu_threshold_histogram, threshold_mask, to_grayscale};

use std::path::PathBuf;

/// Default minimum tissue component area in pixels, measured at the
/// resolution of the supplied image.
pub const DEFAULT_MIN_AREA: usize = 15_000;

#[derive(Debug, thiserror::Error)]
pub enum ImagingError {
    #[error("invalid dimensions {width}x{height}")]
    InvalidDimensions { width: usize, height: usize },
    #[error("buffer length {actual} does not match expected {expected}")]
    BufferLength { expected: usize, actual: usize },
    #[error("dimension mismatch: {left:?} vs {right:?}")]
    DimensionMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("window {w}x{h} at ({x}, {y}) exceeds {width}x{height} image")]
    OutOfBounds {
        x: usize,
        y: usize,
        w: usize,
        h: usize,
        width: usize,
        height: usize,
    },
    #[error("image is constant; no threshold separates two classes")]
    ConstantImage,
    #[error("invalid structuring element: {0}")]
    InvalidStructuringElement(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("unsupported format for {path}: {reason}")]
    UnsupportedFormat { path: PathBuf, reason: String },
    #[error("corrupt file {path}: {reason}")]
    CorruptFile { path: PathBuf, reason: String },
}
