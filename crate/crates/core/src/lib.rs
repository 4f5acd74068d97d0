//! Evaluation toolkit for virtual immunohistochemistry (IHC) staining.
//!
//! Scores computer-generated IHC tiles against pixel-aligned real IHC along
//! three metric families:
//!
//! * texture fidelity ([`texture`]): MSE, PSNR and SSIM,
//! * stain accuracy ([`segmentation`]): Dice, IoU, Hausdorff distance, TPR and
//!   TNR over DAB-derived ([`stain`]) or externally supplied masks,
//! * feature distributions ([`distribution`]): Fréchet distance, polynomial
//!   kernel MMD and k-NN manifold precision/recall over embedding sets.
//!
//! [`preprocess`] builds datasets from slides (tissue boxes, areas of
//! interest, balanced patch sampling, tile grids and stitching) and
//! [`stats`] aggregates per-tile records into reports.

pub mod distribution;
pub mod imaging;
pub mod preprocess;
pub mod segmentation;
mod sentinel;
pub mod stain;
pub mod stats;
pub mod texture;

pub use imaging::{BinaryMask, GrayImage, ImageTile, ImagingError, StructuringElement};
pub use stain::{StainBasis, StainImage};
