//! Beer–Lambert color deconvolution into hematoxylin / eosin / DAB
//! concentrations, reconstruction back to RGB, and DAB-threshold masks.
//!
//! Optical density uses `OD = -log10((I + 1) / 256)`, which stays finite for
//! black pixels and maps white (255) to exactly zero. Toolchains that use
//! `I / 255` produce slightly different concentrations.

use nalgebra::{Matrix3, RowVector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::imaging::{
    dilate, erode, otsu_threshold_histogram, BinaryMask, ImageTile, ImagingError,
    StructuringElement,
};

/// Hematoxylin, eosin and DAB optical-density vectors (Ruifrok & Johnston).
pub const DEFAULT_BASIS_ROWS: [[f64; 3]; 3] = [
    [0.650, 0.704, 0.286],
    [0.072, 0.990, 0.105],
    [0.268, 0.570, 0.776],
];

pub const DEFAULT_DAB_THRESHOLD: f64 = 0.15;

const MIN_DETERMINANT: f64 = 1e-8;

#[derive(Debug, thiserror::Error)]
pub enum StainError {
    #[error("stain basis is singular (|det| = {0:e})")]
    SingularBasis(f64),
    #[error("stain basis row {0} has zero or non-finite norm")]
    DegenerateRow(usize),
    #[error("DAB threshold must be positive and finite, got {0}")]
    InvalidThreshold(f64),
    #[error(transparent)]
    Imaging(#[from] ImagingError),
}

/// Three unit-norm OD vectors, one per stain, stored as matrix rows.
#[derive(Clone, Debug, PartialEq)]
pub struct StainBasis {
    matrix: Matrix3<f64>,
    inverse: Matrix3<f64>,
}

impl StainBasis {
    /// Normalizes each row to unit length and checks invertibility.
    pub fn new(rows: [[f64; 3]; 3]) -> Result<Self, StainError> {
        let mut matrix = Matrix3::zeros();
        for (i, row) in rows.iter().enumerate() {
            let v = RowVector3::from_row_slice(row);
            let norm = v.norm();
            if !norm.is_finite() || norm == 0.0 {
                return Err(StainError::DegenerateRow(i));
            }
            matrix.set_row(i, &(v / norm));
        }
        let det = matrix.determinant();
        if !det.is_finite() || det.abs() < MIN_DETERMINANT {
            return Err(StainError::SingularBasis(det));
        }
        let inverse = matrix.try_inverse().ok_or(StainError::SingularBasis(det))?;
        Ok(Self { matrix, inverse })
    }

    /// Builds a basis from nine row-major reals.
    pub fn from_slice(values: &[f64; 9]) -> Result<Self, StainError> {
        Self::new([
            [values[0], values[1], values[2]],
            [values[3], values[4], values[5]],
            [values[6], values[7], values[8]],
        ])
    }

    pub fn rows(&self) -> [[f64; 3]; 3] {
        let m = &self.matrix;
        [
            [m[(0, 0)], m[(0, 1)], m[(0, 2)]],
            [m[(1, 0)], m[(1, 1)], m[(1, 2)]],
            [m[(2, 0)], m[(2, 1)], m[(2, 2)]],
        ]
    }

    /// Concentrations `c` solving `c · M = od`.
    pub fn unmix(&self, od: [f64; 3]) -> [f64; 3] {
        let c = RowVector3::new(od[0], od[1], od[2]) * self.inverse;
        [c[0], c[1], c[2]]
    }

    /// Optical density `c · M` of a concentration triple.
    pub fn mix(&self, conc: [f64; 3]) -> [f64; 3] {
        let od = RowVector3::new(conc[0], conc[1], conc[2]) * self.matrix;
        [od[0], od[1], od[2]]
    }
}

impl Default for StainBasis {
    fn default() -> Self {
        Self::new(DEFAULT_BASIS_ROWS).expect("default basis is invertible")
    }
}

/// Which stains survive reconstruction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct StainSet {
    pub hematoxylin: bool,
    pub eosin: bool,
    pub dab: bool,
}

impl StainSet {
    pub const ALL: StainSet = StainSet {
        hematoxylin: true,
        eosin: true,
        dab: true,
    };
    pub const NONE: StainSet = StainSet {
        hematoxylin: false,
        eosin: false,
        dab: false,
    };
    pub const HEMATOXYLIN: StainSet = StainSet {
        hematoxylin: true,
        eosin: false,
        dab: false,
    };
    pub const DAB: StainSet = StainSet {
        hematoxylin: false,
        eosin: false,
        dab: true,
    };

    fn as_array(self) -> [bool; 3] {
        [self.hematoxylin, self.eosin, self.dab]
    }
}

/// Per-pixel (h, e, dab) concentrations. Values are unclamped and may be
/// slightly negative for pixels outside the basis gamut.
#[derive(Clone, Debug, PartialEq)]
pub struct StainImage {
    width: usize,
    height: usize,
    data: Vec<[f64; 3]>,
}

impl StainImage {
    pub fn new(width: usize, height: usize, data: Vec<[f64; 3]>) -> Result<Self, ImagingError> {
        if width == 0 || height == 0 {
            return Err(ImagingError::InvalidDimensions { width, height });
        }
        if data.len() != width * height {
            return Err(ImagingError::BufferLength {
                expected: width * height,
                actual: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[[f64; 3]] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> [f64; 3] {
        self.data[y * self.width + x]
    }

    pub fn dab(&self) -> impl Iterator<Item = f64> + '_ {
        self.data.iter().map(|c| c[2])
    }
}

/// Per-channel optical density of an 8-bit intensity.
#[inline]
pub fn optical_density(intensity: u8) -> f64 {
    -((f64::from(intensity) + 1.0) / 256.0).log10()
}

/// Inverse of [`optical_density`], rounded and clamped to 8 bits.
#[inline]
pub fn intensity_from_od(od: f64) -> u8 {
    (256.0 * 10f64.powf(-od) - 1.0).round().clamp(0.0, 255.0) as u8
}

pub fn rgb_to_od(img: &ImageTile) -> Vec<[f64; 3]> {
    img.pixels()
        .map(|[r, g, b]| [optical_density(r), optical_density(g), optical_density(b)])
        .collect()
}

pub fn deconvolve(img: &ImageTile, basis: &StainBasis) -> StainImage {
    let data = img
        .as_raw()
        .par_chunks(3 * img.width())
        .flat_map_iter(|row| {
            row.chunks_exact(3).map(|p| {
                basis.unmix([
                    optical_density(p[0]),
                    optical_density(p[1]),
                    optical_density(p[2]),
                ])
            })
        })
        .collect();
    StainImage {
        width: img.width(),
        height: img.height(),
        data,
    }
}

/// Maps concentrations back to RGB, zeroing stains outside `keep`.
///
/// Kept concentrations are used signed: quantization pushes some in-gamut
/// pixels slightly below zero, and clamping those would break the round
/// trip. The final intensities are clamped to `[0, 255]`.
pub fn reconstruct(stains: &StainImage, basis: &StainBasis, keep: StainSet) -> ImageTile {
    let keep = keep.as_array();
    let pixels = stains
        .data
        .par_iter()
        .flat_map_iter(|c| {
            let mut conc = [0.0; 3];
            for i in 0..3 {
                if keep[i] {
                    conc[i] = c[i];
                }
            }
            let od = basis.mix(conc);
            od.map(intensity_from_od)
        })
        .collect();
    ImageTile::new(stains.width, stains.height, pixels).expect("dimensions come from a valid stain image")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MorphologyOp {
    Dilate,
    Erode,
}

/// One morphology step with a full square footprint.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MorphologyStep {
    pub op: MorphologyOp,
    pub size: usize,
    pub iterations: usize,
}

/// Ordered morphology cleanup applied to a thresholded mask.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MorphologySpec(pub Vec<MorphologyStep>);

impl MorphologySpec {
    pub fn none() -> Self {
        Self(Vec::new())
    }

    pub fn apply(&self, mask: &BinaryMask) -> Result<BinaryMask, ImagingError> {
        let mut current = mask.clone();
        for step in &self.0 {
            let se = StructuringElement::square(step.size)?;
            current = match step.op {
                MorphologyOp::Dilate => dilate(&current, &se, step.iterations),
                MorphologyOp::Erode => erode(&current, &se, step.iterations),
            };
        }
        Ok(current)
    }
}

impl Default for MorphologySpec {
    /// One dilation with a 3×3 square.
    fn default() -> Self {
        Self(vec![MorphologyStep {
            op: MorphologyOp::Dilate,
            size: 3,
            iterations: 1,
        }])
    }
}

/// Pixels whose DAB concentration exceeds `threshold`, before cleanup.
pub fn dab_threshold_mask(stains: &StainImage, threshold: f64) -> Result<BinaryMask, StainError> {
    if !(threshold.is_finite() && threshold > 0.0) {
        return Err(StainError::InvalidThreshold(threshold));
    }
    let bits = stains.dab().map(|d| d.max(0.0) > threshold).collect();
    Ok(BinaryMask::new(stains.width, stains.height, bits)?)
}

/// DAB-positive mask: threshold the deconvolved DAB channel, then apply
/// `cleanup`.
pub fn dab_mask(
    img: &ImageTile,
    basis: &StainBasis,
    threshold: f64,
    cleanup: &MorphologySpec,
) -> Result<BinaryMask, StainError> {
    let raw = dab_threshold_mask(&deconvolve(img, basis), threshold)?;
    Ok(cleanup.apply(&raw)?)
}

/// Opt-in heuristic: Otsu on the DAB channel quantized over `[0, max]`.
/// Returns a concentration threshold usable with [`dab_mask`].
pub fn dab_otsu_threshold(stains: &StainImage) -> Result<f64, StainError> {
    let max = stains.dab().fold(0.0f64, |m, d| m.max(d));
    if max <= 0.0 {
        return Err(ImagingError::ConstantImage.into());
    }
    let mut hist = [0u64; 256];
    for d in stains.dab() {
        let q = (d.max(0.0) / max * 255.0).round() as usize;
        hist[q.min(255)] += 1;
    }
    let t = otsu_threshold_histogram(&hist)?;
    Ok((f64::from(t) + 0.5) / 255.0 * max)
}

/// Synthesizes an RGB pixel from concentrations (no clamping of the input).
pub fn synthesize_pixel(basis: &StainBasis, conc: [f64; 3]) -> [u8; 3] {
    basis.mix(conc).map(intensity_from_od)
}

/// Hematoxylin-only rendering with eosin and DAB removed.
pub fn hematoxylin_only(img: &ImageTile, basis: &StainBasis) -> ImageTile {
    reconstruct(&deconvolve(img, basis), basis, StainSet::HEMATOXYLIN)
}
