use serde::{Deserialize, Serialize};

use super::PreprocessError;
use crate::imaging::{
    close, connected_components, dilate, open, otsu_threshold, threshold_mask, to_grayscale, BinaryMask, BoundingBox,
    ImageTile, ImagingError, StructuringElement,
};
use crate::stain::{dab_mask, MorphologySpec, StainBasis};

/// Morphology used to merge tissue fragments into whole pieces.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TissueParams {
    pub kernel: usize,
    pub iterations: usize,
}

impl Default for TissueParams {
    fn default() -> Self {
        Self {
            kernel: 20,
            iterations: 5,
        }
    }
}

/// Bounding boxes of tissue pieces with at least `min_area` pixels.
///
/// Tissue is the darker Otsu class. A constant image has no separable
/// foreground and yields no boxes.
pub fn tissue_boxes(img: &ImageTile, min_area: usize) -> Result<Vec<BoundingBox>, PreprocessError> {
    tissue_boxes_with(img, min_area, &TissueParams::default())
}

pub fn tissue_boxes_with(
    img: &ImageTile,
    min_area: usize,
    params: &TissueParams,
) -> Result<Vec<BoundingBox>, PreprocessError> {
    let gray = to_grayscale(img);
    let t = match otsu_threshold(&gray) {
        Ok(t) => t,
        Err(ImagingError::ConstantImage) => return Ok(Vec::new()),
        Err(e) => return Err(e.into()),
    };
    let fg = threshold_mask(&gray, t, false);
    let se = StructuringElement::square(params.kernel)?;
    let merged = close(&fg, &se, params.iterations);
    Ok(connected_components(&merged, min_area)
        .into_iter()
        .map(|c| c.bounding_box)
        .collect())
}

/// Which side of the gray threshold counts as tissue.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TissuePolarity {
    /// `gray <= threshold`: stained tissue on a bright background.
    #[default]
    Dark,
    /// `gray > threshold`, for inverted scans.
    Bright,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AoiParams {
    /// Side of the context square placed on every DAB-positive pixel.
    pub context: usize,
    pub tissue_threshold: u8,
    pub tissue_polarity: TissuePolarity,
    pub tissue: TissueParams,
    /// Cleanup applied to the raw DAB mask before the context squares.
    pub dab_cleanup: MorphologySpec,
}

impl Default for AoiParams {
    fn default() -> Self {
        Self {
            context: 32,
            tissue_threshold: 127,
            tissue_polarity: TissuePolarity::Dark,
            tissue: TissueParams::default(),
            dab_cleanup: MorphologySpec::none(),
        }
    }
}

/// Positive and negative sampling regions of one IHC image.
///
/// `positive` may reach past the tissue edge since the context squares are
/// meant to capture surroundings; `negative` is always inside the tissue and
/// never touches `positive`.
#[derive(Clone, Debug, PartialEq)]
pub struct AoiPair {
    pub positive: BinaryMask,
    pub negative: BinaryMask,
    pub tissue: BinaryMask,
}

pub fn areas_of_interest(
    ihc: &ImageTile,
    basis: &StainBasis,
    dab_threshold: f64,
    params: &AoiParams,
) -> Result<AoiPair, PreprocessError> {
    let dab = dab_mask(ihc, basis, dab_threshold, &params.dab_cleanup)?;
    let square = StructuringElement::square(params.context)?;
    let positive = dilate(&dab, &square, 1);

    let gray = to_grayscale(ihc);
    let raw_tissue = threshold_mask(
        &gray,
        params.tissue_threshold,
        params.tissue_polarity == TissuePolarity::Bright,
    );
    let se = StructuringElement::square(params.tissue.kernel)?;
    let tissue = open(&raw_tissue, &se, params.tissue.iterations);
    let negative = tissue.minus(&positive)?;
    Ok(AoiPair {
        positive,
        negative,
        tissue,
    })
}
