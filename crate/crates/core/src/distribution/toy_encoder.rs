//! Deterministic 64-dimensional handcrafted embedding used in place of a
//! deep encoder for self-contained runs.
//!
//! Blocks, each normalized to unit sum:
//! 16-bin grayscale histogram | 16-bin DAB histogram | 8×4 gray thumbnail.

use crate::imaging::{to_grayscale, ImageTile};
use crate::stain::{deconvolve, StainBasis};

pub const TOY_ENCODER_TAG: &str = "toy-v1";
pub const TOY_DIM: usize = 64;

const GRAY_BINS: usize = 16;
const DAB_BINS: usize = 16;
/// DAB concentrations at or above this land in the last bin.
const DAB_RANGE: f64 = 1.6;
const THUMB_COLS: usize = 8;
const THUMB_ROWS: usize = 4;

pub fn toy_encoder(img: &ImageTile) -> [f64; TOY_DIM] {
    toy_encoder_with_basis(img, &StainBasis::default())
}

pub fn toy_encoder_with_basis(img: &ImageTile, basis: &StainBasis) -> [f64; TOY_DIM] {
    let gray = to_grayscale(img);
    let mut out = [0.0; TOY_DIM];

    for &v in gray.as_raw() {
        out[v as usize * GRAY_BINS / 256] += 1.0;
    }

    let stains = deconvolve(img, basis);
    for d in stains.dab() {
        let bin = (d.max(0.0) / DAB_RANGE * DAB_BINS as f64) as usize;
        out[GRAY_BINS + bin.min(DAB_BINS - 1)] += 1.0;
    }

    let (w, h) = (gray.width(), gray.height());
    let thumb = &mut out[GRAY_BINS + DAB_BINS..];
    for r in 0..THUMB_ROWS {
        let (y0, y1) = cell_span(r, THUMB_ROWS, h);
        for c in 0..THUMB_COLS {
            let (x0, x1) = cell_span(c, THUMB_COLS, w);
            let mut sum = 0.0;
            for y in y0..y1 {
                for x in x0..x1 {
                    sum += f64::from(gray.get(x, y));
                }
            }
            thumb[r * THUMB_COLS + c] = sum / ((y1 - y0) * (x1 - x0)) as f64;
        }
    }

    normalize(&mut out[..GRAY_BINS]);
    normalize(&mut out[GRAY_BINS..GRAY_BINS + DAB_BINS]);
    normalize(&mut out[GRAY_BINS + DAB_BINS..]);
    out
}

/// Pixel range of cell `i` out of `cells` across `len` pixels; never empty.
fn cell_span(i: usize, cells: usize, len: usize) -> (usize, usize) {
    let start = (i * len / cells).min(len - 1);
    let end = ((i + 1) * len / cells).max(start + 1);
    (start, end)
}

fn normalize(block: &mut [f64]) {
    let total: f64 = block.iter().sum();
    if total > 0.0 {
        block.iter_mut().for_each(|v| *v /= total);
    } else {
        let uniform = 1.0 / block.len() as f64;
        block.iter_mut().for_each(|v| *v = uniform);
    }
}
