//! Stain-accuracy metrics over binary masks: Dice, IoU, Hausdorff distance,
//! true-positive and true-negative rates.
//!
//! `gt` is the mask derived from the real image and `pred` the mask from the
//! virtual one. Hausdorff distance is taken over all positive pixel centers,
//! not extracted contours, and is computed exactly through a separable
//! squared Euclidean distance transform.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::imaging::BinaryMask;

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum SegError {
    #[error("dimension mismatch: {left:?} vs {right:?}")]
    DimensionMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },
}

/// Pixel-level confusion counts of `pred` against `gt`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

impl Confusion {
    pub fn of(gt: &BinaryMask, pred: &BinaryMask) -> Result<Self, SegError> {
        check_dims(gt, pred)?;
        let mut c = Confusion::default();
        for (&g, &p) in gt.bits().iter().zip(pred.bits()) {
            match (g, p) {
                (true, true) => c.tp += 1,
                (false, true) => c.fp += 1,
                (true, false) => c.fn_ += 1,
                (false, false) => c.tn += 1,
            }
        }
        Ok(c)
    }

    pub fn gt_positive(&self) -> usize {
        self.tp + self.fn_
    }

    pub fn pred_positive(&self) -> usize {
        self.tp + self.fp
    }

    pub fn dice(&self) -> f64 {
        let denom = self.gt_positive() + self.pred_positive();
        if denom == 0 {
            1.0
        } else {
            2.0 * self.tp as f64 / denom as f64
        }
    }

    pub fn iou(&self) -> f64 {
        let union = self.tp + self.fp + self.fn_;
        if union == 0 {
            1.0
        } else {
            self.tp as f64 / union as f64
        }
    }

    /// `None` when the ground truth has no positive pixels.
    pub fn tpr(&self) -> Option<f64> {
        let denom = self.tp + self.fn_;
        (denom > 0).then(|| self.tp as f64 / denom as f64)
    }

    /// `None` when the ground truth has no negative pixels.
    pub fn tnr(&self) -> Option<f64> {
        let denom = self.tn + self.fp;
        (denom > 0).then(|| self.tn as f64 / denom as f64)
    }
}

/// All five stain-accuracy metrics for one mask pair.
///
/// `hausdorff` is `+∞` when exactly one mask is empty; `tpr`/`tnr` are
/// `None` when their denominators vanish.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegScore {
    pub dice: f64,
    pub iou: f64,
    #[serde(with = "crate::sentinel")]
    pub hausdorff: f64,
    pub tpr: Option<f64>,
    pub tnr: Option<f64>,
    pub gt_positive: usize,
    pub pred_positive: usize,
}

fn check_dims(a: &BinaryMask, b: &BinaryMask) -> Result<(), SegError> {
    if !a.same_size(b) {
        return Err(SegError::DimensionMismatch {
            left: (a.width(), a.height()),
            right: (b.width(), b.height()),
        });
    }
    Ok(())
}

/// `2|P∩GT| / (|P| + |GT|)`; 1.0 when both masks are empty.
pub fn dice(gt: &BinaryMask, pred: &BinaryMask) -> Result<f64, SegError> {
    Ok(Confusion::of(gt, pred)?.dice())
}

/// `|P∩GT| / |P∪GT|`; 1.0 when both masks are empty.
pub fn iou(gt: &BinaryMask, pred: &BinaryMask) -> Result<f64, SegError> {
    Ok(Confusion::of(gt, pred)?.iou())
}

pub fn tpr_tnr(gt: &BinaryMask, pred: &BinaryMask) -> Result<(Option<f64>, Option<f64>), SegError> {
    let c = Confusion::of(gt, pred)?;
    Ok((c.tpr(), c.tnr()))
}

/// Symmetric Hausdorff distance in pixels between the positive pixel sets.
pub fn hausdorff(gt: &BinaryMask, pred: &BinaryMask) -> Result<f64, SegError> {
    check_dims(gt, pred)?;
    let (a, b) = (gt.count(), pred.count());
    Ok(match (a, b) {
        (0, 0) => 0.0,
        (0, _) | (_, 0) => f64::INFINITY,
        _ => {
            let ab = directed_sq(gt, pred);
            let ba = directed_sq(pred, gt);
            (ab.max(ba) as f64).sqrt()
        }
    })
}

/// Largest squared distance from a positive pixel of `from` to the nearest
/// positive pixel of `to`. `to` must be nonempty.
fn directed_sq(from: &BinaryMask, to: &BinaryMask) -> i64 {
    let dist = squared_distance_transform(to);
    from.bits()
        .iter()
        .zip(&dist)
        .filter(|(&b, _)| b)
        .map(|(_, &d)| d)
        .max()
        .unwrap_or(0)
}

const INF: i64 = i64::MAX / 4;

/// Exact squared Euclidean distance from every pixel to the nearest positive
/// pixel of `mask` (two 1-D lower-envelope passes). Pixels with no positive
/// pixel anywhere get `i64::MAX / 4`.
pub fn squared_distance_transform(mask: &BinaryMask) -> Vec<i64> {
    let (w, h) = (mask.width(), mask.height());
    let mut cols = vec![INF; w * h];
    let column_results: Vec<Vec<i64>> = (0..w)
        .into_par_iter()
        .map(|x| {
            let f: Vec<i64> = (0..h).map(|y| if mask.get(x, y) { 0 } else { INF }).collect();
            let mut out = vec![INF; h];
            lower_envelope(&f, &mut out);
            out
        })
        .collect();
    for (x, col) in column_results.iter().enumerate() {
        for (y, &v) in col.iter().enumerate() {
            cols[y * w + x] = v;
        }
    }
    let mut out = vec![INF; w * h];
    out.par_chunks_mut(w)
        .zip(cols.par_chunks(w))
        .for_each(|(dst, src)| lower_envelope(src, dst));
    out
}

/// 1-D squared distance transform of a sampled function `f` (entries ≥ INF
/// are absent sites).
fn lower_envelope(f: &[i64], out: &mut [i64]) {
    let mut sites: Vec<usize> = Vec::with_capacity(f.len());
    let mut bounds: Vec<f64> = Vec::with_capacity(f.len());
    for q in 0..f.len() {
        if f[q] >= INF {
            continue;
        }
        let mut start = f64::NEG_INFINITY;
        while let Some(&p) = sites.last() {
            let s = intersection(f, p, q);
            if s <= *bounds.last().expect("bounds track sites") {
                sites.pop();
                bounds.pop();
            } else {
                start = s;
                break;
            }
        }
        sites.push(q);
        bounds.push(start);
    }
    if sites.is_empty() {
        out.fill(INF);
        return;
    }
    let mut k = 0;
    for (q, slot) in out.iter_mut().enumerate() {
        while k + 1 < sites.len() && bounds[k + 1] < q as f64 {
            k += 1;
        }
        let d = q as i64 - sites[k] as i64;
        *slot = d * d + f[sites[k]];
    }
}

fn intersection(f: &[i64], p: usize, q: usize) -> f64 {
    let (pi, qi) = (p as i64, q as i64);
    ((f[q] + qi * qi) - (f[p] + pi * pi)) as f64 / (2 * (qi - pi)) as f64
}

pub fn score_pair(gt: &BinaryMask, pred: &BinaryMask) -> Result<SegScore, SegError> {
    let c = Confusion::of(gt, pred)?;
    if c.gt_positive() == 0 && c.pred_positive() == 0 {
        log::debug!("both masks empty; dice/iou reported as 1.0, hausdorff as 0");
    }
    Ok(SegScore {
        dice: c.dice(),
        iou: c.iou(),
        hausdorff: hausdorff(gt, pred)?,
        tpr: c.tpr(),
        tnr: c.tnr(),
        gt_positive: c.gt_positive(),
        pred_positive: c.pred_positive(),
    })
}

/// Arithmetic means over scored pairs. Infinite Hausdorff values and
/// undefined rates are left out of their means and counted instead.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SegAggregate {
    pub n: usize,
    pub dice_mean: Option<f64>,
    pub iou_mean: Option<f64>,
    pub hausdorff_mean: Option<f64>,
    pub hausdorff_excluded: usize,
    pub tpr_mean: Option<f64>,
    pub tpr_excluded: usize,
    pub tnr_mean: Option<f64>,
    pub tnr_excluded: usize,
}

impl SegAggregate {
    pub fn from_scores<'a>(scores: impl IntoIterator<Item = &'a SegScore>) -> Self {
        let scores: Vec<&SegScore> = scores.into_iter().collect();
        let mean = |vals: Vec<f64>| -> Option<f64> {
            (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
        };
        let finite_hd: Vec<f64> = scores.iter().map(|s| s.hausdorff).filter(|v| v.is_finite()).collect();
        let tprs: Vec<f64> = scores.iter().filter_map(|s| s.tpr).collect();
        let tnrs: Vec<f64> = scores.iter().filter_map(|s| s.tnr).collect();
        let n = scores.len();
        SegAggregate {
            n,
            dice_mean: mean(scores.iter().map(|s| s.dice).collect()),
            iou_mean: mean(scores.iter().map(|s| s.iou).collect()),
            hausdorff_excluded: n - finite_hd.len(),
            hausdorff_mean: mean(finite_hd),
            tpr_excluded: n - tprs.len(),
            tpr_mean: mean(tprs),
            tnr_excluded: n - tnrs.len(),
            tnr_mean: mean(tnrs),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BatchResult {
    /// `(pair index, score)` in input order.
    pub scores: Vec<(usize, SegScore)>,
    /// Pairs skipped because their ground truth was empty.
    pub excluded: Vec<usize>,
    pub errors: Vec<(usize, SegError)>,
    pub aggregate: SegAggregate,
}

/// Scores every pair; with `positives_only`, pairs whose ground truth has no
/// positive pixel are excluded from the list and the aggregate.
pub fn score_batch(pairs: &[(BinaryMask, BinaryMask)], positives_only: bool) -> BatchResult {
    let outcomes: Vec<Result<Option<SegScore>, SegError>> = pairs
        .par_iter()
        .map(|(gt, pred)| {
            if positives_only && gt.count() == 0 {
                check_dims(gt, pred)?;
                return Ok(None);
            }
            score_pair(gt, pred).map(Some)
        })
        .collect();
    let mut result = BatchResult {
        scores: Vec::new(),
        excluded: Vec::new(),
        errors: Vec::new(),
        aggregate: SegAggregate::default(),
    };
    for (i, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(Some(s)) => result.scores.push((i, s)),
            Ok(None) => result.excluded.push(i),
            Err(e) => result.errors.push((i, e)),
        }
    }
    result.aggregate = SegAggregate::from_scores(result.scores.iter().map(|(_, s)| s));
    result
}
