use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use super::StatsError;

/// Sample Pearson correlation coefficient.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64, StatsError> {
    if xs.len() != ys.len() {
        return Err(StatsError::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.len() < 3 {
        return Err(StatsError::TooFew {
            needed: 3,
            got: xs.len(),
        });
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    // sorted pairs make the result independent of sample order
    let mut pairs: Vec<(f64, f64)> = xs.iter().copied().zip(ys.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mx = mean(xs);
    let my = mean(ys);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in &pairs {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::ZeroVariance);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TTestVariant {
    /// Unequal variances, Welch–Satterthwaite degrees of freedom.
    #[default]
    Welch,
    /// Equal variances, `n_a + n_b − 2` degrees of freedom.
    Pooled,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TTestResult {
    pub t: f64,
    pub dof: f64,
    /// Two-sided.
    pub p: f64,
    pub n_a: usize,
    pub n_b: usize,
    pub variant: TTestVariant,
}

/// Two-sample t-test of `mean(a) = mean(b)`.
///
/// Two groups that are the same constant give `t = 0, p = 1`; constant
/// groups with different values have no finite statistic.
pub fn ttest(a: &[f64], b: &[f64], variant: TTestVariant) -> Result<TTestResult, StatsError> {
    let (na, nb) = (a.len(), b.len());
    if na < 2 || nb < 2 {
        return Err(StatsError::TooFew {
            needed: 2,
            got: na.min(nb),
        });
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let (ma, mb) = (mean(a), mean(b));
    let (va, vb) = (sample_variance(a, ma), sample_variance(b, mb));
    let (naf, nbf) = (na as f64, nb as f64);

    let (se2, dof) = match variant {
        TTestVariant::Welch => {
            let (qa, qb) = (va / naf, vb / nbf);
            let se2 = qa + qb;
            let denom = qa * qa / (naf - 1.0) + qb * qb / (nbf - 1.0);
            (se2, if denom > 0.0 { se2 * se2 / denom } else { naf + nbf - 2.0 })
        }
        TTestVariant::Pooled => {
            let dof = naf + nbf - 2.0;
            let sp2 = ((naf - 1.0) * va + (nbf - 1.0) * vb) / dof;
            (sp2 * (1.0 / naf + 1.0 / nbf), dof)
        }
    };
    let result = |t, p| TTestResult {
        t,
        dof,
        p,
        n_a: na,
        n_b: nb,
        variant,
    };
    if se2 == 0.0 {
        return if ma == mb {
            Ok(result(0.0, 1.0))
        } else {
            Err(StatsError::DegenerateVariance)
        };
    }
    let t = (ma - mb) / se2.sqrt();
    Ok(result(t, two_sided_p(t, dof)))
}

/// `P(|T| ≥ |t|)` for Student's t with `dof` degrees of freedom.
fn two_sided_p(t: f64, dof: f64) -> f64 {
    let x = dof / (dof + t * t);
    beta_reg(dof / 2.0, 0.5, x).clamp(0.0, 1.0)
}

// Summation over sorted copies keeps results independent of input order.
pub(crate) fn mean(xs: &[f64]) -> f64 {
    sorted_sum(xs.iter().copied()) / xs.len() as f64
}

pub(crate) fn sample_variance(xs: &[f64], mean: f64) -> f64 {
    sorted_sum(xs.iter().map(|x| (x - mean) * (x - mean))) / (xs.len() as f64 - 1.0)
}

pub(crate) fn sorted_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    v.iter().sum()
}
