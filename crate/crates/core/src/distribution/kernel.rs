//! Squared maximum mean discrepancy with the cubic polynomial kernel
//! `k(u, v) = (u·v / d + 1)³`.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{DistError, FeatureSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    /// V-statistic: within-set means include the diagonal.
    Biased,
    /// U-statistic: within-set means skip `k(x_i, x_i)`.
    #[default]
    Unbiased,
}

/// Averaging over random subsets drawn without replacement.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsetSpec {
    pub count: usize,
    pub size: usize,
    pub seed: u64,
}

#[inline]
pub fn polynomial_kernel(u: &[f64], v: &[f64]) -> f64 {
    let d = u.len() as f64;
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let base = dot / d + 1.0;
    base * base * base
}

/// Kernel distance between `x` and `y`. With `subsets`, returns the mean
/// over `count` random subset pairs of `size` rows each.
pub fn kernel_distance(
    x: &FeatureSet,
    y: &FeatureSet,
    estimator: Estimator,
    subsets: Option<SubsetSpec>,
) -> Result<f64, DistError> {
    if x.d() != y.d() {
        return Err(DistError::DimensionMismatch(x.d(), y.d()));
    }
    let xs = to_f64_rows(x);
    let ys = to_f64_rows(y);
    match subsets {
        None => {
            let xi: Vec<usize> = (0..x.n()).collect();
            let yi: Vec<usize> = (0..y.n()).collect();
            mmd(&xs, &xi, &ys, &yi, estimator)
        }
        Some(spec) => {
            if spec.count == 0 {
                return Err(DistError::InvalidParameter("subset count must be positive".into()));
            }
            let size = spec.size;
            if size > x.n() || size > y.n() {
                return Err(DistError::TooFewSamples {
                    needed: size,
                    got: x.n().min(y.n()),
                });
            }
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            let mut total = 0.0;
            for _ in 0..spec.count {
                let xi = index::sample(&mut rng, x.n(), size).into_vec();
                let yi = index::sample(&mut rng, y.n(), size).into_vec();
                total += mmd(&xs, &xi, &ys, &yi, estimator)?;
            }
            Ok(total / spec.count as f64)
        }
    }
}

fn to_f64_rows(fs: &FeatureSet) -> Vec<Vec<f64>> {
    fs.rows().map(|r| r.iter().map(|&v| f64::from(v)).collect()).collect()
}

fn mmd(
    xs: &[Vec<f64>],
    xi: &[usize],
    ys: &[Vec<f64>],
    yi: &[usize],
    estimator: Estimator,
) -> Result<f64, DistError> {
    let (m, n) = (xi.len(), yi.len());
    if estimator == Estimator::Unbiased && (m < 2 || n < 2) {
        return Err(DistError::TooFewSamples {
            needed: 2,
            got: m.min(n),
        });
    }
    let include_diag = estimator == Estimator::Biased;
    let kxx = within_sum(xs, xi, include_diag);
    let kyy = within_sum(ys, yi, include_diag);
    let kxy = cross_sum(xs, xi, ys, yi);
    let (mf, nf) = (m as f64, n as f64);
    let value = match estimator {
        Estimator::Biased => kxx / (mf * mf) + kyy / (nf * nf) - 2.0 * kxy / (mf * nf),
        Estimator::Unbiased => {
            kxx / (mf * (mf - 1.0)) + kyy / (nf * (nf - 1.0)) - 2.0 * kxy / (mf * nf)
        }
    };
    Ok(value)
}

// Row sums are computed independently and then added in index order, so the
// result does not depend on the thread count.

fn within_sum(rows: &[Vec<f64>], idx: &[usize], include_diag: bool) -> f64 {
    let per_row: Vec<f64> = idx
        .par_iter()
        .enumerate()
        .map(|(a, &i)| {
            let mut s = 0.0;
            for (b, &j) in idx.iter().enumerate() {
                if a == b && !include_diag {
                    continue;
                }
                s += polynomial_kernel(&rows[i], &rows[j]);
            }
            s
        })
        .collect();
    per_row.iter().sum()
}

fn cross_sum(xs: &[Vec<f64>], xi: &[usize], ys: &[Vec<f64>], yi: &[usize]) -> f64 {
    let per_row: Vec<f64> = xi
        .par_iter()
        .map(|&i| yi.iter().map(|&j| polynomial_kernel(&xs[i], &ys[j])).sum::<f64>())
        .collect();
    per_row.iter().sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_computed_two_points() {
        let x = FeatureSet::from_rows(&[[1.0, 0.0]]).unwrap();
        let y = FeatureSet::from_rows(&[[0.0, 1.0]]).unwrap();
        let v = kernel_distance(&x, &y, Estimator::Biased, None).unwrap();
        assert!((v - 4.75).abs() < 1e-10);
    }

    #[test]
    fn biased_identical_sets_is_zero() {
        let x = FeatureSet::from_rows(&[[1.0, 0.5, -2.0], [0.1, 0.2, 0.3], [4.0, 1.0, 0.0]]).unwrap();
        assert_eq!(kernel_distance(&x, &x, Estimator::Biased, None).unwrap(), 0.0);
    }

    #[test]
    fn unbiased_needs_two_rows() {
        let x = FeatureSet::from_rows(&[[1.0, 0.0]]).unwrap();
        assert!(matches!(
            kernel_distance(&x, &x, Estimator::Unbiased, None),
            Err(DistError::TooFewSamples { .. })
        ));
    }

    #[test]
    fn subsets_are_seeded() {
        let rows: Vec<[f64; 2]> = (0..40).map(|i| [i as f64 * 0.1, (i % 7) as f64]).collect();
        let x = FeatureSet::from_rows(&rows[..20]).unwrap();
        let y = FeatureSet::from_rows(&rows[20..]).unwrap();
        let spec = SubsetSpec { count: 5, size: 10, seed: 7 };
        let a = kernel_distance(&x, &y, Estimator::Unbiased, Some(spec)).unwrap();
        let b = kernel_distance(&x, &y, Estimator::Unbiased, Some(spec)).unwrap();
        assert_eq!(a, b);
        let too_big = SubsetSpec { size: 21, ..spec };
        assert!(kernel_distance(&x, &y, Estimator::Unbiased, Some(too_big)).is_err());
    }

    #[test]
    fn dimension_mismatch() {
        let x = FeatureSet::from_rows(&[[1.0, 0.0]]).unwrap();
        let y = FeatureSet::from_rows(&[[1.0]]).unwrap();
        assert!(matches!(
            kernel_distance(&x, &y, Estimator::Biased, None),
            Err(DistError::DimensionMismatch(2, 1))
        ));
    }
}
