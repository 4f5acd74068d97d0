//! Gaussian moment fits and the Fréchet distance between them.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::{DistError, FeatureSet};

/// Sample mean and covariance (`1/(n−1)` normalization) of a feature set.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianMoments {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl GaussianMoments {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self, DistError> {
        let d = mean.len();
        if cov.nrows() != d || cov.ncols() != d {
            return Err(DistError::DimensionMismatch(d, cov.nrows()));
        }
        Ok(Self { mean, cov })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

pub fn moments(fs: &FeatureSet) -> Result<GaussianMoments, DistError> {
    let (n, d) = (fs.n(), fs.d());
    if n < 2 {
        return Err(DistError::TooFewSamples { needed: 2, got: n });
    }
    let mut mean = DVector::zeros(d);
    for row in fs.rows() {
        for (m, &v) in mean.iter_mut().zip(row) {
            *m += f64::from(v);
        }
    }
    mean /= n as f64;
    let centered = DMatrix::from_fn(n, d, |i, j| f64::from(fs.row(i)[j]) - mean[j]);
    let mut cov = centered.tr_mul(&centered);
    cov /= (n - 1) as f64;
    // exact symmetry regardless of summation order inside the product
    let cov = (&cov + cov.transpose()) * 0.5;
    Ok(GaussianMoments { mean, cov })
}

/// `‖μa − μb‖² + Tr(Σa + Σb − 2(ΣaΣb)^½)`, clamped at 0.
///
/// The trace of `(ΣaΣb)^½` is evaluated as the trace of the square root of
/// the symmetric matrix `Σa^½ Σb Σa^½`, which has the same eigenvalues.
/// Negative eigenvalues from rounding are clamped to zero.
pub fn frechet_distance(a: &GaussianMoments, b: &GaussianMoments) -> Result<f64, DistError> {
    if a.dim() != b.dim() {
        return Err(DistError::DimensionMismatch(a.dim(), b.dim()));
    }
    let diff = &a.mean - &b.mean;
    let mean_term = diff.dot(&diff);

    let sqrt_a = sym_sqrt(&a.cov)?;
    let product = &sqrt_a * &b.cov * &sqrt_a;
    let product = (&product + product.transpose()) * 0.5;
    let eig = eigen(&product)?;
    let trace_sqrt: f64 = eig.eigenvalues.iter().map(|&l| l.max(0.0).sqrt()).sum();

    let value = mean_term + a.cov.trace() + b.cov.trace() - 2.0 * trace_sqrt;
    Ok(value.max(0.0))
}

/// Fréchet distance straight from two feature sets.
pub fn frechet_from_features(x: &FeatureSet, y: &FeatureSet) -> Result<f64, DistError> {
    if x.d() != y.d() {
        return Err(DistError::DimensionMismatch(x.d(), y.d()));
    }
    frechet_distance(&moments(x)?, &moments(y)?)
}

fn eigen(m: &DMatrix<f64>) -> Result<SymmetricEigen<f64, nalgebra::Dyn>, DistError> {
    let max_iter = 1000 * m.nrows().max(1);
    SymmetricEigen::try_new(m.clone(), f64::EPSILON, max_iter).ok_or(DistError::NumericalFailure)
}

/// Principal square root of a symmetric PSD matrix.
fn sym_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>, DistError> {
    let eig = eigen(m)?;
    let scale = eig.eigenvalues.iter().fold(0.0f64, |acc, l| acc.max(l.abs()));
    let floor = 1e-10 * scale;
    let roots = eig.eigenvalues.map(|l| if l <= floor { 0.0 } else { l.sqrt() });
    let v = &eig.eigenvectors;
    Ok(v * DMatrix::from_diagonal(&roots) * v.transpose())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn moments_1d(mean: f64, var: f64) -> GaussianMoments {
        GaussianMoments::new(DVector::from_element(1, mean), DMatrix::from_element(1, 1, var)).unwrap()
    }

    #[test]
    fn hand_moments() {
        let fs = FeatureSet::from_rows(&[[0.0, 0.0], [2.0, 0.0]]).unwrap();
        let m = moments(&fs).unwrap();
        assert_eq!(m.mean.as_slice(), &[1.0, 0.0]);
        assert_eq!(m.cov, DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.0]));

        let same = FeatureSet::from_rows(&[[3.0, 1.0], [3.0, 1.0]]).unwrap();
        assert_eq!(moments(&same).unwrap().cov, DMatrix::zeros(2, 2));

        let one = FeatureSet::from_rows(&[[1.0]]).unwrap();
        assert!(matches!(moments(&one), Err(DistError::TooFewSamples { .. })));
    }

    #[test]
    fn duplicated_rows_rescale_covariance() {
        let rows = [[0.0, 1.0], [2.0, 5.0], [4.0, 3.0], [1.0, -1.0]];
        let n = rows.len() as f64;
        let doubled: Vec<[f64; 2]> = rows.iter().chain(rows.iter()).copied().collect();
        let a = moments(&FeatureSet::from_rows(&rows).unwrap()).unwrap();
        let b = moments(&FeatureSet::from_rows(&doubled).unwrap()).unwrap();
        assert!((&a.mean - &b.mean).norm() < 1e-12);
        let factor = 2.0 * (n - 1.0) / (2.0 * n - 1.0);
        assert!((&a.cov * factor - &b.cov).norm() < 1e-12);
    }

    #[test]
    fn one_dimensional_closed_forms() {
        let d = frechet_distance(&moments_1d(0.0, 1.0), &moments_1d(3.0, 1.0)).unwrap();
        assert!((d - 9.0).abs() < 1e-9);
        let d = frechet_distance(&moments_1d(0.0, 1.0), &moments_1d(0.0, 4.0)).unwrap();
        assert!((d - 1.0).abs() < 1e-9);
    }

    #[test]
    fn self_distance_is_zero_and_symmetric() {
        let a = GaussianMoments::new(
            DVector::from_vec(vec![1.0, -2.0, 0.5]),
            DMatrix::from_row_slice(3, 3, &[2.0, 0.3, 0.1, 0.3, 1.0, -0.2, 0.1, -0.2, 0.5]),
        )
        .unwrap();
        let b = GaussianMoments::new(
            DVector::from_vec(vec![0.0, 0.0, 1.0]),
            DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.2, 0.0, 3.0, 0.0, 0.2, 0.0, 0.7]),
        )
        .unwrap();
        assert!(frechet_distance(&a, &a).unwrap() <= 1e-8);
        let ab = frechet_distance(&a, &b).unwrap();
        let ba = frechet_distance(&b, &a).unwrap();
        assert!((ab - ba).abs() < 1e-8);
    }

    #[test]
    fn dimension_mismatch() {
        let a = moments_1d(0.0, 1.0);
        let b = GaussianMoments::new(DVector::zeros(2), DMatrix::identity(2, 2)).unwrap();
        assert!(matches!(frechet_distance(&a, &b), Err(DistError::DimensionMismatch(1, 2))));
    }
}
