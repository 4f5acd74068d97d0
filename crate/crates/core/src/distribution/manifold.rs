//! k-NN manifold estimate and the precision/recall it induces.
//!
//! Each reference point owns a ball whose radius is the distance to its k-th
//! nearest other reference point; a query lies on the manifold when it falls
//! inside at least one ball. Precision asks how many generated points lie on
//! the real manifold, recall how many real points lie on the generated one.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{DistError, FeatureSet};

pub const DEFAULT_K: usize = 3;

#[derive(Clone, Debug)]
pub struct ManifoldIndex {
    points: Vec<Vec<f64>>,
    k: usize,
    /// Squared k-NN radius per reference point.
    radii_sq: Vec<f64>,
}

impl ManifoldIndex {
    pub fn build(reference: &FeatureSet, k: usize) -> Result<Self, DistError> {
        if k == 0 || k >= reference.n() {
            return Err(DistError::KTooLarge { k, n: reference.n() });
        }
        let points: Vec<Vec<f64>> = reference
            .rows()
            .map(|r| r.iter().map(|&v| f64::from(v)).collect())
            .collect();
        let radii_sq = (0..points.len())
            .into_par_iter()
            .map(|i| {
                let mut dists: Vec<f64> = points
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, p)| sq_dist(&points[i], p))
                    .collect();
                let (_, kth, _) = dists.select_nth_unstable_by(k - 1, f64::total_cmp);
                *kth
            })
            .collect();
        Ok(Self { points, k, radii_sq })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn radii(&self) -> Vec<f64> {
        self.radii_sq.iter().map(|r| r.sqrt()).collect()
    }

    pub fn contains(&self, query: &[f64]) -> bool {
        self.points
            .iter()
            .zip(&self.radii_sq)
            .any(|(p, &r)| sq_dist(p, query) <= r)
    }

    /// Fraction of `queries` inside the manifold.
    pub fn coverage_of(&self, queries: &FeatureSet) -> f64 {
        let inside = queries
            .rows()
            .collect::<Vec<_>>()
            .par_iter()
            .filter(|row| {
                let q: Vec<f64> = row.iter().map(|&v| f64::from(v)).collect();
                self.contains(&q)
            })
            .count();
        inside as f64 / queries.n() as f64
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrecisionRecall {
    pub precision: f64,
    pub recall: f64,
}

/// Requires `0 < k < min(n_real, n_gen)`.
pub fn precision_recall(real: &FeatureSet, gen: &FeatureSet, k: usize) -> Result<PrecisionRecall, DistError> {
    if real.d() != gen.d() {
        return Err(DistError::DimensionMismatch(real.d(), gen.d()));
    }
    let real_manifold = ManifoldIndex::build(real, k)?;
    let gen_manifold = ManifoldIndex::build(gen, k)?;
    Ok(PrecisionRecall {
        precision: real_manifold.coverage_of(gen),
        recall: gen_manifold.coverage_of(real),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(points: &[f64]) -> FeatureSet {
        let rows: Vec<[f64; 1]> = points.iter().map(|&p| [p]).collect();
        FeatureSet::from_rows(&rows).unwrap()
    }

    #[test]
    fn radii_are_kth_neighbor_distances() {
        let idx = ManifoldIndex::build(&line(&[0.0, 1.0, 2.0, 5.0]), 1).unwrap();
        assert_eq!(idx.radii(), vec![1.0, 1.0, 1.0, 3.0]);
        let idx = ManifoldIndex::build(&line(&[0.0, 1.0, 2.0, 5.0]), 2).unwrap();
        assert_eq!(idx.radii(), vec![2.0, 1.0, 2.0, 4.0]);
        assert!(idx.contains(&[6.5]));
        assert!(!idx.contains(&[9.5]));
    }

    #[test]
    fn identical_and_far_sets() {
        let real = line(&[0.0, 0.3, 1.1, 2.0, 2.2, 4.0]);
        let pr = precision_recall(&real, &real, 3).unwrap();
        assert_eq!((pr.precision, pr.recall), (1.0, 1.0));
        let far = line(&[1000.0, 1000.3, 1001.1, 1002.0, 1002.2, 1004.0]);
        let pr = precision_recall(&real, &far, 3).unwrap();
        assert_eq!((pr.precision, pr.recall), (0.0, 0.0));
    }

    #[test]
    fn k_must_be_below_both_set_sizes() {
        let real = line(&[0.0, 1.0, 2.0]);
        let gen = line(&[0.4]);
        assert!(matches!(precision_recall(&real, &gen, 1), Err(DistError::KTooLarge { k: 1, n: 1 })));
        assert!(matches!(precision_recall(&real, &real, 3), Err(DistError::KTooLarge { .. })));
        assert!(matches!(precision_recall(&real, &real, 0), Err(DistError::KTooLarge { .. })));
    }

    #[test]
    fn precision_of_single_generated_point() {
        let idx = ManifoldIndex::build(&line(&[0.0, 1.0, 2.0]), 1).unwrap();
        assert_eq!(idx.coverage_of(&line(&[0.4])), 1.0);
    }

    #[test]
    fn swap_exchanges_precision_and_recall() {
        let a = line(&[0.0, 0.5, 1.0, 3.0, 3.2]);
        let b = line(&[0.2, 0.9, 2.5, 2.6, 7.0, 7.5]);
        let ab = precision_recall(&a, &b, 2).unwrap();
        let ba = precision_recall(&b, &a, 2).unwrap();
        assert_eq!(ab.precision, ba.recall);
        assert_eq!(ab.recall, ba.precision);
    }
}
