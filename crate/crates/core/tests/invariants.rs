//! Cross-module properties of the metrics and the preprocessing pipeline.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stainbench_core::distribution::{
    frechet_distance, frechet_from_features, kernel_distance, moments, precision_recall, Estimator, FeatureSet,
    GaussianMoments,
};
use stainbench_core::imaging::ImageTile;
use stainbench_core::preprocess::{
    areas_of_interest, extract_tiles, make_grid, sample_patches, seam_report, stitch, AoiParams, Blend, Polarity,
};
use stainbench_core::stain::{deconvolve, dab_threshold_mask, reconstruct, synthesize_pixel, StainSet};
use stainbench_core::StainBasis;

fn features(rng: &mut ChaCha8Rng, n: usize, d: usize, offset: f64) -> FeatureSet {
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0) + offset).collect())
        .collect();
    FeatureSet::from_rows(&rows).unwrap()
}

fn random_moments(rng: &mut ChaCha8Rng, d: usize) -> GaussianMoments {
    let a = nalgebra::DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
    let mean = nalgebra::DVector::from_fn(d, |_, _| rng.random_range(-2.0..2.0));
    GaussianMoments::new(mean, &a * a.transpose()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn frechet_zero_on_self_and_symmetric(seed in any::<u64>(), d in 1usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_moments(&mut rng, d);
        let b = random_moments(&mut rng, d);
        prop_assert!(frechet_distance(&a, &a).unwrap().abs() <= 1e-8);
        let (ab, ba) = (frechet_distance(&a, &b).unwrap(), frechet_distance(&b, &a).unwrap());
        prop_assert!((ab - ba).abs() <= 1e-8 * ab.max(1.0));
        prop_assert!(ab >= -1e-8);
    }

    #[test]
    fn precision_recall_swap(seed in any::<u64>(), k in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let real = features(&mut rng, 30, 3, 0.0);
        let gen = features(&mut rng, 25, 3, 0.4);
        let ab = precision_recall(&real, &gen, k).unwrap();
        let ba = precision_recall(&gen, &real, k).unwrap();
        prop_assert_eq!((ab.precision, ab.recall), (ba.recall, ba.precision));
    }

    #[test]
    fn biased_kid_is_zero_on_identical_sets(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = features(&mut rng, 20, 4, 0.0);
        prop_assert_eq!(kernel_distance(&x, &x, Estimator::Biased, None).unwrap(), 0.0);
    }

    #[test]
    fn stain_round_trip(h in 0.0f64..=2.0, e in 0.0f64..=2.0, dab in 0.0f64..=2.0) {
        let basis = StainBasis::default();
        let px = synthesize_pixel(&basis, [h, e, dab]);
        let img = ImageTile::filled(1, 1, px).unwrap();
        let back = reconstruct(&deconvolve(&img, &basis), &basis, StainSet::ALL);
        for c in 0..3 {
            prop_assert!(px[c].abs_diff(back.get(0, 0)[c]) <= 2, "{:?} -> {:?}", px, back.get(0, 0));
        }
    }

    #[test]
    fn dab_mask_monotone_in_threshold(seed in any::<u64>(), t1 in 0.01f64..1.0, dt in 0.0f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let img = ImageTile::from_fn(16, 16, |_, _| [rng.random(), rng.random(), rng.random()]).unwrap();
        let stains = deconvolve(&img, &StainBasis::default());
        let loose = dab_threshold_mask(&stains, t1).unwrap();
        let strict = dab_threshold_mask(&stains, t1 + dt).unwrap();
        prop_assert!(strict.is_subset_of(&loose));
    }

    #[test]
    fn extract_then_stitch_is_identity(
        seed in any::<u64>(),
        w in 1usize..90,
        h in 1usize..90,
        tile in 2usize..40,
        overlap_frac in 0.0f64..0.95,
        feather in any::<bool>(),
    ) {
        let overlap = ((tile as f64 * overlap_frac) as usize).min(tile - 1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let img = ImageTile::from_fn(w, h, |_, _| [rng.random(), rng.random(), rng.random()]).unwrap();
        // tiles never exceed the image, so shrink the tile for small images
        let tile = tile.min(w).min(h);
        let overlap = overlap.min(tile - 1);
        let grid = make_grid(w, h, tile, overlap).unwrap();
        let tiles = extract_tiles(&img, &grid).unwrap();
        let blend = if feather { Blend::Feather } else { Blend::Average };
        prop_assert_eq!(stitch(&tiles, &grid, blend).unwrap(), img);
    }

    #[test]
    fn aoi_partition_and_sampling(seed in any::<u64>()) {
        let basis = StainBasis::default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spots: Vec<(usize, usize)> = (0..3).map(|_| (rng.random_range(0..96), rng.random_range(0..96))).collect();
        let ihc = ImageTile::from_fn(96, 96, |x, y| {
            if spots.iter().any(|&(sx, sy)| x.abs_diff(sx) < 3 && y.abs_diff(sy) < 3) {
                synthesize_pixel(&basis, [0.5, 0.0, 0.9])
            } else if x > 8 && x < 88 && y > 8 && y < 88 {
                synthesize_pixel(&basis, [1.0, 0.3, 0.0])
            } else {
                [240, 240, 240]
            }
        })
        .unwrap();
        let params = AoiParams { context: 8, ..AoiParams::default() };
        let aoi = areas_of_interest(&ihc, &basis, 0.15, &params).unwrap();
        prop_assert_eq!(aoi.positive.and(&aoi.negative).unwrap().count(), 0);
        prop_assert!(aoi.negative.is_subset_of(&aoi.tissue));
        if let Ok(patches) = sample_patches(&aoi, 3, 8, seed) {
            for p in &patches {
                prop_assert!(p.x + p.size <= 96 && p.y + p.size <= 96);
                let (cx, cy) = p.center();
                let region = if p.polarity == Polarity::Positive { &aoi.positive } else { &aoi.negative };
                prop_assert!(region.get(cx, cy));
            }
        }
    }
}

#[test]
fn frechet_stable_under_row_duplication() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 5000;
    let x = features(&mut rng, n, 4, 0.0);
    let y = features(&mut rng, n, 4, 0.3);
    let dup = |f: &FeatureSet| {
        let idx: Vec<usize> = (0..f.n()).chain(0..f.n()).collect();
        f.select(&idx).unwrap()
    };
    let a = frechet_from_features(&x, &y).unwrap();
    let b = frechet_from_features(&dup(&x), &dup(&y)).unwrap();
    assert!((a - b).abs() <= 1e-6, "{a} vs {b}");

    // the only change is the n-1 normalization: covariances scale by 2(n-1)/(2n-1)
    let c = 2.0 * (n as f64 - 1.0) / (2.0 * n as f64 - 1.0);
    let scaled = |f: &FeatureSet| {
        let m = moments(f).unwrap();
        GaussianMoments::new(m.mean.clone(), &m.cov * c).unwrap()
    };
    let predicted = frechet_distance(&scaled(&x), &scaled(&y)).unwrap();
    assert!((predicted - b).abs() <= 1e-9, "{predicted} vs {b}");
}

#[test]
fn seams_vanish_on_constant_images() {
    let img = ImageTile::filled(300, 270, [90, 120, 200]).unwrap();
    let grid = make_grid(300, 270, 64, 24).unwrap();
    let stitched = stitch(&extract_tiles(&img, &grid).unwrap(), &grid, Blend::Average).unwrap();
    let report = seam_report(&stitched, &grid);
    assert_eq!(report.max, 0.0);
    assert!(!report.seams.is_empty());
}
