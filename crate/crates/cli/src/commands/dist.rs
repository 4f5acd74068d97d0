use std::path::Path;

use anyhow::Context;
use serde::Serialize;
use stainbench_core::distribution::{
    frechet_from_features, kernel_distance, precision_recall, read_features, FeatureSet, SubsetSpec,
};

use crate::config::{EncoderTagPolicy, RunConfig};
use crate::output::{read_bytes, run_id, write_json, write_run_files};
use crate::Outcome;

#[derive(Debug, Serialize)]
struct SetInfo {
    path: String,
    n: usize,
    d: usize,
    encoder_tag: String,
}

impl SetInfo {
    fn of(path: &Path, fs: &FeatureSet) -> Self {
        Self {
            path: path.display().to_string(),
            n: fs.n(),
            d: fs.d(),
            encoder_tag: fs.encoder_tag().to_string(),
        }
    }
}

/// Distribution metrics; a metric that cannot be computed is `None` with
/// its reason under `errors`.
#[derive(Debug, Default, Serialize)]
pub struct DistValues {
    pub frechet: Option<f64>,
    pub kid: Option<f64>,
    /// `kid × 1000`, the scale tables usually report.
    pub kid_x1000: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub errors: Vec<String>,
}

#[derive(Debug, Serialize)]
struct DistReport {
    run_id: String,
    config_digest: String,
    real: SetInfo,
    #[serde(rename = "virtual")]
    virt: SetInfo,
    k: usize,
    #[serde(flatten)]
    values: DistValues,
}

pub fn compute(cfg: &RunConfig, real: &FeatureSet, virt: &FeatureSet) -> DistValues {
    let mut v = DistValues::default();
    match frechet_from_features(real, virt) {
        Ok(f) => v.frechet = Some(f),
        Err(e) => v.errors.push(format!("frechet: {e}")),
    }
    let subsets = (cfg.kid.subsets > 0).then(|| SubsetSpec {
        count: cfg.kid.subsets,
        size: cfg.kid.subset_size.min(real.n()).min(virt.n()),
        seed: cfg.seed,
    });
    match kernel_distance(real, virt, cfg.kid.estimator, subsets) {
        Ok(k) => {
            v.kid = Some(k);
            v.kid_x1000 = Some(k * 1000.0);
        }
        Err(e) => v.errors.push(format!("kid: {e}")),
    }
    match precision_recall(real, virt, cfg.k) {
        Ok(pr) => {
            v.precision = Some(pr.precision);
            v.recall = Some(pr.recall);
        }
        Err(e) => v.errors.push(format!("precision/recall: {e}")),
    }
    v
}

pub fn run(cfg: &RunConfig, real_path: &Path, virt_path: &Path, allow_tag_mismatch: bool, out: &Path) -> anyhow::Result<Outcome> {
    let real = read_features(real_path).with_context(|| format!("reading {}", real_path.display()))?;
    let virt = read_features(virt_path).with_context(|| format!("reading {}", virt_path.display()))?;
    if real.encoder_tag() != virt.encoder_tag() {
        let ignore = allow_tag_mismatch || cfg.encoder_tag_policy == EncoderTagPolicy::Ignore;
        anyhow::ensure!(
            ignore,
            "encoder tags differ: `{}` vs `{}` (pass --allow-tag-mismatch to compare anyway)",
            real.encoder_tag(),
            virt.encoder_tag()
        );
        log::warn!("comparing features from different encoders: `{}` vs `{}`", real.encoder_tag(), virt.encoder_tag());
    }
    anyhow::ensure!(real.d() == virt.d(), "feature dimensions differ: {} vs {}", real.d(), virt.d());

    let digest = cfg.digest();
    let id = run_id(&digest, &[&read_bytes(real_path)?, &read_bytes(virt_path)?]);
    let values = compute(cfg, &real, &virt);
    for e in &values.errors {
        log::warn!("{e}");
    }
    let failed = values.errors.len();
    let report = DistReport {
        run_id: id.clone(),
        config_digest: digest,
        real: SetInfo::of(real_path, &real),
        virt: SetInfo::of(virt_path, &virt),
        k: cfg.k,
        values,
    };
    write_json(&out.join("dist.json"), &report)?;
    write_run_files(out, cfg, "dist", &id)?;
    Ok(Outcome::from_failures(failed))
}
