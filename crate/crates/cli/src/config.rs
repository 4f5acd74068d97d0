//! Run configuration: one JSON document, every field optional.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use stainbench_core::distribution::{Estimator, DEFAULT_K};
use stainbench_core::imaging::DEFAULT_MIN_AREA;
use stainbench_core::preprocess::{AoiParams, Blend, DEFAULT_OVERLAP, DEFAULT_TILE};
use stainbench_core::stain::{MorphologySpec, StainBasis, DEFAULT_BASIS_ROWS, DEFAULT_DAB_THRESHOLD};
use stainbench_core::stats::{TTestVariant, ALL_METRICS};
use stainbench_core::texture::SsimParams;

/// Environment variable naming the default config file.
pub const CONFIG_ENV: &str = "STAINBENCH_CONFIG";

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot parse config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Row-major H, E, DAB optical-density vectors.
    pub stain_basis: [f64; 9],
    pub dab_threshold: f64,
    /// Pick the DAB threshold per real image with Otsu instead of
    /// `dab_threshold`. A heuristic; off by default.
    pub dab_threshold_otsu: bool,
    pub morphology: MorphologySpec,
    pub ssim: SsimParams,
    pub tile: usize,
    pub overlap: usize,
    pub blend: Blend,
    /// Neighbourhood size of the manifold precision/recall estimate.
    pub k: usize,
    pub kid: KidConfig,
    pub seed: u64,
    /// Skip pairs whose real mask is empty.
    pub positives_only: bool,
    pub encoder_tag_policy: EncoderTagPolicy,
    pub prep: PrepConfig,
    pub ttest: TTestVariant,
    /// Metrics included in correlations and tests.
    pub metrics: Vec<String>,
    /// Scatter plots as `[x_metric, y_metric]` pairs, one point per tile.
    pub plots: Vec<[String; 2]>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KidConfig {
    pub estimator: Estimator,
    /// Number of random subsets; 0 uses the full sets once.
    pub subsets: usize,
    /// Upper bound on subset size; clamped to the smaller set.
    pub subset_size: usize,
}

impl Default for KidConfig {
    fn default() -> Self {
        Self {
            estimator: Estimator::Unbiased,
            subsets: 10,
            subset_size: 1000,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EncoderTagPolicy {
    /// Feature files must carry the same encoder tag.
    #[default]
    Require,
    /// Compare regardless of tags (logged).
    Ignore,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PrepConfig {
    pub patches_per_class: usize,
    pub patch_size: usize,
    pub min_area: usize,
    pub aoi: AoiParams,
}

impl Default for PrepConfig {
    fn default() -> Self {
        Self {
            patches_per_class: 16,
            patch_size: 256,
            min_area: DEFAULT_MIN_AREA,
            aoi: AoiParams::default(),
        }
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        let r = DEFAULT_BASIS_ROWS;
        Self {
            stain_basis: [
                r[0][0], r[0][1], r[0][2], r[1][0], r[1][1], r[1][2], r[2][0], r[2][1], r[2][2],
            ],
            dab_threshold: DEFAULT_DAB_THRESHOLD,
            dab_threshold_otsu: false,
            morphology: MorphologySpec::default(),
            ssim: SsimParams::default(),
            tile: DEFAULT_TILE,
            overlap: DEFAULT_OVERLAP,
            blend: Blend::Average,
            k: DEFAULT_K,
            kid: KidConfig::default(),
            seed: 0,
            positives_only: false,
            encoder_tag_policy: EncoderTagPolicy::Require,
            prep: PrepConfig::default(),
            ttest: TTestVariant::Welch,
            metrics: ALL_METRICS.iter().map(|m| m.to_string()).collect(),
            plots: vec![
                ["dice".into(), "psnr".into()],
                ["dice".into(), "ssim".into()],
            ],
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |msg: String| Err(ConfigError::Invalid(msg));
        if let Err(e) = StainBasis::from_slice(&self.stain_basis) {
            return invalid(format!("stain_basis: {e}"));
        }
        if !(self.dab_threshold.is_finite() && self.dab_threshold > 0.0) {
            return invalid(format!("dab_threshold must be positive, got {}", self.dab_threshold));
        }
        if let Some(step) = self.morphology.0.iter().find(|s| s.size == 0) {
            return invalid(format!("morphology step {step:?} has size 0"));
        }
        if let Err(e) = self.ssim.validate() {
            return invalid(format!("ssim: {e}"));
        }
        if self.tile == 0 || self.overlap >= self.tile {
            return invalid(format!("need 0 <= overlap < tile, got tile {} overlap {}", self.tile, self.overlap));
        }
        if self.k == 0 {
            return invalid("k must be at least 1".into());
        }
        if self.kid.subsets > 0 && self.kid.subset_size < 2 {
            return invalid("kid.subset_size must be at least 2".into());
        }
        if self.prep.patch_size == 0 {
            return invalid("prep.patch_size must be positive".into());
        }
        if self.prep.aoi.context == 0 || self.prep.aoi.tissue.kernel == 0 {
            return invalid("prep.aoi kernel sizes must be positive".into());
        }
        for m in self.metrics.iter().chain(self.plots.iter().flatten()) {
            if !ALL_METRICS.contains(&m.as_str()) {
                return invalid(format!("unknown metric `{m}`; known: {}", ALL_METRICS.join(", ")));
            }
        }
        Ok(())
    }

    pub fn basis(&self) -> StainBasis {
        StainBasis::from_slice(&self.stain_basis).expect("validated basis")
    }

    /// Compact JSON with sorted keys.
    pub fn canonical_json(&self) -> String {
        // serde_json's Value map is ordered by key
        let value = serde_json::to_value(self).expect("config serializes");
        serde_json::to_string(&value).expect("value serializes")
    }

    /// SHA-256 of [`canonical_json`](Self::canonical_json), lowercase hex.
    pub fn digest(&self) -> String {
        sha256_hex(self.canonical_json().as_bytes())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}
