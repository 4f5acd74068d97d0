use std::path::Path;

use anyhow::Context;
use rayon::prelude::*;
use stainbench_core::imaging::{read_image, read_mask, BinaryMask, ImageTile};
use stainbench_core::segmentation::{score_pair, SegScore};
use stainbench_core::stain::{dab_mask, dab_otsu_threshold, deconvolve};
use stainbench_core::stats::MetricRecord;
use stainbench_core::texture::{self, TextureScore};

use super::report::write_report_files;
use crate::config::RunConfig;
use crate::manifest::{PairManifest, PairRow};
use crate::output::{log_failures, read_bytes, run_id, write_json, write_run_files, Failure};
use crate::Outcome;

/// Texture and stain-accuracy scores of one aligned pair. `real_mask` and
/// `virt_mask` replace the DAB-threshold masks when given.
pub fn evaluate_pair(
    cfg: &RunConfig,
    real: &ImageTile,
    virt: &ImageTile,
    real_mask: Option<BinaryMask>,
    virt_mask: Option<BinaryMask>,
) -> anyhow::Result<(TextureScore, SegScore)> {
    anyhow::ensure!(
        real.same_size(virt),
        "real is {}x{}, virtual is {}x{}",
        real.width(),
        real.height(),
        virt.width(),
        virt.height()
    );
    let tex = texture::score(real, virt, &cfg.ssim)?;
    let basis = cfg.basis();
    let threshold = if cfg.dab_threshold_otsu {
        dab_otsu_threshold(&deconvolve(real, &basis)).unwrap_or(cfg.dab_threshold)
    } else {
        cfg.dab_threshold
    };
    let gt = match real_mask {
        Some(m) => m,
        None => dab_mask(real, &basis, threshold, &cfg.morphology)?,
    };
    let pred = match virt_mask {
        Some(m) => m,
        None => dab_mask(virt, &basis, threshold, &cfg.morphology)?,
    };
    Ok((tex, score_pair(&gt, &pred)?))
}

fn score_row(cfg: &RunConfig, row: &PairRow) -> anyhow::Result<MetricRecord> {
    let load = |p: &Path| read_image(p).with_context(|| format!("reading {}", p.display()));
    let load_mask = |p: &Option<std::path::PathBuf>| -> anyhow::Result<Option<BinaryMask>> {
        p.as_ref()
            .map(|p| read_mask(p).with_context(|| format!("reading mask {}", p.display())))
            .transpose()
    };
    let real = load(&row.real_path)?;
    let virt = load(&row.virtual_path)?;
    let (tex, seg) = evaluate_pair(cfg, &real, &virt, load_mask(&row.real_mask_path)?, load_mask(&row.virtual_mask_path)?)?;
    let seg = if cfg.positives_only && seg.gt_positive == 0 {
        None
    } else {
        Some(seg)
    };
    Ok(MetricRecord {
        tile_id: row.tile_id.clone(),
        model_id: row.model_id.clone(),
        group: row.group.clone(),
        texture: Some(tex),
        seg,
        manual_flags: row.manual_flags.clone(),
    })
}

/// Scores every manifest row in parallel; results keep manifest order.
pub fn score_manifest(cfg: &RunConfig, manifest: &PairManifest) -> (Vec<MetricRecord>, Vec<Failure>) {
    let outcomes: Vec<anyhow::Result<MetricRecord>> = manifest.rows.par_iter().map(|r| score_row(cfg, r)).collect();
    let mut records = Vec::new();
    let mut failures = Vec::new();
    for (index, (row, outcome)) in manifest.rows.iter().zip(outcomes).enumerate() {
        match outcome {
            Ok(r) => records.push(r),
            Err(e) => failures.push(Failure {
                index,
                id: row.tile_id.clone(),
                error: format!("{e:#}"),
            }),
        }
    }
    (records, failures)
}

pub fn run(cfg: &RunConfig, manifest_path: &Path, out: &Path) -> anyhow::Result<Outcome> {
    let manifest = PairManifest::load(manifest_path)?;
    let digest = cfg.digest();
    let id = run_id(&digest, &[&read_bytes(manifest_path)?]);
    log::info!("scoring {} pairs from {}", manifest.rows.len(), manifest_path.display());

    let (records, failures) = score_manifest(cfg, &manifest);
    log_failures("pair", &failures);
    let skipped = records.iter().filter(|r| r.seg.is_none()).count();
    if skipped > 0 {
        log::info!("{skipped} pairs without real DAB pixels skipped for stain accuracy (positives_only)");
    }
    write_json(&out.join("failures.json"), &failures)?;
    write_run_files(out, cfg, "eval", &id)?;
    if records.is_empty() {
        log::error!("no pair could be scored");
        write_json(&out.join("records.json"), &records)?;
        return Ok(Outcome::Partial);
    }
    write_report_files(cfg, &records, &id, &digest, out)?;
    log::info!("scored {} of {} pairs; outputs in {}", records.len(), manifest.rows.len(), out.display());
    Ok(Outcome::from_failures(failures.len()))
}
