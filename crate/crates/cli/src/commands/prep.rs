use std::path::Path;

use anyhow::Context;
use rayon::prelude::*;
use serde::Serialize;
use stainbench_core::imaging::{read_image, write_image, write_mask, BoundingBox};
use stainbench_core::preprocess::{areas_of_interest, sample_patches, tissue_boxes, PatchSpec, PreprocessError};

use crate::config::{sha256_hex, RunConfig};
use crate::manifest::{load_slides, SlideRow};
use crate::output::{log_failures, read_bytes, run_id, write_json, write_run_files, Failure};
use crate::Outcome;

#[derive(Debug, Serialize)]
struct SlideSummary {
    group: String,
    he_path: String,
    ihc_path: String,
    tissue_boxes: Vec<BoundingBox>,
    tissue_area: usize,
    positive_area: usize,
    negative_area: usize,
    patches_per_class: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    warning: Option<String>,
}

#[derive(Debug, Serialize)]
struct PrepReport {
    run_id: String,
    config_digest: String,
    slides: Vec<SlideSummary>,
    failures: Vec<Failure>,
}

/// Row of the patch manifest CSV; paths are relative to the output directory.
#[derive(Debug, Serialize)]
pub struct PatchRow {
    pub group: String,
    pub polarity: String,
    pub x: usize,
    pub y: usize,
    pub size: usize,
    pub he_path: String,
    pub ihc_path: String,
}

/// Per-slide seed: the run seed mixed with the slide's group and position.
fn slide_seed(seed: u64, group: &str, index: usize) -> u64 {
    let h = sha256_hex(format!("{group}\u{0}{index}").as_bytes());
    seed ^ u64::from_str_radix(&h[..16], 16).expect("hex digest")
}

fn safe_name(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

fn prep_slide(cfg: &RunConfig, index: usize, slide: &SlideRow, out: &Path) -> anyhow::Result<(SlideSummary, Vec<PatchRow>)> {
    let he = read_image(&slide.he_path).with_context(|| format!("reading {}", slide.he_path.display()))?;
    let ihc = read_image(&slide.ihc_path).with_context(|| format!("reading {}", slide.ihc_path.display()))?;
    anyhow::ensure!(
        he.same_size(&ihc),
        "H&E is {}x{} but IHC is {}x{}; pairs must be registered",
        he.width(),
        he.height(),
        ihc.width(),
        ihc.height()
    );
    let boxes = tissue_boxes(&he, cfg.prep.min_area)?;
    let aoi = areas_of_interest(&ihc, &cfg.basis(), cfg.dab_threshold, &cfg.prep.aoi)?;

    let stem = format!("{}_{index}", safe_name(&slide.group));
    let aoi_dir = out.join("aoi");
    write_mask(aoi_dir.join(format!("{stem}_positive.png")), &aoi.positive)?;
    write_mask(aoi_dir.join(format!("{stem}_negative.png")), &aoi.negative)?;

    let mut summary = SlideSummary {
        group: slide.group.clone(),
        he_path: slide.he_path.display().to_string(),
        ihc_path: slide.ihc_path.display().to_string(),
        tissue_boxes: boxes,
        tissue_area: aoi.tissue.count(),
        positive_area: aoi.positive.count(),
        negative_area: aoi.negative.count(),
        patches_per_class: 0,
        warning: None,
    };
    let seed = slide_seed(cfg.seed, &slide.group, index);
    let patches: Vec<PatchSpec> =
        match sample_patches(&aoi, cfg.prep.patches_per_class, cfg.prep.patch_size, seed) {
            Ok(p) => p,
            Err(e @ PreprocessError::InsufficientArea { .. }) => {
                log::warn!("slide {} ({}): {e}; no patches taken", index, slide.group);
                summary.warning = Some(e.to_string());
                Vec::new()
            }
            Err(e) => return Err(e.into()),
        };
    summary.patches_per_class = patches.len() / 2;

    let rel_dir = Path::new("patches").join(safe_name(&slide.group));
    std::fs::create_dir_all(out.join(&rel_dir))?;
    let mut rows = Vec::with_capacity(patches.len());
    for p in &patches {
        let name = format!("{index}_{}_{}_{}", p.polarity, p.x, p.y);
        let he_rel = rel_dir.join(format!("{name}_he.png"));
        let ihc_rel = rel_dir.join(format!("{name}_ihc.png"));
        write_image(out.join(&he_rel), &he.crop(p.x, p.y, p.size, p.size)?)?;
        write_image(out.join(&ihc_rel), &ihc.crop(p.x, p.y, p.size, p.size)?)?;
        rows.push(PatchRow {
            group: slide.group.clone(),
            polarity: p.polarity.to_string(),
            x: p.x,
            y: p.y,
            size: p.size,
            he_path: he_rel.to_string_lossy().replace('\\', "/"),
            ihc_path: ihc_rel.to_string_lossy().replace('\\', "/"),
        });
    }
    Ok((summary, rows))
}

/// Writes `patches.csv`, the patch images, AoI masks and `prep_report.json`.
pub fn run(cfg: &RunConfig, slides_path: &Path, out: &Path) -> anyhow::Result<Outcome> {
    let slides = load_slides(slides_path)?;
    let digest = cfg.digest();
    let id = run_id(&digest, &[&read_bytes(slides_path)?]);
    std::fs::create_dir_all(out.join("aoi"))?;

    let outcomes: Vec<_> = slides
        .par_iter()
        .enumerate()
        .map(|(i, s)| prep_slide(cfg, i, s, out))
        .collect();
    let mut summaries = Vec::new();
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (index, (slide, outcome)) in slides.iter().zip(outcomes).enumerate() {
        match outcome {
            Ok((s, mut r)) => {
                summaries.push(s);
                rows.append(&mut r);
            }
            Err(e) => failures.push(Failure {
                index,
                id: slide.group.clone(),
                error: format!("{e:#}"),
            }),
        }
    }
    log_failures("slide", &failures);

    let mut w = csv::Writer::from_path(out.join("patches.csv"))?;
    if rows.is_empty() {
        w.write_record(["group", "polarity", "x", "y", "size", "he_path", "ihc_path"])?;
    }
    for r in &rows {
        w.serialize(r)?;
    }
    w.flush()?;
    let total = rows.len();
    write_json(
        &out.join("prep_report.json"),
        &PrepReport {
            run_id: id.clone(),
            config_digest: digest,
            slides: summaries,
            failures: failures.clone(),
        },
    )?;
    write_run_files(out, cfg, "prep", &id)?;
    if total == 0 {
        log::warn!("no patches were extracted");
    } else {
        log::info!("{total} patches written to {}", out.join("patches").display());
    }
    Ok(Outcome::from_failures(failures.len()))
}
