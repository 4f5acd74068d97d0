use std::collections::HashSet;
use std::path::{Path, PathBuf};

use anyhow::Context;
use stainbench_core::stats::{build_report, metric_value, render_scatter, MetricRecord, MetricValue, ScatterPoint};

use crate::config::RunConfig;
use crate::output::{read_bytes, run_id, write_json, write_run_files};
use crate::Outcome;

const CSV_METRICS: [&str; 8] = ["mse", "psnr", "ssim", "dice", "iou", "hausdorff", "tpr", "tnr"];

/// `records.json`, `records.csv`, `report.json` and one SVG per configured
/// plot.
pub fn write_report_files(
    cfg: &RunConfig,
    records: &[MetricRecord],
    run_id: &str,
    digest: &str,
    out: &Path,
) -> anyhow::Result<()> {
    write_json(&out.join("records.json"), records)?;
    write_records_csv(&out.join("records.csv"), records)?;
    let metrics: Vec<&str> = cfg.metrics.iter().map(String::as_str).collect();
    let report = build_report(records, &metrics, run_id, digest, cfg.ttest)?;
    write_json(&out.join("report.json"), &report)?;
    for [x, y] in &cfg.plots {
        let mut points = Vec::new();
        for r in records {
            if let (MetricValue::Value(a), MetricValue::Value(b)) = (metric_value(r, x)?, metric_value(r, y)?) {
                points.push(ScatterPoint {
                    x: a,
                    y: b,
                    label: r.model_id.clone(),
                });
            }
        }
        if points.is_empty() {
            log::warn!("plot {x} vs {y}: no tiles with both values, skipped");
            continue;
        }
        render_scatter(&points, x, y, out.join(format!("plot_{x}_vs_{y}.svg")))?;
    }
    Ok(())
}

fn write_records_csv(path: &Path, records: &[MetricRecord]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot write {}", path.display()))?;
    let mut header = vec!["tile_id", "model_id", "group"];
    header.extend(CSV_METRICS);
    header.extend(["gt_positive", "pred_positive", "manual_flags"]);
    w.write_record(&header)?;
    for r in records {
        let mut row = vec![r.tile_id.clone(), r.model_id.clone(), r.group.clone().unwrap_or_default()];
        for m in CSV_METRICS {
            row.push(match metric_value(r, m)? {
                MetricValue::Value(v) => v.to_string(),
                // only +inf and undefined ratios are excluded
                MetricValue::Excluded if m == "psnr" || m == "hausdorff" => "inf".to_string(),
                MetricValue::Excluded | MetricValue::Missing => String::new(),
            });
        }
        let counts = r.seg.map(|s| (s.gt_positive.to_string(), s.pred_positive.to_string()));
        let (gt, pred) = counts.unwrap_or_default();
        row.push(gt);
        row.push(pred);
        let flags: Vec<String> = r
            .manual_flags
            .iter()
            .map(|(k, v)| format!("{k}={}", u8::from(*v)))
            .collect();
        row.push(flags.join(";"));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn run(cfg: &RunConfig, record_files: &[PathBuf], out: &Path) -> anyhow::Result<Outcome> {
    let mut records: Vec<MetricRecord> = Vec::new();
    let mut inputs = Vec::new();
    for path in record_files {
        let bytes = read_bytes(path)?;
        let mut part: Vec<MetricRecord> =
            serde_json::from_slice(&bytes).with_context(|| format!("parsing records {}", path.display()))?;
        records.append(&mut part);
        inputs.push(bytes);
    }
    anyhow::ensure!(!records.is_empty(), "no records in the given files");
    let mut seen = HashSet::new();
    for r in &records {
        anyhow::ensure!(
            seen.insert((r.model_id.as_str(), r.tile_id.as_str())),
            "tile `{}` appears twice for model `{}`",
            r.tile_id,
            r.model_id
        );
    }
    let digest = cfg.digest();
    let slices: Vec<&[u8]> = inputs.iter().map(Vec::as_slice).collect();
    let id = run_id(&digest, &slices);
    write_run_files(out, cfg, "report", &id)?;
    write_report_files(cfg, &records, &id, &digest, out)?;
    Ok(Outcome::Clean)
}
