use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::inference::{mean, pearson, sample_variance, sorted_sum};
use super::StatsError;
use crate::segmentation::SegScore;
use crate::texture::TextureScore;

/// Metric names understood by [`metric_value`], in report order.
pub const ALL_METRICS: [&str; 8] = ["mse", "psnr", "ssim", "dice", "iou", "hausdorff", "tpr", "tnr"];

/// Scores of one tile produced by one model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub tile_id: String,
    pub model_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<String>,
    #[serde(default)]
    pub texture: Option<TextureScore>,
    #[serde(default)]
    pub seg: Option<SegScore>,
    /// Manual annotation labels, e.g. `"weak_stain" → true`.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub manual_flags: BTreeMap<String, bool>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MetricValue {
    Value(f64),
    /// Defined family but a sentinel value: `+∞` PSNR or Hausdorff distance,
    /// undefined TPR/TNR.
    Excluded,
    /// The record carries no scores of this family.
    Missing,
}

pub fn metric_value(record: &MetricRecord, metric: &str) -> Result<MetricValue, StatsError> {
    let finite = |v: f64| {
        if v.is_finite() {
            MetricValue::Value(v)
        } else {
            MetricValue::Excluded
        }
    };
    let optional = |v: Option<f64>| v.map_or(MetricValue::Excluded, finite);
    let tex = record.texture.as_ref();
    let seg = record.seg.as_ref();
    let value = match metric {
        "mse" => tex.map(|t| finite(t.mse)),
        "psnr" => tex.map(|t| finite(t.psnr)),
        "ssim" => tex.map(|t| finite(t.ssim)),
        "dice" => seg.map(|s| finite(s.dice)),
        "iou" => seg.map(|s| finite(s.iou)),
        "hausdorff" => seg.map(|s| finite(s.hausdorff)),
        "tpr" => seg.map(|s| optional(s.tpr)),
        "tnr" => seg.map(|s| optional(s.tnr)),
        other => return Err(StatsError::UnknownMetric(other.to_string())),
    };
    Ok(value.unwrap_or(MetricValue::Missing))
}

/// Summary of one metric over a set of records. Statistics are `None` when
/// every value was excluded (or, for `std`, when fewer than two remain).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: Option<f64>,
    /// Sample standard deviation.
    pub std: Option<f64>,
    pub median: Option<f64>,
    pub n: usize,
    pub excluded: usize,
}

impl Summary {
    pub fn of(values: &[f64], excluded: usize) -> Self {
        if values.is_empty() {
            return Self {
                mean: None,
                std: None,
                median: None,
                n: 0,
                excluded,
            };
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let m = mean(&sorted);
        let mid = sorted.len() / 2;
        let median = if sorted.len() % 2 == 1 {
            sorted[mid]
        } else {
            (sorted[mid - 1] + sorted[mid]) / 2.0
        };
        Self {
            mean: Some(m),
            std: (sorted.len() >= 2).then(|| sample_variance(&sorted, m).sqrt()),
            median: Some(median),
            n: sorted.len(),
            excluded,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupBy {
    Model,
    Group,
}

const UNGROUPED: &str = "ungrouped";

fn key_of(record: &MetricRecord, by: GroupBy) -> &str {
    match by {
        GroupBy::Model => &record.model_id,
        GroupBy::Group => record.group.as_deref().unwrap_or(UNGROUPED),
    }
}

/// Per-key summaries of every metric present in the records.
pub fn aggregate(
    records: &[MetricRecord],
    by: GroupBy,
) -> Result<BTreeMap<String, BTreeMap<String, Summary>>, StatsError> {
    if records.is_empty() {
        return Err(StatsError::Empty);
    }
    let mut buckets: BTreeMap<&str, Vec<&MetricRecord>> = BTreeMap::new();
    for r in records {
        buckets.entry(key_of(r, by)).or_default().push(r);
    }
    let mut out = BTreeMap::new();
    for (key, recs) in buckets {
        let mut metrics = BTreeMap::new();
        for name in ALL_METRICS {
            let (mut values, mut excluded, mut present) = (Vec::new(), 0, false);
            for r in &recs {
                match metric_value(r, name)? {
                    MetricValue::Value(v) => {
                        values.push(v);
                        present = true;
                    }
                    MetricValue::Excluded => {
                        excluded += 1;
                        present = true;
                    }
                    MetricValue::Missing => {}
                }
            }
            if present {
                metrics.insert(name.to_string(), Summary::of(&values, excluded));
            }
        }
        out.insert(key.to_string(), metrics);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    /// One point per tile.
    Tile,
    /// One point per model: its mean over tiles.
    Model,
}

/// One Pearson coefficient, or the reason it is undefined.
///
/// `scope` is `"models"` at model level. At tile level it is `"pooled"`
/// (all tiles of all models), `"per_model_mean"` (mean of the per-model
/// coefficients) or a model id.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub x: String,
    pub y: String,
    pub level: Level,
    pub scope: String,
    pub n: usize,
    pub r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

type PairedValues = BTreeMap<String, (Vec<f64>, Vec<f64>)>;

/// Tiles where both metrics are defined, grouped by model.
fn paired_by_model(
    records: &[MetricRecord],
    x: &str,
    y: &str,
) -> Result<PairedValues, StatsError> {
    let mut out = PairedValues::new();
    for r in records {
        if let (MetricValue::Value(a), MetricValue::Value(b)) = (metric_value(r, x)?, metric_value(r, y)?) {
            let entry = out.entry(r.model_id.clone()).or_default();
            entry.0.push(a);
            entry.1.push(b);
        }
    }
    Ok(out)
}

/// Correlation of metrics `x` and `y`. Fails when the headline coefficient
/// (model level, or pooled tile level) is undefined; per-model coefficients
/// that are undefined are reported with their error instead.
pub fn correlate_pair(
    records: &[MetricRecord],
    x: &str,
    y: &str,
    level: Level,
) -> Result<Vec<CorrelationReport>, StatsError> {
    let by_model = paired_by_model(records, x, y)?;
    let report = |scope: &str, n: usize, r: Result<f64, StatsError>| CorrelationReport {
        x: x.to_string(),
        y: y.to_string(),
        level,
        scope: scope.to_string(),
        n,
        error: r.as_ref().err().map(|e| e.to_string()),
        r: r.ok(),
    };
    match level {
        Level::Model => {
            let (xs, ys): (Vec<f64>, Vec<f64>) = by_model.values().map(|(a, b)| (mean(a), mean(b))).unzip();
            let r = pearson(&xs, &ys)?;
            Ok(vec![report("models", xs.len(), Ok(r))])
        }
        Level::Tile => {
            let xs: Vec<f64> = by_model.values().flat_map(|(a, _)| a.iter().copied()).collect();
            let ys: Vec<f64> = by_model.values().flat_map(|(_, b)| b.iter().copied()).collect();
            let pooled = pearson(&xs, &ys)?;
            let mut out = vec![report("pooled", xs.len(), Ok(pooled))];
            let mut defined = Vec::new();
            for (model, (a, b)) in &by_model {
                let r = pearson(a, b);
                if let Ok(v) = r {
                    defined.push(v);
                }
                out.push(report(model, a.len(), r));
            }
            let per_model_mean = if defined.is_empty() {
                Err(StatsError::TooFew { needed: 1, got: 0 })
            } else {
                Ok(sorted_sum(defined.iter().copied()) / defined.len() as f64)
            };
            out.insert(1, report("per_model_mean", defined.len(), per_model_mean));
            Ok(out)
        }
    }
}

/// Correlations for every pair `metrics[i], metrics[j]` with `i < j`.
/// Undefined headline coefficients appear as reports carrying an error.
pub fn correlation_matrix(
    records: &[MetricRecord],
    metrics: &[&str],
    level: Level,
) -> Result<Vec<CorrelationReport>, StatsError> {
    let mut out = Vec::new();
    for (i, x) in metrics.iter().enumerate() {
        for y in &metrics[i + 1..] {
            match correlate_pair(records, x, y, level) {
                Ok(reports) => out.extend(reports),
                Err(e @ StatsError::UnknownMetric(_)) => return Err(e),
                Err(e) => {
                    let pairs = paired_by_model(records, x, y)?;
                    let n = match level {
                        Level::Model => pairs.len(),
                        Level::Tile => pairs.values().map(|(a, _)| a.len()).sum(),
                    };
                    out.push(CorrelationReport {
                        x: x.to_string(),
                        y: y.to_string(),
                        level,
                        scope: if level == Level::Model { "models" } else { "pooled" }.to_string(),
                        n,
                        r: None,
                        error: Some(e.to_string()),
                    });
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    pub(crate) fn record(model: &str, tile: &str, mse: f64, dice: f64) -> MetricRecord {
        MetricRecord {
            tile_id: tile.into(),
            model_id: model.into(),
            group: None,
            texture: Some(TextureScore {
                mse,
                psnr: crate::texture::psnr_from_mse(mse),
                ssim: 0.5,
            }),
            seg: Some(SegScore {
                dice,
                iou: dice / (2.0 - dice),
                hausdorff: 1.0,
                tpr: None,
                tnr: Some(1.0),
                gt_positive: 1,
                pred_positive: 1,
            }),
            manual_flags: BTreeMap::new(),
        }
    }

    #[test]
    fn summaries_and_exclusions() {
        let recs = vec![record("m", "a", 10.0, 0.4), record("m", "b", 1.0, 0.6), record("m", "c", 0.0, 0.5)];
        let agg = aggregate(&recs, GroupBy::Model).unwrap();
        let m = &agg["m"];
        assert_eq!(m["dice"].mean, Some(0.5));
        assert_eq!(m["dice"].median, Some(0.5));
        assert_eq!(m["psnr"].n, 2);
        assert_eq!(m["psnr"].excluded, 1);
        assert_eq!(m["tpr"].excluded, 3);
        assert_eq!(m["tpr"].mean, None);

        let single = aggregate(&recs[..1], GroupBy::Model).unwrap();
        assert_eq!(single["m"]["mse"].mean, Some(10.0));
        assert_eq!(single["m"]["mse"].std, None);
        assert!(matches!(aggregate(&[], GroupBy::Model), Err(StatsError::Empty)));
    }

    #[test]
    fn psnr_mean_skips_infinity() {
        let psnrs = [20.0, 30.0, f64::INFINITY];
        let recs: Vec<MetricRecord> = psnrs
            .iter()
            .enumerate()
            .map(|(i, &p)| {
                let mut r = record("m", &i.to_string(), 1.0, 0.5);
                r.texture.as_mut().unwrap().psnr = p;
                r
            })
            .collect();
        let s = &aggregate(&recs, GroupBy::Model).unwrap()["m"]["psnr"];
        assert_eq!((s.mean, s.excluded), (Some(25.0), 1));
    }

    #[test]
    fn group_key_defaults() {
        let mut recs = vec![record("m", "a", 1.0, 0.4), record("m", "b", 2.0, 0.6)];
        recs[0].group = Some("p1".into());
        let agg = aggregate(&recs, GroupBy::Group).unwrap();
        assert_eq!(agg.keys().collect::<Vec<_>>(), vec!["p1", "ungrouped"]);
    }

    #[test]
    fn self_correlation_is_one() {
        let recs: Vec<_> = (0..6).map(|i| record(&format!("m{}", i % 3), &i.to_string(), i as f64, 0.1 * i as f64)).collect();
        for level in [Level::Tile, Level::Model] {
            let reps = correlation_matrix(&recs, &["mse", "mse"], level).unwrap();
            assert!((reps[0].r.unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn tile_and_model_levels_can_disagree() {
        // inside each model dice falls as mse rises, but the model means line up
        let mut recs = Vec::new();
        for (m, base) in [("a", 0.0), ("b", 10.0)] {
            for i in 0..5 {
                let i = i as f64;
                recs.push(record(m, &format!("{m}{i}"), base + i, 0.9 - 0.1 * i + base * 0.01));
            }
        }
        let tile = correlate_pair(&recs, "mse", "dice", Level::Tile).unwrap();
        let per_model: Vec<_> = tile.iter().filter(|r| r.scope == "a" || r.scope == "b").collect();
        assert!(per_model.iter().all(|r| r.r.unwrap() < 0.0));
        assert!(matches!(
            correlate_pair(&recs, "mse", "dice", Level::Model),
            Err(StatsError::TooFew { needed: 3, got: 2 })
        ));
        let matrix = correlation_matrix(&recs, &["mse", "dice"], Level::Model).unwrap();
        assert!(matrix[0].r.is_none() && matrix[0].error.is_some());
    }

    #[test]
    fn unknown_metric() {
        let recs = vec![record("m", "a", 1.0, 0.4)];
        assert!(matches!(correlation_matrix(&recs, &["mse", "fid"], Level::Tile), Err(StatsError::UnknownMetric(_))));
    }

    #[test]
    fn records_round_trip_json_with_sentinels() {
        let mut r = record("m", "a", 0.0, 0.0);
        r.seg.as_mut().unwrap().hausdorff = f64::INFINITY;
        let text = serde_json::to_string(&r).unwrap();
        assert!(text.contains(r#""psnr":null"#) && text.contains(r#""hausdorff":null"#));
        assert_eq!(serde_json::from_str::<MetricRecord>(&text).unwrap(), r);
    }

    proptest! {
        #[test]
        fn single_tile_models_match_pooled(vals in prop::collection::vec((0.0f64..100.0, 0.0f64..1.0), 3..12)) {
            let recs: Vec<_> = vals.iter().enumerate().map(|(i, &(m, d))| record(&format!("m{i}"), "t", m, d)).collect();
            let model = correlate_pair(&recs, "mse", "dice", Level::Model);
            let tile = correlate_pair(&recs, "mse", "dice", Level::Tile);
            match (model, tile) {
                (Ok(m), Ok(t)) => prop_assert!((m[0].r.unwrap() - t[0].r.unwrap()).abs() < 1e-12),
                (Err(_), Err(_)) => {}
                _ => prop_assert!(false, "levels disagree on definedness"),
            }
        }

        #[test]
        fn concatenated_mean_is_weighted_sub_means(
            a in prop::collection::vec(0.0f64..1.0, 1..20),
            b in prop::collection::vec(0.0f64..1.0, 1..20),
        ) {
            let mk = |vals: &[f64]| -> Vec<MetricRecord> {
                vals.iter().enumerate().map(|(i, &d)| record("m", &i.to_string(), 1.0, d)).collect()
            };
            let (ra, rb) = (mk(&a), mk(&b));
            let all: Vec<_> = ra.iter().chain(&rb).cloned().collect();
            let sa = &aggregate(&ra, GroupBy::Model).unwrap()["m"]["dice"];
            let sb = &aggregate(&rb, GroupBy::Model).unwrap()["m"]["dice"];
            let s = &aggregate(&all, GroupBy::Model).unwrap()["m"]["dice"];
            let weighted = (sa.mean.unwrap() * sa.n as f64 + sb.mean.unwrap() * sb.n as f64) / (sa.n + sb.n) as f64;
            prop_assert!((s.mean.unwrap() - weighted).abs() < 1e-12);
            prop_assert_eq!(s.n, sa.n + sb.n);
        }

        #[test]
        fn aggregation_is_order_independent(mut vals in prop::collection::vec(0.0f64..1e6, 1..30), seed in any::<u64>()) {
            let mk = |v: &[f64]| -> Vec<MetricRecord> {
                v.iter().enumerate().map(|(i, &m)| record("m", &i.to_string(), m, 0.5)).collect()
            };
            let before = aggregate(&mk(&vals), GroupBy::Model).unwrap();
            let n = vals.len();
            vals.rotate_left((seed as usize) % n);
            vals.reverse();
            prop_assert_eq!(before, aggregate(&mk(&vals), GroupBy::Model).unwrap());
        }
    }
}
