use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::aggregate::{aggregate, correlation_matrix, metric_value, GroupBy, Level, MetricValue};
use super::inference::{pearson, ttest, TTestResult, TTestVariant};
use super::{CorrelationReport, MetricRecord, StatsError, Summary};

/// Run-level analysis document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub run_id: String,
    pub config_digest: String,
    pub models: Vec<ModelReport>,
    /// Summaries per manifest group, across models.
    pub groups: BTreeMap<String, BTreeMap<String, Summary>>,
    /// Tile-level (pooled and per-model mean) and model-level correlations.
    pub correlations: Vec<CorrelationReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelReport {
    pub model_id: String,
    pub n_tiles: usize,
    pub aggregates: BTreeMap<String, Summary>,
    /// Tile-level correlations within this model.
    pub correlations: Vec<CorrelationReport>,
    /// This model against every model listed after it.
    pub tests: Vec<ModelTest>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelTest {
    pub metric: String,
    pub versus: String,
    pub result: Option<TTestResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

fn finite_values(records: &[&MetricRecord], metric: &str) -> Result<Vec<f64>, StatsError> {
    let mut out = Vec::new();
    for r in records {
        if let MetricValue::Value(v) = metric_value(r, metric)? {
            out.push(v);
        }
    }
    Ok(out)
}

pub fn build_report(
    records: &[MetricRecord],
    metrics: &[&str],
    run_id: &str,
    config_digest: &str,
    variant: TTestVariant,
) -> Result<Report, StatsError> {
    let by_model_agg = aggregate(records, GroupBy::Model)?;
    let mut by_model: BTreeMap<&str, Vec<&MetricRecord>> = BTreeMap::new();
    for r in records {
        by_model.entry(&r.model_id).or_default().push(r);
    }
    let ids: Vec<&str> = by_model.keys().copied().collect();

    let mut models = Vec::new();
    for (i, id) in ids.iter().enumerate() {
        let recs = &by_model[id];
        let mut correlations = Vec::new();
        for (a, x) in metrics.iter().enumerate() {
            for y in &metrics[a + 1..] {
                let (mut xs, mut ys) = (Vec::new(), Vec::new());
                for r in recs {
                    if let (MetricValue::Value(u), MetricValue::Value(v)) = (metric_value(r, x)?, metric_value(r, y)?) {
                        xs.push(u);
                        ys.push(v);
                    }
                }
                let r = pearson(&xs, &ys);
                correlations.push(CorrelationReport {
                    x: x.to_string(),
                    y: y.to_string(),
                    level: Level::Tile,
                    scope: id.to_string(),
                    n: xs.len(),
                    error: r.as_ref().err().map(|e| e.to_string()),
                    r: r.ok(),
                });
            }
        }
        let mut tests = Vec::new();
        for other in &ids[i + 1..] {
            for m in metrics {
                let a = finite_values(recs, m)?;
                let b = finite_values(&by_model[other], m)?;
                let res = ttest(&a, &b, variant);
                tests.push(ModelTest {
                    metric: m.to_string(),
                    versus: other.to_string(),
                    error: res.as_ref().err().map(|e| e.to_string()),
                    result: res.ok(),
                });
            }
        }
        models.push(ModelReport {
            model_id: id.to_string(),
            n_tiles: recs.len(),
            aggregates: by_model_agg[*id].clone(),
            correlations,
            tests,
        });
    }

    let mut correlations = correlation_matrix(records, metrics, Level::Tile)?;
    // per-model tile coefficients already live under each model
    correlations.retain(|c| c.scope == "pooled" || c.scope == "per_model_mean");
    correlations.extend(correlation_matrix(records, metrics, Level::Model)?);

    Ok(Report {
        run_id: run_id.to_string(),
        config_digest: config_digest.to_string(),
        models,
        groups: aggregate(records, GroupBy::Group)?,
        correlations,
    })
}
