//! Aggregation, correlation and significance testing over per-tile metric
//! records, plus the JSON report and SVG scatter plots built from them.

mod aggregate;
mod inference;
mod plot;
mod report;

pub use aggregate::{
    aggregate, correlate_pair, correlation_matrix, metric_value, CorrelationReport, GroupBy, Level, MetricRecord,
    MetricValue, Summary, ALL_METRICS,
};
pub use inference::{pearson, ttest, TTestResult, TTestVariant};
pub use plot::{render_scatter, scatter_svg, ScatterPoint};
pub use report::{build_report, ModelReport, ModelTest, Report};

#[derive(Debug, thiserror::Error)]
pub enum StatsError {
    #[error("need at least {needed} samples, got {got}")]
    TooFew { needed: usize, got: usize },
    #[error("samples have different lengths: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("zero variance")]
    ZeroVariance,
    #[error("groups have zero variance but different means")]
    DegenerateVariance,
    #[error("non-finite sample value")]
    NonFinite,
    #[error("no records to aggregate")]
    Empty,
    #[error("unknown metric `{0}`")]
    UnknownMetric(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
