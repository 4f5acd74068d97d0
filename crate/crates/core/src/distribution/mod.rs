//! Feature-distribution metrics between real and virtual embedding sets.

mod features;
mod gaussian;
mod kernel;
mod manifold;
mod toy_encoder;

pub use features::{read_features, write_features, FeatureSet, MAGIC, VERSION};
pub use gaussian::{frechet_distance, frechet_from_features, moments, GaussianMoments};
pub use nalgebra::{DMatrix, DVector};
pub use kernel::{kernel_distance, polynomial_kernel, Estimator, SubsetSpec};
pub use manifold::{precision_recall, ManifoldIndex, PrecisionRecall, DEFAULT_K};
pub use toy_encoder::{toy_encoder, toy_encoder_with_basis, TOY_DIM, TOY_ENCODER_TAG};

#[derive(Debug, thiserror::Error)]
pub enum DistError {
    #[error("feature dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("k = {k} requires more than k samples, got {n}")]
    KTooLarge { k: usize, n: usize },
    #[error("eigendecomposition did not converge")]
    NumericalFailure,
    #[error("invalid feature set: {0}")]
    InvalidFeatures(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("not a FEAT1 file (bad magic)")]
    BadMagic,
    #[error("FEAT1 file is truncated")]
    TruncatedFile,
    #[error("unsupported FEAT version {0}")]
    VersionUnsupported(u32),
    #[error("corrupt FEAT1 file: {0}")]
    CorruptFile(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
