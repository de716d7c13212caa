//! Joint Gaussian process surrogate over (configuration, resource) pairs.

mod fit;
mod kernel;
mod optimize;
mod posterior;
mod refit;

pub use fit::{fit_hyperparameters, FitOptions, FitOutcome};
pub use kernel::{
    kappa, kernel_eval, kernel_grad, matern52, mean_eval, mean_grad, resource_kernel, KernelSpec,
    KernelVariant, Param, SurrogatePoint,
};
pub use optimize::{lbfgs_minimize, LbfgsOptions};
pub use posterior::{
    gram_matrix, log_marginal_likelihood, log_marginal_likelihood_grad, Observation,
    PosteriorState, Prediction,
};
pub use refit::{DatasetStats, RefitPolicy, RefitSchedule};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum GpError {
    #[error("no labeled data")]
    EmptyData,
    #[error("input has dimension {got}, kernel expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite input, target or kernel value")]
    NonFinite,
    #[error("kernel matrix is not positive definite even with jitter {max_jitter:e}")]
    IllConditioned { max_jitter: f64 },
}
