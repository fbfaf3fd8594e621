//! Learning action-sampling distributions for continuous-space planners from
//! search experience, using adversarial training on importance-resampled data.
//!
//! The crate is organised bottom-up:
//!
//! - [`neuralnet`]: dense networks, backpropagation, Adam and Adadelta.
//! - [`importance`]: least-squares direct estimation of the density ratio `p/q`.
//! - [`resampler`]: turns importance weights into a bootstrapped dataset.
//! - [`adversarial`]: conditional GAN training and the end-to-end GANDI pipeline.
//! - [`planner`]: best-first search with sampled actions and node reconsideration.
//! - [`domains`]: a Gaussian-mixture toy, bin packing and reconfiguration.
//! - [`analysis`]: divergences, bound checks and experiment statistics.
//! - [`harness`]: the seeded experiment driver behind the `gandi` binary.

pub mod adversarial;
pub mod analysis;
pub mod bounds;
pub mod domains;
pub mod harness;
pub mod importance;
pub mod neuralnet;
pub mod planner;
pub mod resampler;

pub use bounds::BoxBounds;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error("unsupported model version: {0}")]
    Version(String),
    #[error("truncated model file: {0}")]
    Truncated(String),
    #[error("malformed data: {0}")]
    Format(String),
    #[error("cannot bootstrap: every importance weight is zero")]
    ZeroWeights,
    #[error("infeasible action: {0}")]
    Infeasible(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("search did not reach the goal")]
    Unsolved,
    #[error("{0}")]
    Runtime(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
