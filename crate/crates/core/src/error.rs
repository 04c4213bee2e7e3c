use thiserror::Error;

/// Errors raised by the simulators and the explorer.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("rollout diverged (non-finite value at step {step})")]
    DivergentRollout { step: usize },
    #[error("kernel {kernel} is degenerate (pre-normalization sum {sum:e})")]
    ZeroKernel { kernel: usize, sum: f64 },
    #[error("unknown constraint feature `{0}`")]
    UnknownFeature(String),
    #[error("interval for `{feature}` is empty: [{lo}, {hi}]")]
    EmptyInterval { feature: String, lo: f64, hi: f64 },
    #[error("history has {len} entries, need more than {n_init}")]
    InsufficientHistory { len: usize, n_init: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("grid dimensions {width}x{height} do not match {len} values")]
    GridShape {
        width: usize,
        height: usize,
        len: usize,
    },
    #[error("png encoding failed: {0}")]
    Png(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
