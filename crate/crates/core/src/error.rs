use thiserror::Error;

/// Errors raised by the simulator and the analysis routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("{value} is outside the tabulated range [{lo}, {hi}]")]
    Range { value: f64, lo: f64, hi: f64 },

    #[error("harmonic index {index} out of range 1..={max}")]
    Index { index: usize, max: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error(
        "time grid too coarse: step {max_step} ms exceeds {allowed_step} ms \
         (fringe at {fringe} rad/ms needs a sampling rate of at least {min_rate} samples/ms)"
    )]
    Grid {
        max_step: f64,
        allowed_step: f64,
        fringe: f64,
        min_rate: f64,
    },

    #[error("integration failed at t = {t} ms: step {step} ms fell below {min_step} ms")]
    Integration { t: f64, step: f64, min_step: f64 },

    #[error("no optimal measurement time in (0, {bound}] ms")]
    NoOptimum { bound: f64 },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
}

pub type Result<T> = std::result::Result<T, Error>;
