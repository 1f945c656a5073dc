//! Simulation and analysis of Ramsey metrology under engineered colored
//! dephasing noise: noise synthesis from a spectral density, product and GHZ
//! probe dynamics, Zeno-regime sensitivity analytics and model fitting.

// negated comparisons below are deliberate: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod error;
pub mod export;
pub mod fitting;
pub mod metrology;
pub mod noise;
pub mod spectra;

pub use dynamics::{ProbeKind, ProbeSpec, RamseyCurve};
pub use error::{Error, Result};
pub use fitting::{FitResult, GammaEstimate, Parameterization, PowerLawFit};
pub use metrology::{ScalingReport, SensitivityPoint};
pub use noise::{EnsembleConfig, NoiseTrajectory, StreamId};
pub use spectra::{DecoherenceLaw, NoiseModel, SpectralDensity};
