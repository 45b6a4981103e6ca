//! Error type shared by all modules.

use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("Bose factor undefined: omega = {omega} does not exceed mu = {mu}")]
    NonPositiveGap { omega: f64, mu: f64 },
    #[error("truncation level would exceed the cap of {cap} levels")]
    TruncationOverflow { cap: usize },
    #[error("operation requires the harmonic case chi = 0, got chi = {chi}")]
    RequiresHarmonic { chi: f64 },
    #[error("formula is singular at chi = 0; use the harmonic closed form instead")]
    DegenerateChi,
    #[error("quadrature failed to converge: {0}")]
    QuadratureFailure(String),
    #[error("eigensolver failed: {0}")]
    EigenFailure(String),
    #[error("propagated state is non-physical: rho_{level}(t={time}) = {value}")]
    NonPhysicalState { level: usize, time: f64, value: f64 },
    #[error("rate matrix truncation at n_max = {n_max} inadmissible: C/D = {ratio:.3e}")]
    InadmissibleTruncation { n_max: usize, ratio: f64 },
    #[error("spectral gap unresolved: lambda1 = {lambda1:.3e} below resolution")]
    SpectralGapUnresolved { lambda1: f64 },
    #[error("symmetric-coupling reference current vanishes; rectification undefined")]
    ZeroDenominator,
    #[error("no sign change of R_J on the bracket [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },
    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
