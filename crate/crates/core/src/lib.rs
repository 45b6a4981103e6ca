//! Numerics for a single interacting bosonic site weakly coupled to two
//! thermal baths: exact steady-state populations and currents, two-level and
//! high-temperature limits, rectification, and transient relaxation.

pub mod cli;
pub mod dynamics;
pub mod error;
pub mod limits;
pub mod model;
pub mod ness;
pub mod numerics;
pub mod rates;
pub mod rectification;

pub use error::{Error, Result};
pub use model::{BathParams, Setup, SpectralParams, SystemParams};
pub use ness::{steady_currents, steady_populations, CurrentPair, NessDistribution, SteadyCurrents};
