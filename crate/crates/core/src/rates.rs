//! Per-bath and total birth/death rates `C_n`, `D_n` and the steady-state
//! current kernel.
//!
//! The overall `eps^2` factor of the master equation is *not* included in the
//! level rates; the steady populations never see it and the dynamics module
//! applies it as a time scaling. The current kernel does carry it, since
//! currents are physical rates.

use crate::error::Result;
use crate::model::{BathParams, Setup, SpectralParams, SystemParams};

/// Up (`n -> n+1`) and down (`n -> n-1`) rates at one level, per bath.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelRates {
    pub level: usize,
    pub up: [f64; 2],
    pub down: [f64; 2],
}

impl LevelRates {
    pub fn up_total(&self) -> f64 {
        self.up[0] + self.up[1]
    }

    pub fn down_total(&self) -> f64 {
        self.down[0] + self.down[1]
    }
}

/// Absorption rate `C_n = (n+1) Gamma J(omega_n) n_bose(omega_n)` for one bath.
pub fn rate_up(
    n: usize,
    bath: &BathParams,
    system: &SystemParams,
    spectral: &SpectralParams,
) -> Result<f64> {
    let omega = system.level_freq(n);
    Ok((n as f64 + 1.0) * bath.gamma * spectral.density(omega) * bath.bose(omega)?)
}

/// Emission rate `D_n = n Gamma J(omega_{n-1}) (n_bose(omega_{n-1}) + 1)`;
/// exactly zero at `n = 0`.
pub fn rate_down(
    n: usize,
    bath: &BathParams,
    system: &SystemParams,
    spectral: &SpectralParams,
) -> Result<f64> {
    if n == 0 {
        return Ok(0.0);
    }
    let omega = system.level_freq(n - 1);
    Ok(n as f64 * bath.gamma * spectral.density(omega) * (bath.bose(omega)? + 1.0))
}

/// Both rates at level `n`, resolved per bath.
pub fn level_rates(n: usize, setup: &Setup) -> Result<LevelRates> {
    let mut up = [0.0; 2];
    let mut down = [0.0; 2];
    for (i, bath) in setup.baths().into_iter().enumerate() {
        up[i] = rate_up(n, bath, &setup.system, &setup.spectral)?;
        down[i] = rate_down(n, bath, &setup.system, &setup.spectral)?;
    }
    Ok(LevelRates { level: n, up, down })
}

/// Value of the current kernel, with a flag for the corner where both bath
/// occupations underflow to zero and the 0/0 form is resolved to zero
/// (no quanta flow).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelValue {
    pub value: f64,
    pub degenerate: bool,
}

/// Steady-state current kernel
/// `I(omega) = eps^2 G1 G2 J(omega) (n1 - n2) / (G1 n1 + G2 n2)`.
pub fn current_kernel(omega: f64, setup: &Setup) -> Result<KernelValue> {
    let n1 = setup.bath1.bose(omega)?;
    let n2 = setup.bath2.bose(omega)?;
    let g1 = setup.bath1.gamma;
    let g2 = setup.bath2.gamma;
    let denom = g1 * n1 + g2 * n2;
    if denom == 0.0 {
        return Ok(KernelValue { value: 0.0, degenerate: true });
    }
    let eps2 = setup.system.eps * setup.system.eps;
    let value = eps2 * g1 * g2 * setup.spectral.density(omega) * (n1 - n2) / denom;
    Ok(KernelValue { value, degenerate: false })
}
