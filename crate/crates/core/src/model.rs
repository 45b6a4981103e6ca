//! Physical parameter sets and the elementary frequency, energy and
//! occupation functions every other module consumes.
//!
//! Energies are measured in units of the bare level spacing and time in its
//! inverse; the fields carry explicit values so other unit choices work too.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Single-site Hamiltonian `E_n = omega0 n + chi n^2` and the dimensionless
/// system-bath coupling scale `eps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub omega0: f64,
    pub chi: f64,
    pub eps: f64,
}

impl SystemParams {
    pub fn new(omega0: f64, chi: f64, eps: f64) -> Result<Self> {
        if !(omega0 > 0.0) {
            return Err(Error::InvalidParameter(format!("omega0 must be > 0, got {omega0}")));
        }
        if !(chi >= 0.0) {
            return Err(Error::InvalidParameter(format!("chi must be >= 0, got {chi}")));
        }
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::InvalidParameter(format!("eps must lie in (0, 1), got {eps}")));
        }
        Ok(Self { omega0, chi, eps })
    }

    /// Transition frequency between levels `n` and `n+1`:
    /// `omega_n = omega0 + chi (2n + 1)`.
    pub fn level_freq(&self, n: usize) -> f64 {
        self.omega0 + self.chi * (2.0 * n as f64 + 1.0)
    }

    /// Eigenenergy `E_n = omega0 n + chi n^2`.
    pub fn level_energy(&self, n: usize) -> f64 {
        let n = n as f64;
        self.omega0 * n + self.chi * n * n
    }
}

/// One reservoir: coupling weight, temperature and chemical potential.
///
/// `mu` defaults to zero for photonic/phononic baths; a nonzero value is
/// accepted as long as it stays below the smallest transition frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BathParams {
    pub gamma: f64,
    pub temperature: f64,
    pub mu: f64,
}

impl BathParams {
    pub fn new(gamma: f64, temperature: f64) -> Result<Self> {
        Self::with_mu(gamma, temperature, 0.0)
    }

    pub fn with_mu(gamma: f64, temperature: f64, mu: f64) -> Result<Self> {
        if !(gamma >= 0.0) {
            return Err(Error::InvalidParameter(format!("gamma must be >= 0, got {gamma}")));
        }
        if !(temperature > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "temperature must be > 0, got {temperature}"
            )));
        }
        Ok(Self { gamma, temperature, mu })
    }

    /// Bose occupation `1 / (e^{(omega - mu)/T} - 1)`, evaluated through
    /// `expm1` so small arguments do not cancel.
    pub fn bose(&self, omega: f64) -> Result<f64> {
        if omega <= self.mu {
            return Err(Error::NonPositiveGap { omega, mu: self.mu });
        }
        let x = (omega - self.mu) / self.temperature;
        Ok(1.0 / x.exp_m1())
    }
}

/// Bath spectral density exponent and cutoff, shared by both reservoirs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralParams {
    pub s: f64,
    pub omega_c: f64,
}

impl SpectralParams {
    pub fn new(s: f64, omega_c: f64) -> Result<Self> {
        if !(s >= 0.0) {
            return Err(Error::InvalidParameter(format!("s must be >= 0, got {s}")));
        }
        if !(omega_c > 0.0) {
            return Err(Error::InvalidParameter(format!("omega_c must be > 0, got {omega_c}")));
        }
        Ok(Self { s, omega_c })
    }

    /// `J(omega) = omega^s e^{-omega/omega_c}`. The bath-resolved density is
    /// `gamma_l * density(omega)`.
    pub fn density(&self, omega: f64) -> f64 {
        if omega == 0.0 && self.s == 0.0 {
            return 1.0;
        }
        omega.powf(self.s) * (-omega / self.omega_c).exp()
    }
}

/// The complete system + two-bath configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Setup {
    pub system: SystemParams,
    pub bath1: BathParams,
    pub bath2: BathParams,
    pub spectral: SpectralParams,
}

impl Setup {
    pub fn new(
        system: SystemParams,
        bath1: BathParams,
        bath2: BathParams,
        spectral: SpectralParams,
    ) -> Result<Self> {
        let gap0 = system.level_freq(0);
        for (name, bath) in [("bath1", &bath1), ("bath2", &bath2)] {
            if bath.mu >= gap0 {
                return Err(Error::InvalidParameter(format!(
                    "{name}.mu = {} must lie below the lowest gap {gap0}",
                    bath.mu
                )));
            }
        }
        Ok(Self { system, bath1, bath2, spectral })
    }

    /// Same system/spectral parameters, new couplings and temperatures
    /// (chemical potentials kept).
    pub fn with_couplings_and_temps(&self, g1: f64, t1: f64, g2: f64, t2: f64) -> Result<Self> {
        Setup::new(
            self.system,
            BathParams::with_mu(g1, t1, self.bath1.mu)?,
            BathParams::with_mu(g2, t2, self.bath2.mu)?,
            self.spectral,
        )
    }

    /// Same setup with a different interaction strength.
    pub fn with_chi(&self, chi: f64) -> Result<Self> {
        let mut s = *self;
        s.system = SystemParams::new(self.system.omega0, chi, self.system.eps)?;
        Ok(s)
    }

    pub fn baths(&self) -> [&BathParams; 2] {
        [&self.bath1, &self.bath2]
    }

    /// Soft-constraint diagnostics; the cutoff should dominate every other
    /// energy scale for the wide-band forms to hold.
    pub fn warnings(&self) -> Vec<String> {
        let mut warnings = Vec::new();
        let scale = self
            .system
            .omega0
            .max(self.system.chi)
            .max(self.bath1.temperature)
            .max(self.bath2.temperature);
        if self.spectral.omega_c < 100.0 * scale {
            warnings.push(format!(
                "omega_c = {} is below 100x the largest energy scale {}; wide-band \
                 approximations may be inaccurate",
                self.spectral.omega_c, scale
            ));
        }
        warnings
    }
}
