//! Forward/backward-bias comparison of currents: asymmetry parametrization,
//! rectification coefficients, gamma sweeps and the locator for the
//! interaction strength where the energy rectification changes sign.
//!
//! Forward bias means `T1 = T_m + dT/2`, `T2 = T_m - dT/2` with the
//! couplings fixed by the asymmetry; backward bias swaps the temperatures.
//! Positive rectification means higher current flows when the cold bath is
//! the more strongly coupled one.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::Setup;
use crate::ness::{steady_currents, CurrentPair};

/// Overall coupling scale and degree of asymmetry:
/// `G1 = lambda (1 - gamma)`, `G2 = lambda (1 + gamma)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymmetryParams {
    pub lambda: f64,
    pub gamma: f64,
}

impl AsymmetryParams {
    pub fn new(lambda: f64, gamma: f64) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(Error::InvalidParameter(format!("lambda must be > 0, got {lambda}")));
        }
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::InvalidParameter(format!("gamma must lie in [0, 1], got {gamma}")));
        }
        Ok(Self { lambda, gamma })
    }
}

/// `(G1, G2) = (lambda (1 - gamma), lambda (1 + gamma))`.
pub fn gammas_from_asymmetry(p: &AsymmetryParams) -> (f64, f64) {
    (p.lambda * (1.0 - p.gamma), p.lambda * (1.0 + p.gamma))
}

/// Mean temperature and bias defining the forward configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalBias {
    pub t_mean: f64,
    pub delta_t: f64,
}

impl ThermalBias {
    pub fn new(t_mean: f64, delta_t: f64) -> Result<Self> {
        if !(t_mean > delta_t.abs() / 2.0) {
            return Err(Error::InvalidParameter(format!(
                "need t_mean > |delta_t|/2 for positive temperatures, got {t_mean}, {delta_t}"
            )));
        }
        Ok(Self { t_mean, delta_t })
    }

    pub fn forward(&self) -> (f64, f64) {
        (self.t_mean + self.delta_t / 2.0, self.t_mean - self.delta_t / 2.0)
    }

    pub fn backward(&self) -> (f64, f64) {
        let (t1, t2) = self.forward();
        (t2, t1)
    }
}

/// Rectification coefficients and the four current pairs they are built
/// from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RectificationResult {
    pub r_i: f64,
    pub r_j: f64,
    pub forward: CurrentPair,
    pub backward: CurrentPair,
    pub forward_symmetric: CurrentPair,
    pub backward_symmetric: CurrentPair,
}

fn currents_at(template: &Setup, g: (f64, f64), t: (f64, f64), tol: f64) -> Result<CurrentPair> {
    let setup = template.with_couplings_and_temps(g.0, t.0, g.1, t.1)?;
    let c = steady_currents(&setup, tol)?;
    Ok(CurrentPair { particle: c.particle, energy: c.energy })
}

/// `R_I = [I(dT, gamma) + I(-dT, gamma)] / I(dT, gamma = 0)` and the same
/// shape for `R_J`.
pub fn rectification(
    template: &Setup,
    bias: &ThermalBias,
    p: &AsymmetryParams,
    tol: f64,
) -> Result<RectificationResult> {
    if bias.delta_t == 0.0 {
        return Err(Error::ZeroDenominator);
    }
    let g = gammas_from_asymmetry(p);
    let g_sym = (p.lambda, p.lambda);
    let forward = currents_at(template, g, bias.forward(), tol)?;
    let backward = currents_at(template, g, bias.backward(), tol)?;
    let forward_symmetric = currents_at(template, g_sym, bias.forward(), tol)?;
    let backward_symmetric = currents_at(template, g_sym, bias.backward(), tol)?;
    if forward_symmetric.particle == 0.0 || forward_symmetric.energy == 0.0 {
        return Err(Error::ZeroDenominator);
    }
    Ok(RectificationResult {
        r_i: (forward.particle + backward.particle) / forward_symmetric.particle,
        r_j: (forward.energy + backward.energy) / forward_symmetric.energy,
        forward,
        backward,
        forward_symmetric,
        backward_symmetric,
    })
}

/// One grid point of a gamma sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub chi: f64,
    pub gamma: f64,
    pub r_i: f64,
    pub r_j: f64,
}

/// Gamma sweep over a set of interaction strengths, with the location of the
/// largest-magnitude rectification per interaction strength.
#[derive(Debug, Clone)]
pub struct GammaSweep {
    pub points: Vec<SweepPoint>,
    /// `(chi, gamma at max |R_I|, gamma at max |R_J|)` per chi.
    pub argmax: Vec<(f64, f64, f64)>,
}

/// Evaluates `R_I(gamma)`, `R_J(gamma)` on a grid for each interaction
/// strength; grid points run concurrently.
pub fn sweep_gamma(
    template: &Setup,
    bias: &ThermalBias,
    lambda: f64,
    chi_list: &[f64],
    gamma_grid: &[f64],
    tol: f64,
) -> Result<GammaSweep> {
    if gamma_grid.iter().any(|g| !(0.0..=1.0).contains(g)) {
        return Err(Error::InvalidParameter("gamma grid must lie in [0, 1]".into()));
    }
    let mut tasks = Vec::new();
    for &chi in chi_list {
        for &gamma in gamma_grid {
            tasks.push((chi, gamma));
        }
    }
    let points: Vec<SweepPoint> = tasks
        .par_iter()
        .map(|&(chi, gamma)| -> Result<SweepPoint> {
            let setup = template.with_chi(chi)?;
            let p = AsymmetryParams::new(lambda, gamma)?;
            let r = rectification(&setup, bias, &p, tol)?;
            Ok(SweepPoint { chi, gamma, r_i: r.r_i, r_j: r.r_j })
        })
        .collect::<Result<_>>()?;

    let argmax = chi_list
        .iter()
        .map(|&chi| {
            let mut best_i = (0.0, 0.0);
            let mut best_j = (0.0, 0.0);
            for p in points.iter().filter(|p| p.chi == chi) {
                if p.r_i.abs() > best_i.1 {
                    best_i = (p.gamma, p.r_i.abs());
                }
                if p.r_j.abs() > best_j.1 {
                    best_j = (p.gamma, p.r_j.abs());
                }
            }
            (chi, best_i.0, best_j.0)
        })
        .collect();

    Ok(GammaSweep { points, argmax })
}

/// Result of the energy-rectification sign-change search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RjZero {
    pub chi_star: f64,
    /// Particle rectification at the crossing.
    pub r_i_at_zero: f64,
    pub bracket: (f64, f64),
}

/// Bisection on `chi -> R_J(chi)` over a bracket; 60 iterations cap, which
/// resolves the crossing far below the reference scale.
pub fn find_rj_zero(
    template: &Setup,
    bias: &ThermalBias,
    p: &AsymmetryParams,
    bracket: (f64, f64),
    tol: f64,
) -> Result<RjZero> {
    let (mut lo, mut hi) = bracket;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::InvalidParameter(format!("bad bracket [{lo}, {hi}]")));
    }
    let rj = |chi: f64| -> Result<f64> {
        Ok(rectification(&template.with_chi(chi)?, bias, p, tol)?.r_j)
    };
    let f_lo = rj(lo)?;
    let f_hi = rj(hi)?;
    if f_lo == 0.0 {
        lo = lo.max(f64::MIN_POSITIVE);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::NoSignChange { lo, hi });
    }
    let reference = f_lo.abs().max(f_hi.abs());
    let mut f_lo = f_lo;
    let mut chi_star = 0.5 * (lo + hi);
    let mut r_value = f64::NAN;
    for _ in 0..60 {
        chi_star = 0.5 * (lo + hi);
        r_value = rj(chi_star)?;
        if r_value.abs() < 1e-8 * reference {
            break;
        }
        if r_value.signum() == f_lo.signum() {
            lo = chi_star;
            f_lo = r_value;
        } else {
            hi = chi_star;
        }
    }
    let r_i_at_zero = rectification(&template.with_chi(chi_star)?, bias, p, tol)?.r_i;
    let _ = r_value;
    Ok(RjZero { chi_star, r_i_at_zero, bracket })
}
