//! Transient dynamics of the diagonal master equation: truncated birth-death
//! generator, exact propagation by spectral decomposition, time-dependent
//! observables and the relaxation time from the spectral gap.
//!
//! The generator is similar to a symmetric tridiagonal matrix through the
//! diagonal scaling built from the stationary weights; its spectrum is
//! therefore real by construction and a symmetric eigensolver applies. The
//! propagation is exact at any output time, with no step-size error.

use crate::error::{Error, Result};
use crate::model::Setup;
use crate::numerics::eig_sym_tridiag;
use crate::rates::level_rates;

/// Tridiagonal birth-death generator truncated at `n_max`, with per-bath
/// rates retained for current splitting.
#[derive(Debug, Clone)]
pub struct RateMatrix {
    /// `C_n + D_n` for `n = 0 ..= n_max`.
    pub diag: Vec<f64>,
    /// `C_n` for `n = 0 .. n_max`; entry `(n+1, n)` of the generator is `-C_n`.
    pub lower: Vec<f64>,
    /// `D_{n+1}` for `n = 0 .. n_max`; entry `(n, n+1)` is `-D_{n+1}`.
    pub upper: Vec<f64>,
    /// Per-bath up rates `C_n^{(l)}`.
    pub up_per_bath: Vec<[f64; 2]>,
    /// Per-bath down rates `D_n^{(l)}`.
    pub down_per_bath: Vec<[f64; 2]>,
    /// Transition frequencies `omega_n` for `n = 0 ..= n_max`.
    pub freqs: Vec<f64>,
}

impl RateMatrix {
    pub fn size(&self) -> usize {
        self.diag.len()
    }

    /// Symmetrized form: diagonal, off-diagonal `-sqrt(C_n D_{n+1})` and the
    /// similarity scaling `u_n = sqrt(prod C_p / D_{p+1})`.
    fn symmetrized(&self) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let n = self.size();
        let offdiag: Vec<f64> =
            (0..n - 1).map(|i| -(self.lower[i] * self.upper[i]).sqrt()).collect();
        let mut u = Vec::with_capacity(n);
        u.push(1.0f64);
        for i in 0..n - 1 {
            let prev = u[i];
            u.push(prev * (self.lower[i] / self.upper[i]).sqrt());
        }
        (self.diag.clone(), offdiag, u)
    }

    /// Applies the generator to a vector: `(M v)_n`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let n = self.size();
        (0..n)
            .map(|i| {
                let mut acc = self.diag[i] * v[i];
                if i >= 1 {
                    acc -= self.lower[i - 1] * v[i - 1];
                }
                if i + 1 < n {
                    acc -= self.upper[i] * v[i + 1];
                }
                acc
            })
            .collect()
    }
}

/// Observables along a time grid, in units of the inverse level spacing.
#[derive(Debug, Clone)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    /// `populations[k]` is the full vector at `times[k]`.
    pub populations: Vec<Vec<f64>>,
    pub occupation: Vec<f64>,
    pub energy: Vec<f64>,
    /// Particle current into the system from each bath.
    pub particle_current: [Vec<f64>; 2],
    /// Energy current into the system from each bath.
    pub energy_current: [Vec<f64>; 2],
    /// Times below this floor precede the bath memory scale `1/omega_c`;
    /// the Markovian description is not controlled there.
    pub markov_time_floor: f64,
}

/// Relaxation time from the smallest nonzero eigenvalue of the generator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TssResult {
    pub lambda1: f64,
    pub t_ss: f64,
    /// Largest imaginary part encountered; structurally zero because the
    /// solver works on the symmetrized matrix.
    pub max_imag: f64,
}

/// Builds the truncated generator, rejecting truncations whose last-column
/// leak is not negligible (`C_{n_max} / D_{n_max} < 1e-6` required).
pub fn build_rate_matrix(setup: &Setup, n_max: usize) -> Result<RateMatrix> {
    if n_max == 0 {
        return Err(Error::InvalidParameter("rate matrix needs n_max >= 1".into()));
    }
    let mut diag = Vec::with_capacity(n_max + 1);
    let mut lower = Vec::with_capacity(n_max);
    let mut upper = Vec::with_capacity(n_max);
    let mut up_per_bath = Vec::with_capacity(n_max + 1);
    let mut down_per_bath = Vec::with_capacity(n_max + 1);
    let mut freqs = Vec::with_capacity(n_max + 1);

    let mut all = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        all.push(level_rates(n, setup)?);
        freqs.push(setup.system.level_freq(n));
    }
    let last = &all[n_max];
    let leak = last.up_total() / last.down_total();
    if !(leak < 1e-6) {
        return Err(Error::InadmissibleTruncation { n_max, ratio: leak });
    }
    for (n, r) in all.iter().enumerate() {
        diag.push(r.up_total() + r.down_total());
        up_per_bath.push(r.up);
        down_per_bath.push(r.down);
        if n >= 1 {
            lower.push(all[n - 1].up_total());
            upper.push(r.down_total());
        }
    }
    // last diagonal entry keeps only D so that columns 0..n_max-1 sum to zero
    // and the closed top level does not decay out of the space
    diag[n_max] = last.down_total();
    Ok(RateMatrix { diag, lower, upper, up_per_bath, down_per_bath, freqs })
}

/// Propagates `rho(t) = exp(-eps^2 M t) rho(0)` through the eigenbasis of the
/// symmetrized generator and evaluates observables on the grid.
pub fn evolve(m: &RateMatrix, rho0: &[f64], times: &[f64], setup: &Setup) -> Result<TimeSeries> {
    let n = m.size();
    if rho0.len() != n {
        return Err(Error::InvalidParameter(format!(
            "initial state length {} does not match matrix size {n}",
            rho0.len()
        )));
    }
    let total: f64 = rho0.iter().sum();
    if (total - 1.0).abs() > 1e-10 || rho0.iter().any(|&p| p < 0.0) {
        return Err(Error::InvalidParameter("initial state must be a normalized distribution".into()));
    }
    if times.windows(2).any(|w| w[1] < w[0]) || times.first().is_some_and(|&t| t < 0.0) {
        return Err(Error::InvalidParameter("times must be sorted and nonnegative".into()));
    }

    let (diag, offdiag, u) = m.symmetrized();
    let eig = eig_sym_tridiag(&diag, &offdiag, true)?;
    let vectors = eig.vectors.expect("vectors requested");
    let eps2 = setup.system.eps * setup.system.eps;

    // expansion coefficients of the scaled initial state
    let scaled: Vec<f64> = rho0.iter().zip(&u).map(|(&p, &ui)| p / ui).collect();
    let coeff: Vec<f64> = vectors
        .iter()
        .map(|v| v.iter().zip(&scaled).map(|(a, b)| a * b).sum())
        .collect();

    let mut populations = Vec::with_capacity(times.len());
    let mut occupation = Vec::with_capacity(times.len());
    let mut energy = Vec::with_capacity(times.len());
    let mut particle_current = [Vec::with_capacity(times.len()), Vec::with_capacity(times.len())];
    let mut energy_current = [Vec::with_capacity(times.len()), Vec::with_capacity(times.len())];

    for &t in times {
        let damp: Vec<f64> =
            eig.values.iter().zip(&coeff).map(|(&l, &c)| c * (-eps2 * l * t).exp()).collect();
        let mut rho = vec![0.0f64; n];
        for (v, &d) in vectors.iter().zip(&damp) {
            if d == 0.0 {
                continue;
            }
            for (r, &vr) in rho.iter_mut().zip(v) {
                *r += vr * d;
            }
        }
        for (r, &ui) in rho.iter_mut().zip(&u) {
            *r *= ui;
        }
        for (level, &p) in rho.iter().enumerate() {
            if p < -1e-8 {
                return Err(Error::NonPhysicalState { level, time: t, value: p });
            }
        }

        occupation.push(rho.iter().enumerate().map(|(k, &p)| k as f64 * p).sum());
        energy.push(rho.iter().enumerate().map(|(k, &p)| setup.system.level_energy(k) * p).sum());
        for l in 0..2 {
            let mut ip = 0.0;
            let mut ie = 0.0;
            for (k, &p) in rho.iter().enumerate() {
                let up = m.up_per_bath[k][l];
                let down = m.down_per_bath[k][l];
                ip += p * (up - down);
                let omega_up = m.freqs[k];
                let omega_down = if k >= 1 { m.freqs[k - 1] } else { 0.0 };
                ie += p * (omega_up * up - omega_down * down);
            }
            particle_current[l].push(eps2 * ip);
            energy_current[l].push(eps2 * ie);
        }
        populations.push(rho);
    }

    Ok(TimeSeries {
        times: times.to_vec(),
        populations,
        occupation,
        energy,
        particle_current,
        energy_current,
        markov_time_floor: 1.0 / setup.spectral.omega_c,
    })
}

/// Spectral gap and relaxation time `t_ss = 1 / (eps^2 lambda_1)`.
pub fn relaxation_time(m: &RateMatrix, setup: &Setup) -> Result<TssResult> {
    let (diag, offdiag, _) = m.symmetrized();
    let eig = eig_sym_tridiag(&diag, &offdiag, false)?;
    let spectral_radius = eig.values.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    let lambda1 = eig.values[1];
    if !(lambda1 > 1e-12 * spectral_radius) {
        return Err(Error::SpectralGapUnresolved { lambda1 });
    }
    let eps2 = setup.system.eps * setup.system.eps;
    Ok(TssResult { lambda1, t_ss: 1.0 / (eps2 * lambda1), max_imag: 0.0 })
}

/// The zero-mode of the generator, normalized to unit sum; equals the steady
/// populations of the recursion up to eigensolver accuracy.
pub fn stationary_vector(m: &RateMatrix) -> Result<Vec<f64>> {
    // the similarity scaling itself carries the stationary weights
    let (_, _, u) = m.symmetrized();
    let weights: Vec<f64> = u.iter().map(|ui| ui * ui).collect();
    let total: f64 = weights.iter().sum();
    Ok(weights.into_iter().map(|w| w / total).collect())
}

/// Closed-form relaxation of the harmonic system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarmonicRelaxation {
    /// Decay rate `eps^2 sum_l Gamma_l J(omega0)`.
    pub rate: f64,
    pub t_ss: f64,
    /// Steady occupation `sum_l J_l(omega0) n_l / sum_l J_l(omega0)`.
    pub n_ss: f64,
}

impl HarmonicRelaxation {
    /// `<N(t)> = (N(0) - N_ss) e^{-rate t} + N_ss`.
    pub fn occupation_at(&self, t: f64, n0: f64) -> f64 {
        (n0 - self.n_ss) * (-self.rate * t).exp() + self.n_ss
    }
}

/// Exact `chi = 0` relaxation: the generator cannot be truncated there at
/// high temperature, but the occupation obeys a closed single-exponential
/// law with a temperature-independent time scale.
pub fn tss_harmonic(setup: &Setup) -> Result<HarmonicRelaxation> {
    if setup.system.chi != 0.0 {
        return Err(Error::RequiresHarmonic { chi: setup.system.chi });
    }
    let omega0 = setup.system.omega0;
    let density = setup.spectral.density(omega0);
    let mut j_total = 0.0;
    let mut jn_total = 0.0;
    for bath in setup.baths() {
        let j = bath.gamma * density;
        j_total += j;
        jn_total += j * bath.bose(omega0)?;
    }
    let eps2 = setup.system.eps * setup.system.eps;
    let rate = eps2 * j_total;
    Ok(HarmonicRelaxation { rate, t_ss: 1.0 / rate, n_ss: jn_total / j_total })
}

/// Two-level relaxation limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NesbRelaxation {
    /// Exact two-level gap `eps^2 sum_l J_l(omega0+chi)(2 n_l + 1)`.
    pub gap: f64,
    pub t_ss: f64,
    /// Large-gap asymptote `1 / (eps^2 (omega0+chi)^s (G1 + G2))`.
    pub t_ss_asymptote: f64,
}

/// Relaxation constants of the two-level (`chi >> omega0, T1, T2`) regime.
pub fn tss_nesb(setup: &Setup) -> Result<NesbRelaxation> {
    let gap_freq = setup.system.omega0 + setup.system.chi;
    let density = setup.spectral.density(gap_freq);
    let mut total = 0.0;
    for bath in setup.baths() {
        total += bath.gamma * density * (2.0 * bath.bose(gap_freq)? + 1.0);
    }
    let eps2 = setup.system.eps * setup.system.eps;
    let gap = eps2 * total;
    let g_sum = setup.bath1.gamma + setup.bath2.gamma;
    let asymptote = 1.0 / (eps2 * gap_freq.powf(setup.spectral.s) * g_sum);
    Ok(NesbRelaxation { gap, t_ss: 1.0 / gap, t_ss_asymptote: asymptote })
}

/// Logarithmically spaced time grid, the default presentation for relaxation
/// curves.
pub fn log_time_grid(t_min: f64, t_max: f64, points: usize) -> Vec<f64> {
    assert!(t_min > 0.0 && t_max > t_min && points >= 2);
    let (a, b) = (t_min.ln(), t_max.ln());
    (0..points)
        .map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BathParams, SpectralParams, SystemParams};
    use crate::ness::{steady_populations_at, truncation_level};
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn setup(chi: f64, g1: f64, t1: f64, g2: f64, t2: f64) -> Setup {
        Setup::new(
            SystemParams::new(1.0, chi, 0.1).unwrap(),
            BathParams::new(g1, t1).unwrap(),
            BathParams::new(g2, t2).unwrap(),
            SpectralParams::new(1.0, 1000.0).unwrap(),
        )
        .unwrap()
    }

    fn fig6_setup(chi: f64) -> Setup {
        setup(chi, 0.4, 4.0, 1.6, 2.0)
    }

    fn admissible_matrix(s: &Setup) -> RateMatrix {
        let mut n_max = truncation_level(s, 1e-10).unwrap().max(2);
        loop {
            match build_rate_matrix(s, n_max) {
                Ok(m) => return m,
                Err(_) => n_max += n_max / 2 + 1,
            }
        }
    }

    #[test]
    fn column_sums_vanish() {
        let s = fig6_setup(1.0);
        let m = admissible_matrix(&s);
        let n = m.size();
        // column n sums diag[n] - lower[n] (below) - ... reconstruct densely
        for col in 0..n {
            let mut sum = m.diag[col];
            if col + 1 < n {
                sum -= m.lower[col]; // entry (col+1, col) = -C_col
            }
            if col >= 1 {
                sum -= m.upper[col - 1]; // entry (col-1, col) = -D_col
            }
            let magnitude = m.diag[col].abs();
            if col + 1 < n {
                assert_abs_diff_eq!(sum, 0.0, epsilon = 1e-14 * magnitude.max(1.0));
            } else {
                // closed last level: column sums exactly to zero by construction,
                // admissibility bounds the neglected C_{n_max}
                let leak = (m.up_per_bath[col][0] + m.up_per_bath[col][1])
                    / (m.down_per_bath[col][0] + m.down_per_bath[col][1]);
                assert!(leak < 1e-6);
            }
        }
    }

    #[test]
    fn nesb_two_by_two_form() {
        let s = setup(50.0, 0.4, 1.5, 1.6, 0.5);
        let m = build_rate_matrix(&s, 1).unwrap();
        let r0 = level_rates(0, &s).unwrap();
        let r1 = level_rates(1, &s).unwrap();
        assert_eq!(m.diag[0], r0.up_total());
        assert_eq!(m.diag[1], r1.down_total());
        assert_eq!(m.lower[0], r0.up_total());
        assert_eq!(m.upper[0], r1.down_total());
    }

    #[test]
    fn steady_vector_in_nullspace() {
        let s = fig6_setup(1.0);
        let m = admissible_matrix(&s);
        let rho = steady_populations_at(&s, m.size() - 1).unwrap();
        let residual = m.apply(&rho.rho);
        let norm: f64 = m.diag.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
        for &r in &residual {
            assert_abs_diff_eq!(r, 0.0, epsilon = 1e-10 * norm);
        }
        // and the zero-mode matches the recursion
        let stat = stationary_vector(&m).unwrap();
        for (a, b) in stat.iter().zip(&rho.rho) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn inadmissible_truncation_rejected() {
        let s = setup(0.0, 1.0, 10.0, 1.0, 10.0);
        assert!(matches!(
            build_rate_matrix(&s, 100),
            Err(Error::InadmissibleTruncation { .. })
        ));
    }

    #[test]
    fn evolve_identity_at_zero_time() {
        let s = fig6_setup(2.0);
        let m = admissible_matrix(&s);
        let mut rho0 = vec![0.0; m.size()];
        rho0[0] = 1.0;
        let ts = evolve(&m, &rho0, &[0.0], &s).unwrap();
        for (a, b) in ts.populations[0].iter().zip(&rho0) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn evolve_reaches_steady_state() {
        let s = fig6_setup(1.0);
        let m = admissible_matrix(&s);
        let tss = relaxation_time(&m, &s).unwrap();
        let mut rho0 = vec![0.0; m.size()];
        rho0[0] = 1.0;
        let ts = evolve(&m, &rho0, &[50.0 * tss.t_ss], &s).unwrap();
        let ness = steady_populations_at(&s, m.size() - 1).unwrap();
        for (a, b) in ts.populations[0].iter().zip(&ness.rho) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-8);
        }
    }

    #[test]
    fn evolve_conserves_trace() {
        let s = fig6_setup(0.5);
        let m = admissible_matrix(&s);
        let mut rho0 = vec![0.0; m.size()];
        rho0[0] = 1.0;
        let grid = log_time_grid(1e-2, 1e3, 200);
        let ts = evolve(&m, &rho0, &grid, &s).unwrap();
        for rho in &ts.populations {
            let total: f64 = rho.iter().sum();
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-10);
            assert!(rho.iter().all(|&p| p >= -1e-12));
        }
    }

    #[test]
    fn equilibrium_gibbs_start_is_stationary() {
        let s = setup(1.0, 0.4, 2.0, 1.6, 2.0);
        let m = admissible_matrix(&s);
        let gibbs = steady_populations_at(&s, m.size() - 1).unwrap();
        let ts = evolve(&m, &gibbs.rho, &[0.0, 1.0, 10.0, 100.0, 1000.0], &s).unwrap();
        for rho in &ts.populations {
            for (a, b) in rho.iter().zip(&gibbs.rho) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn occupation_relaxes_monotonically() {
        // vacuum start under thermal bias: no oscillations in N(t)
        for &chi in &[0.5, 1.0, 2.0, 4.0] {
            let s = fig6_setup(chi);
            let m = admissible_matrix(&s);
            let mut rho0 = vec![0.0; m.size()];
            rho0[0] = 1.0;
            let grid = log_time_grid(1e-2, 1e3, 200);
            let ts = evolve(&m, &rho0, &grid, &s).unwrap();
            for w in ts.occupation.windows(2) {
                assert!(w[1] >= w[0] - 1e-12, "chi = {chi}");
            }
        }
    }

    #[test]
    fn relaxation_time_eps_scaling() {
        let s = fig6_setup(1.0);
        let m = admissible_matrix(&s);
        let base = relaxation_time(&m, &s).unwrap();
        let mut s2 = s;
        s2.system.eps = 0.2;
        let scaled = relaxation_time(&m, &s2).unwrap();
        assert_relative_eq!(scaled.t_ss, base.t_ss / 4.0, max_relative = 1e-14);
        assert_eq!(base.max_imag, 0.0);
    }

    #[test]
    fn relaxation_depends_on_temperatures_at_intermediate_chi() {
        let a = setup(1.0, 0.4, 4.0, 1.6, 2.0);
        let b = setup(1.0, 0.4, 8.0, 1.6, 4.0);
        let ta = relaxation_time(&admissible_matrix(&a), &a).unwrap();
        let tb = relaxation_time(&admissible_matrix(&b), &b).unwrap();
        assert!((ta.t_ss - tb.t_ss).abs() / ta.t_ss > 0.01);
    }

    #[test]
    fn tss_monotone_in_chi() {
        let mut prev = f64::INFINITY;
        for &chi in &[0.5, 1.0, 2.0, 5.0, 10.0, 50.0] {
            let s = fig6_setup(chi);
            let t = relaxation_time(&admissible_matrix(&s), &s).unwrap().t_ss;
            assert!(t <= prev, "chi = {chi}");
            prev = t;
        }
    }

    #[test]
    fn tss_harmonic_closed_form() {
        let s = setup(0.0, 0.4, 4.0, 1.6, 2.0);
        let h = tss_harmonic(&s).unwrap();
        // 1 / (0.01 * 2 * e^{-0.001})
        assert_relative_eq!(h.t_ss, 1.0 / (0.01 * 2.0 * (-0.001f64).exp()), max_relative = 1e-13);

        // temperature independence of the time scale
        let s2 = setup(0.0, 0.4, 8.0, 1.6, 4.0);
        assert_eq!(tss_harmonic(&s2).unwrap().t_ss, h.t_ss);

        // N_ss agrees with the chi = 0 steady solver
        let dist = steady_populations_at(&s, 600).unwrap();
        assert_relative_eq!(h.n_ss, dist.mean_occupation(), max_relative = 1e-10);

        assert!(tss_harmonic(&setup(1.0, 1.0, 4.0, 1.0, 2.0)).is_err());
    }

    #[test]
    fn tss_nesb_matches_eigensolve() {
        let s = setup(100.0, 0.4, 1.5, 1.6, 0.5);
        let nesb = tss_nesb(&s).unwrap();
        let m = build_rate_matrix(&s, 2).unwrap();
        let full = relaxation_time(&m, &s).unwrap();
        assert_abs_diff_eq!(full.t_ss / nesb.t_ss, 1.0, epsilon = 0.01);
        // asymptote: 1 / (eps^2 omega0^s (G1+G2)) with omega0 = 101
        assert_relative_eq!(nesb.t_ss_asymptote, 1.0 / (0.01 * 101.0 * 2.0), max_relative = 1e-13);
    }

    #[test]
    fn tss_nesb_spec_value() {
        let s = setup(50.0, 1.0, 1.5, 1.0, 0.5);
        let nesb = tss_nesb(&s).unwrap();
        assert_relative_eq!(nesb.t_ss_asymptote, 1.0 / (0.01 * 51.0 * 2.0), max_relative = 1e-13);
        // constant bath: asymptote independent of chi
        let mut flat = s;
        flat.spectral = SpectralParams::new(0.0, 1000.0).unwrap();
        let a = tss_nesb(&flat).unwrap().t_ss_asymptote;
        let flat2 = flat.with_chi(200.0).unwrap();
        let b = tss_nesb(&flat2).unwrap().t_ss_asymptote;
        assert_eq!(a, b);
    }
}
