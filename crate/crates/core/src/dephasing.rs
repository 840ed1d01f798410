// Copyright 2026 The dephase Authors
// SPDX-License-Identifier: Apache-2.0

//! Decoherence function `κ(t)` and the dephasing map `Φ_t`.
//!
//! `Φ_t` keeps populations and multiplies the `|H⟩⟨V|` coherence by `κ*(t)`
//! (and `|V⟩⟨H|` by `κ(t)`). Only the product `x = Δn·t` enters, so the
//! grids below carry physical times and convert on demand.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_4;

use nalgebra::{Matrix2, Matrix4};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::qstate::{QubitState, TwoQubitState};
use crate::quad::{strictly_increasing, trapezoid_fn};
use crate::spectrum::{GaussianMixtureSpectrum, SampledSpectrum};
use crate::SPEED_OF_LIGHT;

/// Slack on `|κ| ≤ 1`.
pub const KAPPA_TOLERANCE: f64 = 1e-9;
/// Quadrature refuses `Δω_grid · |Δn| · t_max` above this.
pub const ALIASING_LIMIT: f64 = FRAC_PI_4;

/// Birefringent plate: refraction indices for the two polarizations.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct OpenSystemConfig {
    pub n_h: f64,
    pub n_v: f64,
    /// Reference wavelength for path-difference units, m.
    pub lambda0: f64,
}

impl Default for OpenSystemConfig {
    fn default() -> Self {
        // Quartz near 702 nm.
        Self::with_birefringence(1.5414, 0.00906, 702e-9)
    }
}

impl OpenSystemConfig {
    pub fn with_birefringence(n_h: f64, delta_n: f64, lambda0: f64) -> Self {
        Self { n_h, n_v: n_h + delta_n, lambda0 }
    }

    /// `Δn = n_V − n_H`.
    pub fn delta_n(&self) -> f64 {
        self.n_v - self.n_h
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.n_h.is_finite() && self.n_v.is_finite()) || self.delta_n() == 0.0 {
            return Err(Error::InvalidParameter(format!(
                "refraction indices must be finite with n_V != n_H (got {}, {})",
                self.n_h, self.n_v
            )));
        }
        if !(self.lambda0 > 0.0) || !self.lambda0.is_finite() {
            return Err(Error::InvalidParameter(format!("lambda0 must be positive, got {}", self.lambda0)));
        }
        Ok(())
    }

    /// Effective time `x = Δn·t`, s.
    pub fn effective_time(&self, t: f64) -> f64 {
        self.delta_n() * t
    }

    /// Path difference `Δn·L` in units of `λ₀`, with `L = c t`.
    pub fn path_difference_over_lambda0(&self, t: f64) -> f64 {
        self.delta_n() * SPEED_OF_LIGHT * t / self.lambda0
    }

    /// Inverse of [`Self::path_difference_over_lambda0`].
    pub fn time_for_path_difference(&self, x_over_lambda0: f64) -> f64 {
        x_over_lambda0 * self.lambda0 / (self.delta_n() * SPEED_OF_LIGHT)
    }

    /// Inverse of [`Self::effective_time`].
    pub fn time_for_effective_time(&self, x: f64) -> f64 {
        x / self.delta_n()
    }
}

/// Interaction times, s: strictly increasing from zero.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    times: Vec<f64>,
}

impl TimeGrid {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.is_empty() || times[0] != 0.0 {
            return Err(Error::InvalidGrid("time grid must start at 0".into()));
        }
        if !strictly_increasing(&times) {
            return Err(Error::InvalidGrid("time grid must be strictly increasing".into()));
        }
        Ok(Self { times })
    }

    /// `t = L / c` for plate lengths `L` in m.
    pub fn from_plate_lengths(lengths: &[f64]) -> Result<Self> {
        Self::new(lengths.iter().map(|l| l / SPEED_OF_LIGHT).collect())
    }

    /// Grid from path differences `Δn·L/λ₀`.
    pub fn from_path_differences(xs_over_lambda0: &[f64], cfg: &OpenSystemConfig) -> Result<Self> {
        cfg.validate()?;
        Self::new(xs_over_lambda0.iter().map(|&x| cfg.time_for_path_difference(x)).collect())
    }

    /// Grid from effective times `x = Δn·t`.
    pub fn from_effective_times(xs: &[f64], cfg: &OpenSystemConfig) -> Result<Self> {
        cfg.validate()?;
        Self::new(xs.iter().map(|&x| cfg.time_for_effective_time(x)).collect())
    }

    /// `n` uniform points with effective times covering `[0, x_max]`.
    pub fn uniform_effective(x_max: f64, n: usize, cfg: &OpenSystemConfig) -> Result<Self> {
        if n < 2 || !(x_max > 0.0) {
            return Err(Error::InvalidGrid(format!("need n >= 2 and x_max > 0 (got {n}, {x_max})")));
        }
        let xs: Vec<f64> = (0..n).map(|i| x_max * i as f64 / (n - 1) as f64).collect();
        Self::from_effective_times(&xs, cfg)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn t_max(&self) -> f64 {
        *self.times.last().unwrap_or(&0.0)
    }
}

/// `κ` sampled on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoherenceTrajectory {
    grid: TimeGrid,
    config: OpenSystemConfig,
    kappa: Vec<Complex64>,
}

impl DecoherenceTrajectory {
    /// Validates `|κ| ≤ 1` and `κ(0) = 1` within [`KAPPA_TOLERANCE`].
    pub fn new(grid: TimeGrid, config: OpenSystemConfig, kappa: Vec<Complex64>) -> Result<Self> {
        if kappa.len() != grid.len() {
            return Err(Error::InvalidGrid(format!("{} kappa values for {} times", kappa.len(), grid.len())));
        }
        if let Some(k) = kappa.iter().find(|k| !(k.norm() <= 1.0 + KAPPA_TOLERANCE)) {
            return Err(Error::KappaOutOfRange(k.norm()));
        }
        if (kappa[0] - 1.0).norm() > KAPPA_TOLERANCE {
            return Err(Error::InvalidParameter(format!("kappa(0) = {} is not 1", kappa[0])));
        }
        Ok(Self { grid, config, kappa })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn config(&self) -> &OpenSystemConfig {
        &self.config
    }

    pub fn kappa(&self) -> &[Complex64] {
        &self.kappa
    }

    pub fn moduli(&self) -> Vec<f64> {
        self.kappa.iter().map(|k| k.norm()).collect()
    }

    /// Effective times `Δn·t`.
    pub fn effective_times(&self) -> Vec<f64> {
        self.grid.times.iter().map(|&t| self.config.effective_time(t)).collect()
    }

    /// Path differences `Δn·L/λ₀`.
    pub fn path_differences(&self) -> Vec<f64> {
        self.grid.times.iter().map(|&t| self.config.path_difference_over_lambda0(t)).collect()
    }

    pub fn len(&self) -> usize {
        self.kappa.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kappa.is_empty()
    }
}

/// `κ(x) = Σ_k w_k exp(iω_k x) exp(−½σ_k² x²)` at effective time `x`.
pub fn mixture_kappa(m: &GaussianMixtureSpectrum, x: f64) -> Complex64 {
    m.peaks()
        .iter()
        .map(|p| Complex64::from_polar(p.weight * (-0.5 * p.width * p.width * x * x).exp(), p.center * x))
        .sum()
}

/// `|κ|` of the two-Gaussian model at effective time `x`:
/// `exp(−½σ²x²)/(1+A) · √(1 + A² + 2A cos(Δω x))`.
pub fn two_gaussian_modulus(relative_amplitude: f64, delta_omega: f64, width: f64, x: f64) -> f64 {
    let a = relative_amplitude;
    let decay = (-0.5 * width * width * x * x).exp();
    decay / (1.0 + a) * (1.0 + a * a + 2.0 * a * (delta_omega * x).cos()).max(0.0).sqrt()
}

/// Closed-form `κ(t)` for a one- or two-peak mixture.
pub fn kappa_closed_form(
    m: &GaussianMixtureSpectrum,
    cfg: &OpenSystemConfig,
    grid: &TimeGrid,
) -> Result<DecoherenceTrajectory> {
    if m.peaks().len() > 2 {
        return Err(Error::InvalidParameter(format!(
            "closed form covers at most two peaks (got {}); use quadrature",
            m.peaks().len()
        )));
    }
    cfg.validate()?;
    let kappa = grid.times().iter().map(|&t| mixture_kappa(m, cfg.effective_time(t))).collect();
    DecoherenceTrajectory::new(grid.clone(), *cfg, kappa)
}

/// Quadrature trajectory with its estimated error.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureTrajectory {
    pub trajectory: DecoherenceTrajectory,
    /// Largest `|κ_h − κ_2h| / 3` over the time grid (Richardson estimate).
    pub error_estimate: f64,
}

/// `κ(t) = ∫ dω |f(ω)|² exp(iωΔn t)` by the trapezoidal rule.
///
/// The carrier `exp(iω̄x)` at the grid midpoint `ω̄` is factored out so the
/// integrand phase stays small.
pub fn kappa_quadrature(s: &SampledSpectrum, cfg: &OpenSystemConfig, grid: &TimeGrid) -> Result<QuadratureTrajectory> {
    cfg.validate()?;
    let omega = s.grid();
    let density = s.values();
    let x_max = cfg.effective_time(grid.t_max()).abs();
    let product = s.max_spacing() * x_max;
    if product > ALIASING_LIMIT {
        return Err(Error::Aliasing { product, limit: ALIASING_LIMIT });
    }
    let mid = 0.5 * (omega[0] + omega[omega.len() - 1]);
    let half_grid: Vec<f64> = omega.iter().step_by(2).copied().collect();
    let coarse_ok = omega.len() % 2 == 1 && half_grid.len() >= 2;

    let mut error_estimate: f64 = 0.0;
    let mut kappa = Vec::with_capacity(grid.len());
    for &t in grid.times() {
        let x = cfg.effective_time(t);
        let integrand = |i: usize| Complex64::from_polar(density[i], (omega[i] - mid) * x);
        let fine: Complex64 = trapezoid_fn(omega, |i, _| integrand(i));
        if coarse_ok {
            let coarse: Complex64 = trapezoid_fn(&half_grid, |i, _| integrand(2 * i));
            error_estimate = error_estimate.max((fine - coarse).norm() / 3.0);
        }
        kappa.push(fine * Complex64::from_polar(1.0, mid * x));
    }
    let trajectory = DecoherenceTrajectory::new(grid.clone(), *cfg, kappa)?;
    Ok(QuadratureTrajectory { trajectory, error_estimate })
}

fn check_kappa(kappa: Complex64) -> Result<()> {
    let n = kappa.norm();
    if !(n <= 1.0 + KAPPA_TOLERANCE) {
        return Err(Error::KappaOutOfRange(n));
    }
    Ok(())
}

/// `Φ_t(ρ)`: populations kept, `ρ^{HV} → κ* ρ^{HV}`, `ρ^{VH} → κ ρ^{VH}`.
pub fn apply_map(kappa: Complex64, rho: &QubitState) -> Result<QubitState> {
    check_kappa(kappa)?;
    let m = rho.matrix();
    Ok(QubitState::new_unchecked(Matrix2::new(m[(0, 0)], kappa.conj() * m[(0, 1)], kappa * m[(1, 0)], m[(1, 1)])))
}

/// `(Φ_t ⊗ I)(ρ_SA)` with the system as the first tensor factor.
pub fn extend_to_ancilla(kappa: Complex64, rho: &TwoQubitState) -> Result<TwoQubitState> {
    check_kappa(kappa)?;
    let m = rho.matrix();
    let out = Matrix4::from_fn(|i, j| {
        let factor = match (i / 2, j / 2) {
            (0, 1) => kappa.conj(),
            (1, 0) => kappa,
            _ => Complex64::new(1.0, 0.0),
        };
        m[(i, j)] * factor
    });
    Ok(TwoQubitState::new_unchecked(out))
}

/// `√(a² + |κ b|²)`: trace distance after the map for a pair whose population
/// difference is `a` and `|H⟩⟨V|` coherence difference is `b`.
///
/// `(a, b)` is realizable by two states iff `a² + |b|² ≤ 1`.
pub fn analytic_pair_distance(a: f64, b: Complex64, kappa: Complex64) -> Result<f64> {
    check_kappa(kappa)?;
    if !(a * a + b.norm_sqr() <= 1.0 + 1e-12) {
        return Err(Error::InvalidParameter(format!(
            "(a, |b|) = ({a}, {}) is not the difference of two states",
            b.norm()
        )));
    }
    Ok((a * a + (kappa * b).norm_sqr()).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::{concurrence, trace_distance};
    use approx::assert_abs_diff_eq;
    use core::f64::consts::PI;

    const SIGMA: f64 = 1.8e12;
    const DW: f64 = 1.6e13;

    fn reference(a: f64) -> GaussianMixtureSpectrum {
        GaussianMixtureSpectrum::two_peak(2.68e15, DW, SIGMA, a).unwrap()
    }

    #[test]
    fn kappa_is_one_at_zero() {
        let cfg = OpenSystemConfig::default();
        let grid = TimeGrid::uniform_effective(1e-12, 11, &cfg).unwrap();
        let traj = kappa_closed_form(&reference(0.3), &cfg, &grid).unwrap();
        assert_abs_diff_eq!(traj.kappa()[0].re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(traj.kappa()[0].im, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn closed_form_modulus_matches_two_gaussian_formula() {
        let cfg = OpenSystemConfig::default();
        let grid = TimeGrid::uniform_effective(4.0 * PI / DW, 501, &cfg).unwrap();
        for a in [0.0, 0.25, 0.5, 1.0, 3.0] {
            let traj = kappa_closed_form(&reference(a), &cfg, &grid).unwrap();
            for (k, x) in traj.kappa().iter().zip(traj.effective_times()) {
                assert_abs_diff_eq!(k.norm(), two_gaussian_modulus(a, DW, SIGMA, x), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn equal_peaks_first_zero_and_revival() {
        let x0 = PI / DW;
        assert_abs_diff_eq!(two_gaussian_modulus(1.0, DW, SIGMA, x0), 0.0, epsilon = 1e-15);
        let revival = two_gaussian_modulus(1.0, DW, SIGMA, 2.0 * x0);
        // exp(−½(2πσ/Δω)²) evaluated independently.
        let expected = (-0.5 * (2.0 * PI * SIGMA / DW).powi(2)).exp();
        assert_abs_diff_eq!(revival, expected, epsilon = 1e-15);
        assert_abs_diff_eq!(revival, 0.7788, epsilon = 2e-4);
    }

    #[test]
    fn closed_form_rejects_three_peaks() {
        let peaks = (0..3)
            .map(|k| crate::spectrum::GaussianPeak { center: 1e15 + k as f64 * 1e13, weight: 1.0 / 3.0, width: 1e12 })
            .collect();
        let m = GaussianMixtureSpectrum::new(peaks).unwrap();
        let cfg = OpenSystemConfig::default();
        let grid = TimeGrid::uniform_effective(1e-13, 5, &cfg).unwrap();
        assert!(kappa_closed_form(&m, &cfg, &grid).is_err());
    }

    #[test]
    fn quadrature_matches_closed_form_single_gaussian() {
        let cfg = OpenSystemConfig::default();
        let m = GaussianMixtureSpectrum::single(2.68e15, SIGMA).unwrap();
        let omega: Vec<f64> = (0..4001).map(|i| 2.68e15 - 4e13 + 8e13 * i as f64 / 4000.0).collect();
        let s = m.sample(&omega).unwrap();
        let grid = TimeGrid::uniform_effective(4.0 * PI / DW, 400, &cfg).unwrap();
        let q = kappa_quadrature(&s, &cfg, &grid).unwrap();
        let c = kappa_closed_form(&m, &cfg, &grid).unwrap();
        for (a, b) in q.trajectory.kappa().iter().zip(c.kappa()) {
            assert!((a.norm() - b.norm()).abs() <= 1e-6 * b.norm());
        }
        assert!(q.error_estimate < 1e-9);
    }

    #[test]
    fn quadrature_aliasing_guard() {
        let cfg = OpenSystemConfig::default();
        let m = GaussianMixtureSpectrum::single(2.68e15, SIGMA).unwrap();
        let omega: Vec<f64> = (0..41).map(|i| 2.68e15 - 4e13 + 8e13 * i as f64 / 40.0).collect();
        let s = m.sample(&omega).unwrap();
        let grid = TimeGrid::uniform_effective(1e-12, 10, &cfg).unwrap();
        assert!(matches!(kappa_quadrature(&s, &cfg, &grid), Err(Error::Aliasing { .. })));
    }

    #[test]
    fn map_limits() {
        let one = Complex64::new(1.0, 0.0);
        let rho = QubitState::pure(Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)).unwrap();
        assert_eq!(apply_map(one, &rho).unwrap(), rho);
        let dephased = apply_map(Complex64::new(0.0, 0.0), &QubitState::plus()).unwrap();
        assert_eq!(dephased, QubitState::maximally_mixed());
        assert!(matches!(apply_map(Complex64::new(1.0, 1e-3), &rho), Err(Error::KappaOutOfRange(_))));
    }

    #[test]
    fn mapped_equator_pair_distance_is_kappa_modulus() {
        let k = Complex64::from_polar(0.5, 1.1);
        let d =
            trace_distance(&apply_map(k, &QubitState::plus()).unwrap(), &apply_map(k, &QubitState::minus()).unwrap());
        assert_abs_diff_eq!(d, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn ancilla_extension_of_bell_state() {
        let bell = TwoQubitState::bell();
        let same = extend_to_ancilla(Complex64::new(1.0, 0.0), &bell).unwrap();
        assert_eq!(same, bell);
        assert_abs_diff_eq!(concurrence(&same), 1.0, epsilon = 1e-12);
        let gone = extend_to_ancilla(Complex64::new(0.0, 0.0), &bell).unwrap();
        assert_abs_diff_eq!(concurrence(&gone), 0.0, epsilon = 1e-12);
        let k = Complex64::from_polar(0.7788, -0.4);
        let out = extend_to_ancilla(k, &bell).unwrap();
        let m = out.matrix();
        assert_eq!(m[(0, 3)], k.conj() * 0.5);
        assert_eq!(m[(3, 0)], k * 0.5);
        assert_abs_diff_eq!(concurrence(&out), 0.7788, epsilon = 1e-12);
    }

    #[test]
    fn analytic_pair_distance_cases() {
        let k = Complex64::from_polar(0.5, 0.3);
        assert_abs_diff_eq!(analytic_pair_distance(0.0, Complex64::new(0.0, 1.0), k).unwrap(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(analytic_pair_distance(0.5, Complex64::new(0.0, 0.0), k).unwrap(), 0.5, epsilon = 1e-15);
        let d = analytic_pair_distance(0.6, Complex64::new(0.8, 0.0), k).unwrap();
        assert_abs_diff_eq!(d, 0.52f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(d, 0.72111, epsilon = 1e-5);
        assert!(analytic_pair_distance(0.9, Complex64::new(0.9, 0.0), k).is_err());
    }

    #[test]
    fn unit_conversions_round_trip() {
        let cfg = OpenSystemConfig::default();
        let t = 3.2e-12;
        assert_abs_diff_eq!(cfg.time_for_path_difference(cfg.path_difference_over_lambda0(t)), t, epsilon = 1e-24);
        let grid = TimeGrid::from_plate_lengths(&[0.0, 1e-3, 2e-3]).unwrap();
        assert_abs_diff_eq!(grid.times()[2], 2e-3 / SPEED_OF_LIGHT, epsilon = 1e-24);
        assert!(TimeGrid::new(alloc::vec![0.1, 0.2]).is_err());
        assert!(TimeGrid::new(alloc::vec![0.0, 0.2, 0.2]).is_err());
    }
}
