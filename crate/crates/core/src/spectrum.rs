// Copyright 2026 The dephase Authors
// SPDX-License-Identifier: Apache-2.0

//! Environment spectra `|f(ω)|²`: Gaussian mixtures, sampled densities, the
//! tilted Fabry–Perot cavity behind an interference filter, and two-peak
//! least-squares fitting.
//!
//! All frequencies are angular (rad/s); densities are in s/rad.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::{LN_2, TAU};

use nalgebra::{SMatrix, SVector};

use crate::error::{Error, Result};
use crate::optim::{levenberg_marquardt, Linearization};
use crate::quad::{strictly_increasing, trapezoid};
use crate::SPEED_OF_LIGHT;

const WEIGHT_SUM_TOLERANCE: f64 = 1e-12;
/// Sampled spectra must integrate to one within this tolerance.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;
/// Relative residual above which a two-Gaussian fit is rejected.
pub const FIT_FAILURE_RESIDUAL: f64 = 0.10;
/// Points in the default cavity frequency grid.
pub const DEFAULT_GRID_POINTS: usize = 4001;

/// One Gaussian component of a mixture.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GaussianPeak {
    /// Center frequency, rad/s.
    pub center: f64,
    pub weight: f64,
    /// Standard deviation, rad/s.
    pub width: f64,
}

impl GaussianPeak {
    pub fn density(&self, omega: f64) -> f64 {
        let u = (omega - self.center) / self.width;
        self.weight * (-0.5 * u * u).exp() / (self.width * (TAU).sqrt())
    }
}

/// Normalized weighted sum of Gaussian peaks, ordered by ascending center.
///
/// Weights are non-negative and sum to one. A zero weight is allowed so that
/// a degenerate (single-peak) fit can still be reported as a two-peak mixture
/// with `A = 0`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "MixtureRecord", into = "MixtureRecord"))]
pub struct GaussianMixtureSpectrum {
    peaks: Vec<GaussianPeak>,
}

/// Serialized form: parallel `centers`/`weights` and one shared `width`,
/// or per-peak `widths` when they differ.
#[cfg(feature = "serde")]
#[derive(serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct MixtureRecord {
    centers: Vec<f64>,
    weights: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    width: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    widths: Option<Vec<f64>>,
}

#[cfg(feature = "serde")]
impl TryFrom<MixtureRecord> for GaussianMixtureSpectrum {
    type Error = Error;

    fn try_from(r: MixtureRecord) -> Result<Self> {
        let n = r.centers.len();
        if r.weights.len() != n {
            return Err(Error::ComponentCount { expected: n, got: r.weights.len() });
        }
        let widths = match (r.width, r.widths) {
            (Some(w), None) => alloc::vec![w; n],
            (None, Some(ws)) if ws.len() == n => ws,
            (None, Some(ws)) => return Err(Error::ComponentCount { expected: n, got: ws.len() }),
            _ => return Err(Error::InvalidParameter("mixture needs exactly one of `width` or `widths`".into())),
        };
        let peaks =
            (0..n).map(|i| GaussianPeak { center: r.centers[i], weight: r.weights[i], width: widths[i] }).collect();
        Self::new(peaks)
    }
}

#[cfg(feature = "serde")]
impl From<GaussianMixtureSpectrum> for MixtureRecord {
    fn from(m: GaussianMixtureSpectrum) -> Self {
        let widths: Vec<f64> = m.peaks.iter().map(|p| p.width).collect();
        let shared = widths.iter().all(|&w| w == widths[0]);
        Self {
            centers: m.peaks.iter().map(|p| p.center).collect(),
            weights: m.peaks.iter().map(|p| p.weight).collect(),
            width: shared.then_some(widths[0]),
            widths: (!shared).then_some(widths),
        }
    }
}

impl GaussianMixtureSpectrum {
    pub fn new(mut peaks: Vec<GaussianPeak>) -> Result<Self> {
        if peaks.is_empty() {
            return Err(Error::InvalidParameter("mixture needs at least one peak".into()));
        }
        for p in &peaks {
            if !p.center.is_finite() {
                return Err(Error::InvalidParameter(format!("non-finite center {}", p.center)));
            }
            if !(p.width > 0.0) || !p.width.is_finite() {
                return Err(Error::InvalidParameter(format!("width must be positive, got {}", p.width)));
            }
            if !(p.weight >= 0.0) || !p.weight.is_finite() {
                return Err(Error::InvalidParameter(format!("weight must be non-negative, got {}", p.weight)));
            }
        }
        let total: f64 = peaks.iter().map(|p| p.weight).sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(Error::InvalidParameter(format!("weights sum to {total}, expected 1")));
        }
        peaks.sort_by(|a, b| a.center.total_cmp(&b.center));
        Ok(Self { peaks })
    }

    /// A single Gaussian.
    pub fn single(center: f64, width: f64) -> Result<Self> {
        Self::new(alloc::vec![GaussianPeak { center, weight: 1.0, width }])
    }

    /// Two equal-width peaks at `lower_center` and `lower_center + delta_omega`
    /// with weights `1/(1+A)` and `A/(1+A)`.
    pub fn two_peak(lower_center: f64, delta_omega: f64, width: f64, relative_amplitude: f64) -> Result<Self> {
        let a = relative_amplitude;
        if !(a >= 0.0) || !a.is_finite() {
            return Err(Error::InvalidParameter(format!("relative amplitude must be finite and >= 0, got {a}")));
        }
        if !(delta_omega >= 0.0) {
            return Err(Error::InvalidParameter(format!("peak separation must be >= 0, got {delta_omega}")));
        }
        Self::new(alloc::vec![
            GaussianPeak { center: lower_center, weight: 1.0 / (1.0 + a), width },
            GaussianPeak { center: lower_center + delta_omega, weight: a / (1.0 + a), width },
        ])
    }

    pub fn peaks(&self) -> &[GaussianPeak] {
        &self.peaks
    }

    pub fn density(&self, omega: f64) -> f64 {
        self.peaks.iter().map(|p| p.density(omega)).sum()
    }

    /// Mean frequency `Σ w_k ω_k`.
    pub fn mean_frequency(&self) -> f64 {
        self.peaks.iter().map(|p| p.weight * p.center).sum()
    }

    /// `ω₂ − ω₁` for a two-peak mixture.
    pub fn delta_omega(&self) -> Option<f64> {
        match self.peaks.as_slice() {
            [a, b] => Some(b.center - a.center),
            _ => None,
        }
    }

    /// Every center moved by `shift`.
    pub fn shifted(&self, shift: f64) -> Result<Self> {
        Self::new(self.peaks.iter().map(|p| GaussianPeak { center: p.center + shift, ..*p }).collect())
    }

    /// Samples the density on `grid` and renormalizes the trapezoid integral.
    pub fn sample(&self, grid: &[f64]) -> Result<SampledSpectrum> {
        let values = grid.iter().map(|&w| self.density(w)).collect();
        SampledSpectrum::from_unnormalized(grid.to_vec(), values)
    }

    /// `A = weight₂ / weight₁`.
    pub fn relative_amplitude(&self) -> Result<f64> {
        relative_amplitude(self)
    }
}

/// `A = weight₂ / weight₁` with peaks in ascending center order.
pub fn relative_amplitude(m: &GaussianMixtureSpectrum) -> Result<f64> {
    match m.peaks() {
        [lo, hi] => Ok(if lo.weight == 0.0 { f64::INFINITY } else { hi.weight / lo.weight }),
        other => Err(Error::InvalidParameter(format!("relative amplitude needs 2 peaks, got {}", other.len()))),
    }
}

/// Density tabulated on a strictly increasing frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSpectrum {
    grid: Vec<f64>,
    values: Vec<f64>,
}

impl SampledSpectrum {
    /// Validates an already-normalized density.
    pub fn new(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Self::check_shape(&grid, &values)?;
        let integral = trapezoid(&grid, &values);
        if (integral - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(Error::InvalidParameter(format!("spectrum integrates to {integral}, expected 1")));
        }
        Ok(Self { grid, values })
    }

    /// Scales `values` to unit trapezoid integral.
    pub fn from_unnormalized(grid: Vec<f64>, mut values: Vec<f64>) -> Result<Self> {
        Self::check_shape(&grid, &values)?;
        let integral = trapezoid(&grid, &values);
        if !(integral > f64::MIN_POSITIVE) || !integral.is_finite() {
            return Err(Error::EmptySpectrum);
        }
        values.iter_mut().for_each(|v| *v /= integral);
        Ok(Self { grid, values })
    }

    fn check_shape(grid: &[f64], values: &[f64]) -> Result<()> {
        if grid.len() != values.len() {
            return Err(Error::InvalidGrid(format!("{} grid points but {} values", grid.len(), values.len())));
        }
        if grid.len() < 2 || !strictly_increasing(grid) {
            return Err(Error::InvalidGrid("frequency grid must be strictly increasing with >= 2 points".into()));
        }
        if let Some(v) = values.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("density must be finite and >= 0, got {v}")));
        }
        Ok(())
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn integral(&self) -> f64 {
        trapezoid(&self.grid, &self.values)
    }

    /// Largest spacing between neighbouring grid points.
    pub fn max_spacing(&self) -> f64 {
        self.grid.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }
}

/// Shape of the interference-filter transmission in wavelength.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum FilterShape {
    #[default]
    Gaussian,
    Lorentzian,
}

/// Tilted Fabry–Perot etalon followed by a bandpass filter.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields, default))]
pub struct CavityConfig {
    /// Etalon thickness, m.
    pub thickness: f64,
    /// Intensity reflectivity of each surface.
    pub reflectivity: f64,
    pub refractive_index: f64,
    /// External tilt angle, degrees.
    pub tilt_deg: f64,
    /// Filter center wavelength, m.
    pub filter_center: f64,
    /// Filter full width at half maximum, m.
    pub filter_fwhm: f64,
    pub filter_shape: FilterShape,
    /// Source center wavelength, m. Recorded with the configuration; the
    /// broadband source is treated as flat across the filter passband.
    pub source_center: f64,
    /// Round-trip phase offset at normal incidence, rad. Calibration knob for
    /// which tilt aligns a transmission order with the filter center.
    pub phase_offset: f64,
    /// RMS Gaussian broadening of each transmission order, rad/s, from the
    /// finite divergence of the beam through the etalon. Zero gives the
    /// bare Airy comb.
    pub peak_broadening: f64,
}

impl Default for CavityConfig {
    fn default() -> Self {
        Self {
            thickness: 0.04e-3,
            reflectivity: 0.85,
            refractive_index: 1.455,
            tilt_deg: 0.0,
            filter_center: 702e-9,
            filter_fwhm: 4e-9,
            filter_shape: FilterShape::Gaussian,
            source_center: 702e-9,
            phase_offset: 0.0,
            peak_broadening: 1.6e12,
        }
    }
}

impl CavityConfig {
    pub fn with_tilt(self, tilt_deg: f64) -> Self {
        Self { tilt_deg, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str, v: f64| Err(Error::InvalidParameter(format!("{what} out of range: {v}")));
        if !(self.thickness > 0.0) || !self.thickness.is_finite() {
            return bad("thickness", self.thickness);
        }
        if !(self.reflectivity > 0.0 && self.reflectivity < 1.0) {
            return bad("reflectivity", self.reflectivity);
        }
        if !(self.refractive_index >= 1.0) || !self.refractive_index.is_finite() {
            return bad("refractive index", self.refractive_index);
        }
        if !(self.tilt_deg >= 0.0 && self.tilt_deg < 90.0) {
            return bad("tilt angle", self.tilt_deg);
        }
        if !(self.filter_center > 0.0) || !self.filter_center.is_finite() {
            return bad("filter center", self.filter_center);
        }
        if !(self.filter_fwhm > 0.0) || !self.filter_fwhm.is_finite() {
            return bad("filter FWHM", self.filter_fwhm);
        }
        if !(self.source_center > 0.0) || !self.source_center.is_finite() {
            return bad("source center", self.source_center);
        }
        if !self.phase_offset.is_finite() {
            return bad("phase offset", self.phase_offset);
        }
        if !(self.peak_broadening >= 0.0) || !self.peak_broadening.is_finite() {
            return bad("peak broadening", self.peak_broadening);
        }
        Ok(())
    }

    /// Internal refraction angle from `sin θ = n sin θ_r`, rad.
    pub fn internal_angle(&self) -> f64 {
        (self.tilt_deg.to_radians().sin() / self.refractive_index).asin()
    }

    /// `dδ/dω = 2 n d cos θ_r / c`, s.
    pub fn phase_slope(&self) -> f64 {
        2.0 * self.refractive_index * self.thickness * self.internal_angle().cos() / SPEED_OF_LIGHT
    }

    /// Round-trip phase `δ(ω)`.
    pub fn round_trip_phase(&self, omega: f64) -> f64 {
        self.phase_slope() * omega + self.phase_offset
    }

    /// Free spectral range `π c / (n d cos θ_r)`, rad/s.
    pub fn free_spectral_range(&self) -> f64 {
        TAU / self.phase_slope()
    }

    pub fn filter_center_omega(&self) -> f64 {
        TAU * SPEED_OF_LIGHT / self.filter_center
    }

    /// Filter FWHM converted to angular frequency at the filter center.
    pub fn filter_fwhm_omega(&self) -> f64 {
        TAU * SPEED_OF_LIGHT * self.filter_fwhm / (self.filter_center * self.filter_center)
    }

    /// Filter power transmission at `omega` (peak 1).
    pub fn filter_envelope(&self, omega: f64) -> f64 {
        let lambda = TAU * SPEED_OF_LIGHT / omega;
        let u = (lambda - self.filter_center) / self.filter_fwhm;
        match self.filter_shape {
            FilterShape::Gaussian => (-4.0 * LN_2 * u * u).exp(),
            FilterShape::Lorentzian => 1.0 / (1.0 + 4.0 * u * u),
        }
    }

    /// Bare Airy transmission for a round-trip phase `delta`.
    pub fn airy(&self, delta: f64) -> f64 {
        let r = self.reflectivity;
        (1.0 - r) * (1.0 - r) / (1.0 - 2.0 * r * delta.cos() + r * r)
    }

    /// Airy comb convolved with a Gaussian of rms `peak_broadening` in ω.
    ///
    /// Uses `T(δ) = (1−R)/(1+R) · [1 + 2 Σ_k R^k cos kδ]`; convolution damps
    /// harmonic `k` by `exp(−½ k² (τσ)²)` with `τ = dδ/dω`.
    pub fn broadened_transmission(&self, omega: f64) -> f64 {
        let delta = self.round_trip_phase(omega);
        if self.peak_broadening == 0.0 {
            return self.airy(delta);
        }
        let r = self.reflectivity;
        let s = self.phase_slope() * self.peak_broadening;
        let damp = -0.5 * s * s;
        let mut sum = 1.0;
        let mut rk = 1.0;
        for k in 1..10_000 {
            rk *= r;
            let kf = k as f64;
            let term = rk * (damp * kf * kf).exp();
            if term < 1e-18 {
                break;
            }
            sum += 2.0 * term * (kf * delta).cos();
        }
        (1.0 - r) / (1.0 + r) * sum
    }

    /// Uniform grid of [`DEFAULT_GRID_POINTS`] over the filter center ±3 FWHM.
    pub fn default_grid(&self) -> Vec<f64> {
        let center = self.filter_center_omega();
        let half = 3.0 * self.filter_fwhm_omega();
        let n = DEFAULT_GRID_POINTS;
        (0..n).map(|i| center - half + 2.0 * half * i as f64 / (n - 1) as f64).collect()
    }
}

/// `T(ω) = (1−R)² / (1 − 2R cos δ + R²)` with `δ = 2 n d ω cos θ_r / c + δ₀`.
pub fn airy_transmission(cfg: &CavityConfig, omega: f64) -> Result<f64> {
    cfg.validate()?;
    Ok(cfg.airy(cfg.round_trip_phase(omega)))
}

/// Filtered cavity spectrum normalized to unit integral.
///
/// The frequency axis is split into one cell per transmission order (cell
/// edges at anti-resonance) and only the two orders carrying the most
/// filtered power are kept.
pub fn cavity_spectrum(cfg: &CavityConfig, grid: &[f64]) -> Result<SampledSpectrum> {
    cfg.validate()?;
    if grid.len() < 3 || !strictly_increasing(grid) || grid[0] <= 0.0 {
        return Err(Error::InvalidGrid("cavity grid must be positive, strictly increasing, >= 3 points".into()));
    }
    let mut values: Vec<f64> = grid.iter().map(|&w| cfg.broadened_transmission(w) * cfg.filter_envelope(w)).collect();

    let order = |w: f64| (cfg.round_trip_phase(w) / TAU + 0.5).floor() as i64;
    let orders: Vec<i64> = grid.iter().map(|&w| order(w)).collect();

    // Mass per order cell over contiguous runs of the grid.
    let mut mass: Vec<(i64, f64)> = Vec::new();
    for i in 1..grid.len() {
        let seg = 0.5 * (values[i - 1] + values[i]) * (grid[i] - grid[i - 1]);
        let m = orders[i];
        match mass.iter_mut().find(|(k, _)| *k == m) {
            Some(entry) => entry.1 += seg,
            None => mass.push((m, seg)),
        }
    }
    mass.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let kept: Vec<i64> = mass.iter().take(2).map(|(k, _)| *k).collect();

    let (lo, hi) = (grid[0], grid[grid.len() - 1]);
    let resonance = |m: i64| (TAU * m as f64 - cfg.phase_offset) / cfg.phase_slope();
    if !kept.iter().any(|&m| (lo..=hi).contains(&resonance(m))) {
        return Err(Error::EmptySpectrum);
    }
    for (v, m) in values.iter_mut().zip(&orders) {
        if !kept.contains(m) {
            *v = 0.0;
        }
    }
    SampledSpectrum::from_unnormalized(grid.to_vec(), values)
}

/// Outcome of [`fit_two_gaussians`].
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureFit {
    pub mixture: GaussianMixtureSpectrum,
    /// `‖model − data‖₂` over the grid samples, s/rad.
    pub residual_norm: f64,
    /// `residual_norm / ‖data‖₂`.
    pub relative_residual: f64,
    pub iterations: usize,
    /// `true` when only one peak was resolved and the second weight is 0.
    pub degenerate: bool,
}

// Scaled fit coordinates: u = (ω − origin) / scale, y' = y · scale.
struct FitProblem {
    u: Vec<f64>,
    y: Vec<f64>,
}

const INV_SQRT_TAU: f64 = 0.398_942_280_401_432_7;

impl FitProblem {
    // params: [w1, w2, mu1, mu2, ln sigma]
    fn model2(p: &SVector<f64, 5>, u: f64) -> (f64, [f64; 5]) {
        let s = p[4].exp();
        let mut val = 0.0;
        let mut grad = [0.0; 5];
        for k in 0..2 {
            let d = (u - p[2 + k]) / s;
            let g = INV_SQRT_TAU / s * (-0.5 * d * d).exp();
            val += p[k] * g;
            grad[k] = g;
            grad[2 + k] = p[k] * g * d / s;
            grad[4] += p[k] * g * (d * d - 1.0);
        }
        (val, grad)
    }

    // params: [w, mu, ln sigma]
    fn model1(p: &SVector<f64, 3>, u: f64) -> (f64, [f64; 3]) {
        let s = p[2].exp();
        let d = (u - p[1]) / s;
        let g = INV_SQRT_TAU / s * (-0.5 * d * d).exp();
        (p[0] * g, [g, p[0] * g * d / s, p[0] * g * (d * d - 1.0)])
    }

    fn linearize<const P: usize>(
        &self,
        p: &SVector<f64, P>,
        model: impl Fn(&SVector<f64, P>, f64) -> (f64, [f64; P]),
    ) -> Linearization<P> {
        let mut jtj = SMatrix::<f64, P, P>::zeros();
        let mut jtr = SVector::<f64, P>::zeros();
        let mut cost = 0.0;
        for (&u, &y) in self.u.iter().zip(&self.y) {
            let (m, g) = model(p, u);
            let r = m - y;
            let j = SVector::<f64, P>::from(g);
            jtj += j * j.transpose();
            jtr += j * r;
            cost += 0.5 * r * r;
        }
        Linearization { cost, jtj, jtr }
    }

    fn cost<const P: usize>(
        &self,
        p: &SVector<f64, P>,
        model: impl Fn(&SVector<f64, P>, f64) -> (f64, [f64; P]),
    ) -> f64 {
        self.u.iter().zip(&self.y).map(|(&u, &y)| 0.5 * (model(p, u).0 - y).powi(2)).sum()
    }
}

/// Local maxima above 1% of the global maximum, highest first.
fn significant_maxima(values: &[f64]) -> Vec<usize> {
    let peak = values.iter().copied().fold(0.0, f64::max);
    let n = values.len();
    let mut idx: Vec<usize> = (0..n)
        .filter(|&i| {
            let left = if i == 0 { f64::NEG_INFINITY } else { values[i - 1] };
            let right = if i + 1 == n { f64::NEG_INFINITY } else { values[i + 1] };
            values[i] > left && values[i] >= right && values[i] >= 0.01 * peak
        })
        .collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    idx
}

/// Half-maximum width around `i`, converted to a Gaussian sigma.
fn half_width_sigma(grid: &[f64], values: &[f64], i: usize) -> f64 {
    let half = 0.5 * values[i];
    let mut l = i;
    while l > 0 && values[l] > half {
        l -= 1;
    }
    let mut r = i;
    while r + 1 < values.len() && values[r] > half {
        r += 1;
    }
    let spacing = grid.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    ((grid[r] - grid[l]) / 2.354_820_045).max(2.0 * spacing)
}

/// Least-squares fit of two equal-width Gaussians to a sampled spectrum.
///
/// When only one significant maximum is present the fit falls back to a
/// single Gaussian and reports the second weight as zero.
pub fn fit_two_gaussians(s: &SampledSpectrum) -> Result<MixtureFit> {
    const MAX_ITERATIONS: usize = 500;
    let grid = s.grid();
    let values = s.values();
    let maxima = significant_maxima(values);
    let Some(&top) = maxima.first() else {
        return Err(Error::FitFailed("spectrum has no maximum".into()));
    };
    let origin = grid[top];
    let scale = half_width_sigma(grid, values, top);
    let problem = FitProblem {
        u: grid.iter().map(|w| (w - origin) / scale).collect(),
        y: values.iter().map(|v| v * scale).collect(),
    };
    let data_norm = problem.y.iter().map(|y| y * y).sum::<f64>().sqrt();

    let mut two_peak = None;
    if let Some(&second) = maxima.get(1) {
        let h1 = problem.y[top];
        let h2 = problem.y[second];
        let amp = (TAU).sqrt();
        let start = SVector::<f64, 5>::new(h1 * amp, h2 * amp, 0.0, problem.u[second], 0.0);
        let out = levenberg_marquardt(
            start,
            |p| problem.linearize(p, FitProblem::model2),
            |p| problem.cost(p, FitProblem::model2),
            MAX_ITERATIONS,
        );
        if out.params[0] > 0.0 && out.params[1] > 0.0 {
            two_peak = Some(out);
        }
    }

    let (mixture, cost, iterations, converged, degenerate) = match two_peak {
        Some(out) => {
            let p = out.params;
            let width = p[4].exp() * scale;
            let total = p[0] + p[1];
            let mixture = GaussianMixtureSpectrum::new(alloc::vec![
                GaussianPeak { center: origin + p[2] * scale, weight: p[0] / total, width },
                GaussianPeak { center: origin + p[3] * scale, weight: p[1] / total, width },
            ])?;
            (mixture, out.cost, out.iterations, out.converged, false)
        }
        None => {
            let start = SVector::<f64, 3>::new(problem.y[top] * (TAU).sqrt(), 0.0, 0.0);
            let out = levenberg_marquardt(
                start,
                |p| problem.linearize(p, FitProblem::model1),
                |p| problem.cost(p, FitProblem::model1),
                MAX_ITERATIONS,
            );
            let p = out.params;
            let center = origin + p[1] * scale;
            let width = p[2].exp() * scale;
            let mixture = GaussianMixtureSpectrum::new(alloc::vec![
                GaussianPeak { center, weight: 1.0, width },
                GaussianPeak { center, weight: 0.0, width },
            ])?;
            (mixture, out.cost, out.iterations, out.converged && p[0] > 0.0, true)
        }
    };

    if !converged {
        return Err(Error::FitFailed(format!("no convergence after {iterations} iterations")));
    }
    let residual_scaled = (2.0 * cost).sqrt();
    let relative_residual = residual_scaled / data_norm;
    if !(relative_residual <= FIT_FAILURE_RESIDUAL) {
        return Err(Error::FitFailed(format!(
            "relative residual {relative_residual:.4} exceeds {FIT_FAILURE_RESIDUAL}"
        )));
    }
    Ok(MixtureFit { mixture, residual_norm: residual_scaled / scale, relative_residual, iterations, degenerate })
}

/// Vacuum wavelength (m) to angular frequency (rad/s).
pub fn wavelength_to_omega(lambda: f64) -> f64 {
    TAU * SPEED_OF_LIGHT / lambda
}
