// Copyright 2026 The dephase Authors
// SPDX-License-Identifier: Apache-2.0

//! Simulated experiment: preset states, photon-counting tomography and
//! sweep datasets.
//!
//! Every control point of a sweep draws from its own ChaCha8 stream
//! (`set_stream(index)` on the master seed), so points can be evaluated in
//! any order or in parallel and the merged dataset is still reproducible.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::{Matrix2, Matrix4};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Poisson};

use crate::dephasing::{apply_map, extend_to_ancilla, kappa_closed_form, mixture_kappa, OpenSystemConfig, TimeGrid};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, spectral_map, CMat, HermitianEigen};
use crate::measures::{blp_analytic, rhp_concurrence_measure, AnalysisOptions};
use crate::qstate::{concurrence, trace_distance, QubitState, TwoQubitState};
use crate::quad::strictly_increasing;
use crate::spectrum::{cavity_spectrum, fit_two_gaussians, CavityConfig, GaussianMixtureSpectrum};
use crate::SPEED_OF_LIGHT;

/// Default counts per measurement setting.
pub const DEFAULT_COUNTS: u64 = 10_000;
/// Default bootstrap resamples per point.
pub const DEFAULT_RESAMPLES: usize = 200;
/// Slack on the state invariants after PSD projection.
pub const PROJECTION_SLACK: f64 = 1e-9;

/// `(|H⟩ + |V⟩)/√2`, `(|H⟩ − |V⟩)/√2` and `(|HH⟩ + |VV⟩)/√2`.
pub fn preset_states() -> ((QubitState, QubitState), TwoQubitState) {
    ((QubitState::plus(), QubitState::minus()), TwoQubitState::bell())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 3] = [Pauli::X, Pauli::Y, Pauli::Z];

    fn index(self) -> usize {
        match self {
            Pauli::X => 1,
            Pauli::Y => 2,
            Pauli::Z => 3,
        }
    }
}

const C0: Complex64 = Complex64::new(0.0, 0.0);
const C1: Complex64 = Complex64::new(1.0, 0.0);
const CI: Complex64 = Complex64::new(0.0, 1.0);

/// `σ_0 = I, σ_1 = X, σ_2 = Y, σ_3 = Z`.
fn sigma(k: usize) -> Matrix2<Complex64> {
    match k {
        0 => Matrix2::new(C1, C0, C0, C1),
        1 => Matrix2::new(C0, C1, C1, C0),
        2 => Matrix2::new(C0, -CI, CI, C0),
        _ => Matrix2::new(C1, C0, C0, -C1),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ShotNoise {
    /// Fixed total per setting.
    #[default]
    Multinomial,
    /// Independent Poisson counts per detector outcome.
    Poisson,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields, default))]
pub struct TomographyConfig {
    /// Trials per measurement setting (mean trials for Poisson noise).
    pub counts: u64,
    pub seed: u64,
    pub noise: ShotNoise,
    pub resamples: usize,
}

impl Default for TomographyConfig {
    fn default() -> Self {
        Self { counts: DEFAULT_COUNTS, seed: 0, noise: ShotNoise::Multinomial, resamples: DEFAULT_RESAMPLES }
    }
}

impl TomographyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.counts == 0 {
            return Err(Error::InvalidParameter("counts per setting must be at least 1".into()));
        }
        if self.resamples < 2 {
            return Err(Error::InvalidParameter("bootstrap needs at least 2 resamples".into()));
        }
        Ok(())
    }
}

/// Outcome counts of one local Pauli setting.
///
/// Outcomes are indexed by bits, most significant qubit first; bit 0 is the
/// `+1` eigenvalue. One qubit: `[+, −]`; two: `[++, +−, −+, −−]`.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SettingCounts {
    pub bases: Vec<Pauli>,
    pub counts: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CountsTable {
    pub qubits: usize,
    pub settings: Vec<SettingCounts>,
}

/// All local Pauli settings for `qubits` qubits (3 or 9).
pub fn pauli_settings(qubits: usize) -> Vec<Vec<Pauli>> {
    match qubits {
        1 => Pauli::ALL.iter().map(|&p| vec![p]).collect(),
        _ => Pauli::ALL.iter().flat_map(|&p| Pauli::ALL.iter().map(move |&q| vec![p, q])).collect(),
    }
}

fn sign(outcome: usize, qubit: usize, qubits: usize) -> f64 {
    if (outcome >> (qubits - 1 - qubit)) & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// States that local Pauli tomography can measure and rebuild.
pub trait Tomographic: Sized {
    const QUBITS: usize;

    /// `⟨σ_a ⊗ σ_b ⊗ …⟩` for each index tuple, flattened base 4 (`σ_0 = I`).
    fn pauli_expectations(&self) -> Vec<f64>;

    /// Linear inversion of a full expectation table, then projection onto
    /// the PSD trace-one set.
    fn from_expectations(e: &[f64]) -> Result<Self>;
}

fn project_psd<const N: usize>(m: &CMat<N>) -> CMat<N>
where
    CMat<N>: HermitianEigen<N>,
{
    let (vals, vecs) = hermitian_eigen(m);
    let total: f64 = vals.iter().map(|v| v.max(0.0)).sum();
    if total > 0.0 {
        spectral_map(&vals, &vecs, |v| v.max(0.0) / total)
    } else {
        // Only reachable for a zero matrix; fall back to the mixed state.
        CMat::<N>::from_fn(|i, j| if i == j { Complex64::new(1.0 / N as f64, 0.0) } else { C0 })
    }
}

impl Tomographic for QubitState {
    const QUBITS: usize = 1;

    fn pauli_expectations(&self) -> Vec<f64> {
        (0..4).map(|k| (self.matrix() * sigma(k)).trace().re).collect()
    }

    fn from_expectations(e: &[f64]) -> Result<Self> {
        if e.len() != 4 {
            return Err(Error::ComponentCount { expected: 4, got: e.len() });
        }
        let mut m = Matrix2::zeros();
        for (k, &v) in e.iter().enumerate() {
            m += sigma(k) * Complex64::new(0.5 * v, 0.0);
        }
        QubitState::with_slack(project_psd(&m), PROJECTION_SLACK)
    }
}

impl Tomographic for TwoQubitState {
    const QUBITS: usize = 2;

    fn pauli_expectations(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(16);
        for a in 0..4 {
            for b in 0..4 {
                out.push((self.matrix() * sigma(a).kronecker(&sigma(b))).trace().re);
            }
        }
        out
    }

    fn from_expectations(e: &[f64]) -> Result<Self> {
        if e.len() != 16 {
            return Err(Error::ComponentCount { expected: 16, got: e.len() });
        }
        let mut m = Matrix4::zeros();
        for a in 0..4 {
            for b in 0..4 {
                m += sigma(a).kronecker(&sigma(b)) * Complex64::new(0.25 * e[4 * a + b], 0.0);
            }
        }
        TwoQubitState::with_slack(project_psd(&m), PROJECTION_SLACK)
    }
}

/// Born-rule outcome probabilities of one setting.
fn born_probabilities<S: Tomographic>(expectations: &[f64], bases: &[Pauli]) -> Vec<f64> {
    let q = S::QUBITS;
    let outcomes = 1usize << q;
    let mut probs: Vec<f64> = (0..outcomes)
        .map(|o| {
            // Π_s = ⊗ (I + s σ)/2: sum over subsets of measured qubits.
            let mut p = 0.0;
            for subset in 0..outcomes {
                let mut idx = 0;
                let mut s = 1.0;
                for (k, basis) in bases.iter().enumerate() {
                    idx *= 4;
                    if (subset >> (q - 1 - k)) & 1 == 1 {
                        idx += basis.index();
                        s *= sign(o, k, q);
                    }
                }
                p += s * expectations[idx];
            }
            (p / outcomes as f64).max(0.0)
        })
        .collect();
    let total: f64 = probs.iter().sum();
    for p in &mut probs {
        *p /= total;
    }
    probs
}

fn multinomial<R: Rng + ?Sized>(rng: &mut R, n: u64, probs: &[f64]) -> Vec<u64> {
    let mut out = vec![0u64; probs.len()];
    let mut remaining = n;
    let mut mass = 1.0;
    for (k, &p) in probs.iter().enumerate() {
        if k + 1 == probs.len() {
            out[k] = remaining;
            break;
        }
        if remaining == 0 || mass <= 0.0 {
            break;
        }
        let q = (p / mass).clamp(0.0, 1.0);
        let c = Binomial::new(remaining, q).map(|b| b.sample(rng)).unwrap_or(0);
        out[k] = c;
        remaining -= c;
        mass -= p;
    }
    out
}

fn poisson_counts<R: Rng + ?Sized>(rng: &mut R, means: impl Iterator<Item = f64>) -> Vec<u64> {
    means.map(|m| if m > 0.0 { Poisson::new(m).map(|d| d.sample(rng) as u64).unwrap_or(0) } else { 0 }).collect()
}

/// Draws a counts table for every Pauli setting.
pub fn simulate_counts_with<S: Tomographic, R: Rng + ?Sized>(
    rho: &S,
    cfg: &TomographyConfig,
    rng: &mut R,
) -> CountsTable {
    let e = rho.pauli_expectations();
    let settings = pauli_settings(S::QUBITS)
        .into_iter()
        .map(|bases| {
            let probs = born_probabilities::<S>(&e, &bases);
            let counts = match cfg.noise {
                ShotNoise::Multinomial => multinomial(rng, cfg.counts, &probs),
                ShotNoise::Poisson => poisson_counts(rng, probs.iter().map(|p| p * cfg.counts as f64)),
            };
            SettingCounts { bases, counts }
        })
        .collect();
    CountsTable { qubits: S::QUBITS, settings }
}

/// [`simulate_counts_with`] seeded from `cfg.seed`.
pub fn simulate_counts<S: Tomographic>(rho: &S, cfg: &TomographyConfig) -> CountsTable {
    simulate_counts_with(rho, cfg, &mut ChaCha8Rng::seed_from_u64(cfg.seed))
}

/// Empirical Pauli expectation table (base-4 flattened, `σ_0 = I`).
///
/// Single-qubit marginals of a two-qubit table average all settings that
/// measure the qubit in that basis.
pub fn estimate_expectations(table: &CountsTable) -> Result<Vec<f64>> {
    let q = table.qubits;
    if q != 1 && q != 2 {
        return Err(Error::InvalidParameter(format!("tomography supports 1 or 2 qubits, got {q}")));
    }
    let required = pauli_settings(q);
    let mut e = vec![0.0; 1 << (2 * q)];
    let mut hits = vec![0usize; e.len()];
    e[0] = 1.0;
    for bases in &required {
        let found = table.settings.iter().find(|s| &s.bases == bases);
        let Some(setting) = found else {
            return Err(Error::IncompleteSettings(format!("missing setting {bases:?}")));
        };
        if setting.counts.len() != 1 << q {
            return Err(Error::IncompleteSettings(format!("setting {bases:?} has {} outcomes", setting.counts.len())));
        }
        let total: u64 = setting.counts.iter().sum();
        if total == 0 {
            return Err(Error::IncompleteSettings(format!("setting {bases:?} recorded no counts")));
        }
        // Every nonempty subset of the measured qubits gives one correlator.
        for subset in 1..(1usize << q) {
            let mut idx = 0;
            for (k, b) in bases.iter().enumerate() {
                idx *= 4;
                if (subset >> (q - 1 - k)) & 1 == 1 {
                    idx += b.index();
                }
            }
            let mut acc = 0.0;
            for (o, &n) in setting.counts.iter().enumerate() {
                let mut s = 1.0;
                for k in 0..q {
                    if (subset >> (q - 1 - k)) & 1 == 1 {
                        s *= sign(o, k, q);
                    }
                }
                acc += s * n as f64;
            }
            e[idx] += acc / total as f64;
            hits[idx] += 1;
        }
    }
    for (v, &h) in e.iter_mut().zip(&hits).skip(1) {
        *v /= h as f64;
    }
    Ok(e)
}

/// Linear inversion followed by eigenvalue clipping and renormalization.
pub fn reconstruct_state<S: Tomographic>(table: &CountsTable) -> Result<S> {
    if table.qubits != S::QUBITS {
        return Err(Error::IncompleteSettings(format!(
            "table covers {} qubits, target state has {}",
            table.qubits,
            S::QUBITS
        )));
    }
    S::from_expectations(&estimate_expectations(table)?)
}

/// Resamples a table from its own empirical frequencies.
fn resample<R: Rng + ?Sized>(table: &CountsTable, noise: ShotNoise, rng: &mut R) -> CountsTable {
    let settings = table
        .settings
        .iter()
        .map(|s| {
            let total: u64 = s.counts.iter().sum();
            let counts = match noise {
                ShotNoise::Multinomial => {
                    let probs: Vec<f64> = s.counts.iter().map(|&n| n as f64 / total as f64).collect();
                    multinomial(rng, total, &probs)
                }
                ShotNoise::Poisson => poisson_counts(rng, s.counts.iter().map(|&n| n as f64)),
            };
            SettingCounts { bases: s.bases.clone(), counts }
        })
        .collect();
    CountsTable { qubits: table.qubits, settings }
}

/// Bootstrap standard error of `statistic` over jointly resampled tables.
///
/// Resamples whose statistic fails (e.g. an empty Poisson setting) are skipped.
pub fn bootstrap_stderr<R: Rng + ?Sized>(
    tables: &[CountsTable],
    statistic: impl Fn(&[CountsTable]) -> Result<f64>,
    cfg: &TomographyConfig,
    rng: &mut R,
) -> f64 {
    let mut values = Vec::with_capacity(cfg.resamples);
    for _ in 0..cfg.resamples {
        let drawn: Vec<CountsTable> = tables.iter().map(|t| resample(t, cfg.noise, rng)).collect();
        if let Ok(v) = statistic(&drawn) {
            values.push(v);
        }
    }
    if values.len() < 2 {
        return f64::NAN;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ControlAxis {
    /// Effective path difference `Δn·L/λ₀`.
    PathDifference(Vec<f64>),
    /// Cavity tilt in degrees.
    Tilt(Vec<f64>),
}

impl ControlAxis {
    pub fn values(&self) -> &[f64] {
        match self {
            ControlAxis::PathDifference(v) | ControlAxis::Tilt(v) => v,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum EnvironmentSource {
    Mixture(GaussianMixtureSpectrum),
    Cavity(CavityConfig),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Arm {
    /// Trace distance of the preset pair.
    #[default]
    TraceDistance,
    /// Concurrence of the dephased Bell state.
    Concurrence,
}

/// Time window of a tilt point, in revival periods `2π/Δω` of the fitted
/// spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields, default))]
pub struct RevivalWindow {
    pub revivals: f64,
    pub points: usize,
}

impl Default for RevivalWindow {
    fn default() -> Self {
        Self { revivals: 1.0, points: 2001 }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct SweepSpec {
    pub axis: ControlAxis,
    pub source: EnvironmentSource,
    #[cfg_attr(feature = "serde", serde(default))]
    pub arm: Arm,
    #[cfg_attr(feature = "serde", serde(default))]
    pub window: RevivalWindow,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SweepMode {
    Exact,
    Tomographic(TomographyConfig),
}

/// One control point of a sweep.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SweepRow {
    pub control: f64,
    /// D or C along a path-difference axis. Along a tilt axis: `N` in exact
    /// mode, the largest forward change `max_{i<j} (D_j − D_i)` of the
    /// reconstructed quantity in tomographic mode. NaN on failure.
    pub value: f64,
    /// Bootstrap standard error; 0 in exact mode.
    pub stderr: f64,
    /// Exact-model counterpart of `value`.
    pub exact: f64,
    /// `N` of the arm's measure (tilt axis only).
    pub measure: Option<f64>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepDataset {
    pub rows: Vec<SweepRow>,
}

impl SweepDataset {
    pub fn failures(&self) -> impl Iterator<Item = &SweepRow> {
        self.rows.iter().filter(|r| r.failure.is_some())
    }
}

enum Prepared {
    /// Path-difference axis: one spectrum for the whole sweep.
    Fixed(GaussianMixtureSpectrum),
    Tilt(CavityConfig),
}

/// Validated sweep whose points can be evaluated independently.
pub struct SweepPlan {
    spec: SweepSpec,
    mode: SweepMode,
    config: OpenSystemConfig,
    prepared: Prepared,
}

/// Fitted two-peak model of the cavity spectrum at the configured tilt.
pub fn fitted_cavity_mixture(cavity: &CavityConfig) -> Result<GaussianMixtureSpectrum> {
    let s = cavity_spectrum(cavity, &cavity.default_grid())?;
    Ok(fit_two_gaussians(&s)?.mixture)
}

impl SweepPlan {
    pub fn new(spec: SweepSpec, mode: SweepMode, config: OpenSystemConfig) -> Result<Self> {
        config.validate()?;
        let xs = spec.axis.values();
        if xs.is_empty() {
            return Err(Error::InvalidGrid("sweep control grid is empty".into()));
        }
        if !strictly_increasing(xs) || xs.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidGrid("sweep control grid must be finite and strictly increasing".into()));
        }
        if let SweepMode::Tomographic(t) = &mode {
            t.validate()?;
        }
        let prepared = match (&spec.axis, &spec.source) {
            (ControlAxis::PathDifference(_), EnvironmentSource::Mixture(m)) => Prepared::Fixed(m.clone()),
            (ControlAxis::PathDifference(_), EnvironmentSource::Cavity(c)) => {
                c.validate()?;
                Prepared::Fixed(fitted_cavity_mixture(c)?)
            }
            (ControlAxis::Tilt(_), EnvironmentSource::Cavity(c)) => {
                c.validate()?;
                if !(spec.window.revivals > 0.0 && spec.window.revivals.is_finite()) || spec.window.points < 3 {
                    return Err(Error::InvalidParameter(
                        "revival window needs revivals > 0 and at least 3 points".into(),
                    ));
                }
                Prepared::Tilt(*c)
            }
            (ControlAxis::Tilt(_), EnvironmentSource::Mixture(_)) => {
                return Err(Error::InvalidParameter("a tilt sweep needs a cavity source".into()));
            }
        };
        if let Prepared::Fixed(m) = &prepared {
            if m.peaks().len() > 2 {
                return Err(Error::InvalidParameter("sweeps take at most two spectral peaks".into()));
            }
        }
        Ok(Self { spec, mode, config, prepared })
    }

    pub fn len(&self) -> usize {
        self.spec.axis.values().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spec(&self) -> &SweepSpec {
        &self.spec
    }

    pub fn mode(&self) -> &SweepMode {
        &self.mode
    }

    /// Independent random stream of point `index`.
    pub fn point_rng(&self, index: usize) -> ChaCha8Rng {
        let seed = match self.mode {
            SweepMode::Tomographic(t) => t.seed,
            SweepMode::Exact => 0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index as u64);
        rng
    }

    /// Evaluates point `index`; failures are recorded in the row.
    pub fn evaluate(&self, index: usize) -> SweepRow {
        let control = self.spec.axis.values()[index];
        let result = match &self.prepared {
            Prepared::Fixed(m) => self.path_point(m, control, index),
            Prepared::Tilt(c) => self.tilt_point(c, control, index),
        };
        result.unwrap_or_else(|e| SweepRow {
            control,
            value: f64::NAN,
            stderr: f64::NAN,
            exact: f64::NAN,
            measure: None,
            failure: Some(e.to_string()),
        })
    }

    fn path_point(&self, m: &GaussianMixtureSpectrum, control: f64, index: usize) -> Result<SweepRow> {
        let t = self.config.time_for_path_difference(control);
        let kappa = mixture_kappa(m, self.config.effective_time(t));
        let exact = exact_value(self.spec.arm, kappa)?;
        let (value, stderr) = match self.mode {
            SweepMode::Exact => (exact, 0.0),
            SweepMode::Tomographic(cfg) => {
                let mut rng = self.point_rng(index);
                tomographic_value(self.spec.arm, &[kappa], &cfg, &mut rng, |v| v[0])?
            }
        };
        Ok(SweepRow { control, value, stderr, exact, measure: None, failure: None })
    }

    fn tilt_point(&self, cavity: &CavityConfig, control: f64, index: usize) -> Result<SweepRow> {
        let cavity = cavity.with_tilt(control);
        let mixture = fitted_cavity_mixture(&cavity)?;
        let delta_omega = match mixture.delta_omega() {
            Some(d) if d > 0.0 && mixture.peaks().iter().all(|p| p.weight > 0.0) => d,
            _ => cavity.free_spectral_range(),
        };
        let x_max = self.spec.window.revivals * 2.0 * PI / delta_omega;
        let grid = TimeGrid::uniform_effective(x_max, self.spec.window.points, &self.config)?;
        let traj = kappa_closed_form(&mixture, &self.config, &grid)?;
        let opts = AnalysisOptions::default();
        let n = match self.spec.arm {
            Arm::TraceDistance => blp_analytic(&traj, &opts)?.value,
            Arm::Concurrence => rhp_concurrence_measure(&traj, &opts)?.value,
        };
        match self.mode {
            SweepMode::Exact => {
                Ok(SweepRow { control, value: n, stderr: 0.0, exact: n, measure: Some(n), failure: None })
            }
            SweepMode::Tomographic(cfg) => {
                let series: Vec<f64> =
                    traj.kappa().iter().map(|&k| exact_value(self.spec.arm, k)).collect::<Result<_>>()?;
                let (i, j) = largest_forward_change(&series);
                let exact = series[j] - series[i];
                let kappas = [traj.kappa()[i], traj.kappa()[j]];
                let mut rng = self.point_rng(index);
                let (value, stderr) = tomographic_value(self.spec.arm, &kappas, &cfg, &mut rng, |v| v[1] - v[0])?;
                Ok(SweepRow { control, value, stderr, exact, measure: Some(n), failure: None })
            }
        }
    }
}

fn exact_value(arm: Arm, kappa: Complex64) -> Result<f64> {
    let ((r1, r2), bell) = preset_states();
    Ok(match arm {
        Arm::TraceDistance => trace_distance(&apply_map(kappa, &r1)?, &apply_map(kappa, &r2)?),
        Arm::Concurrence => concurrence(&extend_to_ancilla(kappa, &bell)?),
    })
}

/// Indices `i < j` maximizing `v[j] − v[i]`.
fn largest_forward_change(v: &[f64]) -> (usize, usize) {
    let mut best = (0, 1);
    let mut best_gain = f64::NEG_INFINITY;
    let mut low = 0;
    for j in 1..v.len() {
        let gain = v[j] - v[low];
        if gain > best_gain {
            best_gain = gain;
            best = (low, j);
        }
        if v[j] < v[low] {
            low = j;
        }
    }
    best
}

/// Tomographs the arm's states at each `κ`, combines the reconstructed
/// quantities with `combine`, and bootstraps the standard error.
fn tomographic_value<R: Rng + ?Sized>(
    arm: Arm,
    kappas: &[Complex64],
    cfg: &TomographyConfig,
    rng: &mut R,
    combine: impl Fn(&[f64]) -> f64,
) -> Result<(f64, f64)> {
    let ((r1, r2), bell) = preset_states();
    let mut tables = Vec::new();
    for &k in kappas {
        match arm {
            Arm::TraceDistance => {
                tables.push(simulate_counts_with(&apply_map(k, &r1)?, cfg, rng));
                tables.push(simulate_counts_with(&apply_map(k, &r2)?, cfg, rng));
            }
            Arm::Concurrence => tables.push(simulate_counts_with(&extend_to_ancilla(k, &bell)?, cfg, rng)),
        }
    }
    let statistic = |t: &[CountsTable]| -> Result<f64> {
        let per_kappa: Vec<f64> = match arm {
            Arm::TraceDistance => t
                .chunks(2)
                .map(|p| {
                    Ok(trace_distance(
                        &reconstruct_state::<QubitState>(&p[0])?,
                        &reconstruct_state::<QubitState>(&p[1])?,
                    ))
                })
                .collect::<Result<_>>()?,
            Arm::Concurrence => {
                t.iter().map(|x| Ok(concurrence(&reconstruct_state::<TwoQubitState>(x)?))).collect::<Result<_>>()?
            }
        };
        Ok(combine(&per_kappa))
    };
    let value = statistic(&tables)?;
    let stderr = bootstrap_stderr(&tables, statistic, cfg, rng);
    Ok((value, stderr))
}

/// Evaluates every point in order.
pub fn run_sweep(spec: SweepSpec, mode: SweepMode, config: OpenSystemConfig) -> Result<SweepDataset> {
    let plan = SweepPlan::new(spec, mode, config)?;
    Ok(SweepDataset { rows: (0..plan.len()).map(|i| plan.evaluate(i)).collect() })
}

/// `n` uniform path differences `Δn·L/λ₀` over `[0, periods · 2π/Δω]` in
/// effective time.
pub fn path_difference_grid(delta_omega: f64, periods: f64, n: usize, cfg: &OpenSystemConfig) -> Result<Vec<f64>> {
    if !(delta_omega > 0.0 && periods > 0.0) || n < 2 {
        return Err(Error::InvalidGrid("path-difference grid needs Δω > 0, periods > 0 and n ≥ 2".into()));
    }
    let x_max = periods * 2.0 * PI / delta_omega;
    let scale = SPEED_OF_LIGHT / cfg.lambda0;
    Ok((0..n).map(|i| scale * x_max * i as f64 / (n - 1) as f64).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_convention() {
        let ((r1, r2), bell) = preset_states();
        let b1 = r1.to_bloch();
        let b2 = r2.to_bloch();
        assert_eq!((b1.x, b1.y, b1.z), (1.0, 0.0, 0.0));
        assert_eq!((b2.x, b2.y, b2.z), (-1.0, 0.0, 0.0));
        assert_eq!(trace_distance(&r1, &r2), 1.0);
        assert!((concurrence(&bell) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn settings_are_complete() {
        assert_eq!(pauli_settings(1).len(), 3);
        assert_eq!(pauli_settings(2).len(), 9);
    }

    #[test]
    fn deterministic_outcome() {
        let cfg = TomographyConfig::default();
        let t = simulate_counts(&QubitState::horizontal(), &cfg);
        let z = t.settings.iter().find(|s| s.bases == [Pauli::Z]).unwrap();
        assert_eq!(z.counts, vec![cfg.counts, 0]);
    }

    #[test]
    fn born_probabilities_of_bell() {
        let e = TwoQubitState::bell().pauli_expectations();
        let zz = born_probabilities::<TwoQubitState>(&e, &[Pauli::Z, Pauli::Z]);
        assert!((zz[0] - 0.5).abs() < 1e-15 && zz[1].abs() < 1e-15 && (zz[3] - 0.5).abs() < 1e-15);
        let xz = born_probabilities::<TwoQubitState>(&e, &[Pauli::X, Pauli::Z]);
        assert!(xz.iter().all(|p| (p - 0.25).abs() < 1e-15));
    }

    #[test]
    fn incomplete_settings_fail() {
        let mut t = simulate_counts(&QubitState::plus(), &TomographyConfig::default());
        t.settings.pop();
        assert!(matches!(reconstruct_state::<QubitState>(&t), Err(Error::IncompleteSettings(_))));
        let two = simulate_counts(&TwoQubitState::bell(), &TomographyConfig::default());
        assert!(reconstruct_state::<QubitState>(&two).is_err());
    }

    #[test]
    fn forward_change() {
        assert_eq!(largest_forward_change(&[1.0, 0.2, 0.5, 0.1, 0.3]), (1, 2));
        let (i, j) = largest_forward_change(&[1.0, 0.9, 0.85, 0.84]);
        assert_eq!((i, j), (2, 3));
    }

    #[test]
    fn tilt_axis_requires_cavity() {
        let m = GaussianMixtureSpectrum::single(2.7e15, 1e12).unwrap();
        let spec = SweepSpec {
            axis: ControlAxis::Tilt(vec![0.0, 1.0]),
            source: EnvironmentSource::Mixture(m),
            arm: Arm::TraceDistance,
            window: RevivalWindow::default(),
        };
        assert!(SweepPlan::new(spec, SweepMode::Exact, OpenSystemConfig::default()).is_err());
    }
}
