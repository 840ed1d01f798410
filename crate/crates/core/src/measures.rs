// Copyright 2026 The dephase Authors
// SPDX-License-Identifier: Apache-2.0

//! Non-Markovianity measures.
//!
//! The trace-distance measure sums every rise of `D(ρ₁(t), ρ₂(t))` and
//! maximizes over initial pairs. For pure dephasing the equatorial antipodes
//! are optimal and `D = |κ(t)|`, which [`blp_analytic`] uses directly;
//! [`blp_optimized`] searches pairs numerically instead. The concurrence
//! measure tracks `C((Φ_t ⊗ I)|Φ⁺⟩⟨Φ⁺|)` and coincides with the other two.
//!
//! Discretization: a step counts as increasing when it rises by more than
//! [`AnalysisOptions::plateau_tolerance`]; maximal runs of such steps form the
//! increase intervals.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dephasing::{
    apply_map, extend_to_ancilla, kappa_closed_form, DecoherenceTrajectory, OpenSystemConfig, TimeGrid,
};
use crate::error::{Error, Result};
use crate::optim::nelder_mead;
use crate::qstate::{bloch_to_state, concurrence, trace_distance, BlochVector, QubitState, TwoQubitState};
use crate::quad::strictly_increasing;
use crate::spectrum::GaussianMixtureSpectrum;

/// Adjacent samples closer than this form a plateau and break an interval.
pub const PLATEAU_TOLERANCE: f64 = 1e-12;
/// `N` at or below this floor classifies a process as Markovian.
pub const MARKOVIAN_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields, default))]
pub struct AnalysisOptions {
    pub plateau_tolerance: f64,
    /// Intervals whose total rise is not above this are ignored.
    pub min_rise: f64,
    /// Refine interior interval endpoints by three-point parabolic interpolation.
    pub refine_extrema: bool,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self { plateau_tolerance: PLATEAU_TOLERANCE, min_rise: 0.0, refine_extrema: true }
    }
}

/// One maximal run of increasing samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IncreaseInterval {
    pub start: usize,
    pub end: usize,
    /// Value at `start`, refined toward the local minimum when enabled.
    pub start_value: f64,
    /// Value at `end`, refined toward the local maximum when enabled.
    pub end_value: f64,
}

impl IncreaseInterval {
    pub fn rise(&self) -> f64 {
        self.end_value - self.start_value
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryAnalysis {
    pub intervals: Vec<IncreaseInterval>,
    /// Sum of the per-step rises inside the counted intervals, on the raw grid.
    pub total_increase: f64,
    /// Sum of the (possibly refined) interval rises.
    pub refined_increase: f64,
}

/// Vertex of the parabola through three points, if it opens the right way.
fn parabola_vertex(x: [f64; 3], y: [f64; 3], want_min: bool) -> Option<f64> {
    let h0 = x[0] - x[1];
    let h2 = x[2] - x[1];
    let s0 = (y[0] - y[1]) / h0;
    let s2 = (y[2] - y[1]) / h2;
    let a = (s2 - s0) / (h2 - h0);
    let b = s2 - a * h2;
    if (want_min && a > 0.0) || (!want_min && a < 0.0) {
        Some(y[1] - b * b / (4.0 * a))
    } else {
        None
    }
}

fn refine(grid: &[f64], values: &[f64], i: usize, want_min: bool) -> f64 {
    let y1 = values[i];
    let x = [grid[i - 1], grid[i], grid[i + 1]];
    let y = [values[i - 1], y1, values[i + 1]];
    let Some(v) = parabola_vertex(x, y, want_min) else {
        return y1;
    };
    // The vertex may move at most by the larger neighbour difference and
    // stays inside [0, 1], where every analysed quantity lives.
    let reach = (y[0] - y1).abs().max((y[2] - y1).abs());
    if want_min {
        v.clamp((y1 - reach).max(0.0).min(y1), y1)
    } else {
        v.clamp(y1, (y1 + reach).min(1.0).max(y1))
    }
}

/// Finds the intervals of increase of a sampled trajectory.
pub fn analyze_trajectory(grid: &[f64], values: &[f64], opts: &AnalysisOptions) -> Result<TrajectoryAnalysis> {
    let n = values.len();
    if n < 2 {
        return Err(Error::InvalidGrid(format!("trajectory needs at least 2 points, got {n}")));
    }
    if grid.len() != n || !strictly_increasing(grid) {
        return Err(Error::InvalidGrid("trajectory grid must be strictly increasing and match the values".into()));
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(format!("non-finite trajectory value {v}")));
    }

    let mut runs: Vec<(usize, usize)> = Vec::new();
    let mut i = 0;
    while i + 1 < n {
        if values[i + 1] - values[i] > opts.plateau_tolerance {
            let start = i;
            while i + 1 < n && values[i + 1] - values[i] > opts.plateau_tolerance {
                i += 1;
            }
            runs.push((start, i));
        } else {
            i += 1;
        }
    }

    let mut intervals = Vec::new();
    let mut total_increase = 0.0;
    let mut refined_increase = 0.0;
    for (start, end) in runs {
        if !(values[end] - values[start] > opts.min_rise) {
            continue;
        }
        for k in start..end {
            total_increase += values[k + 1] - values[k];
        }
        let (mut start_value, mut end_value) = (values[start], values[end]);
        if opts.refine_extrema {
            if start > 0 {
                start_value = refine(grid, values, start, true);
            }
            if end + 1 < n {
                end_value = refine(grid, values, end, false);
            }
        }
        let interval = IncreaseInterval { start, end, start_value, end_value };
        refined_increase += interval.rise();
        intervals.push(interval);
    }
    Ok(TrajectoryAnalysis { intervals, total_increase, refined_increase })
}

/// Two initial states given by their Bloch vectors.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PairParameterization {
    pub first: BlochVector,
    pub second: BlochVector,
}

impl PairParameterization {
    pub fn new(first: BlochVector, second: BlochVector) -> Result<Self> {
        BlochVector::new(first.x, first.y, first.z)?;
        BlochVector::new(second.x, second.y, second.z)?;
        Ok(Self { first, second })
    }

    /// The `(|H⟩ ± |V⟩)/√2` pair.
    pub fn equatorial() -> Self {
        Self { first: BlochVector { x: 1.0, y: 0.0, z: 0.0 }, second: BlochVector { x: -1.0, y: 0.0, z: 0.0 } }
    }

    /// Population difference `ρ₁^{HH} − ρ₂^{HH}`.
    pub fn a(&self) -> f64 {
        0.5 * (self.first.z - self.second.z)
    }

    /// Coherence difference `ρ₁^{HV} − ρ₂^{HV}`.
    pub fn b(&self) -> Complex64 {
        Complex64::new(0.5 * (self.first.x - self.second.x), -0.5 * (self.first.y - self.second.y))
    }

    pub fn states(&self) -> Result<(QubitState, QubitState)> {
        Ok((bloch_to_state(&self.first)?, bloch_to_state(&self.second)?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum MeasureMethod {
    /// Trace distance of the equatorial pair, `D = |κ|`.
    Analytic,
    /// Trace distance maximized numerically over pure pairs.
    Optimized,
    /// System–ancilla concurrence.
    Concurrence,
}

/// Interval in path-difference coordinates `Δn·L/λ₀`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IntervalSpan {
    pub start_index: usize,
    pub end_index: usize,
    pub start_x: f64,
    pub end_x: f64,
    pub rise: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NonMarkovianityResult {
    /// `N ≥ 0`; zero iff no interval of increase.
    pub value: f64,
    pub method: MeasureMethod,
    pub optimal_pair: PairParameterization,
    pub intervals: Vec<IntervalSpan>,
    /// Grid sum of rises without extremum refinement.
    pub raw_increase: f64,
    /// First local minimum to the following maximum, when exactly one
    /// interval exists.
    pub single_interval: Option<f64>,
}

impl NonMarkovianityResult {
    pub fn is_markovian(&self) -> bool {
        self.value <= MARKOVIAN_FLOOR
    }

    fn from_analysis(
        analysis: TrajectoryAnalysis,
        traj: &DecoherenceTrajectory,
        method: MeasureMethod,
        pair: PairParameterization,
        opts: &AnalysisOptions,
    ) -> Self {
        let xs = traj.path_differences();
        let intervals: Vec<IntervalSpan> = analysis
            .intervals
            .iter()
            .map(|iv| IntervalSpan {
                start_index: iv.start,
                end_index: iv.end,
                start_x: xs[iv.start],
                end_x: xs[iv.end],
                rise: iv.rise(),
            })
            .collect();
        let value = if opts.refine_extrema { analysis.refined_increase } else { analysis.total_increase };
        let single_interval = match intervals.as_slice() {
            [only] => Some(only.rise),
            _ => None,
        };
        Self { value, method, optimal_pair: pair, intervals, raw_increase: analysis.total_increase, single_interval }
    }
}

fn effective_grid(traj: &DecoherenceTrajectory) -> Vec<f64> {
    // Analysis runs on t; the sign of Δn must not flip the ordering.
    traj.grid().times().to_vec()
}

/// Trace-distance measure from `|κ(t)|` via the optimal equatorial pair.
pub fn blp_analytic(traj: &DecoherenceTrajectory, opts: &AnalysisOptions) -> Result<NonMarkovianityResult> {
    let analysis = analyze_trajectory(&effective_grid(traj), &traj.moduli(), opts)?;
    Ok(NonMarkovianityResult::from_analysis(
        analysis,
        traj,
        MeasureMethod::Analytic,
        PairParameterization::equatorial(),
        opts,
    ))
}

/// Concurrence trajectory `C(t)` of the dephased Bell state.
pub fn concurrence_series(traj: &DecoherenceTrajectory) -> Result<Vec<f64>> {
    let bell = TwoQubitState::bell();
    traj.kappa().iter().map(|&k| Ok(concurrence(&extend_to_ancilla(k, &bell)?))).collect()
}

/// Concurrence-based measure: intervals of increasing system–ancilla
/// entanglement.
pub fn rhp_concurrence_measure(traj: &DecoherenceTrajectory, opts: &AnalysisOptions) -> Result<NonMarkovianityResult> {
    let series = concurrence_series(traj)?;
    let analysis = analyze_trajectory(&effective_grid(traj), &series, opts)?;
    Ok(NonMarkovianityResult::from_analysis(
        analysis,
        traj,
        MeasureMethod::Concurrence,
        PairParameterization::equatorial(),
        opts,
    ))
}

/// Which pairs the optimizer may visit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum PairConstraint {
    /// Any two pure states.
    #[default]
    Any,
    /// Pairs differing only in population (`b = 0`): mirror images in z.
    PopulationsOnly,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields, default))]
pub struct SearchSettings {
    /// Polar samples per sphere in the coarse grid (cell centers).
    pub polar_steps: usize,
    pub azimuth_steps: usize,
    /// Best coarse candidates refined by Nelder–Mead.
    pub refine_starts: usize,
    pub max_iterations: usize,
    /// Simplex value spread at convergence.
    pub tolerance: f64,
    pub seed: u64,
    pub constraint: PairConstraint,
    pub analysis: AnalysisOptions,
}

impl Default for SearchSettings {
    fn default() -> Self {
        Self {
            polar_steps: 6,
            azimuth_steps: 8,
            refine_starts: 4,
            max_iterations: 4000,
            tolerance: 1e-13,
            seed: 0,
            constraint: PairConstraint::Any,
            analysis: AnalysisOptions::default(),
        }
    }
}

struct PairObjective<'a> {
    grid: Vec<f64>,
    kappa: &'a [Complex64],
    opts: AnalysisOptions,
    constraint: PairConstraint,
}

impl PairObjective<'_> {
    fn pair(&self, p: &[f64; 4]) -> PairParameterization {
        let first = BlochVector::from_angles(p[0], p[1]);
        let second = match self.constraint {
            PairConstraint::Any => BlochVector::from_angles(p[2], p[3]),
            PairConstraint::PopulationsOnly => BlochVector { x: first.x, y: first.y, z: -first.z },
        };
        PairParameterization { first, second }
    }

    fn series(&self, pair: &PairParameterization) -> Result<Vec<f64>> {
        let (r1, r2) = pair.states()?;
        self.kappa.iter().map(|&k| Ok(trace_distance(&apply_map(k, &r1)?, &apply_map(k, &r2)?))).collect()
    }

    fn value(&self, p: &[f64; 4]) -> f64 {
        let pair = self.pair(p);
        let Ok(series) = self.series(&pair) else {
            return 0.0;
        };
        match analyze_trajectory(&self.grid, &series, &self.opts) {
            Ok(a) if self.opts.refine_extrema => a.refined_increase,
            Ok(a) => a.total_increase,
            Err(_) => 0.0,
        }
    }
}

/// Trace-distance measure maximized over pairs of pure initial states.
///
/// A coarse grid over both Bloch spheres seeds Nelder–Mead refinements of
/// the best candidates (jittered by the seeded RNG).
pub fn blp_optimized(traj: &DecoherenceTrajectory, search: &SearchSettings) -> Result<NonMarkovianityResult> {
    if search.polar_steps == 0 || search.azimuth_steps == 0 || search.refine_starts == 0 || search.max_iterations == 0 {
        return Err(Error::InvalidParameter("search budget must be positive".into()));
    }
    let objective = PairObjective {
        grid: effective_grid(traj),
        kappa: traj.kappa(),
        opts: search.analysis,
        constraint: search.constraint,
    };
    // Validate the grid once through the analysis path.
    analyze_trajectory(&objective.grid, &traj.moduli(), &search.analysis)?;

    let points: Vec<(f64, f64)> = (0..search.polar_steps)
        .flat_map(|i| {
            let theta = (i as f64 + 0.5) * PI / search.polar_steps as f64;
            (0..search.azimuth_steps).map(move |j| (theta, 2.0 * PI * j as f64 / search.azimuth_steps as f64))
        })
        .collect();
    let mut candidates: Vec<([f64; 4], f64)> = Vec::new();
    match search.constraint {
        PairConstraint::Any => {
            for (i, &(t1, p1)) in points.iter().enumerate() {
                for &(t2, p2) in &points[i + 1..] {
                    let p = [t1, p1, t2, p2];
                    candidates.push((p, objective.value(&p)));
                }
            }
        }
        PairConstraint::PopulationsOnly => {
            for &(t, p) in &points {
                let q = [t, p, 0.0, 0.0];
                candidates.push((q, objective.value(&q)));
            }
        }
    }
    candidates.sort_by(|a, b| b.1.total_cmp(&a.1));

    let mut rng = ChaCha8Rng::seed_from_u64(search.seed);
    let mut best = candidates[0];
    for (start, _) in candidates.iter().take(search.refine_starts) {
        let mut p = *start;
        for v in p.iter_mut() {
            *v += rng.gen_range(-0.05..0.05);
        }
        let mut outcome =
            nelder_mead(p, 0.2, |q| -objective.value(q), search.max_iterations, search.tolerance, f64::INFINITY);
        if outcome.converged {
            // Restart once at the optimum to escape premature collapse.
            outcome = nelder_mead(
                outcome.point,
                0.05,
                |q| -objective.value(q),
                search.max_iterations,
                search.tolerance,
                f64::INFINITY,
            );
        }
        if !outcome.converged {
            return Err(Error::NonConvergence(format!(
                "pair refinement stalled after {} iterations at N = {}",
                search.max_iterations, -outcome.value
            )));
        }
        if -outcome.value > best.1 {
            best = (outcome.point, -outcome.value);
        }
    }

    let pair = objective.pair(&best.0);
    let series = objective.series(&pair)?;
    let analysis = analyze_trajectory(&objective.grid, &series, &search.analysis)?;
    Ok(NonMarkovianityResult::from_analysis(analysis, traj, MeasureMethod::Optimized, pair, &search.analysis))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum TransitionKind {
    ToMarkovian,
    ToNonMarkovian,
}

/// Adjacent control values between which the regime changes.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Transition {
    pub lower: f64,
    pub upper: f64,
    pub kind: TransitionKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransitionScan {
    /// `(control value, N)`; `N` is NaN where the point failed.
    pub points: Vec<(f64, f64)>,
    pub transitions: Vec<Transition>,
}

/// Regime changes along a scan, classifying `N > MARKOVIAN_FLOOR` as
/// non-Markovian. NaN points are skipped.
pub fn find_transitions(points: &[(f64, f64)]) -> Vec<Transition> {
    let valid: Vec<(f64, bool)> =
        points.iter().filter(|(_, n)| !n.is_nan()).map(|&(c, n)| (c, n > MARKOVIAN_FLOOR)).collect();
    valid
        .windows(2)
        .filter(|w| w[0].1 != w[1].1)
        .map(|w| Transition {
            lower: w[0].0,
            upper: w[1].0,
            kind: if w[1].1 { TransitionKind::ToNonMarkovian } else { TransitionKind::ToMarkovian },
        })
        .collect()
}

/// `N` (via [`blp_analytic`]) for each `(control, spectrum)` pair.
pub fn markovian_transition_scan(
    spectra: &[(f64, GaussianMixtureSpectrum)],
    cfg: &OpenSystemConfig,
    grid: &TimeGrid,
    opts: &AnalysisOptions,
) -> Result<TransitionScan> {
    if spectra.is_empty() {
        return Err(Error::InvalidParameter("scan needs at least one control value".into()));
    }
    let mut points = Vec::with_capacity(spectra.len());
    for (control, m) in spectra {
        let traj = kappa_closed_form(m, cfg, grid)?;
        points.push((*control, blp_analytic(&traj, opts)?.value));
    }
    let transitions = find_transitions(&points);
    Ok(TransitionScan { points, transitions })
}
