// Copyright 2026 The dephase Authors
// SPDX-License-Identifier: Apache-2.0

//! `dephase` subcommands.
//!
//! Exit codes: 0 success, 2 configuration or IO error, 3 numerical failure
//! (fit, convergence, aliasing, every sweep point failed), 4 the measures
//! disagree beyond their documented tolerances.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dephase_core::dephasing::{kappa_closed_form, kappa_quadrature, DecoherenceTrajectory, OpenSystemConfig, TimeGrid};
use dephase_core::lab::{
    fitted_cavity_mixture, path_difference_grid, Arm, ControlAxis, EnvironmentSource, RevivalWindow, SweepDataset,
    SweepMode, SweepPlan, SweepSpec,
};
use dephase_core::measures::{
    blp_analytic, blp_optimized, find_transitions, rhp_concurrence_measure, NonMarkovianityResult, Transition,
};
use dephase_core::spectrum::{
    cavity_spectrum, fit_two_gaussians, relative_amplitude, CavityConfig, GaussianMixtureSpectrum, MixtureFit,
    SampledSpectrum, DEFAULT_GRID_POINTS,
};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{ArmChoice, AxisKind, ConfigError, ModeChoice, RunConfig, SourceConfig};
use crate::io::{spectrum_rows, StagedOutput, SPECTRUM_HEADERS};
use crate::parallel;

/// `|analytic − concurrence|` above this is a bug.
pub const EQUIVALENCE_TOLERANCE: f64 = 1e-10;
/// Allowed excess of the optimized over the analytic measure.
pub const OPTIMIZER_EXCESS_TOLERANCE: f64 = 1e-9;
/// Allowed shortfall of the optimized measure.
pub const OPTIMIZER_GAP_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Parser)]
#[command(name = "dephase", version, about = "Photonic dephasing dynamics and non-Markovianity")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// JSON run configuration; defaults apply when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, env = "DEPHASE_OUT_DIR", default_value = ".")]
    pub out_dir: PathBuf,
    /// Overrides the config's master seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KappaRoute {
    /// Two-Gaussian closed form (fitted for a cavity source).
    ClosedForm,
    /// Trapezoidal quadrature of the sampled spectrum.
    Quadrature,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// D and C against path difference, exact and tomographic.
    Fig3,
    /// N against cavity tilt.
    Fig4,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample the environment spectrum and fit two Gaussians.
    Spectrum {
        #[command(flatten)]
        common: CommonArgs,
        /// Cavity tilt in degrees (cavity source only).
        #[arg(long)]
        tilt: Option<f64>,
    },
    /// Evaluate the decoherence function over the configured window.
    Kappa {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_enum, default_value = "closed-form")]
        route: KappaRoute,
    },
    /// Compute the measure by all three methods and cross-check them.
    Measure {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run the configured sweep or a preset.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_enum)]
        preset: Option<Preset>,
        /// Exact model only.
        #[arg(long, conflicts_with = "tomographic")]
        exact: bool,
        /// Simulated tomography only.
        #[arg(long)]
        tomographic: bool,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error("consistency violation: {0}")]
    Consistency(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Consistency(_) => 4,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<dephase_core::Error> for CliError {
    fn from(e: dephase_core::Error) -> Self {
        use dephase_core::Error as E;
        match e {
            E::FitFailed(_) | E::NonConvergence(_) | E::EmptySpectrum | E::Aliasing { .. } | E::KappaOutOfRange(_) => {
                CliError::Numeric(e.to_string())
            }
            _ => CliError::Config(e.to_string()),
        }
    }
}

pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dephase: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

pub fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Spectrum { common, tilt } => cmd_spectrum(&common, tilt),
        Command::Kappa { common, route } => cmd_kappa(&common, route),
        Command::Measure { common } => cmd_measure(&common),
        Command::Sweep { common, preset, exact, tomographic } => {
            let mode = match (exact, tomographic) {
                (true, _) => Some(ModeChoice::Exact),
                (_, true) => Some(ModeChoice::Tomographic),
                _ => None,
            };
            cmd_sweep(&common, preset, mode)
        }
    }
}

fn load(common: &CommonArgs) -> Result<RunConfig, CliError> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    parallel::requested_threads().map_err(CliError::Config)?;
    Ok(cfg)
}

#[derive(Serialize)]
struct Metadata<'a, T: Serialize> {
    software: String,
    command: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    preset: Option<&'a str>,
    seed: u64,
    config: &'a RunConfig,
    #[serde(flatten)]
    details: T,
}

fn metadata<'a, T: Serialize>(
    command: &'a str,
    preset: Option<&'a str>,
    cfg: &'a RunConfig,
    details: T,
) -> Metadata<'a, T> {
    Metadata { software: format!("dephase {}", crate::VERSION), command, preset, seed: cfg.seed, config: cfg, details }
}

/// A mixture with its two-peak parameters, when it has two peaks.
#[derive(Debug, Clone, Serialize)]
struct MixtureSummary {
    #[serde(flatten)]
    mixture: GaussianMixtureSpectrum,
    #[serde(skip_serializing_if = "Option::is_none")]
    relative_amplitude: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    delta_omega: Option<f64>,
}

impl MixtureSummary {
    fn new(m: &GaussianMixtureSpectrum) -> Self {
        let two = m.peaks().len() == 2;
        Self {
            mixture: m.clone(),
            relative_amplitude: if two { relative_amplitude(m).ok().filter(|a| a.is_finite()) } else { None },
            delta_omega: m.delta_omega(),
        }
    }
}

#[derive(Serialize)]
struct FitSummary {
    mixture: MixtureSummary,
    residual_norm: f64,
    relative_residual: f64,
    iterations: usize,
    degenerate: bool,
}

impl FitSummary {
    fn new(fit: &MixtureFit) -> Self {
        Self {
            mixture: MixtureSummary::new(&fit.mixture),
            residual_norm: fit.residual_norm,
            relative_residual: fit.relative_residual,
            iterations: fit.iterations,
            degenerate: fit.degenerate,
        }
    }
}

/// Grid spanning every peak by ±8 widths.
fn mixture_grid(m: &GaussianMixtureSpectrum, points: usize) -> Vec<f64> {
    let lo = m.peaks().iter().map(|p| p.center - 8.0 * p.width).fold(f64::INFINITY, f64::min);
    let hi = m.peaks().iter().map(|p| p.center + 8.0 * p.width).fold(f64::NEG_INFINITY, f64::max);
    (0..points).map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64).collect()
}

fn sampled_source(cfg: &RunConfig) -> Result<SampledSpectrum, CliError> {
    match &cfg.source {
        SourceConfig::Mixture(m) => Ok(m.build()?.sample(&mixture_grid(&m.build()?, DEFAULT_GRID_POINTS))?),
        SourceConfig::Cavity(c) => Ok(cavity_spectrum(c, &c.default_grid())?),
        SourceConfig::Spectrum(f) => Ok(f.load()?),
    }
}

/// The two-peak model behind the configured source.
fn source_mixture(cfg: &RunConfig) -> Result<GaussianMixtureSpectrum, CliError> {
    match &cfg.source {
        SourceConfig::Mixture(m) => Ok(m.build()?),
        SourceConfig::Cavity(c) => Ok(fitted_cavity_mixture(c)?),
        SourceConfig::Spectrum(f) => Ok(fit_two_gaussians(&f.load()?)?.mixture),
    }
}

/// Closed form for up to two peaks, quadrature beyond.
fn trajectory(
    m: &GaussianMixtureSpectrum,
    sys: &OpenSystemConfig,
    grid: &TimeGrid,
) -> Result<DecoherenceTrajectory, CliError> {
    if m.peaks().len() <= 2 {
        return Ok(kappa_closed_form(m, sys, grid)?);
    }
    // Keep ω spacing · x_max well inside the aliasing guard.
    let x_max = sys.effective_time(grid.t_max()).abs();
    let span = mixture_grid(m, 2);
    let points =
        (((span[1] - span[0]) * x_max / (std::f64::consts::PI / 8.0)).ceil() as usize).max(DEFAULT_GRID_POINTS) | 1;
    Ok(kappa_quadrature(&m.sample(&mixture_grid(m, points))?, sys, grid)?.trajectory)
}

fn cmd_spectrum(common: &CommonArgs, tilt: Option<f64>) -> Result<(), CliError> {
    let mut cfg = load(common)?;
    if let Some(t) = tilt {
        match &mut cfg.source {
            SourceConfig::Cavity(c) => *c = c.with_tilt(t),
            _ => return Err(CliError::Config("--tilt needs a cavity source".into())),
        }
        cfg.validate()?;
    }
    let sampled = sampled_source(&cfg)?;
    let fit = fit_two_gaussians(&sampled)?;
    let mut out = StagedOutput::new(&common.out_dir)?;
    out.add_csv("spectrum.csv", &SPECTRUM_HEADERS, &spectrum_rows(&sampled))?;
    out.add_json("spectrum_fit.json", &metadata("spectrum", None, &cfg, FitDetails { fit: FitSummary::new(&fit) }))?;
    out.commit()?;
    let s = MixtureSummary::new(&fit.mixture);
    println!(
        "A = {}  delta_omega = {}  sigma = {:.6e}  residual = {:.4}",
        s.relative_amplitude.map_or("n/a".into(), |a| format!("{a:.6}")),
        s.delta_omega.map_or("n/a".into(), |d| format!("{d:.6e}")),
        fit.mixture.peaks()[0].width,
        fit.relative_residual
    );
    Ok(())
}

#[derive(Serialize)]
struct FitDetails {
    fit: FitSummary,
}

#[derive(Serialize)]
struct KappaDetails {
    route: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    quadrature_error_estimate: Option<f64>,
    mixture: MixtureSummary,
}

fn cmd_kappa(common: &CommonArgs, route: KappaRoute) -> Result<(), CliError> {
    let cfg = load(common)?;
    let sys = cfg.plate.open_system();
    let mixture = source_mixture(&cfg)?;
    let grid = cfg.window.grid(&mixture, &sys)?;
    let (traj, err, name) = match route {
        KappaRoute::ClosedForm => (trajectory(&mixture, &sys, &grid)?, None, "closed_form"),
        KappaRoute::Quadrature => {
            let q = kappa_quadrature(&sampled_source(&cfg)?, &sys, &grid)?;
            (q.trajectory, Some(q.error_estimate), "quadrature")
        }
    };
    let rows: Vec<Vec<f64>> =
        traj.path_differences().iter().zip(traj.kappa()).map(|(&p, k)| vec![p, k.re, k.im]).collect();
    let mut out = StagedOutput::new(&common.out_dir)?;
    out.add_csv("kappa.csv", &KAPPA_HEADERS, &rows)?;
    let details = KappaDetails { route: name, quadrature_error_estimate: err, mixture: MixtureSummary::new(&mixture) };
    out.add_json("kappa.json", &metadata("kappa", None, &cfg, details))?;
    out.commit()?;
    Ok(())
}

#[derive(Serialize)]
struct MeasureResults {
    analytic: NonMarkovianityResult,
    optimized: NonMarkovianityResult,
    concurrence: NonMarkovianityResult,
}

#[derive(Serialize)]
struct Discrepancies {
    analytic_vs_concurrence: f64,
    optimized_minus_analytic: f64,
    equivalence_tolerance: f64,
    optimizer_excess_tolerance: f64,
    optimizer_gap_tolerance: f64,
    consistent: bool,
}

#[derive(Serialize)]
struct MeasureDetails {
    mixture: MixtureSummary,
    window_effective_time: f64,
    window_points: usize,
    results: MeasureResults,
    discrepancies: Discrepancies,
}

fn cmd_measure(common: &CommonArgs) -> Result<(), CliError> {
    let cfg = load(common)?;
    let sys = cfg.plate.open_system();
    let mixture = source_mixture(&cfg)?;
    let grid = cfg.window.grid(&mixture, &sys)?;
    // Sampled input is integrated as given; the fit only sets the window.
    let traj = match &cfg.source {
        SourceConfig::Spectrum(f) => kappa_quadrature(&f.load()?, &sys, &grid)?.trajectory,
        _ => trajectory(&mixture, &sys, &grid)?,
    };
    let analytic = blp_analytic(&traj, &cfg.analysis)?;
    let concurrence = rhp_concurrence_measure(&traj, &cfg.analysis)?;
    let optimized = blp_optimized(&traj, &cfg.search.settings(cfg.seed, cfg.analysis))?;

    let eq = (analytic.value - concurrence.value).abs();
    let gap = optimized.value - analytic.value;
    let consistent =
        eq <= EQUIVALENCE_TOLERANCE && gap <= OPTIMIZER_EXCESS_TOLERANCE && -gap <= OPTIMIZER_GAP_TOLERANCE;
    println!(
        "N analytic = {:.12}  optimized = {:.12}  concurrence = {:.12}",
        analytic.value, optimized.value, concurrence.value
    );
    let details = MeasureDetails {
        mixture: MixtureSummary::new(&mixture),
        window_effective_time: sys.effective_time(grid.t_max()),
        window_points: grid.len(),
        results: MeasureResults { analytic, optimized, concurrence },
        discrepancies: Discrepancies {
            analytic_vs_concurrence: eq,
            optimized_minus_analytic: gap,
            equivalence_tolerance: EQUIVALENCE_TOLERANCE,
            optimizer_excess_tolerance: OPTIMIZER_EXCESS_TOLERANCE,
            optimizer_gap_tolerance: OPTIMIZER_GAP_TOLERANCE,
            consistent,
        },
    };
    let mut out = StagedOutput::new(&common.out_dir)?;
    out.add_json("measure.json", &metadata("measure", None, &cfg, details))?;
    out.commit()?;
    if !consistent {
        return Err(CliError::Consistency(format!(
            "|analytic - concurrence| = {eq:e}, optimized - analytic = {gap:e}"
        )));
    }
    Ok(())
}

/// Columns of `kappa.csv`.
pub const KAPPA_HEADERS: [&str; 3] = ["x_over_lambda0", "re_kappa", "im_kappa"];
/// Columns of the two-column `N` scans.
pub const SCAN_HEADERS: [&str; 2] = ["control_value", "N"];

fn scan_rows(pts: &[(f64, f64)]) -> Vec<Vec<f64>> {
    pts.iter().map(|&(c, n)| vec![c, n]).collect()
}

/// Independent seed for the `k`-th dataset of one command.
fn derive_seed(seed: u64, k: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::MAX - k);
    rng.next_u64()
}

fn arms(choice: ArmChoice) -> Vec<Arm> {
    match choice {
        ArmChoice::TraceDistance => vec![Arm::TraceDistance],
        ArmChoice::Concurrence => vec![Arm::Concurrence],
        ArmChoice::Both => vec![Arm::TraceDistance, Arm::Concurrence],
    }
}

fn arm_name(arm: Arm) -> &'static str {
    match arm {
        Arm::TraceDistance => "trace",
        Arm::Concurrence => "concurrence",
    }
}

fn environment(cfg: &RunConfig) -> Result<EnvironmentSource, CliError> {
    Ok(match &cfg.source {
        SourceConfig::Mixture(m) => EnvironmentSource::Mixture(m.build()?),
        SourceConfig::Cavity(c) => EnvironmentSource::Cavity(*c),
        SourceConfig::Spectrum(f) => EnvironmentSource::Mixture(fit_two_gaussians(&f.load()?)?.mixture),
    })
}

fn run_plan(spec: SweepSpec, mode: SweepMode, sys: OpenSystemConfig) -> Result<SweepDataset, CliError> {
    let plan = SweepPlan::new(spec, mode, sys)?;
    let threads = parallel::requested_threads().map_err(CliError::Config)?;
    Ok(parallel::run_sweep(&plan, threads))
}

#[derive(Serialize)]
struct PointFailure {
    dataset: String,
    control: f64,
    message: String,
}

#[derive(Serialize)]
struct SweepDetails {
    datasets: Vec<String>,
    failures: Vec<PointFailure>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    transitions: Vec<Transition>,
}

fn collect_failures(name: &str, ds: &SweepDataset, into: &mut Vec<PointFailure>) {
    for r in ds.failures() {
        into.push(PointFailure {
            dataset: name.to_string(),
            control: r.control,
            message: r.failure.clone().unwrap_or_default(),
        });
    }
}

fn all_failed(datasets: &[&SweepDataset]) -> bool {
    datasets.iter().all(|d| d.rows.iter().all(|r| r.failure.is_some()))
}

fn cmd_sweep(common: &CommonArgs, preset: Option<Preset>, mode: Option<ModeChoice>) -> Result<(), CliError> {
    let cfg = load(common)?;
    match preset {
        Some(Preset::Fig3) => preset_fig3(common, &cfg, mode),
        Some(Preset::Fig4) => preset_fig4(common, &cfg, mode),
        None => configured_sweep(common, &cfg, mode),
    }
}

fn configured_sweep(common: &CommonArgs, cfg: &RunConfig, mode: Option<ModeChoice>) -> Result<(), CliError> {
    let Some(sweep) = &cfg.sweep else {
        return Err(CliError::Config("config has no `sweep` section; pass one or use --preset".into()));
    };
    let sys = cfg.plate.open_system();
    let xs = sweep.control_values()?;
    let axis = match sweep.axis {
        AxisKind::PathDifference => ControlAxis::PathDifference(xs),
        AxisKind::Tilt => ControlAxis::Tilt(xs),
    };
    let mode = match mode.unwrap_or(sweep.mode) {
        ModeChoice::Exact => SweepMode::Exact,
        ModeChoice::Tomographic => SweepMode::Tomographic(cfg.tomography.config(cfg.seed)),
    };
    let source = environment(cfg)?;
    let mut out = StagedOutput::new(&common.out_dir)?;
    let mut details = SweepDetails { datasets: Vec::new(), failures: Vec::new(), transitions: Vec::new() };
    let mut results = Vec::new();
    for (k, arm) in arms(sweep.arm).into_iter().enumerate() {
        let mode = match mode {
            SweepMode::Tomographic(t) if k > 0 => SweepMode::Tomographic(dephase_core::lab::TomographyConfig {
                seed: derive_seed(cfg.seed, k as u64),
                ..t
            }),
            m => m,
        };
        let spec = SweepSpec { axis: axis.clone(), source: source.clone(), arm, window: sweep.revival_window };
        let ds = run_plan(spec, mode, sys)?;
        let name = format!("sweep-{}.csv", arm_name(arm));
        let tilt = sweep.axis == AxisKind::Tilt;
        let rows: Vec<Vec<f64>> = ds
            .rows
            .iter()
            .map(|r| {
                let mut v = vec![r.control, r.value, r.stderr, r.exact];
                if tilt {
                    v.push(r.measure.unwrap_or(f64::NAN));
                }
                v
            })
            .collect();
        let headers: &[&str] = if tilt {
            &["control", "value", "stderr", "exact", "measure"]
        } else {
            &["control", "value", "stderr", "exact"]
        };
        out.add_csv(&name, headers, &rows)?;
        collect_failures(&name, &ds, &mut details.failures);
        if tilt {
            let pts: Vec<(f64, f64)> = ds.rows.iter().map(|r| (r.control, r.measure.unwrap_or(f64::NAN))).collect();
            out.add_csv(&format!("scan-{}.csv", arm_name(arm)), &SCAN_HEADERS, &scan_rows(&pts))?;
            if k == 0 {
                details.transitions = find_transitions(&pts);
            }
        }
        details.datasets.push(name);
        results.push(ds);
    }
    out.add_json("sweep.json", &metadata("sweep", None, cfg, details))?;
    out.commit()?;
    if all_failed(&results.iter().collect::<Vec<_>>()) {
        return Err(CliError::Numeric("every sweep point failed".into()));
    }
    Ok(())
}

fn wanted(mode: Option<ModeChoice>) -> (bool, bool) {
    match mode {
        Some(ModeChoice::Exact) => (true, false),
        Some(ModeChoice::Tomographic) => (false, true),
        None => (true, true),
    }
}

/// Number label without trailing noise: 0.25 → "0.25", 1 → "1".
fn label(x: f64) -> String {
    format!("{x}")
}

/// Amplitudes (mixture source) or tilts (cavity source) of the fig3 series.
pub const FIG3_AMPLITUDES: [f64; 4] = [0.0, 0.25, 0.5, 1.0];
pub const FIG3_TILTS: [f64; 4] = [0.0, 4.0, 8.3, 10.5];
pub const FIG3_POINTS: usize = 200;
/// Tilt grid of the fig4 preset: 0° to 12° in 0.05° steps.
pub const FIG4_POINTS: usize = 241;
pub const FIG4_MAX_TILT: f64 = 12.0;

fn preset_fig3(common: &CommonArgs, cfg: &RunConfig, mode: Option<ModeChoice>) -> Result<(), CliError> {
    let sys = cfg.plate.open_system();
    let (series, delta_omega): (Vec<(String, EnvironmentSource)>, f64) = match &cfg.source {
        SourceConfig::Mixture(m) => {
            let Some(t) = m.two_peak else {
                return Err(CliError::Config("the fig3 preset needs a `two_peak` mixture".into()));
            };
            let k = match m.frequency_unit {
                crate::config::FrequencyUnit::RadPerS => 1.0,
                crate::config::FrequencyUnit::Hz => std::f64::consts::TAU,
            };
            let mut series = Vec::new();
            for a in FIG3_AMPLITUDES {
                let mix = GaussianMixtureSpectrum::two_peak(k * t.lower_center, k * t.delta_omega, k * t.width, a)?;
                series.push((format!("a{}", label(a)), EnvironmentSource::Mixture(mix)));
            }
            (series, k * t.delta_omega)
        }
        SourceConfig::Cavity(c) => {
            let series = FIG3_TILTS
                .iter()
                .map(|&th| (format!("theta{}", label(th)), EnvironmentSource::Cavity(c.with_tilt(th))))
                .collect();
            (series, c.free_spectral_range())
        }
        SourceConfig::Spectrum(_) => {
            return Err(CliError::Config("the fig3 preset needs a mixture or cavity source".into()));
        }
    };
    let xs = path_difference_grid(delta_omega, 2.0, FIG3_POINTS, &sys)?;
    let (exact, tomo) = wanted(mode);

    let mut headers = vec!["path_difference".to_string()];
    let mut columns: Vec<Vec<f64>> = vec![xs.clone()];
    let mut details = SweepDetails { datasets: vec!["fig3.csv".into()], failures: Vec::new(), transitions: Vec::new() };
    let mut datasets = Vec::new();
    let mut k = 0u64;
    for (name, source) in &series {
        for arm in [Arm::TraceDistance, Arm::Concurrence] {
            let spec = SweepSpec {
                axis: ControlAxis::PathDifference(xs.clone()),
                source: source.clone(),
                arm,
                window: RevivalWindow::default(),
            };
            let col = format!("{name}_{}", arm_name(arm));
            if exact {
                let ds = run_plan(spec.clone(), SweepMode::Exact, sys)?;
                headers.push(format!("{col}_exact"));
                columns.push(ds.rows.iter().map(|r| r.value).collect());
                collect_failures(&col, &ds, &mut details.failures);
                datasets.push(ds);
            }
            if tomo {
                let t = cfg.tomography.config(derive_seed(cfg.seed, k));
                let ds = run_plan(spec, SweepMode::Tomographic(t), sys)?;
                headers.push(format!("{col}_tomo"));
                headers.push(format!("{col}_tomo_stderr"));
                columns.push(ds.rows.iter().map(|r| r.value).collect());
                columns.push(ds.rows.iter().map(|r| r.stderr).collect());
                collect_failures(&col, &ds, &mut details.failures);
                datasets.push(ds);
            }
            k += 1;
        }
    }
    let rows: Vec<Vec<f64>> = (0..xs.len()).map(|i| columns.iter().map(|c| c[i]).collect()).collect();
    let header_refs: Vec<&str> = headers.iter().map(String::as_str).collect();
    let mut out = StagedOutput::new(&common.out_dir)?;
    out.add_csv("fig3.csv", &header_refs, &rows)?;
    out.add_json("fig3.json", &metadata("sweep", Some("fig3"), cfg, details))?;
    out.commit()?;
    if all_failed(&datasets.iter().collect::<Vec<_>>()) {
        return Err(CliError::Numeric("every sweep point failed".into()));
    }
    Ok(())
}

fn preset_fig4(common: &CommonArgs, cfg: &RunConfig, mode: Option<ModeChoice>) -> Result<(), CliError> {
    let sys = cfg.plate.open_system();
    // A tilt scan needs a cavity; other sources fall back to the default one.
    let cavity = match &cfg.source {
        SourceConfig::Cavity(c) => *c,
        _ => CavityConfig::default(),
    };
    let thetas: Vec<f64> = (0..FIG4_POINTS).map(|i| FIG4_MAX_TILT * i as f64 / (FIG4_POINTS - 1) as f64).collect();
    let (_, tomo) = wanted(mode);
    let window = cfg.sweep.as_ref().map(|s| s.revival_window).unwrap_or_default();

    let mut headers = vec!["theta".to_string()];
    let mut columns: Vec<Vec<f64>> = vec![thetas.clone()];
    let mut details = SweepDetails { datasets: vec!["fig4.csv".into()], failures: Vec::new(), transitions: Vec::new() };
    let mut datasets = Vec::new();
    let mut scans = Vec::new();
    for (k, arm) in [Arm::TraceDistance, Arm::Concurrence].into_iter().enumerate() {
        let spec = SweepSpec {
            axis: ControlAxis::Tilt(thetas.clone()),
            source: EnvironmentSource::Cavity(cavity),
            arm,
            window,
        };
        let name = arm_name(arm);
        // N comes from the exact model in either mode.
        let exact = run_plan(spec.clone(), SweepMode::Exact, sys)?;
        headers.push(format!("n_{name}"));
        columns.push(exact.rows.iter().map(|r| r.value).collect());
        collect_failures(&format!("n_{name}"), &exact, &mut details.failures);
        let pts: Vec<(f64, f64)> = exact.rows.iter().map(|r| (r.control, r.value)).collect();
        scans.push((format!("fig4-scan-{name}.csv"), scan_rows(&pts)));
        if k == 0 {
            details.transitions = find_transitions(&pts);
        }
        datasets.push(exact);
        if tomo {
            let t = cfg.tomography.config(derive_seed(cfg.seed, k as u64));
            let ds = run_plan(spec, SweepMode::Tomographic(t), sys)?;
            headers.push(format!("{name}_change_tomo"));
            headers.push(format!("{name}_change_tomo_stderr"));
            headers.push(format!("{name}_change_exact"));
            columns.push(ds.rows.iter().map(|r| r.value).collect());
            columns.push(ds.rows.iter().map(|r| r.stderr).collect());
            columns.push(ds.rows.iter().map(|r| r.exact).collect());
            collect_failures(&format!("{name}_change"), &ds, &mut details.failures);
            datasets.push(ds);
        }
    }
    let rows: Vec<Vec<f64>> = (0..thetas.len()).map(|i| columns.iter().map(|c| c[i]).collect()).collect();
    let header_refs: Vec<&str> = headers.iter().map(String::as_str).collect();
    let mut out = StagedOutput::new(&common.out_dir)?;
    out.add_csv("fig4.csv", &header_refs, &rows)?;
    for (name, rows) in &scans {
        out.add_csv(name, &SCAN_HEADERS, rows)?;
    }
    out.add_json("fig4.json", &metadata("sweep", Some("fig4"), cfg, details))?;
    out.commit()?;
    if all_failed(&datasets.iter().collect::<Vec<_>>()) {
        return Err(CliError::Numeric("every sweep point failed".into()));
    }
    Ok(())
}
