// Copyright 2026 The dephase Authors
// SPDX-License-Identifier: Apache-2.0

//! JSON run configuration.
//!
//! Every section is optional and defaults to the reference setup: a two-peak
//! mixture with equal weights, σ = 1.8e12 rad/s and Δω = 1.6e13 rad/s behind a
//! quartz-like plate. Unknown keys are rejected at every level.

use std::f64::consts::{PI, TAU};
use std::path::{Path, PathBuf};

use dephase_core::dephasing::{OpenSystemConfig, TimeGrid};
use dephase_core::lab::{RevivalWindow, ShotNoise, TomographyConfig, DEFAULT_COUNTS, DEFAULT_RESAMPLES};
use dephase_core::measures::{AnalysisOptions, PairConstraint, SearchSettings};
use dephase_core::spectrum::{
    wavelength_to_omega, CavityConfig, GaussianMixtureSpectrum, GaussianPeak, SampledSpectrum,
};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("malformed config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("unsupported schema_version {0} (expected {SCHEMA_VERSION})")]
    Schema(u32),
    #[error("{0}")]
    Invalid(String),
}

impl From<dephase_core::Error> for ConfigError {
    fn from(e: dephase_core::Error) -> Self {
        ConfigError::Invalid(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    /// Master seed for tomography and the pair search.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub plate: PlateConfig,
    #[serde(default)]
    pub source: SourceConfig,
    /// Time window of `measure` and `kappa`.
    #[serde(default)]
    pub window: WindowConfig,
    #[serde(default)]
    pub analysis: AnalysisOptions,
    #[serde(default)]
    pub search: SearchConfig,
    #[serde(default)]
    pub tomography: TomographySettings,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            seed: 0,
            plate: PlateConfig::default(),
            source: SourceConfig::default(),
            window: WindowConfig::default(),
            analysis: AnalysisOptions::default(),
            search: SearchConfig::default(),
            tomography: TomographySettings::default(),
            sweep: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlateConfig {
    pub n_h: f64,
    /// `n_V − n_H`.
    pub delta_n: f64,
    /// Reference wavelength of the path-difference axis, m.
    pub lambda0: f64,
}

impl Default for PlateConfig {
    fn default() -> Self {
        let d = OpenSystemConfig::default();
        Self { n_h: d.n_h, delta_n: d.delta_n(), lambda0: d.lambda0 }
    }
}

impl PlateConfig {
    pub fn open_system(&self) -> OpenSystemConfig {
        OpenSystemConfig::with_birefringence(self.n_h, self.delta_n, self.lambda0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceConfig {
    Mixture(MixtureConfig),
    Cavity(CavityConfig),
    /// Sampled spectrum CSV (`omega_rad_per_s`, `density`), normalized on load.
    Spectrum(SpectrumFileConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumFileConfig {
    /// Relative paths resolve against the working directory.
    pub path: PathBuf,
}

impl SpectrumFileConfig {
    pub fn load(&self) -> Result<SampledSpectrum, ConfigError> {
        crate::io::read_spectrum(&self.path)
            .map_err(|e| ConfigError::Invalid(format!("spectrum {}: {e}", self.path.display())))
    }
}

impl Default for SourceConfig {
    fn default() -> Self {
        SourceConfig::Mixture(MixtureConfig::default())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrequencyUnit {
    /// Angular frequency.
    #[default]
    RadPerS,
    /// Ordinary frequency; multiplied by 2π on load.
    Hz,
}

impl FrequencyUnit {
    fn scale(self) -> f64 {
        match self {
            FrequencyUnit::RadPerS => 1.0,
            FrequencyUnit::Hz => TAU,
        }
    }
}

/// Either an explicit peak list or the two-peak parameterization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureConfig {
    #[serde(default)]
    pub frequency_unit: FrequencyUnit,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub peaks: Vec<PeakConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub two_peak: Option<TwoPeakConfig>,
}

impl Default for MixtureConfig {
    fn default() -> Self {
        Self { frequency_unit: FrequencyUnit::RadPerS, peaks: Vec::new(), two_peak: Some(TwoPeakConfig::default()) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeakConfig {
    pub center: f64,
    pub weight: f64,
    pub width: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TwoPeakConfig {
    pub lower_center: f64,
    pub delta_omega: f64,
    pub width: f64,
    /// Weight ratio of the upper to the lower peak.
    pub relative_amplitude: f64,
}

impl Default for TwoPeakConfig {
    fn default() -> Self {
        let delta_omega = 1.6e13;
        Self {
            lower_center: wavelength_to_omega(702e-9) - 0.5 * delta_omega,
            delta_omega,
            width: 1.8e12,
            relative_amplitude: 1.0,
        }
    }
}

impl MixtureConfig {
    pub fn build(&self) -> Result<GaussianMixtureSpectrum, ConfigError> {
        let k = self.frequency_unit.scale();
        match (&self.two_peak, self.peaks.is_empty()) {
            (Some(t), true) => Ok(GaussianMixtureSpectrum::two_peak(
                k * t.lower_center,
                k * t.delta_omega,
                k * t.width,
                t.relative_amplitude,
            )?),
            (None, false) => Ok(GaussianMixtureSpectrum::new(
                self.peaks
                    .iter()
                    .map(|p| GaussianPeak { center: k * p.center, weight: p.weight, width: k * p.width })
                    .collect(),
            )?),
            _ => Err(ConfigError::Invalid("mixture needs exactly one of `peaks` or `two_peak`".into())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WindowConfig {
    /// Window length in revival periods `2π/Δω`; falls back to `span` for a
    /// single-peak spectrum.
    pub revivals: f64,
    /// Effective time `Δn·t` used when there is no second peak, s.
    pub span: f64,
    pub points: usize,
}

impl Default for WindowConfig {
    fn default() -> Self {
        Self { revivals: 1.0, span: 2.0 * PI / 1.6e13, points: 2001 }
    }
}

impl WindowConfig {
    pub fn grid(&self, mixture: &GaussianMixtureSpectrum, cfg: &OpenSystemConfig) -> Result<TimeGrid, ConfigError> {
        if !(self.revivals > 0.0 && self.span > 0.0) || self.points < 2 {
            return Err(ConfigError::Invalid("window needs revivals > 0, span > 0 and at least 2 points".into()));
        }
        let x_max = match mixture.delta_omega() {
            Some(dw) if dw > 0.0 => self.revivals * TAU / dw,
            _ => self.span,
        };
        Ok(TimeGrid::uniform_effective(x_max, self.points, cfg)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchConfig {
    pub polar_steps: usize,
    pub azimuth_steps: usize,
    pub refine_starts: usize,
    pub max_iterations: usize,
    pub tolerance: f64,
    pub constraint: PairConstraint,
}

impl Default for SearchConfig {
    fn default() -> Self {
        let d = SearchSettings::default();
        Self {
            polar_steps: d.polar_steps,
            azimuth_steps: d.azimuth_steps,
            refine_starts: d.refine_starts,
            max_iterations: d.max_iterations,
            tolerance: d.tolerance,
            constraint: d.constraint,
        }
    }
}

impl SearchConfig {
    pub fn settings(&self, seed: u64, analysis: AnalysisOptions) -> SearchSettings {
        SearchSettings {
            polar_steps: self.polar_steps,
            azimuth_steps: self.azimuth_steps,
            refine_starts: self.refine_starts,
            max_iterations: self.max_iterations,
            tolerance: self.tolerance,
            seed,
            constraint: self.constraint,
            analysis,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TomographySettings {
    pub counts: u64,
    pub noise: ShotNoise,
    pub resamples: usize,
}

impl Default for TomographySettings {
    fn default() -> Self {
        Self { counts: DEFAULT_COUNTS, noise: ShotNoise::Multinomial, resamples: DEFAULT_RESAMPLES }
    }
}

impl TomographySettings {
    pub fn config(&self, seed: u64) -> TomographyConfig {
        TomographyConfig { counts: self.counts, seed, noise: self.noise, resamples: self.resamples }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisKind {
    /// `Δn·L/λ₀`.
    #[default]
    PathDifference,
    /// Cavity tilt, degrees.
    Tilt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArmChoice {
    #[default]
    TraceDistance,
    Concurrence,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeChoice {
    #[default]
    Exact,
    Tomographic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeConfig {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default)]
    pub axis: AxisKind,
    /// Explicit control values; exclusive with `range`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<RangeConfig>,
    #[serde(default)]
    pub arm: ArmChoice,
    #[serde(default)]
    pub mode: ModeChoice,
    #[serde(default)]
    pub revival_window: RevivalWindow,
}

impl SweepConfig {
    pub fn control_values(&self) -> Result<Vec<f64>, ConfigError> {
        match (&self.range, self.values.is_empty()) {
            (None, false) => Ok(self.values.clone()),
            (Some(r), true) => {
                if r.points == 0 {
                    return Err(ConfigError::Invalid("sweep range has no points".into()));
                }
                if r.points == 1 {
                    return Ok(vec![r.start]);
                }
                Ok((0..r.points).map(|i| r.start + (r.stop - r.start) * i as f64 / (r.points - 1) as f64).collect())
            }
            (None, true) => Err(ConfigError::Invalid("sweep control grid is empty".into())),
            (Some(_), false) => Err(ConfigError::Invalid("sweep takes either `values` or `range`, not both".into())),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Read { path: path.display().to_string(), source })?;
        Self::from_json(&text)
    }

    /// Checks everything that can be checked without running the pipeline.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(ConfigError::Schema(self.schema_version));
        }
        self.plate.open_system().validate()?;
        if !(self.plate.lambda0 > 0.0) {
            return Err(ConfigError::Invalid("plate.lambda0 must be positive".into()));
        }
        match &self.source {
            SourceConfig::Mixture(m) => {
                m.build()?;
            }
            SourceConfig::Cavity(c) => c.validate()?,
            SourceConfig::Spectrum(f) => {
                f.load()?;
            }
        }
        if self.window.points < 2 || !(self.window.revivals > 0.0) || !(self.window.span > 0.0) {
            return Err(ConfigError::Invalid("window needs revivals > 0, span > 0 and at least 2 points".into()));
        }
        if !(self.analysis.plateau_tolerance >= 0.0) || !(self.analysis.min_rise >= 0.0) {
            return Err(ConfigError::Invalid("analysis tolerances must be non-negative".into()));
        }
        self.tomography.config(self.seed).validate()?;
        if let Some(s) = &self.sweep {
            let xs = s.control_values()?;
            if xs.windows(2).any(|w| !(w[1] > w[0])) || xs.iter().any(|x| !x.is_finite()) {
                return Err(ConfigError::Invalid("sweep control grid must be finite and strictly increasing".into()));
            }
            if s.axis == AxisKind::Tilt && !matches!(self.source, SourceConfig::Cavity(_)) {
                return Err(ConfigError::Invalid("a tilt sweep needs a cavity source".into()));
            }
        }
        Ok(())
    }
}
