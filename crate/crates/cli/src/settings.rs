//! Run configuration: typed flag values, the TOML file schema, and the
//! flag-over-file merge with per-mode defaults.

use crate::error::CliError;
use clap::ValueEnum;
use lglab_core::beable::{BeableConfig, NodePolicy};
use lglab_core::quantum::{EnsembleState, PureState};
use lglab_core::stats::Scenario;
use num_complex::Complex64;
use serde::Deserialize;
use std::f64::consts::TAU;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

/// Environment variable naming the directory default report paths land
/// in when `--out` is not given.
pub const OUT_DIR_ENV: &str = "LGLAB_OUT_DIR";

/// The initial preparation, as named on the command line or in a config
/// file: a well eigenstate, the equal-weight mixture of the two, or an
/// explicit pure state.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(try_from = "String")]
pub enum InitialSpec {
    /// The right-well eigenstate `|R⟩`.
    Right,
    /// The left-well eigenstate `|L⟩`.
    Left,
    /// The maximally mixed ensemble.
    Mixed,
    /// A pure state from four floats
    /// `re(amp_R), im(amp_R), re(amp_L), im(amp_L)` (normalized).
    Amplitudes([f64; 4]),
}

impl InitialSpec {
    /// The ensemble this specification denotes.
    ///
    /// # Errors
    ///
    /// [`CliError::Config`] for amplitudes that cannot be normalized.
    pub fn to_ensemble(&self) -> Result<EnsembleState, CliError> {
        match self {
            InitialSpec::Right => Ok(EnsembleState::pure(PureState::right())),
            InitialSpec::Left => Ok(EnsembleState::pure(PureState::left())),
            InitialSpec::Mixed => Ok(EnsembleState::maximally_mixed()),
            InitialSpec::Amplitudes([re_r, im_r, re_l, im_l]) => {
                let state =
                    PureState::new(Complex64::new(*re_r, *im_r), Complex64::new(*re_l, *im_l))?;
                Ok(EnsembleState::pure(state))
            }
        }
    }
}

impl FromStr for InitialSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "r" | "right" => return Ok(InitialSpec::Right),
            "l" | "left" => return Ok(InitialSpec::Left),
            "mixed" => return Ok(InitialSpec::Mixed),
            _ => {}
        }
        let parts: Vec<&str> = s.split(',').collect();
        if parts.len() != 4 {
            return Err(format!(
                "initial state must be R, L, mixed, or four comma-separated floats \
                 re(amp_R),im(amp_R),re(amp_L),im(amp_L); got `{s}`"
            ));
        }
        let mut values = [0.0; 4];
        for (slot, part) in values.iter_mut().zip(&parts) {
            *slot = part
                .trim()
                .parse::<f64>()
                .map_err(|err| format!("bad amplitude component `{part}`: {err}"))?;
        }
        Ok(InitialSpec::Amplitudes(values))
    }
}

impl TryFrom<String> for InitialSpec {
    type Error = String;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        value.parse()
    }
}

impl fmt::Display for InitialSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialSpec::Right => write!(f, "R"),
            InitialSpec::Left => write!(f, "L"),
            InitialSpec::Mixed => write!(f, "mixed"),
            InitialSpec::Amplitudes([a, b, c, d]) => {
                write!(f, "pure ({a}{b:+}i, {c}{d:+}i)")
            }
        }
    }
}

/// Wraps a [`ValueEnum`] so config files accept the same spelling as the
/// command line.
macro_rules! value_enum_from_string {
    ($name:ident) => {
        impl FromStr for $name {
            type Err = String;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                <$name as ValueEnum>::from_str(s, true)
            }
        }

        impl TryFrom<String> for $name {
            type Error = String;

            fn try_from(value: String) -> Result<Self, Self::Error> {
                value.parse()
            }
        }
    };
}

/// Measurement protocol for assembling the three contexts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(try_from = "String")]
pub enum ScenarioArg {
    /// Three separate pair-context runs.
    Pairs,
    /// One `{1,3}` pair run plus one `{1,2,3}` triple run.
    TwoRuns,
}

value_enum_from_string!(ScenarioArg);

impl ScenarioArg {
    /// The core scenario this flag selects.
    pub fn to_scenario(self) -> Scenario {
        match self {
            ScenarioArg::Pairs => Scenario::SeparatePairs,
            ScenarioArg::TwoRuns => Scenario::TwoRuns,
        }
    }
}

/// Node handling of the trajectory integrator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(try_from = "String")]
pub enum NodePolicyArg {
    /// Cap the per-substep jump probability and keep the nominal step.
    Clamp,
    /// Subdivide the step near nodes until the probability is in range.
    Adaptive,
}

value_enum_from_string!(NodePolicyArg);

impl NodePolicyArg {
    /// The core policy this flag selects.
    pub fn to_policy(self) -> NodePolicy {
        match self {
            NodePolicyArg::Clamp => NodePolicy::Clamp,
            NodePolicyArg::Adaptive => NodePolicy::Adaptive,
        }
    }
}

/// Report file format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(try_from = "String")]
pub enum FormatArg {
    /// RFC 4180 CSV, floats at 17 significant digits, LF endings.
    Csv,
    /// A single JSON object with a schema-version field.
    Json,
}

value_enum_from_string!(FormatArg);

impl FormatArg {
    /// File extension for default output names.
    pub fn extension(self) -> &'static str {
        match self {
            FormatArg::Csv => "csv",
            FormatArg::Json => "json",
        }
    }
}

/// Every tunable a mode may consume, each optional so that flag values,
/// file values and built-in defaults can be layered.  One file may hold
/// settings for several modes; each mode reads its own subset.
#[derive(Debug, Default, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct Settings {
    /// Initial preparation.
    pub initial: Option<InitialSpec>,
    /// Preparation-to-first-measurement phase η (radians).
    pub eta: Option<f64>,
    /// Equal context spacing (radians).
    pub spacing: Option<f64>,
    /// Equal context spacing as a fraction of 2π.
    pub spacing_frac: Option<f64>,
    /// Explicit first measurement phase (radians).
    pub tau1: Option<f64>,
    /// Explicit second measurement phase (radians).
    pub tau2: Option<f64>,
    /// Explicit third measurement phase (radians).
    pub tau3: Option<f64>,
    /// Context-gathering protocol.
    pub scenario: Option<ScenarioArg>,
    /// Trajectories per context run.
    pub n_trajectories: Option<usize>,
    /// Integrator phase step.
    pub dt: Option<f64>,
    /// Node handling policy.
    pub node_policy: Option<NodePolicyArg>,
    /// Per-substep jump-probability cap.
    pub rate_cap: Option<f64>,
    /// Master seed.
    pub seed: Option<u64>,
    /// Worker-thread cap (never changes results).
    pub threads: Option<usize>,
    /// Report path.
    pub out: Option<PathBuf>,
    /// Report format.
    pub format: Option<FormatArg>,
    /// Grid resolution per axis for the violation search.
    pub grid: Option<usize>,
    /// Randomized instance count for the oracle cross-check.
    pub instances: Option<usize>,
    /// η grid size for the signalling scan.
    pub eta_points: Option<usize>,
    /// Path for the per-event trajectory dump.
    pub dump: Option<PathBuf>,
    /// How many trajectories the dump covers.
    pub dump_trajectories: Option<usize>,
}

impl Settings {
    /// Layers `self` (the command-line flags) over `fallback` (the
    /// config file): a flag that was given wins, field by field.
    pub fn merged_over(self, fallback: Settings) -> Settings {
        Settings {
            initial: self.initial.or(fallback.initial),
            eta: self.eta.or(fallback.eta),
            spacing: self.spacing.or(fallback.spacing),
            spacing_frac: self.spacing_frac.or(fallback.spacing_frac),
            tau1: self.tau1.or(fallback.tau1),
            tau2: self.tau2.or(fallback.tau2),
            tau3: self.tau3.or(fallback.tau3),
            scenario: self.scenario.or(fallback.scenario),
            n_trajectories: self.n_trajectories.or(fallback.n_trajectories),
            dt: self.dt.or(fallback.dt),
            node_policy: self.node_policy.or(fallback.node_policy),
            rate_cap: self.rate_cap.or(fallback.rate_cap),
            seed: self.seed.or(fallback.seed),
            threads: self.threads.or(fallback.threads),
            out: self.out.or(fallback.out),
            format: self.format.or(fallback.format),
            grid: self.grid.or(fallback.grid),
            instances: self.instances.or(fallback.instances),
            eta_points: self.eta_points.or(fallback.eta_points),
            dump: self.dump.or(fallback.dump),
            dump_trajectories: self.dump_trajectories.or(fallback.dump_trajectories),
        }
    }

    /// Reads a TOML settings file; unknown keys are rejected so typos
    /// cannot silently fall back to defaults.
    ///
    /// # Errors
    ///
    /// [`CliError::Config`] if the file is unreadable or malformed.
    pub fn load_file(path: &Path) -> Result<Settings, CliError> {
        let text = std::fs::read_to_string(path).map_err(|err| {
            CliError::Config(format!("cannot read config {}: {err}", path.display()))
        })?;
        toml::from_str(&text)
            .map_err(|err| CliError::Config(format!("config {}: {err}", path.display())))
    }

    /// The equal context spacing, from `spacing` or `spacing-frac`
    /// (default 2π/3, the maximally violating choice).
    ///
    /// # Errors
    ///
    /// [`CliError::Config`] if both spellings are given or the value is
    /// not a positive finite phase.
    pub fn resolve_spacing(&self) -> Result<f64, CliError> {
        let spacing = match (self.spacing, self.spacing_frac) {
            (Some(_), Some(_)) => {
                return Err(CliError::Config(
                    "spacing and spacing-frac are two spellings of the same setting; \
                     give only one"
                        .to_string(),
                ))
            }
            (Some(radians), None) => radians,
            (None, Some(fraction)) => fraction * TAU,
            (None, None) => TAU / 3.0,
        };
        if !spacing.is_finite() || spacing <= 0.0 {
            return Err(CliError::Config(format!(
                "spacing must be a positive finite phase, got {spacing}"
            )));
        }
        Ok(spacing)
    }

    /// The three measurement phases: either the explicit `tau1..tau3`
    /// trio, or `(η, η + spacing, η + 2·spacing)` with η defaulting
    /// to 0.
    ///
    /// # Errors
    ///
    /// [`CliError::Config`] for a partial trio or for mixing the trio
    /// with η/spacing settings.
    pub fn resolve_phases(&self) -> Result<[f64; 3], CliError> {
        let given = [self.tau1, self.tau2, self.tau3]
            .iter()
            .flatten()
            .count();
        if given > 0 {
            if given < 3 {
                return Err(CliError::Config(
                    "give all three of tau1, tau2, tau3 or none".to_string(),
                ));
            }
            if self.eta.is_some() || self.spacing.is_some() || self.spacing_frac.is_some() {
                return Err(CliError::Config(
                    "explicit tau1/tau2/tau3 conflict with eta/spacing settings".to_string(),
                ));
            }
            return Ok([
                self.tau1.expect("checked"),
                self.tau2.expect("checked"),
                self.tau3.expect("checked"),
            ]);
        }
        let spacing = self.resolve_spacing()?;
        let eta = self.eta.unwrap_or(0.0);
        Ok([eta, eta + spacing, eta + 2.0 * spacing])
    }

    /// The initial ensemble (default `|R⟩`).
    ///
    /// # Errors
    ///
    /// [`CliError::Config`] for non-normalizable amplitudes.
    pub fn resolve_initial(&self) -> Result<EnsembleState, CliError> {
        self.initial
            .clone()
            .unwrap_or(InitialSpec::Right)
            .to_ensemble()
    }

    /// The protocol (default pairs).
    pub fn resolve_scenario(&self) -> Scenario {
        self.scenario.unwrap_or(ScenarioArg::Pairs).to_scenario()
    }

    /// The validated integrator configuration (defaults: dt 1e−3,
    /// adaptive nodes, rate cap 0.1, seed 0).
    ///
    /// # Errors
    ///
    /// [`CliError::Config`] for out-of-range dt or rate cap.
    pub fn resolve_cfg(&self) -> Result<BeableConfig, CliError> {
        BeableConfig::new(
            self.dt.unwrap_or(1e-3),
            self.node_policy
                .unwrap_or(NodePolicyArg::Adaptive)
                .to_policy(),
            self.rate_cap.unwrap_or(0.1),
            self.seed.unwrap_or(0),
        )
        .map_err(Into::into)
    }

    /// The report format (default CSV).
    pub fn resolve_format(&self) -> FormatArg {
        self.format.unwrap_or(FormatArg::Csv)
    }

    /// The report path: `--out` verbatim, else `<mode>.<ext>` inside
    /// `$LGLAB_OUT_DIR` (or the working directory).
    pub fn resolve_out(&self, mode: &str) -> PathBuf {
        match &self.out {
            Some(path) => path.clone(),
            None => {
                let dir = std::env::var_os(OUT_DIR_ENV)
                    .map(PathBuf::from)
                    .unwrap_or_else(|| PathBuf::from("."));
                dir.join(format!("{mode}.{}", self.resolve_format().extension()))
            }
        }
    }

    /// Caps the rayon worker pool when `threads` is set.  Results never
    /// depend on this — trajectories own per-index RNG streams and all
    /// reductions are ordered.
    ///
    /// # Errors
    ///
    /// [`CliError::Config`] for `threads = 0` or a pool that was already
    /// configured differently.
    pub fn install_threads(&self) -> Result<(), CliError> {
        let Some(threads) = self.threads else {
            return Ok(());
        };
        if threads == 0 {
            return Err(CliError::Config("threads must be at least 1".to_string()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|err| {
                CliError::Config(format!("cannot configure {threads} worker threads: {err}"))
            })
    }
}
