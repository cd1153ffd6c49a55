//! `lglab` — batch front end for the sequential-measurement laboratory.
//!
//! Five modes: exact inequality reports (`analytic`), Monte Carlo
//! experiments over beable trajectories (`simulate`), signalling scans
//! (`scan-delta0`), violation searches (`max-violation`) and the
//! bound-versus-coupling cross-check (`oracle-check`).  Every mode
//! writes a plot-ready CSV or JSON table; for a fixed configuration and
//! seed the emitted bytes are identical at any thread count.
//!
//! Exit codes: 0 success, 2 invalid configuration, 3 failed internal
//! check, 4 report I/O failure.

mod error;
mod modes;
mod settings;

use clap::{Args, Parser, Subcommand};
use error::CliError;
use settings::{FormatArg, InitialSpec, NodePolicyArg, ScenarioArg, Settings};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "lglab",
    version,
    about = "Sequential-measurement statistics of a two-level system: \
             exact inequality reports and Bell-type beable Monte Carlo",
    after_help = "Reports default to <mode>.<format> inside $LGLAB_OUT_DIR \
                  (or the working directory). Flags override values from \
                  --config; phases are radians unless --spacing-frac is used."
)]
struct Cli {
    #[command(subcommand)]
    mode: Mode,
}

/// Flags shared by every mode.
#[derive(Args, Debug, Default)]
struct CommonArgs {
    /// TOML settings file; explicit flags override its values.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Report path (default <mode>.<format> in $LGLAB_OUT_DIR or cwd).
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Report format.
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
}

/// Preparation and protocol flags.
#[derive(Args, Debug, Default)]
struct StateArgs {
    /// Initial preparation: R, L, mixed, or four comma-separated floats
    /// re(amp_R),im(amp_R),re(amp_L),im(amp_L).
    #[arg(long)]
    initial: Option<InitialSpec>,
    /// How the three contexts are gathered.
    #[arg(long, value_enum)]
    scenario: Option<ScenarioArg>,
}

/// Measurement-grid flags: either eta/spacing or an explicit trio.
#[derive(Args, Debug, Default)]
struct PhaseArgs {
    /// Preparation-to-first-measurement phase η in radians (default 0).
    #[arg(long)]
    eta: Option<f64>,
    /// Equal spacing τ₂−τ₁ = τ₃−τ₂ in radians (default 2π/3).
    #[arg(long)]
    spacing: Option<f64>,
    /// Equal spacing as a fraction of 2π (alternative to --spacing).
    #[arg(long, value_name = "FRACTION")]
    spacing_frac: Option<f64>,
    /// Explicit first measurement phase in radians (needs tau2, tau3).
    #[arg(long)]
    tau1: Option<f64>,
    /// Explicit second measurement phase in radians.
    #[arg(long)]
    tau2: Option<f64>,
    /// Explicit third measurement phase in radians.
    #[arg(long)]
    tau3: Option<f64>,
}

/// Trajectory-integrator flags.
#[derive(Args, Debug, Default)]
struct SimArgs {
    /// Trajectories per context run.
    #[arg(long, value_name = "COUNT")]
    n_trajectories: Option<usize>,
    /// Integrator phase step (default 1e-3).
    #[arg(long)]
    dt: Option<f64>,
    /// Jump-rate handling near pilot-wave nodes.
    #[arg(long, value_enum)]
    node_policy: Option<NodePolicyArg>,
    /// Per-substep jump-probability cap in (0, 1) (default 0.1).
    #[arg(long)]
    rate_cap: Option<f64>,
    /// Master seed; each trajectory derives an independent stream.
    #[arg(long)]
    seed: Option<u64>,
    /// Cap on worker threads; never affects the results, only wall time.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Mode {
    /// Exact inequality report for three measurement phases.
    Analytic {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        state: StateArgs,
        #[command(flatten)]
        phases: PhaseArgs,
    },
    /// Monte Carlo Leggett-Garg experiment over beable trajectories.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        state: StateArgs,
        #[command(flatten)]
        phases: PhaseArgs,
        #[command(flatten)]
        sim: SimArgs,
        /// Also dump per-event trajectory records (always CSV) here.
        #[arg(long, value_name = "PATH")]
        dump: Option<PathBuf>,
        /// How many trajectories the dump covers (default 10).
        #[arg(long, value_name = "COUNT")]
        dump_trajectories: Option<usize>,
    },
    /// Scan the signalling measure over η ∈ [0, 2π) at fixed spacing.
    #[command(name = "scan-delta0")]
    ScanDelta0 {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        state: StateArgs,
        /// Number of η grid points over [0, 2π) (default 12).
        #[arg(long, value_name = "COUNT")]
        eta_points: Option<usize>,
        /// Equal spacing in radians (default 2π/3).
        #[arg(long)]
        spacing: Option<f64>,
        /// Equal spacing as a fraction of 2π.
        #[arg(long, value_name = "FRACTION")]
        spacing_frac: Option<f64>,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Grid search for the spacings minimizing the Leggett-Garg form.
    MaxViolation {
        #[command(flatten)]
        common: CommonArgs,
        /// Grid resolution per axis, at least 1000 (default 2000).
        #[arg(long, value_name = "RESOLUTION")]
        grid: Option<usize>,
    },
    /// Cross-check bound verdicts against the coupling oracle.
    OracleCheck {
        #[command(flatten)]
        common: CommonArgs,
        /// Randomized instances beyond the two canonical ones.
        #[arg(long, value_name = "COUNT")]
        instances: Option<usize>,
        /// Seed for the instance generator (default 0).
        #[arg(long)]
        seed: Option<u64>,
    },
}

impl SimArgs {
    fn fill(self, settings: &mut Settings) {
        settings.n_trajectories = self.n_trajectories;
        settings.dt = self.dt;
        settings.node_policy = self.node_policy;
        settings.rate_cap = self.rate_cap;
        settings.seed = self.seed;
        settings.threads = self.threads;
    }
}

/// Collects each arm's flags into a [`Settings`] layer, merges it over
/// the optional config file, and dispatches.
fn run(cli: Cli) -> Result<(), CliError> {
    match cli.mode {
        Mode::Analytic {
            common,
            state,
            phases,
        } => {
            let flags = Settings {
                initial: state.initial,
                scenario: state.scenario,
                eta: phases.eta,
                spacing: phases.spacing,
                spacing_frac: phases.spacing_frac,
                tau1: phases.tau1,
                tau2: phases.tau2,
                tau3: phases.tau3,
                out: common.out,
                format: common.format,
                ..Settings::default()
            };
            modes::analytic(&merge(flags, common.config.as_deref())?)
        }
        Mode::Simulate {
            common,
            state,
            phases,
            sim,
            dump,
            dump_trajectories,
        } => {
            let mut flags = Settings {
                initial: state.initial,
                scenario: state.scenario,
                eta: phases.eta,
                spacing: phases.spacing,
                spacing_frac: phases.spacing_frac,
                tau1: phases.tau1,
                tau2: phases.tau2,
                tau3: phases.tau3,
                out: common.out,
                format: common.format,
                dump,
                dump_trajectories,
                ..Settings::default()
            };
            sim.fill(&mut flags);
            modes::simulate(&merge(flags, common.config.as_deref())?)
        }
        Mode::ScanDelta0 {
            common,
            state,
            eta_points,
            spacing,
            spacing_frac,
            sim,
        } => {
            let mut flags = Settings {
                initial: state.initial,
                scenario: state.scenario,
                eta_points,
                spacing,
                spacing_frac,
                out: common.out,
                format: common.format,
                ..Settings::default()
            };
            sim.fill(&mut flags);
            modes::scan_delta0(&merge(flags, common.config.as_deref())?)
        }
        Mode::MaxViolation { common, grid } => {
            let flags = Settings {
                grid,
                out: common.out,
                format: common.format,
                ..Settings::default()
            };
            modes::max_violation(&merge(flags, common.config.as_deref())?)
        }
        Mode::OracleCheck {
            common,
            instances,
            seed,
        } => {
            let flags = Settings {
                instances,
                seed,
                out: common.out,
                format: common.format,
                ..Settings::default()
            };
            modes::oracle_check(&merge(flags, common.config.as_deref())?)
        }
    }
}

fn merge(flags: Settings, config: Option<&std::path::Path>) -> Result<Settings, CliError> {
    let file = match config {
        Some(path) => Settings::load_file(path)?,
        None => Settings::default(),
    };
    Ok(flags.merged_over(file))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
