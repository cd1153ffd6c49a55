//! Ensemble orchestration: run trajectory ensembles in parallel, reduce
//! them to empirical tables and correlators with standard errors, and
//! pair every estimate with its analytic prediction.
//!
//! # Determinism contract
//!
//! Every run derives one RNG stream per trajectory from
//! `(cfg.seed, salt, trajectory index)`, where the *salt* namespaces the
//! independent sub-experiments of an operation (for schedule-driven
//! operations it is the schedule's position in
//! [`EnsembleSpec::schedules`]; the fixed layouts of the other operations
//! are documented on each).  Trajectories are therefore independent of
//! scheduling order, results are collected in index order, and all
//! reductions are integer sums — so reports are **bitwise identical for a
//! fixed seed at any thread count**.
//!
//! Standard errors are i.i.d. sample-mean errors (Bessel-corrected
//! sample standard deviation over `√n`); trajectories are independent by
//! construction, so no correlation corrections are needed.

use crate::beable::{simulate_trajectory, BeableConfig, BeableTrajectory, EventKind};
use crate::error::{Error, Result};
use crate::inequalities::{modified_evaluate, CorrelatorTriple, InequalityReport};
use crate::quantum::{EnsembleState, Outcome};
use crate::stats::{self, ContextTable, MeasurementSchedule, Scenario};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// A reproducible ensemble experiment: how many trajectories, from which
/// preparation, which measurement schedules it may run, and the
/// integrator configuration (including the master seed).
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSpec {
    n_trajectories: usize,
    initial: EnsembleState,
    schedules: Vec<MeasurementSchedule>,
    cfg: BeableConfig,
}

impl EnsembleSpec {
    /// Builds a spec.
    ///
    /// # Errors
    ///
    /// [`Error::InvalidArgument`] if `n_trajectories` is zero or the
    /// configuration is invalid.
    pub fn new(
        n_trajectories: usize,
        initial: EnsembleState,
        schedules: Vec<MeasurementSchedule>,
        cfg: BeableConfig,
    ) -> Result<Self> {
        if n_trajectories == 0 {
            return Err(Error::InvalidArgument(
                "n_trajectories must be at least 1".to_string(),
            ));
        }
        cfg.validate()?;
        Ok(Self {
            n_trajectories,
            initial,
            schedules,
            cfg,
        })
    }

    /// Number of trajectories per run.
    pub fn n_trajectories(&self) -> usize {
        self.n_trajectories
    }

    /// The prepared ensemble.
    pub fn initial(&self) -> &EnsembleState {
        &self.initial
    }

    /// The schedules this spec may run (their positions define the RNG
    /// salts of [`estimate_context`] and [`conditional_context_tables`]).
    pub fn schedules(&self) -> &[MeasurementSchedule] {
        &self.schedules
    }

    /// The integrator configuration.
    pub fn cfg(&self) -> &BeableConfig {
        &self.cfg
    }
}

/// A Monte Carlo estimate with its i.i.d. sample-mean standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmpiricalEstimate {
    /// Sample mean.
    pub value: f64,
    /// Bessel-corrected sample standard deviation over `√n`; NaN when
    /// `n < 2` leaves it undefined.
    pub std_error: f64,
    /// Sample count.
    pub n: u64,
}

impl EmpiricalEstimate {
    /// Estimate of a `±1` mean from its integer sum.
    pub fn from_sign_sum(sum: i64, n: u64) -> Self {
        let value = sum as f64 / n as f64;
        let std_error = if n > 1 {
            (((1.0 - value * value) * n as f64 / (n as f64 - 1.0)) / n as f64)
                .max(0.0)
                .sqrt()
        } else {
            f64::NAN
        };
        Self {
            value,
            std_error,
            n,
        }
    }

    /// Estimate of a probability from a count of successes.
    pub fn from_count(count: u64, n: u64) -> Self {
        let value = count as f64 / n as f64;
        let std_error = if n > 1 {
            (value * (1.0 - value) / (n as f64 - 1.0)).max(0.0).sqrt()
        } else {
            f64::NAN
        };
        Self {
            value,
            std_error,
            n,
        }
    }

    /// Estimate of an integer-valued per-trajectory statistic from its
    /// sum and sum of squares.
    pub fn from_sums(sum: i64, sum_sq: i64, n: u64) -> Self {
        let n_f = n as f64;
        let value = sum as f64 / n_f;
        let std_error = if n > 1 {
            let variance = (sum_sq as f64 - n_f * value * value) / (n_f - 1.0);
            (variance.max(0.0) / n_f).sqrt()
        } else {
            f64::NAN
        };
        Self {
            value,
            std_error,
            n,
        }
    }
}

/// The independent RNG stream of trajectory `index` within the
/// sub-experiment `salt` of a run seeded with `seed`.
///
/// The stream id packs the salt above bit 40, so a run may hold up to
/// `2^40` trajectories before streams could collide.
pub fn trajectory_rng(seed: u64, salt: u32, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((u64::from(salt) << 40) | index);
    rng
}

/// Runs `spec.n_trajectories` trajectories with the given measurement
/// phases and reduces each to `map(trajectory)`, in trajectory order.
fn run_mapped<T, F>(
    spec: &EnsembleSpec,
    phases: &[f64],
    horizon: f64,
    salt: u32,
    map: F,
) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&BeableTrajectory) -> T + Sync,
{
    (0..spec.n_trajectories as u64)
        .into_par_iter()
        .map(|index| {
            let mut rng = trajectory_rng(spec.cfg.seed, salt, index);
            simulate_trajectory(&spec.initial, phases, horizon, &spec.cfg, &mut rng)
                .map(|trajectory| map(&trajectory))
        })
        .collect()
}

fn sign_i(outcome: Outcome) -> i64 {
    match outcome {
        Outcome::Plus => 1,
        Outcome::Minus => -1,
    }
}

/// The `K` measurement outcomes of a trajectory as `±1` integers.
fn measurement_signs<const K: usize>(trajectory: &BeableTrajectory) -> [i64; K] {
    let mut signs = [0i64; K];
    let mut slot = 0;
    for event in &trajectory.events {
        if event.kind == EventKind::Measurement {
            signs[slot] = sign_i(event.beable_after);
            slot += 1;
        }
    }
    debug_assert_eq!(slot, K);
    signs
}

/// An empirical context table: outcome counts, the frequency table they
/// induce, and a per-cell estimate with its standard error.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalContextTable {
    /// Frequency table (counts over `n`) in the canonical cell order.
    pub table: ContextTable,
    /// Per-cell probability estimates, in the same order.
    pub estimates: Vec<EmpiricalEstimate>,
    /// Raw outcome-tuple counts; they sum to `n` exactly.
    pub counts: Vec<u64>,
    /// Trajectories in this table.
    pub n: u64,
}

impl EmpiricalContextTable {
    fn from_counts(schedule: &MeasurementSchedule, counts: Vec<u64>, n: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument(
                "cannot build a table from zero trajectories".to_string(),
            ));
        }
        let probs: Vec<f64> = counts.iter().map(|&c| c as f64 / n as f64).collect();
        let table = ContextTable::from_probabilities(schedule.label().clone(), probs)?;
        let estimates = counts
            .iter()
            .map(|&c| EmpiricalEstimate::from_count(c, n))
            .collect();
        Ok(Self {
            table,
            estimates,
            counts,
            n,
        })
    }
}

fn schedule_salt(spec: &EnsembleSpec, schedule: &MeasurementSchedule) -> Result<u32> {
    spec.schedules
        .iter()
        .position(|candidate| candidate == schedule)
        .map(|position| position as u32)
        .ok_or_else(|| {
            Error::InvalidSchedule(format!(
                "schedule {} is not part of the ensemble spec",
                schedule.label()
            ))
        })
}

/// Runs the schedule (which must be listed in `spec.schedules`; its
/// position there is the RNG salt) and tabulates outcome frequencies.
///
/// # Errors
///
/// [`Error::InvalidSchedule`] if the schedule is not listed in the
/// ensemble spec or its phases are invalid for simulation (e.g.
/// negative).
pub fn estimate_context(
    spec: &EnsembleSpec,
    schedule: &MeasurementSchedule,
) -> Result<EmpiricalContextTable> {
    let salt = schedule_salt(spec, schedule)?;
    let len = schedule.len();
    let horizon = schedule.phases()[len - 1];
    let codes = run_mapped(spec, schedule.phases(), horizon, salt, |trajectory| {
        let mut code = 0usize;
        for event in &trajectory.events {
            if event.kind == EventKind::Measurement {
                code = (code << 1) | event.beable_after.index();
            }
        }
        code
    })?;
    let mut counts = vec![0u64; 1 << len];
    for code in codes {
        counts[code] += 1;
    }
    EmpiricalContextTable::from_counts(schedule, counts, spec.n_trajectories as u64)
}

/// [`estimate_context`] split by the trajectory's initial beable value —
/// the statistics a hidden-variable realist would call "conditional on
/// the initial state of the system".
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalTables {
    /// Trajectories whose beable started at `+1`.
    pub plus: EmpiricalContextTable,
    /// Trajectories whose beable started at `−1`.
    pub minus: EmpiricalContextTable,
    /// All trajectories together.
    pub pooled: EmpiricalContextTable,
}

/// Runs the schedule once and tabulates outcomes separately for each
/// initial beable value, plus pooled.  The salt convention matches
/// [`estimate_context`].
///
/// # Errors
///
/// As for [`estimate_context`], plus [`Error::InvalidArgument`] when one
/// conditioning group ends up empty (no table can be formed for it).
pub fn conditional_context_tables(
    spec: &EnsembleSpec,
    schedule: &MeasurementSchedule,
) -> Result<ConditionalTables> {
    let salt = schedule_salt(spec, schedule)?;
    let len = schedule.len();
    let horizon = schedule.phases()[len - 1];
    let records = run_mapped(spec, schedule.phases(), horizon, salt, |trajectory| {
        let mut code = 0usize;
        for event in &trajectory.events {
            if event.kind == EventKind::Measurement {
                code = (code << 1) | event.beable_after.index();
            }
        }
        (trajectory.initial_beable, code)
    })?;

    let cells = 1usize << len;
    let mut plus_counts = vec![0u64; cells];
    let mut minus_counts = vec![0u64; cells];
    let (mut n_plus, mut n_minus) = (0u64, 0u64);
    for (beable, code) in records {
        match beable {
            Outcome::Plus => {
                plus_counts[code] += 1;
                n_plus += 1;
            }
            Outcome::Minus => {
                minus_counts[code] += 1;
                n_minus += 1;
            }
        }
    }
    if n_plus == 0 || n_minus == 0 {
        return Err(Error::InvalidArgument(
            "a conditioning group is empty; increase n_trajectories".to_string(),
        ));
    }
    let pooled_counts: Vec<u64> = plus_counts
        .iter()
        .zip(&minus_counts)
        .map(|(a, b)| a + b)
        .collect();
    Ok(ConditionalTables {
        plus: EmpiricalContextTable::from_counts(schedule, plus_counts, n_plus)?,
        minus: EmpiricalContextTable::from_counts(schedule, minus_counts, n_minus)?,
        pooled: EmpiricalContextTable::from_counts(
            schedule,
            pooled_counts,
            spec.n_trajectories as u64,
        )?,
    })
}

/// One pair-context run reduced to the integer sums its statistics need.
struct PairRun {
    sum_a: i64,
    sum_b: i64,
    sum_ab: i64,
    n: u64,
}

impl PairRun {
    fn run(spec: &EnsembleSpec, tau_a: f64, tau_b: f64, salt: u32) -> Result<Self> {
        let signs = run_mapped(
            spec,
            &[tau_a, tau_b],
            tau_b,
            salt,
            measurement_signs::<2>,
        )?;
        let (mut sum_a, mut sum_b, mut sum_ab) = (0i64, 0i64, 0i64);
        for [a, b] in signs {
            sum_a += a;
            sum_b += b;
            sum_ab += a * b;
        }
        Ok(Self {
            sum_a,
            sum_b,
            sum_ab,
            n: spec.n_trajectories as u64,
        })
    }

    fn first(&self) -> EmpiricalEstimate {
        EmpiricalEstimate::from_sign_sum(self.sum_a, self.n)
    }

    fn second(&self) -> EmpiricalEstimate {
        EmpiricalEstimate::from_sign_sum(self.sum_b, self.n)
    }

    fn correlator(&self) -> EmpiricalEstimate {
        EmpiricalEstimate::from_sign_sum(self.sum_ab, self.n)
    }
}

/// The triple-context run of the two-runs scenario, reduced likewise.
struct TripleRun {
    sum_q2: i64,
    sum_q3: i64,
    sum_q1q2: i64,
    sum_q2q3: i64,
    sum_x: i64,
    sum_x_sq: i64,
    n: u64,
}

impl TripleRun {
    fn run(spec: &EnsembleSpec, taus: [f64; 3], salt: u32) -> Result<Self> {
        let signs = run_mapped(spec, &taus, taus[2], salt, measurement_signs::<3>)?;
        let mut sums = Self {
            sum_q2: 0,
            sum_q3: 0,
            sum_q1q2: 0,
            sum_q2q3: 0,
            sum_x: 0,
            sum_x_sq: 0,
            n: spec.n_trajectories as u64,
        };
        for [q1, q2, q3] in signs {
            let x = q1 * q2 + q2 * q3;
            sums.sum_q2 += q2;
            sums.sum_q3 += q3;
            sums.sum_q1q2 += q1 * q2;
            sums.sum_q2q3 += q2 * q3;
            sums.sum_x += x;
            sums.sum_x_sq += x * x;
        }
        Ok(sums)
    }
}

fn quadrature(a: f64, b: f64) -> f64 {
    (a * a + b * b).sqrt()
}

/// Everything an empirical Leggett–Garg experiment produces.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalLgReport {
    /// How the contexts were gathered.
    pub scenario: Scenario,
    /// The three measurement phases.
    pub taus: [f64; 3],
    /// Empirical `⟨Q₁Q₂⟩`.
    pub c12: EmpiricalEstimate,
    /// Empirical `⟨Q₂Q₃⟩`.
    pub c23: EmpiricalEstimate,
    /// Empirical `⟨Q₁Q₃⟩`.
    pub c13: EmpiricalEstimate,
    /// Empirical signalling measure (standard error by uncorrelated
    /// first-order propagation through the absolute values).
    pub delta0: EmpiricalEstimate,
    /// Empirical `1 + c12 + c23 + c13`.
    pub lg_lhs: EmpiricalEstimate,
    /// Inequality verdicts evaluated on the empirical correlators and
    /// empirical Δ₀.
    pub report: InequalityReport,
    /// The analytic counterpart, when the phases are strictly increasing
    /// (the static limit has no analytic signalling grid).
    pub analytic: Option<InequalityReport>,
}

/// Runs a full Leggett–Garg experiment at phases `tau1 ≤ tau2 ≤ tau3`.
///
/// Under [`Scenario::SeparatePairs`] three pair contexts are run with
/// RNG salts 0 (`{1,2}`), 1 (`{2,3}`), 2 (`{1,3}`); under
/// [`Scenario::TwoRuns`] the `{1,3}` pair (salt 0) and the `{1,2,3}`
/// triple (salt 1) are run, with `c12`, `c23` extracted from the triple.
/// The two-runs signalling terms compare the measured `⟨Q₂⟩`, `⟨Q₃⟩`
/// against the identically-zero marginals a maximally-mixed reference
/// run would have, so no third run is needed.
///
/// Equal phases are allowed (repeated faithful measurements agree, so
/// the static limit returns `lg_lhs = 4` exactly).
///
/// # Errors
///
/// [`Error::PhaseOrder`] / [`Error::InvalidSchedule`] for decreasing,
/// negative or non-finite phases.
pub fn estimate_lg_experiment(
    spec: &EnsembleSpec,
    tau1: f64,
    tau2: f64,
    tau3: f64,
    scenario: Scenario,
) -> Result<EmpiricalLgReport> {
    for tau in [tau1, tau2, tau3] {
        if !tau.is_finite() {
            return Err(Error::NonFinitePhase(tau));
        }
    }
    if tau1 < 0.0 {
        return Err(Error::InvalidSchedule(format!(
            "trajectories start at phase 0; got tau1 = {tau1}"
        )));
    }
    for (earlier, later) in [(tau1, tau2), (tau2, tau3)] {
        if earlier > later {
            return Err(Error::PhaseOrder { earlier, later });
        }
    }

    let (c12, c23, c13, delta0, lg_lhs) = match scenario {
        Scenario::SeparatePairs => {
            let run12 = PairRun::run(spec, tau1, tau2, 0)?;
            let run23 = PairRun::run(spec, tau2, tau3, 1)?;
            let run13 = PairRun::run(spec, tau1, tau3, 2)?;

            let (c12, c23, c13) = (run12.correlator(), run23.correlator(), run13.correlator());
            let lhs = EmpiricalEstimate {
                value: 1.0 + c12.value + c23.value + c13.value,
                std_error: quadrature(quadrature(c12.std_error, c23.std_error), c13.std_error),
                n: spec.n_trajectories as u64,
            };

            let (m12b, m23a) = (run12.second(), run23.first());
            let (m13b, m23b) = (run13.second(), run23.second());
            let term_q2 = m12b.value - m23a.value;
            let term_q3 = m13b.value - m23b.value;
            let delta0 = EmpiricalEstimate {
                value: 0.5 * (term_q2.abs() + term_q3.abs()),
                std_error: 0.5
                    * quadrature(
                        quadrature(m12b.std_error, m23a.std_error),
                        quadrature(m13b.std_error, m23b.std_error),
                    ),
                n: spec.n_trajectories as u64,
            };
            (c12, c23, c13, delta0, lhs)
        }
        Scenario::TwoRuns => {
            let run13 = PairRun::run(spec, tau1, tau3, 0)?;
            let triple = TripleRun::run(spec, [tau1, tau2, tau3], 1)?;

            let c12 = EmpiricalEstimate::from_sign_sum(triple.sum_q1q2, triple.n);
            let c23 = EmpiricalEstimate::from_sign_sum(triple.sum_q2q3, triple.n);
            let c13 = run13.correlator();
            let x = EmpiricalEstimate::from_sums(triple.sum_x, triple.sum_x_sq, triple.n);
            let lhs = EmpiricalEstimate {
                value: 1.0 + x.value + c13.value,
                std_error: quadrature(x.std_error, c13.std_error),
                n: spec.n_trajectories as u64,
            };

            // The maximally-mixed reference marginals are identically
            // zero by symmetry, so only the measured side fluctuates.
            let m2 = EmpiricalEstimate::from_sign_sum(triple.sum_q2, triple.n);
            let m3 = run13.second();
            let delta0 = EmpiricalEstimate {
                value: 0.5 * (m2.value.abs() + m3.value.abs()),
                std_error: 0.5 * quadrature(m2.std_error, m3.std_error),
                n: spec.n_trajectories as u64,
            };
            (c12, c23, c13, delta0, lhs)
        }
    };

    let triple = CorrelatorTriple::new(c12.value, c23.value, c13.value)?;
    let report = modified_evaluate(&triple, delta0.value)?;
    let analytic = if tau1 < tau2 && tau2 < tau3 {
        let analytic_triple = CorrelatorTriple::from_spacings(tau2 - tau1, tau3 - tau2)?;
        let analytic_delta0 = stats::delta0(&spec.initial, tau1, tau2, tau3, scenario)?;
        Some(modified_evaluate(&analytic_triple, analytic_delta0.delta0)?)
    } else {
        None
    };

    Ok(EmpiricalLgReport {
        scenario,
        taus: [tau1, tau2, tau3],
        c12,
        c23,
        c13,
        delta0,
        lg_lhs,
        report,
        analytic,
    })
}

/// One grid point of a signalling scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignallingScanRow {
    /// Preparation-to-first-measurement phase `η = τ₁ − τ₀`.
    pub eta: f64,
    /// Analytic Δ₀ at this η.
    pub analytic: f64,
    /// Empirical Δ₀, absent in analytic-only scans.
    pub empirical: Option<EmpiricalEstimate>,
}

/// A Δ₀-versus-η scan at fixed spacing.
#[derive(Debug, Clone, PartialEq)]
pub struct SignallingScan {
    /// How the `{2,3}` reference statistics are defined.
    pub scenario: Scenario,
    /// The fixed spacing `τ₂ − τ₁ = τ₃ − τ₂`.
    pub spacing: f64,
    /// One row per grid point, in grid order.
    pub rows: Vec<SignallingScanRow>,
    /// Largest `|empirical − analytic| / std_error` over the grid; absent
    /// when nothing empirical was computed.
    pub max_deviation_se: Option<f64>,
}

fn validate_scan_grid(etas: &[f64], spacing: f64) -> Result<()> {
    if etas.is_empty() {
        return Err(Error::InvalidArgument("the η grid is empty".to_string()));
    }
    if !spacing.is_finite() || spacing <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "spacing must be finite and positive, got {spacing}"
        )));
    }
    for &eta in etas {
        if !eta.is_finite() || eta < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "η values must be finite and non-negative, got {eta}"
            )));
        }
    }
    Ok(())
}

/// The analytic half of a scan: Δ₀ at each `η` for measurements at
/// `(η, η + spacing, η + 2·spacing)` from the given preparation.
///
/// # Errors
///
/// [`Error::InvalidArgument`] for an empty grid, non-positive spacing or
/// invalid η values.
pub fn analytic_signalling_scan(
    initial: &EnsembleState,
    etas: &[f64],
    spacing: f64,
    scenario: Scenario,
) -> Result<SignallingScan> {
    validate_scan_grid(etas, spacing)?;
    let rows = etas
        .iter()
        .map(|&eta| {
            let report = stats::delta0(
                initial,
                eta,
                eta + spacing,
                eta + 2.0 * spacing,
                scenario,
            )?;
            Ok(SignallingScanRow {
                eta,
                analytic: report.delta0,
                empirical: None,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SignallingScan {
        scenario,
        spacing,
        rows,
        max_deviation_se: None,
    })
}

/// A full scan: the analytic Δ₀ curve plus its Monte Carlo estimate at
/// every grid point.
///
/// Grid point `i` uses RNG salts `4i`, `4i + 1`, `4i + 2` for its
/// (up to three) context runs, so rows are statistically independent.
///
/// # Errors
///
/// As for [`analytic_signalling_scan`].
pub fn signalling_scan(
    spec: &EnsembleSpec,
    etas: &[f64],
    spacing: f64,
    scenario: Scenario,
) -> Result<SignallingScan> {
    validate_scan_grid(etas, spacing)?;
    let mut rows = Vec::with_capacity(etas.len());
    for (i, &eta) in etas.iter().enumerate() {
        let salt = 4 * i as u32;
        let (tau1, tau2, tau3) = (eta, eta + spacing, eta + 2.0 * spacing);
        let empirical = match scenario {
            Scenario::SeparatePairs => {
                let run12 = PairRun::run(spec, tau1, tau2, salt)?;
                let run23 = PairRun::run(spec, tau2, tau3, salt + 1)?;
                let run13 = PairRun::run(spec, tau1, tau3, salt + 2)?;
                let (m12b, m23a) = (run12.second(), run23.first());
                let (m13b, m23b) = (run13.second(), run23.second());
                EmpiricalEstimate {
                    value: 0.5
                        * ((m12b.value - m23a.value).abs() + (m13b.value - m23b.value).abs()),
                    std_error: 0.5
                        * quadrature(
                            quadrature(m12b.std_error, m23a.std_error),
                            quadrature(m13b.std_error, m23b.std_error),
                        ),
                    n: spec.n_trajectories as u64,
                }
            }
            Scenario::TwoRuns => {
                let run13 = PairRun::run(spec, tau1, tau3, salt)?;
                let triple = TripleRun::run(spec, [tau1, tau2, tau3], salt + 1)?;
                let m2 = EmpiricalEstimate::from_sign_sum(triple.sum_q2, triple.n);
                let m3 = run13.second();
                EmpiricalEstimate {
                    value: 0.5 * (m2.value.abs() + m3.value.abs()),
                    std_error: 0.5 * quadrature(m2.std_error, m3.std_error),
                    n: spec.n_trajectories as u64,
                }
            }
        };
        let analytic = stats::delta0(&spec.initial, tau1, tau2, tau3, scenario)?.delta0;
        rows.push(SignallingScanRow {
            eta,
            analytic,
            empirical: Some(empirical),
        });
    }

    let max_deviation_se = rows
        .iter()
        .filter_map(|row| {
            row.empirical.map(|estimate| {
                let deviation = (estimate.value - row.analytic).abs();
                if deviation == 0.0 {
                    0.0
                } else {
                    deviation / estimate.std_error
                }
            })
        })
        .fold(None, |acc: Option<f64>, dev| {
            Some(acc.map_or(dev, |a| a.max(dev)))
        });
    Ok(SignallingScan {
        scenario,
        spacing,
        rows,
        max_deviation_se,
    })
}

/// Empirical occupation `P(beable = −1)` at each checkpoint, from
/// measurement-free trajectories (RNG salt 0).  The analytic counterpart
/// for a `|R⟩` start is `sin²(τ/2)` — equivariance in its rawest form.
///
/// # Errors
///
/// [`Error::InvalidArgument`] for more than 64 checkpoints or
/// checkpoints outside `[0, horizon]`.
pub fn occupation_profile(
    spec: &EnsembleSpec,
    checkpoints: &[f64],
    horizon: f64,
) -> Result<Vec<EmpiricalEstimate>> {
    if checkpoints.len() > 64 {
        return Err(Error::InvalidArgument(format!(
            "at most 64 checkpoints are supported, got {}",
            checkpoints.len()
        )));
    }
    for &tau in checkpoints {
        if !tau.is_finite() || tau < 0.0 || tau > horizon {
            return Err(Error::InvalidArgument(format!(
                "checkpoint {tau} lies outside [0, {horizon}]"
            )));
        }
    }
    let masks = run_mapped(spec, &[], horizon, 0, |trajectory| {
        let mut mask = 0u64;
        for (bit, &tau) in checkpoints.iter().enumerate() {
            if trajectory.beable_at(tau) == Outcome::Minus {
                mask |= 1 << bit;
            }
        }
        mask
    })?;
    let mut counts = vec![0u64; checkpoints.len()];
    for mask in masks {
        for (bit, count) in counts.iter_mut().enumerate() {
            *count += (mask >> bit) & 1;
        }
    }
    let n = spec.n_trajectories as u64;
    Ok(counts
        .into_iter()
        .map(|count| EmpiricalEstimate::from_count(count, n))
        .collect())
}

/// Correlators of undisturbed time slices (no measurements performed).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeSliceLg {
    /// The three slice phases.
    pub taus: [f64; 3],
    /// `⟨Q(τ₁)Q(τ₂)⟩` of the free process.
    pub c12: EmpiricalEstimate,
    /// `⟨Q(τ₂)Q(τ₃)⟩` of the free process.
    pub c23: EmpiricalEstimate,
    /// `⟨Q(τ₁)Q(τ₃)⟩` of the free process.
    pub c13: EmpiricalEstimate,
    /// `1 + c12 + c23 + c13`, with a per-trajectory standard error.
    pub lg_lhs: EmpiricalEstimate,
}

/// Reads the beable at three phases of measurement-free trajectories
/// (RNG salt 0) and evaluates the Leggett–Garg combination.  Because the
/// undisturbed process has a joint distribution over all slices by
/// construction, the result must satisfy `lg_lhs ≥ 0` up to noise.
///
/// # Errors
///
/// [`Error::InvalidArgument`] for non-finite, negative or decreasing
/// phases.
pub fn time_slice_lg(
    spec: &EnsembleSpec,
    tau1: f64,
    tau2: f64,
    tau3: f64,
) -> Result<TimeSliceLg> {
    if !(tau1.is_finite() && tau2.is_finite() && tau3.is_finite())
        || tau1 < 0.0
        || tau1 > tau2
        || tau2 > tau3
    {
        return Err(Error::InvalidArgument(format!(
            "slice phases must be finite, non-negative and non-decreasing, got ({tau1}, {tau2}, {tau3})"
        )));
    }
    let slices = run_mapped(spec, &[], tau3, 0, |trajectory| {
        [
            sign_i(trajectory.beable_at(tau1)),
            sign_i(trajectory.beable_at(tau2)),
            sign_i(trajectory.beable_at(tau3)),
        ]
    })?;
    let (mut s12, mut s23, mut s13, mut sx, mut sx_sq) = (0i64, 0i64, 0i64, 0i64, 0i64);
    for [q1, q2, q3] in slices {
        let x = q1 * q2 + q2 * q3 + q1 * q3;
        s12 += q1 * q2;
        s23 += q2 * q3;
        s13 += q1 * q3;
        sx += x;
        sx_sq += x * x;
    }
    let n = spec.n_trajectories as u64;
    let x = EmpiricalEstimate::from_sums(sx, sx_sq, n);
    Ok(TimeSliceLg {
        taus: [tau1, tau2, tau3],
        c12: EmpiricalEstimate::from_sign_sum(s12, n),
        c23: EmpiricalEstimate::from_sign_sum(s23, n),
        c13: EmpiricalEstimate::from_sign_sum(s13, n),
        lg_lhs: EmpiricalEstimate {
            value: 1.0 + x.value,
            std_error: x.std_error,
            n,
        },
    })
}

/// Empirical invasiveness of a measurement, with its analytic value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvasivenessReport {
    /// Phase of the intervening measurement.
    pub tau_i: f64,
    /// Phase of the probed measurement.
    pub tau_k: f64,
    /// Empirical total-variation distance between the probed outcome
    /// distributions with and without the intervening measurement.
    pub tv: EmpiricalEstimate,
    /// The analytic distance ([`stats::noninvasiveness_residual`]).
    pub analytic: f64,
}

/// Measures how much an intervening measurement at `tau_i` disturbs the
/// outcome distribution at `tau_k`: one run with both measurements (RNG
/// salt 0) and one with only the later (salt 1).
///
/// # Errors
///
/// [`Error::PhaseOrder`] / [`Error::NonFinitePhase`] /
/// [`Error::InvalidSchedule`] for invalid phases.
pub fn invasiveness_estimate(
    spec: &EnsembleSpec,
    tau_i: f64,
    tau_k: f64,
) -> Result<InvasivenessReport> {
    let analytic = stats::noninvasiveness_residual(&spec.initial, tau_i, tau_k)?;
    if tau_i < 0.0 {
        return Err(Error::InvalidSchedule(format!(
            "trajectories start at phase 0; got tau_i = {tau_i}"
        )));
    }
    let n = spec.n_trajectories as u64;
    let measured = run_mapped(spec, &[tau_i, tau_k], tau_k, 0, |trajectory| {
        u64::from(measurement_signs::<2>(trajectory)[1] == 1)
    })?
    .into_iter()
    .sum::<u64>();
    let unmeasured = run_mapped(spec, &[tau_k], tau_k, 1, |trajectory| {
        u64::from(measurement_signs::<1>(trajectory)[0] == 1)
    })?
    .into_iter()
    .sum::<u64>();

    let p_measured = EmpiricalEstimate::from_count(measured, n);
    let p_unmeasured = EmpiricalEstimate::from_count(unmeasured, n);
    // Two outcomes, so the total-variation distance is just the
    // difference of the `+1` probabilities.
    Ok(InvasivenessReport {
        tau_i,
        tau_k,
        tv: EmpiricalEstimate {
            value: (p_measured.value - p_unmeasured.value).abs(),
            std_error: quadrature(p_measured.std_error, p_unmeasured.std_error),
            n,
        },
        analytic,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beable::NodePolicy;
    use crate::quantum::PureState;
    use crate::stats::ContextLabel;
    use approx::assert_abs_diff_eq;
    use rand::Rng;
    use std::f64::consts::FRAC_PI_3;

    const SPACING: f64 = 2.0 * FRAC_PI_3;

    fn fast_cfg(seed: u64) -> BeableConfig {
        BeableConfig::new(2e-3, NodePolicy::Adaptive, 0.1, seed).unwrap()
    }

    fn within(estimate: &EmpiricalEstimate, target: f64, sigmas: f64) {
        let distance = (estimate.value - target).abs();
        assert!(
            distance <= sigmas * estimate.std_error.max(1e-12),
            "estimate {} ± {} is {} standard errors from {}",
            estimate.value,
            estimate.std_error,
            distance / estimate.std_error,
            target
        );
    }

    #[test]
    fn trajectory_streams_are_independent_and_reproducible() {
        let mut a = trajectory_rng(7, 3, 41);
        let mut b = trajectory_rng(7, 3, 41);
        assert_eq!(a.gen::<u64>(), b.gen::<u64>());

        let mut c = trajectory_rng(7, 3, 42);
        let mut d = trajectory_rng(7, 4, 41);
        let mut e = trajectory_rng(8, 3, 41);
        let reference = trajectory_rng(7, 3, 41).gen::<u64>();
        assert_ne!(c.gen::<u64>(), reference);
        assert_ne!(d.gen::<u64>(), reference);
        assert_ne!(e.gen::<u64>(), reference);
    }

    #[test]
    fn estimate_context_is_exact_for_a_deterministic_outcome() {
        let schedule =
            MeasurementSchedule::new(ContextLabel::new(&[1]).unwrap(), vec![0.0]).unwrap();
        let spec = EnsembleSpec::new(
            200,
            EnsembleState::pure(PureState::right()),
            vec![schedule.clone()],
            fast_cfg(1),
        )
        .unwrap();
        let empirical = estimate_context(&spec, &schedule).unwrap();
        // Canonical order is (−1) then (+1).
        assert_eq!(empirical.counts, vec![0, 200]);
        assert_eq!(empirical.estimates[1].value, 1.0);
        assert_eq!(empirical.table.probability(&[Outcome::Plus]), 1.0);
    }

    #[test]
    fn estimate_context_matches_the_born_rule() {
        let schedule =
            MeasurementSchedule::new(ContextLabel::new(&[1]).unwrap(), vec![SPACING]).unwrap();
        let spec = EnsembleSpec::new(
            4000,
            EnsembleState::pure(PureState::right()),
            vec![schedule.clone()],
            fast_cfg(2),
        )
        .unwrap();
        let empirical = estimate_context(&spec, &schedule).unwrap();
        within(&empirical.estimates[0], 0.75, 3.0);
        assert_eq!(empirical.counts.iter().sum::<u64>(), 4000);
    }

    #[test]
    fn unknown_schedules_are_rejected() {
        let listed =
            MeasurementSchedule::new(ContextLabel::new(&[1]).unwrap(), vec![1.0]).unwrap();
        let other =
            MeasurementSchedule::new(ContextLabel::new(&[2]).unwrap(), vec![2.0]).unwrap();
        let spec = EnsembleSpec::new(
            10,
            EnsembleState::pure(PureState::right()),
            vec![listed],
            fast_cfg(0),
        )
        .unwrap();
        assert!(estimate_context(&spec, &other).is_err());
    }

    #[test]
    fn static_limit_gives_the_algebraic_maximum_exactly() {
        let spec = EnsembleSpec::new(
            500,
            EnsembleState::maximally_mixed(),
            vec![],
            fast_cfg(3),
        )
        .unwrap();
        for scenario in [Scenario::SeparatePairs, Scenario::TwoRuns] {
            let report = estimate_lg_experiment(&spec, 1.0, 1.0, 1.0, scenario).unwrap();
            assert_eq!(report.lg_lhs.value, 4.0);
            assert_eq!(report.c12.value, 1.0);
            assert!(report.analytic.is_none());
        }
    }

    #[test]
    fn pairs_experiment_reproduces_the_maximal_violation() {
        let spec = EnsembleSpec::new(
            3000,
            EnsembleState::pure(PureState::right()),
            vec![],
            fast_cfg(4),
        )
        .unwrap();
        let report = estimate_lg_experiment(
            &spec,
            0.0,
            SPACING,
            2.0 * SPACING,
            Scenario::SeparatePairs,
        )
        .unwrap();
        within(&report.lg_lhs, -0.5, 3.5);
        within(&report.c12, -0.5, 3.5);
        within(&report.delta0, 0.375, 3.5);
        let analytic = report.analytic.unwrap();
        assert_abs_diff_eq!(analytic.lg_lhs, -0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(analytic.delta0, 0.375, epsilon = 1e-12);
    }

    #[test]
    fn two_runs_experiment_agrees_with_its_analytic_signalling() {
        let spec = EnsembleSpec::new(
            3000,
            EnsembleState::pure(PureState::right()),
            vec![],
            fast_cfg(5),
        )
        .unwrap();
        let report =
            estimate_lg_experiment(&spec, 0.0, SPACING, 2.0 * SPACING, Scenario::TwoRuns)
                .unwrap();
        within(&report.lg_lhs, -0.5, 3.5);
        // Two-runs Δ₀ at η = 0 is ½|cos 0| = ½.
        within(&report.delta0, 0.5, 3.5);
        assert_abs_diff_eq!(report.analytic.unwrap().delta0, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn experiments_are_bitwise_reproducible() {
        let spec = EnsembleSpec::new(
            400,
            EnsembleState::pure(PureState::right()),
            vec![],
            fast_cfg(6),
        )
        .unwrap();
        let a = estimate_lg_experiment(&spec, 0.2, 1.0, 2.0, Scenario::SeparatePairs).unwrap();
        let b = estimate_lg_experiment(&spec, 0.2, 1.0, 2.0, Scenario::SeparatePairs).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn occupation_profile_follows_equivariance() {
        let spec = EnsembleSpec::new(
            3000,
            EnsembleState::pure(PureState::right()),
            vec![],
            fast_cfg(7),
        )
        .unwrap();
        let checkpoints = [0.0, 1.0, 2.0, std::f64::consts::PI];
        let profile = occupation_profile(&spec, &checkpoints, std::f64::consts::PI).unwrap();
        assert_eq!(profile[0].value, 0.0);
        for (estimate, tau) in profile.iter().zip(checkpoints) {
            within(estimate, (0.5 * tau).sin().powi(2), 4.0);
        }
        // Everything has crossed at the node.
        assert!(profile[3].value >= 0.999);
        assert!(occupation_profile(&spec, &[5.0], 1.0).is_err());
    }

    #[test]
    fn undisturbed_slices_respect_macrorealism() {
        let spec = EnsembleSpec::new(
            3000,
            EnsembleState::pure(PureState::right()),
            vec![],
            fast_cfg(8),
        )
        .unwrap();
        let slices = time_slice_lg(&spec, 0.0, SPACING, 2.0 * SPACING).unwrap();
        // Free slices give 1 − ½ − ½ + ¼ = ¼ here (the node at π makes
        // the two later slices conditionally independent).
        within(&slices.lg_lhs, 0.25, 3.5);
        within(&slices.c12, -0.5, 3.5);
        assert!(slices.lg_lhs.value + 3.0 * slices.lg_lhs.std_error >= 0.0);
    }

    #[test]
    fn invasiveness_matches_the_analytic_residual() {
        let spec = EnsembleSpec::new(
            3000,
            EnsembleState::pure(PureState::right()),
            vec![],
            fast_cfg(9),
        )
        .unwrap();
        let report = invasiveness_estimate(
            &spec,
            std::f64::consts::FRAC_PI_2,
            std::f64::consts::PI,
        )
        .unwrap();
        assert_abs_diff_eq!(report.analytic, 0.5, epsilon = 1e-12);
        within(&report.tv, 0.5, 3.5);
    }

    #[test]
    fn conditional_tables_resolve_the_mixture() {
        let schedule =
            MeasurementSchedule::new(ContextLabel::new(&[1]).unwrap(), vec![SPACING]).unwrap();
        let spec = EnsembleSpec::new(
            4000,
            EnsembleState::maximally_mixed(),
            vec![schedule.clone()],
            fast_cfg(10),
        )
        .unwrap();
        let tables = conditional_context_tables(&spec, &schedule).unwrap();
        // Conditioned on the initial beable the half-angle law reappears;
        // pooled, the marginals are flat.
        within(&tables.plus.estimates[1], 0.25, 3.5);
        within(&tables.minus.estimates[1], 0.75, 3.5);
        within(&tables.pooled.estimates[1], 0.5, 3.5);
        assert_eq!(tables.plus.n + tables.minus.n, tables.pooled.n);
    }

    #[test]
    fn scans_compare_empirical_and_analytic_signalling() {
        let spec = EnsembleSpec::new(
            500,
            EnsembleState::pure(PureState::right()),
            vec![],
            fast_cfg(11),
        )
        .unwrap();
        let etas = [0.0, FRAC_PI_3, 1.5];
        let scan = signalling_scan(&spec, &etas, SPACING, Scenario::SeparatePairs).unwrap();
        assert_eq!(scan.rows.len(), 3);
        assert_abs_diff_eq!(scan.rows[0].analytic, 0.375, epsilon = 1e-12);
        assert_abs_diff_eq!(scan.rows[1].analytic, 0.75, epsilon = 1e-12);
        // |·| folding biases each term by at most ~one standard error,
        // so a generous cap still catches real disagreement.
        assert!(scan.max_deviation_se.unwrap() < 6.0);

        let analytic =
            analytic_signalling_scan(spec.initial(), &etas, SPACING, Scenario::SeparatePairs)
                .unwrap();
        assert!(analytic.rows.iter().all(|row| row.empirical.is_none()));
        assert_eq!(analytic.max_deviation_se, None);
        assert!(signalling_scan(&spec, &[], SPACING, Scenario::SeparatePairs).is_err());
        assert!(signalling_scan(&spec, &etas, 0.0, Scenario::SeparatePairs).is_err());
    }

    #[test]
    fn estimate_helpers_compute_sample_errors() {
        let sign = EmpiricalEstimate::from_sign_sum(0, 4);
        assert_eq!(sign.value, 0.0);
        assert_abs_diff_eq!(sign.std_error, (4.0f64 / 3.0 / 4.0).sqrt(), epsilon = 1e-15);

        let count = EmpiricalEstimate::from_count(2, 4);
        assert_eq!(count.value, 0.5);
        assert_abs_diff_eq!(count.std_error, (0.25f64 / 3.0).sqrt(), epsilon = 1e-15);

        let sums = EmpiricalEstimate::from_sums(6, 12, 3);
        assert_eq!(sums.value, 2.0);
        assert_eq!(sums.std_error, 0.0);

        assert!(EmpiricalEstimate::from_count(1, 1).std_error.is_nan());
        assert!(EnsembleSpec::new(
            0,
            EnsembleState::pure(PureState::right()),
            vec![],
            fast_cfg(0)
        )
        .is_err());
    }
}
