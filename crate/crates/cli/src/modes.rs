//! One runner per CLI mode: resolve settings, compute, emit the report,
//! print a short summary.

use crate::error::CliError;
use crate::settings::{FormatArg, Settings};
use lglab_core::beable::{simulate_trajectory, BeableConfig, EventKind};
use lglab_core::harness::{
    analytic_signalling_scan, estimate_lg_experiment, signalling_scan, trajectory_rng,
    EnsembleSpec,
};
use lglab_core::inequalities::{
    coupling_oracle, max_violation_search, modified_evaluate, CorrelatorTriple, PairwiseTables,
};
use lglab_core::quantum::{EnsembleState, PureState};
use lglab_core::report::{
    analytic_table, lg_experiment_table, max_violation_table, scan_table, verdict_text, write_csv,
    write_json, CellValue, Table,
};
use lglab_core::stats::{delta0, Scenario};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::TAU;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

fn emit(table: &Table, format: FormatArg, path: &Path) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|err| {
                CliError::Io(format!("cannot create {}: {err}", parent.display()))
            })?;
        }
    }
    let file = File::create(path)
        .map_err(|err| CliError::Io(format!("cannot create {}: {err}", path.display())))?;
    let mut writer = BufWriter::new(file);
    match format {
        FormatArg::Csv => write_csv(table, &mut writer),
        FormatArg::Json => write_json(table, &mut writer),
    }
    .map_err(|err| CliError::Io(format!("while writing {}: {err}", path.display())))?;
    writer
        .flush()
        .map_err(|err| CliError::Io(format!("while writing {}: {err}", path.display())))?;
    Ok(())
}

/// Exact inequality report at three measurement phases.
pub fn analytic(settings: &Settings) -> Result<(), CliError> {
    let [tau1, tau2, tau3] = settings.resolve_phases()?;
    let scenario = settings.resolve_scenario();
    let initial = settings.resolve_initial()?;

    let triple = CorrelatorTriple::from_spacings(tau2 - tau1, tau3 - tau2)?;
    let signalling = delta0(&initial, tau1, tau2, tau3, scenario)?;
    let report = modified_evaluate(&triple, signalling.delta0)?;

    let table = analytic_table([tau1, tau2, tau3], scenario, &report);
    let format = settings.resolve_format();
    let path = settings.resolve_out("analytic");
    emit(&table, format, &path)?;

    println!("phases: tau1 = {tau1:.6}, tau2 = {tau2:.6}, tau3 = {tau3:.6}  (scenario: {scenario})");
    println!(
        "lg_lhs = {:.6}  ({})",
        report.lg_lhs,
        if report.lg_satisfied {
            "satisfied"
        } else {
            "violated"
        }
    );
    println!("delta0 = {:.6}", report.delta0);
    println!(
        "modified bounds [{:.6}, {:.6}] on sum {:.6}  ->  {}",
        report.modified_lower,
        report.modified_upper,
        report.correlators.sum(),
        verdict_text(&report)
    );
    println!("report written to {}", path.display());
    Ok(())
}

/// Monte Carlo Leggett–Garg experiment over beable trajectories.
pub fn simulate(settings: &Settings) -> Result<(), CliError> {
    settings.install_threads()?;
    let [tau1, tau2, tau3] = settings.resolve_phases()?;
    let scenario = settings.resolve_scenario();
    let initial = settings.resolve_initial()?;
    let cfg = settings.resolve_cfg()?;
    let n = settings.n_trajectories.unwrap_or(100_000);

    let spec = EnsembleSpec::new(n, initial.clone(), vec![], cfg)?;
    let report = estimate_lg_experiment(&spec, tau1, tau2, tau3, scenario)?;

    let table = lg_experiment_table(&report);
    let format = settings.resolve_format();
    let path = settings.resolve_out("simulate");
    emit(&table, format, &path)?;

    println!(
        "{n} trajectories per context (scenario: {scenario}; dt = {}; seed = {})",
        cfg.dt, cfg.seed
    );
    let analytic = report.analytic.as_ref();
    for (label, estimate, reference) in [
        ("c12   ", &report.c12, analytic.map(|a| a.correlators.c12)),
        ("c23   ", &report.c23, analytic.map(|a| a.correlators.c23)),
        ("c13   ", &report.c13, analytic.map(|a| a.correlators.c13)),
        ("delta0", &report.delta0, analytic.map(|a| a.delta0)),
        ("lg_lhs", &report.lg_lhs, analytic.map(|a| a.lg_lhs)),
    ] {
        match reference {
            Some(value) => println!(
                "{label} = {:+.4} ± {:.4}   (analytic {value:+.4})",
                estimate.value, estimate.std_error
            ),
            None => println!(
                "{label} = {:+.4} ± {:.4}",
                estimate.value, estimate.std_error
            ),
        }
    }
    println!("verdict: {}", verdict_text(&report.report));
    println!("report written to {}", path.display());

    if let Some(dump_path) = &settings.dump {
        let count = settings.dump_trajectories.unwrap_or(10).min(n);
        let events = dump_events(&initial, &cfg, [tau1, tau2, tau3], scenario, count)?;
        emit(&events, FormatArg::Csv, dump_path)?;
        println!(
            "dumped {} events of {count} trajectories to {}",
            events.rows.len(),
            dump_path.display()
        );
    }
    Ok(())
}

/// Re-simulates the first trajectories of the experiment's salt-0
/// context run and records every jump and measurement.  The streams
/// match the harness exactly, so these are the very trajectories the
/// estimates were built from.
fn dump_events(
    initial: &EnsembleState,
    cfg: &BeableConfig,
    taus: [f64; 3],
    scenario: Scenario,
    count: usize,
) -> Result<Table, CliError> {
    let phases: Vec<f64> = match scenario {
        Scenario::SeparatePairs => vec![taus[0], taus[1]],
        Scenario::TwoRuns => vec![taus[0], taus[2]],
    };
    let horizon = *phases.last().expect("phase pair is nonempty");
    let mut table = Table::new(
        "trajectory-events",
        &[
            "trajectory",
            "phase",
            "kind",
            "beable",
            "amp_right_re",
            "amp_right_im",
            "amp_left_re",
            "amp_left_im",
        ],
    );
    for index in 0..count as u64 {
        let mut rng = trajectory_rng(cfg.seed, 0, index);
        let trajectory = simulate_trajectory(initial, &phases, horizon, cfg, &mut rng)?;
        for event in &trajectory.events {
            let kind = match event.kind {
                EventKind::Jump => "jump",
                EventKind::Measurement => "measurement",
            };
            table.push_row(vec![
                CellValue::from(index),
                CellValue::float(event.phase),
                CellValue::from(kind),
                CellValue::Int(event.beable_after.sign() as i64),
                CellValue::float(event.pilot_after.amp_right().re),
                CellValue::float(event.pilot_after.amp_right().im),
                CellValue::float(event.pilot_after.amp_left().re),
                CellValue::float(event.pilot_after.amp_left().im),
            ]);
        }
    }
    Ok(table)
}

/// Δ₀ scan over an evenly spaced η grid covering [0, 2π).
pub fn scan_delta0(settings: &Settings) -> Result<(), CliError> {
    settings.install_threads()?;
    if settings.tau1.is_some() || settings.tau2.is_some() || settings.tau3.is_some() {
        return Err(CliError::Config(
            "scan-delta0 places its own grid via eta-points and spacing; \
             explicit tau1/tau2/tau3 do not apply"
                .to_string(),
        ));
    }
    let spacing = settings.resolve_spacing()?;
    let points = settings.eta_points.unwrap_or(12);
    if points == 0 {
        return Err(CliError::Config("eta-points must be at least 1".to_string()));
    }
    let etas: Vec<f64> = (0..points).map(|k| TAU * k as f64 / points as f64).collect();
    let scenario = settings.resolve_scenario();
    let initial = settings.resolve_initial()?;
    let n = settings.n_trajectories.unwrap_or(0);

    let scan = if n == 0 {
        analytic_signalling_scan(&initial, &etas, spacing, scenario)?
    } else {
        let spec = EnsembleSpec::new(n, initial, vec![], settings.resolve_cfg()?)?;
        signalling_scan(&spec, &etas, spacing, scenario)?
    };

    let table = scan_table(&scan);
    let format = settings.resolve_format();
    let path = settings.resolve_out("scan-delta0");
    emit(&table, format, &path)?;

    let (mut low, mut high) = (f64::INFINITY, f64::NEG_INFINITY);
    for row in &scan.rows {
        low = low.min(row.analytic);
        high = high.max(row.analytic);
    }
    println!(
        "{points} η points, spacing {spacing:.6} (scenario: {scenario}): \
         analytic delta0 ranges over [{low:.6}, {high:.6}]"
    );
    match scan.max_deviation_se {
        Some(deviation) => println!(
            "largest empirical deviation: {deviation:.2} standard errors (n = {n} per context)"
        ),
        None => println!("analytic scan only (n-trajectories = 0)"),
    }
    println!("report written to {}", path.display());
    Ok(())
}

/// Grid search for the spacings minimizing the Leggett–Garg form.
pub fn max_violation(settings: &Settings) -> Result<(), CliError> {
    let resolution = settings.grid.unwrap_or(2000);
    let found = max_violation_search(resolution)?;

    let table = max_violation_table(&found, resolution);
    let format = settings.resolve_format();
    let path = settings.resolve_out("max-violation");
    emit(&table, format, &path)?;

    println!(
        "minimum lhs = {:.9} at alpha = {:.9}, beta = {:.9} (grid {resolution})",
        found.lhs, found.alpha, found.beta
    );
    println!("report written to {}", path.display());
    Ok(())
}

/// One oracle-check instance: a preparation, a phase grid and a label.
struct OracleInstance {
    label: String,
    initial: EnsembleState,
    taus: [f64; 3],
}

fn random_oracle_instance(index: usize, rng: &mut ChaCha8Rng) -> OracleInstance {
    let initial = match index % 3 {
        0 => EnsembleState::maximally_mixed(),
        1 => EnsembleState::pure(random_pure(rng)),
        _ => {
            let branches = rng.gen_range(2..=3);
            let parts = (0..branches)
                .map(|_| (rng.gen_range(0.1..1.0), random_pure(rng)))
                .collect();
            EnsembleState::new(parts).expect("weights are positive")
        }
    };
    let tau1 = rng.gen_range(0.0..TAU);
    let tau2 = tau1 + rng.gen_range(0.05..std::f64::consts::PI);
    let tau3 = tau2 + rng.gen_range(0.05..std::f64::consts::PI);
    OracleInstance {
        label: format!("random-{index:03}"),
        initial,
        taus: [tau1, tau2, tau3],
    }
}

fn random_pure(rng: &mut ChaCha8Rng) -> PureState {
    loop {
        let right = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let left = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        if right.norm_sqr() + left.norm_sqr() > 1e-3 {
            return PureState::new(right, left).expect("amplitudes are normalizable");
        }
    }
}

/// Evaluates the modified bounds and the coupling oracle on canonical
/// plus randomized instances; any verdict disagreement is a check
/// failure (exit 3) after the full report has been written.
pub fn oracle_check(settings: &Settings) -> Result<(), CliError> {
    let instances = settings.instances.unwrap_or(500);
    let seed = settings.seed.unwrap_or(0);
    let spacing = TAU / 3.0;

    let mut todo = vec![
        OracleInstance {
            label: "pure-eta0".to_string(),
            initial: EnsembleState::pure(PureState::right()),
            taus: [0.0, spacing, 2.0 * spacing],
        },
        OracleInstance {
            label: "maximally-mixed".to_string(),
            initial: EnsembleState::maximally_mixed(),
            taus: [0.0, spacing, 2.0 * spacing],
        },
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    todo.extend((0..instances).map(|index| random_oracle_instance(index, &mut rng)));

    let mut table = Table::new(
        "oracle-check",
        &[
            "instance",
            "c12",
            "c23",
            "c13",
            "delta0",
            "min_mismatch",
            "modified_satisfied",
            "contextual",
            "agree",
        ],
    );
    let mut disagreements = 0usize;
    let mut worst_floor_gap = 0.0f64;
    for instance in &todo {
        let [tau1, tau2, tau3] = instance.taus;
        let tables = PairwiseTables::from_state(&instance.initial, tau1, tau2, tau3)?;
        let triple = tables.correlators()?;
        let delta0_check = tables.delta0_check();
        let report = modified_evaluate(&triple, delta0_check)?;
        let verdict = coupling_oracle(&tables)?;
        let agree = report.modified_satisfied == !verdict.contextual;
        if !agree {
            disagreements += 1;
        } else if !verdict.contextual {
            worst_floor_gap =
                worst_floor_gap.max((verdict.min_mismatch - verdict.delta0_check).abs());
        }
        table.push_row(vec![
            CellValue::from(instance.label.clone()),
            CellValue::float(triple.c12),
            CellValue::float(triple.c23),
            CellValue::float(triple.c13),
            CellValue::float(delta0_check),
            CellValue::float(verdict.min_mismatch),
            CellValue::from(report.modified_satisfied),
            CellValue::from(verdict.contextual),
            CellValue::from(agree),
        ]);
    }

    let format = settings.resolve_format();
    let path = settings.resolve_out("oracle-check");
    emit(&table, format, &path)?;
    println!("report written to {}", path.display());

    if disagreements > 0 {
        return Err(CliError::Check(format!(
            "{disagreements} of {} instances have disagreeing verdicts; see {}",
            todo.len(),
            path.display()
        )));
    }
    println!(
        "{} instances: bound and coupling verdicts agree everywhere \
         (largest mismatch-floor gap on satisfied instances: {worst_floor_gap:.2e})",
        todo.len()
    );
    Ok(())
}
