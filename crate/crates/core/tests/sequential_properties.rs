//! Cross-module properties of the exact sequential-measurement
//! statistics: correlator universality, marginal consistency, and the
//! closed forms of the signalling measure.

use approx::assert_abs_diff_eq;
use lglab_core::quantum::{two_time_correlator, EnsembleState, Outcome, PureState};
use lglab_core::stats::{context_distribution, delta0, ContextLabel, MeasurementSchedule, Scenario};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{PI, TAU};

fn random_pure(rng: &mut ChaCha8Rng) -> PureState {
    loop {
        let right = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let left = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        if right.norm_sqr() + left.norm_sqr() > 1e-3 {
            return PureState::new(right, left).expect("amplitudes are normalizable");
        }
    }
}

fn random_ensemble(rng: &mut ChaCha8Rng) -> EnsembleState {
    let branches = rng.gen_range(1..=3);
    let parts = (0..branches)
        .map(|_| (rng.gen_range(0.1..1.0), random_pure(rng)))
        .collect();
    EnsembleState::new(parts).expect("weights are positive")
}

fn pair_schedule(tau_i: f64, tau_j: f64) -> MeasurementSchedule {
    MeasurementSchedule::new(ContextLabel::new(&[1, 2]).unwrap(), vec![tau_i, tau_j]).unwrap()
}

/// The sequential pair correlator is `cos(τ_j − τ_i)` for *every*
/// preparation; the context-table route and the closed form must agree.
#[test]
fn pair_correlators_are_state_independent_cosines() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..100 {
        let ensemble = random_ensemble(&mut rng);
        let tau_i = rng.gen_range(0.0..TAU);
        let tau_j = tau_i + rng.gen_range(1e-3..TAU);
        let table = context_distribution(&ensemble, &pair_schedule(tau_i, tau_j));
        let expected = (tau_j - tau_i).cos();
        assert_abs_diff_eq!(table.pair_correlator(0, 1), expected, epsilon = 1e-12);
        assert_abs_diff_eq!(
            two_time_correlator(tau_i, tau_j).unwrap(),
            expected,
            epsilon = 1e-12
        );
    }
}

/// Build the correlator by hand — evolve, weigh each first outcome,
/// collapse, evolve again — and check it against the module's value.
#[test]
fn explicit_measurement_chains_reproduce_the_correlator() {
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    for _ in 0..100 {
        let ensemble = random_ensemble(&mut rng);
        let tau_i = rng.gen_range(0.0..TAU);
        let tau_j = tau_i + rng.gen_range(1e-3..TAU);
        let mut chain_value = 0.0;
        for &(weight, branch) in ensemble.branches() {
            let at_i = branch.evolved(tau_i).unwrap();
            for first in [Outcome::Minus, Outcome::Plus] {
                let p_first = at_i.born_probabilities().of(first);
                if p_first == 0.0 {
                    continue;
                }
                let at_j = at_i
                    .collapsed(first)
                    .unwrap()
                    .evolved(tau_j - tau_i)
                    .unwrap();
                for second in [Outcome::Minus, Outcome::Plus] {
                    let p_second = at_j.born_probabilities().of(second);
                    chain_value += weight * p_first * p_second * first.sign() * second.sign();
                }
            }
        }
        assert_abs_diff_eq!(
            chain_value,
            two_time_correlator(tau_i, tau_j).unwrap(),
            epsilon = 1e-12
        );
    }
}

/// Marginalizing the final measurement of a context reproduces the
/// shorter context's table, one level at a time.
#[test]
fn dropping_the_last_measurement_reproduces_the_shorter_context() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for _ in 0..60 {
        let ensemble = random_ensemble(&mut rng);
        let tau1 = rng.gen_range(0.0..TAU);
        let tau2 = tau1 + rng.gen_range(1e-3..2.0);
        let tau3 = tau2 + rng.gen_range(1e-3..2.0);
        let grid = [tau1, tau2, tau3];

        let triple = context_distribution(
            &ensemble,
            &MeasurementSchedule::from_grid(&[1, 2, 3], &grid).unwrap(),
        );
        let pair = context_distribution(
            &ensemble,
            &MeasurementSchedule::from_grid(&[1, 2], &grid).unwrap(),
        );
        let single = context_distribution(
            &ensemble,
            &MeasurementSchedule::from_grid(&[1], &grid).unwrap(),
        );

        let reduced = triple.drop_last().unwrap();
        assert_eq!(reduced.label(), pair.label());
        for (&got, &want) in reduced.probabilities().iter().zip(pair.probabilities()) {
            assert_abs_diff_eq!(got, want, epsilon = 1e-12);
        }
        let reduced_again = reduced.drop_last().unwrap();
        assert_eq!(reduced_again.label(), single.label());
        for (&got, &want) in reduced_again.probabilities().iter().zip(single.probabilities()) {
            assert_abs_diff_eq!(got, want, epsilon = 1e-12);
        }
    }
}

/// From `|R⟩` the single-slot marginals have closed forms: the first
/// measurement of a context sees `cos τ`, a second one at `τ_j` sees
/// `cos(τ_j − τ_i)·cos τ_i` through the collapse at `τ_i`.
#[test]
fn marginal_closed_forms_from_the_right_well() {
    let pure = EnsembleState::pure(PureState::right());
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    for _ in 0..50 {
        let tau_i = rng.gen_range(0.0..TAU);
        let tau_j = tau_i + rng.gen_range(1e-3..TAU);
        let table = context_distribution(&pure, &pair_schedule(tau_i, tau_j));
        assert_abs_diff_eq!(table.marginal_expectation(0), tau_i.cos(), epsilon = 1e-12);
        assert_abs_diff_eq!(
            table.marginal_expectation(1),
            (tau_j - tau_i).cos() * tau_i.cos(),
            epsilon = 1e-12
        );
    }
}

/// Dense grid comparison of Δ₀ at 2π/3 spacings against the closed form
/// `(√3/4)·(|sin η| + |cos(η − π/6)|)`, including both extremes.
#[test]
fn delta0_follows_its_closed_form_on_a_dense_eta_grid() {
    let pure = EnsembleState::pure(PureState::right());
    let spacing = TAU / 3.0;
    // Divisible by 6, so the extremes at η = 0 and η = π/3 are grid points.
    let points = 10_002usize;
    let mut smallest = f64::INFINITY;
    let mut largest = f64::NEG_INFINITY;
    for k in 0..points {
        let eta = TAU * k as f64 / points as f64;
        let report = delta0(
            &pure,
            eta,
            eta + spacing,
            eta + 2.0 * spacing,
            Scenario::SeparatePairs,
        )
        .unwrap();
        let closed = 0.25 * 3.0_f64.sqrt() * (eta.sin().abs() + (eta - PI / 6.0).cos().abs());
        assert_abs_diff_eq!(report.delta0, closed, epsilon = 1e-12);
        smallest = smallest.min(report.delta0);
        largest = largest.max(report.delta0);
    }
    assert_abs_diff_eq!(smallest, 0.375, epsilon = 1e-9);
    assert_abs_diff_eq!(largest, 0.75, epsilon = 1e-9);
}

/// The maximally mixed preparation kills every marginal (all ½/½) and
/// with them the whole signalling measure, in both scenarios.
#[test]
fn maximally_mixed_preparation_nulls_all_signalling() {
    let mixed = EnsembleState::maximally_mixed();
    let mut rng = ChaCha8Rng::seed_from_u64(53);
    for _ in 0..25 {
        let tau1 = rng.gen_range(0.0..TAU);
        let tau2 = tau1 + rng.gen_range(1e-3..2.0);
        let tau3 = tau2 + rng.gen_range(1e-3..2.0);
        let grid = [tau1, tau2, tau3];

        for indices in [&[1u8, 2][..], &[2, 3], &[1, 3], &[1, 2, 3]] {
            let schedule = MeasurementSchedule::from_grid(indices, &grid).unwrap();
            let table = context_distribution(&mixed, &schedule);
            for position in 0..indices.len() {
                let (p_plus, p_minus) = table.marginal_distribution(position);
                assert_abs_diff_eq!(p_plus, 0.5, epsilon = 1e-12);
                assert_abs_diff_eq!(p_minus, 0.5, epsilon = 1e-12);
            }
        }
        for scenario in [Scenario::SeparatePairs, Scenario::TwoRuns] {
            let report = delta0(&mixed, tau1, tau2, tau3, scenario).unwrap();
            assert_abs_diff_eq!(report.delta0, 0.0, epsilon = 1e-12);
        }
    }
}

/// Under the two-runs protocol the reference marginals vanish
/// identically and Δ₀ collapses to `½|cos η|`.
#[test]
fn two_runs_signalling_follows_half_cos_eta() {
    let pure = EnsembleState::pure(PureState::right());
    let spacing = TAU / 3.0;
    for k in 0..100 {
        let eta = TAU * k as f64 / 100.0;
        let report = delta0(
            &pure,
            eta,
            eta + spacing,
            eta + 2.0 * spacing,
            Scenario::TwoRuns,
        )
        .unwrap();
        assert_abs_diff_eq!(report.delta0, 0.5 * eta.cos().abs(), epsilon = 1e-12);
    }
}

/// Unitarity, the one-parameter group law, and 2π-periodicity of the
/// Born probabilities, over a large random family.
#[test]
fn free_evolution_is_unitary_composable_and_periodic() {
    let mut rng = ChaCha8Rng::seed_from_u64(61);
    for _ in 0..1000 {
        let state = random_pure(&mut rng);
        let a = rng.gen_range(0.0..TAU);
        let b = rng.gen_range(0.0..TAU);

        let once = state.evolved(a).unwrap();
        assert_abs_diff_eq!(once.norm_sqr(), 1.0, epsilon = 1e-12);

        let stepwise = once.evolved(b).unwrap();
        let direct = state.evolved(a + b).unwrap();
        assert_abs_diff_eq!(
            (stepwise.amp_right() - direct.amp_right()).norm(),
            0.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            (stepwise.amp_left() - direct.amp_left()).norm(),
            0.0,
            epsilon = 1e-12
        );

        let wrapped = state.evolved(a + TAU).unwrap().born_probabilities();
        let plain = once.born_probabilities();
        assert_abs_diff_eq!(wrapped.p_right, plain.p_right, epsilon = 1e-12);
        assert_abs_diff_eq!(wrapped.p_left, plain.p_left, epsilon = 1e-12);
    }
}
