//! Exact statistics of sequential projective measurements.
//!
//! A *context* is a subset of up to three measurement slots on a common
//! phase grid `τ₁ < τ₂ < τ₃`, labelled by its index set (`{1,2}`,
//! `{2,3}`, …).  For each context this module computes the exact joint
//! outcome distribution by walking the evolve → Born → collapse chain
//! through every outcome tuple and ensemble branch, and derives from it
//! marginal expectations, the signalling measure Δ₀, and the
//! total-variation footprint an intermediate measurement leaves on a
//! later one.
//!
//! Because each measurement collapses the state, the marginal statistics
//! of a later measurement generally depend on whether an earlier one was
//! performed; `Δ₀` is precisely the marginal-inconsistency budget that
//! the modified inequality bounds of [`crate::inequalities`] spend.

use crate::error::{Error, Result};
use crate::quantum::{EnsembleState, Outcome};

/// Index set identifying a context on the three-slot phase grid, e.g.
/// `{1,2}` or `{1,2,3}`.  Indices are strictly increasing values in
/// `1..=3`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ContextLabel(Vec<u8>);

impl ContextLabel {
    /// Validates and builds a label.
    ///
    /// # Errors
    ///
    /// [`Error::InvalidSchedule`] unless the indices are 1–3 strictly
    /// increasing values drawn from `{1, 2, 3}`.
    pub fn new(indices: &[u8]) -> Result<Self> {
        if indices.is_empty() || indices.len() > 3 {
            return Err(Error::InvalidSchedule(format!(
                "a context holds 1 to 3 measurements, got {}",
                indices.len()
            )));
        }
        for window in indices.windows(2) {
            if window[0] >= window[1] {
                return Err(Error::InvalidSchedule(format!(
                    "context indices must be strictly increasing, got {indices:?}"
                )));
            }
        }
        if indices.iter().any(|&i| !(1..=3).contains(&i)) {
            return Err(Error::InvalidSchedule(format!(
                "context indices must lie in 1..=3, got {indices:?}"
            )));
        }
        Ok(Self(indices.to_vec()))
    }

    /// The grid indices in increasing order.
    pub fn indices(&self) -> &[u8] {
        &self.0
    }

    /// Number of measurements in the context.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    /// True for the (never constructed) empty label; present for
    /// completeness of the `len`/`is_empty` pair.
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// The label with its last index removed.
    ///
    /// # Errors
    ///
    /// [`Error::InvalidSchedule`] if only one index is left.
    pub fn drop_last(&self) -> Result<Self> {
        if self.0.len() < 2 {
            return Err(Error::InvalidSchedule(
                "cannot drop the only measurement of a context".to_string(),
            ));
        }
        Ok(Self(self.0[..self.0.len() - 1].to_vec()))
    }
}

impl std::fmt::Display for ContextLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{{")?;
        for (k, index) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{index}")?;
        }
        write!(f, "}}")
    }
}

/// An ordered schedule of projective well measurements: which grid slots
/// are measured and at which phases.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSchedule {
    label: ContextLabel,
    phases: Vec<f64>,
}

impl MeasurementSchedule {
    /// Validates and builds a schedule.
    ///
    /// # Errors
    ///
    /// [`Error::InvalidSchedule`] if the label and phase list disagree in
    /// length, [`Error::NonFinitePhase`] for non-finite phases, and
    /// [`Error::PhaseOrder`] if the phases are not strictly increasing.
    pub fn new(label: ContextLabel, phases: Vec<f64>) -> Result<Self> {
        if label.len() != phases.len() {
            return Err(Error::InvalidSchedule(format!(
                "label {label} has {} indices but {} phases were given",
                label.len(),
                phases.len()
            )));
        }
        for &phase in &phases {
            if !phase.is_finite() {
                return Err(Error::NonFinitePhase(phase));
            }
        }
        for window in phases.windows(2) {
            if window[0] >= window[1] {
                return Err(Error::PhaseOrder {
                    earlier: window[0],
                    later: window[1],
                });
            }
        }
        Ok(Self { label, phases })
    }

    /// Builds the schedule that measures the given grid slots of the grid
    /// `[τ₁, τ₂, τ₃]`.
    ///
    /// # Errors
    ///
    /// As for [`MeasurementSchedule::new`].
    pub fn from_grid(indices: &[u8], grid: &[f64; 3]) -> Result<Self> {
        let label = ContextLabel::new(indices)?;
        let phases = label
            .indices()
            .iter()
            .map(|&i| grid[usize::from(i) - 1])
            .collect();
        Self::new(label, phases)
    }

    /// The context label.
    pub fn label(&self) -> &ContextLabel {
        &self.label
    }

    /// The measurement phases, strictly increasing.
    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    /// Number of measurements.
    pub fn len(&self) -> usize {
        self.phases.len()
    }

    /// Always false; schedules hold at least one measurement.
    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    /// The schedule with its final measurement removed.
    ///
    /// # Errors
    ///
    /// [`Error::InvalidSchedule`] if only one measurement is left.
    pub fn drop_last(&self) -> Result<Self> {
        Ok(Self {
            label: self.label.drop_last()?,
            phases: self.phases[..self.phases.len() - 1].to_vec(),
        })
    }
}

/// Exact joint distribution of the outcome tuples of one context.
///
/// Probabilities are stored in canonical (lexicographic) tuple order with
/// `−1` before `+1`: for two measurements the order is
/// `(−1,−1), (−1,+1), (+1,−1), (+1,+1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextTable {
    label: ContextLabel,
    probs: Vec<f64>,
}

impl ContextTable {
    /// Builds a table from probabilities given in canonical tuple order.
    ///
    /// # Errors
    ///
    /// [`Error::InvalidTables`] unless there are `2^len(label)` finite,
    /// non-negative probabilities summing to 1 within `1e-9`.
    pub fn from_probabilities(label: ContextLabel, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != 1 << label.len() {
            return Err(Error::InvalidTables(format!(
                "context {label} needs {} probabilities, got {}",
                1 << label.len(),
                probs.len()
            )));
        }
        let mut total = 0.0;
        for &p in &probs {
            if !p.is_finite() || p < 0.0 {
                return Err(Error::InvalidTables(format!(
                    "probabilities must be finite and non-negative, got {p}"
                )));
            }
            total += p;
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidTables(format!(
                "probabilities must sum to 1 within 1e-9, got {total}"
            )));
        }
        Ok(Self { label, probs })
    }

    /// The context label.
    pub fn label(&self) -> &ContextLabel {
        &self.label
    }

    /// Number of measurements in the context.
    pub fn measurements(&self) -> usize {
        self.label.len()
    }

    /// Probabilities in canonical tuple order.
    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    /// All outcome tuples of length `len` in canonical order.
    pub fn outcome_tuples(len: usize) -> Vec<Vec<Outcome>> {
        (0..1usize << len)
            .map(|code| Self::tuple_from_code(code, len))
            .collect()
    }

    fn tuple_from_code(code: usize, len: usize) -> Vec<Outcome> {
        (0..len)
            .map(|k| Outcome::from_index((code >> (len - 1 - k)) & 1))
            .collect()
    }

    /// Probability of one outcome tuple.
    ///
    /// # Panics
    ///
    /// If the tuple length does not match the context.
    pub fn probability(&self, outcomes: &[Outcome]) -> f64 {
        assert_eq!(
            outcomes.len(),
            self.measurements(),
            "outcome tuple length must match the context"
        );
        let code = outcomes
            .iter()
            .fold(0usize, |acc, o| (acc << 1) | o.index());
        self.probs[code]
    }

    /// Iterates `(tuple, probability)` in canonical order.
    pub fn iter(&self) -> impl Iterator<Item = (Vec<Outcome>, f64)> + '_ {
        let len = self.measurements();
        self.probs
            .iter()
            .enumerate()
            .map(move |(code, &p)| (Self::tuple_from_code(code, len), p))
    }

    /// Sum of all probabilities (1 within rounding).
    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Expectation `⟨Q⟩` of the measurement at the given position
    /// (0-based within the context).
    pub fn marginal_expectation(&self, position: usize) -> f64 {
        assert!(position < self.measurements(), "position out of range");
        let len = self.measurements();
        let mut value = 0.0;
        for (code, &p) in self.probs.iter().enumerate() {
            let outcome = Outcome::from_index((code >> (len - 1 - position)) & 1);
            value += outcome.sign() * p;
        }
        value
    }

    /// Marginal distribution `(p(+1), p(−1))` of the measurement at the
    /// given position.
    pub fn marginal_distribution(&self, position: usize) -> (f64, f64) {
        assert!(position < self.measurements(), "position out of range");
        let len = self.measurements();
        let mut p_plus = 0.0;
        let mut p_minus = 0.0;
        for (code, &p) in self.probs.iter().enumerate() {
            match Outcome::from_index((code >> (len - 1 - position)) & 1) {
                Outcome::Plus => p_plus += p,
                Outcome::Minus => p_minus += p,
            }
        }
        (p_plus, p_minus)
    }

    /// Correlator `⟨Q_a Q_b⟩` of the measurements at two positions.
    pub fn pair_correlator(&self, position_a: usize, position_b: usize) -> f64 {
        let len = self.measurements();
        assert!(
            position_a < len && position_b < len,
            "positions out of range"
        );
        let mut value = 0.0;
        for (code, &p) in self.probs.iter().enumerate() {
            let a = Outcome::from_index((code >> (len - 1 - position_a)) & 1);
            let b = Outcome::from_index((code >> (len - 1 - position_b)) & 1);
            value += a.sign() * b.sign() * p;
        }
        value
    }

    /// The table with the final measurement summed out.
    ///
    /// Later measurements never disturb earlier statistics, so this
    /// reproduces the shorter context's table exactly.
    ///
    /// # Errors
    ///
    /// [`Error::InvalidSchedule`] if only one measurement is left.
    pub fn drop_last(&self) -> Result<Self> {
        let label = self.label.drop_last()?;
        let probs = self
            .probs
            .chunks_exact(2)
            .map(|pair| pair[0] + pair[1])
            .collect();
        Ok(Self { label, probs })
    }
}

/// Computes the exact joint outcome distribution of a schedule applied to
/// an initial ensemble prepared at phase 0.
///
/// Each branch contributes the chain product of Born probabilities along
/// evolve → measure → collapse steps, weighted by the branch weight.
pub fn context_distribution(
    initial: &EnsembleState,
    schedule: &MeasurementSchedule,
) -> ContextTable {
    let len = schedule.len();
    let phases = schedule.phases();
    let mut probs = vec![0.0; 1 << len];
    for &(weight, branch) in initial.branches() {
        for (code, slot) in probs.iter_mut().enumerate() {
            let mut state = branch;
            let mut previous_phase = 0.0;
            let mut chain = 1.0;
            for (k, &phase) in phases.iter().enumerate() {
                let outcome = Outcome::from_index((code >> (len - 1 - k)) & 1);
                state = state
                    .evolved(phase - previous_phase)
                    .expect("schedule phases are finite");
                chain *= state.born_probabilities().of(outcome);
                if chain == 0.0 {
                    break;
                }
                state = outcome.eigenstate();
                previous_phase = phase;
            }
            *slot += weight * chain;
        }
    }
    ContextTable {
        label: schedule.label().clone(),
        probs,
    }
}

/// Expectation `⟨Q⟩` of one measurement of a schedule (0-based position),
/// computed from the exact context distribution.
///
/// For pure initial states reachable from `|R⟩` by free evolution the
/// closed forms are `cos(τ_j − τ_i)·cos(τ_i − τ₀)` when an earlier
/// measurement at `τ_i` precedes the queried one at `τ_j`, and
/// `cos(τ_j − τ₀)` when the queried measurement comes first.
pub fn marginal_expectation(
    initial: &EnsembleState,
    schedule: &MeasurementSchedule,
    position: usize,
) -> f64 {
    context_distribution(initial, schedule).marginal_expectation(position)
}

/// How the statistics entering Δ₀ are gathered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scenario {
    /// Three separate runs, one per pair context `{1,2}`, `{2,3}`,
    /// `{1,3}`, each starting from the given initial state.
    SeparatePairs,
    /// Two runs — the pair `{1,3}` and the triple `{1,2,3}`.  The `{2,3}`
    /// reference statistics are then those of the maximally mixed state
    /// left behind by the first measurement, whose marginals vanish.
    TwoRuns,
}

impl std::fmt::Display for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Scenario::SeparatePairs => write!(f, "pairs"),
            Scenario::TwoRuns => write!(f, "two-runs"),
        }
    }
}

/// The signalling measure Δ₀ and the marginal differences it is built
/// from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignallingReport {
    /// `Δ₀ = ½(term_q2 + term_q3)`.
    pub delta0: f64,
    /// `|⟨Q₂⟩ in {1,2} − ⟨Q₂⟩ in {2,3}|`.
    pub term_q2: f64,
    /// `|⟨Q₃⟩ in {1,3} − ⟨Q₃⟩ in {2,3}|`.
    pub term_q3: f64,
    /// How the `{2,3}` reference statistics were produced.
    pub scenario: Scenario,
}

/// Computes the signalling measure
/// `Δ₀ = ½(|⟨Q₂^{12}⟩ − ⟨Q₂^{23}⟩| + |⟨Q₃^{13}⟩ − ⟨Q₃^{23}⟩|)`
/// on the grid `tau1 < tau2 < tau3` for a state prepared at phase 0.
///
/// The first slot needs no term: no later measurement can disturb the
/// earlier statistics, so `⟨Q₁⟩` agrees between `{1,2}` and `{1,3}`
/// identically.  Under [`Scenario::TwoRuns`] the `{2,3}` terms are
/// evaluated from the maximally mixed state (both vanish), mirroring an
/// experiment that extracts them after a first measurement has already
/// happened.
///
/// # Errors
///
/// [`Error::NonFinitePhase`] or [`Error::PhaseOrder`] for an invalid
/// grid.
pub fn delta0(
    initial: &EnsembleState,
    tau1: f64,
    tau2: f64,
    tau3: f64,
    scenario: Scenario,
) -> Result<SignallingReport> {
    let grid = validated_grid(tau1, tau2, tau3)?;
    let table12 = context_distribution(initial, &MeasurementSchedule::from_grid(&[1, 2], &grid)?);
    let table13 = context_distribution(initial, &MeasurementSchedule::from_grid(&[1, 3], &grid)?);
    let reference = match scenario {
        Scenario::SeparatePairs => initial.clone(),
        Scenario::TwoRuns => EnsembleState::maximally_mixed(),
    };
    let table23 = context_distribution(&reference, &MeasurementSchedule::from_grid(&[2, 3], &grid)?);

    let term_q2 = (table12.marginal_expectation(1) - table23.marginal_expectation(0)).abs();
    let term_q3 = (table13.marginal_expectation(1) - table23.marginal_expectation(1)).abs();
    Ok(SignallingReport {
        delta0: 0.5 * (term_q2 + term_q3),
        term_q2,
        term_q3,
        scenario,
    })
}

/// Total-variation distance between the distribution of `Q` at `tau_k`
/// with and without an intervening measurement at `tau_i < tau_k`.
///
/// A non-zero residual is the analytic fingerprint of measurement
/// invasiveness: from `|R⟩` with `(τ_i, τ_k) = (π/2, π)` the measured
/// marginal is flat while the unmeasured one is pinned at `Q = −1`,
/// giving a residual of ½.
///
/// # Errors
///
/// [`Error::NonFinitePhase`] or [`Error::PhaseOrder`] for an invalid
/// phase pair.
pub fn noninvasiveness_residual(initial: &EnsembleState, tau_i: f64, tau_k: f64) -> Result<f64> {
    for tau in [tau_i, tau_k] {
        if !tau.is_finite() {
            return Err(Error::NonFinitePhase(tau));
        }
    }
    if tau_i >= tau_k {
        return Err(Error::PhaseOrder {
            earlier: tau_i,
            later: tau_k,
        });
    }
    let measured = context_distribution(
        initial,
        &MeasurementSchedule::new(ContextLabel::new(&[1, 2])?, vec![tau_i, tau_k])?,
    );
    let unmeasured = context_distribution(
        initial,
        &MeasurementSchedule::new(ContextLabel::new(&[2])?, vec![tau_k])?,
    );
    let (m_plus, m_minus) = measured.marginal_distribution(1);
    let (u_plus, u_minus) = unmeasured.marginal_distribution(0);
    Ok(0.5 * ((m_plus - u_plus).abs() + (m_minus - u_minus).abs()))
}

fn validated_grid(tau1: f64, tau2: f64, tau3: f64) -> Result<[f64; 3]> {
    for tau in [tau1, tau2, tau3] {
        if !tau.is_finite() {
            return Err(Error::NonFinitePhase(tau));
        }
    }
    for (earlier, later) in [(tau1, tau2), (tau2, tau3)] {
        if earlier >= later {
            return Err(Error::PhaseOrder { earlier, later });
        }
    }
    Ok([tau1, tau2, tau3])
}
