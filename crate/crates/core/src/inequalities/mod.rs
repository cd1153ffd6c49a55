//! Temporal-correlation inequalities and the coupling test for
//! contextuality.
//!
//! Three nested analyses of a correlator triple `(c12, c23, c13)`:
//!
//! * the **Leggett–Garg** inequality `1 + c12 + c23 + c13 ≥ 0`, which any
//!   macrorealistic, non-invasively measurable dynamics must satisfy;
//! * the **Suppes–Zanotti** bounds
//!   `−1 ≤ c12 + c23 + c13 ≤ 1 + 2·min(c12, c23, c13)`, necessary and
//!   sufficient for a single joint distribution of all three measurements
//!   to reproduce the pairwise statistics;
//! * the **signalling-modified** bounds, which widen both Suppes–Zanotti
//!   sides by twice the signalling measure Δ₀ of
//!   [`crate::stats::delta0`].  Their violation is the sharpened notion
//!   of contextuality for signalling systems: the pairwise data cannot be
//!   coupled even after granting each context-bridging variable the
//!   marginal disagreement already forced by signalling.
//!
//! [`coupling_oracle`] decides the same question without the closed-form
//! criterion, by minimising the total mismatch probability over all
//! couplings of the three observed pair tables (a 64-atom linear
//! program), and so provides an independent check on
//! [`modified_evaluate`].

mod simplex;

use crate::error::{Error, Result};
use crate::quantum::{EnsembleState, Outcome};
use crate::stats::{context_distribution, ContextTable, MeasurementSchedule};

/// The two-time correlators of the three pair contexts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelatorTriple {
    /// `⟨Q₁Q₂⟩` from context `{1,2}`.
    pub c12: f64,
    /// `⟨Q₂Q₃⟩` from context `{2,3}`.
    pub c23: f64,
    /// `⟨Q₁Q₃⟩` from context `{1,3}`.
    pub c13: f64,
}

impl CorrelatorTriple {
    /// Validates that every component is a correlation coefficient.
    ///
    /// Values a rounding error outside `[−1, 1]` are clamped.
    ///
    /// # Errors
    ///
    /// [`Error::InvalidArgument`] for non-finite values or values beyond
    /// `1e-9` outside the interval.
    pub fn new(c12: f64, c23: f64, c13: f64) -> Result<Self> {
        let mut clamped = [c12, c23, c13];
        for value in &mut clamped {
            if !value.is_finite() || value.abs() > 1.0 + 1e-9 {
                return Err(Error::InvalidArgument(format!(
                    "correlators must lie in [-1, 1], got {value}"
                )));
            }
            *value = value.clamp(-1.0, 1.0);
        }
        Ok(Self {
            c12: clamped[0],
            c23: clamped[1],
            c13: clamped[2],
        })
    }

    /// The triple produced by free two-level dynamics with phase spacings
    /// `alpha = τ₂ − τ₁` and `beta = τ₃ − τ₂`:
    /// `(cos α, cos β, cos(α + β))`, independent of the initial state.
    ///
    /// # Errors
    ///
    /// [`Error::NonFinitePhase`] or [`Error::PhaseOrder`] for invalid
    /// (negative) spacings.
    pub fn from_spacings(alpha: f64, beta: f64) -> Result<Self> {
        use crate::quantum::two_time_correlator;
        Self::new(
            two_time_correlator(0.0, alpha)?,
            two_time_correlator(alpha, alpha + beta)?,
            two_time_correlator(0.0, alpha + beta)?,
        )
    }

    /// `c12 + c23 + c13`.
    pub fn sum(&self) -> f64 {
        self.c12 + self.c23 + self.c13
    }

    /// The smallest of the three correlators.
    pub fn min(&self) -> f64 {
        self.c12.min(self.c23).min(self.c13)
    }
}

/// The Leggett–Garg left-hand side `1 + cos α + cos β + cos(α + β)` as a
/// function of the two phase spacings.
pub fn lg_objective(alpha: f64, beta: f64) -> f64 {
    1.0 + alpha.cos() + beta.cos() + (alpha + beta).cos()
}

/// Evaluates the Leggett–Garg inequality; returns `(lhs, satisfied)`
/// with `lhs = 1 + c12 + c23 + c13` and satisfaction meaning `lhs ≥ 0`.
pub fn lg_evaluate(correlators: &CorrelatorTriple) -> (f64, bool) {
    let lhs = 1.0 + correlators.sum();
    (lhs, lhs >= 0.0)
}

/// Evaluates the two Suppes–Zanotti bounds; returns
/// `(lower_satisfied, upper_satisfied)` for
/// `−1 ≤ sum` and `sum ≤ 1 + 2·min`.
pub fn sz_evaluate(correlators: &CorrelatorTriple) -> (bool, bool) {
    let sum = correlators.sum();
    (sum >= -1.0, sum <= 1.0 + 2.0 * correlators.min())
}

/// Full verdict sheet for one correlator triple and signalling budget.
///
/// Margins are signed slacks: the distance to the nearest violated bound,
/// negative exactly when the inequality is violated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InequalityReport {
    /// The correlators the verdicts refer to.
    pub correlators: CorrelatorTriple,
    /// Signalling measure used for the modified bounds.
    pub delta0: f64,
    /// `1 + c12 + c23 + c13`.
    pub lg_lhs: f64,
    /// `lg_lhs ≥ 0`.
    pub lg_satisfied: bool,
    /// Slack of the Leggett–Garg inequality (equals `lg_lhs`).
    pub lg_margin: f64,
    /// Lower Suppes–Zanotti bound (−1).
    pub sz_lower: f64,
    /// Upper Suppes–Zanotti bound `1 + 2·min`.
    pub sz_upper: f64,
    /// Both Suppes–Zanotti bounds hold.
    pub sz_satisfied: bool,
    /// Smaller of the two Suppes–Zanotti slacks.
    pub sz_margin: f64,
    /// Lower modified bound `−1 − 2Δ₀`.
    pub modified_lower: f64,
    /// Upper modified bound `1 + 2Δ₀ + 2·min`.
    pub modified_upper: f64,
    /// Both modified bounds hold (no contextuality).
    pub modified_satisfied: bool,
    /// Smaller of the two modified slacks; negative means contextual.
    pub modified_margin: f64,
}

/// Evaluates all three inequality families for a correlator triple and a
/// signalling measure `delta0`.
///
/// The modified bounds are the Suppes–Zanotti bounds shifted outward by
/// exactly `2·delta0`; their violation means the pairwise statistics are
/// contextual even after discounting signalling.
///
/// # Errors
///
/// [`Error::InvalidArgument`] if `delta0` is negative or not finite.
pub fn modified_evaluate(
    correlators: &CorrelatorTriple,
    delta0: f64,
) -> Result<InequalityReport> {
    if !delta0.is_finite() || delta0 < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "delta0 must be finite and non-negative, got {delta0}"
        )));
    }
    let sum = correlators.sum();
    let (lg_lhs, lg_satisfied) = lg_evaluate(correlators);

    let sz_lower = -1.0;
    let sz_upper = 1.0 + 2.0 * correlators.min();
    let sz_margin = (sum - sz_lower).min(sz_upper - sum);

    let modified_lower = sz_lower - 2.0 * delta0;
    let modified_upper = sz_upper + 2.0 * delta0;
    let modified_margin = (sum - modified_lower).min(modified_upper - sum);

    Ok(InequalityReport {
        correlators: *correlators,
        delta0,
        lg_lhs,
        lg_satisfied,
        lg_margin: lg_lhs,
        sz_lower,
        sz_upper,
        sz_satisfied: sz_margin >= 0.0,
        sz_margin,
        modified_lower,
        modified_upper,
        modified_satisfied: modified_margin >= 0.0,
        modified_margin,
    })
}

/// Result of [`max_violation_search`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaxViolation {
    /// Spacing `τ₂ − τ₁` at the minimum.
    pub alpha: f64,
    /// Spacing `τ₃ − τ₂` at the minimum.
    pub beta: f64,
    /// Minimal Leggett–Garg left-hand side.
    pub lhs: f64,
}

/// Finds the spacings minimising [`lg_objective`] over the torus
/// `[0, 2π)²` by a grid scan followed by local refinement.
///
/// The objective is symmetric under `(α, β) → (2π − α, 2π − β)`, so the
/// global minimum of `−½` appears at equal spacings of both `2π/3` and
/// `4π/3`; grid values within `1e-9` of the running best are treated as
/// ties and resolved toward the lexicographically smaller spacings, so
/// the `2π/3` twin is the one reported.
///
/// # Errors
///
/// [`Error::InvalidArgument`] if `resolution < 1000` (coarser grids can
/// miss the basin).
pub fn max_violation_search(resolution: usize) -> Result<MaxViolation> {
    if resolution < 1000 {
        return Err(Error::InvalidArgument(format!(
            "grid resolution must be at least 1000, got {resolution}"
        )));
    }
    const TIE_TOL: f64 = 1e-9;
    let tau = std::f64::consts::TAU;
    let step = tau / resolution as f64;
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for i in 0..resolution {
        let alpha = i as f64 * step;
        for j in 0..resolution {
            let beta = j as f64 * step;
            let value = lg_objective(alpha, beta);
            if value < best.0 - TIE_TOL {
                best = (value, alpha, beta);
            }
        }
    }

    // Shrinking-window refinement around the best grid cell.
    let mut window = 2.0 * step;
    let (mut lhs, mut alpha, mut beta) = best;
    for _ in 0..10 {
        let n = 32;
        let local_step = 2.0 * window / n as f64;
        for i in 0..=n {
            let a = alpha - window + i as f64 * local_step;
            for j in 0..=n {
                let b = beta - window + j as f64 * local_step;
                let value = lg_objective(a, b);
                if value < lhs {
                    lhs = value;
                    alpha = a;
                    beta = b;
                }
            }
        }
        window /= 8.0;
    }

    Ok(MaxViolation {
        alpha: alpha.rem_euclid(tau),
        beta: beta.rem_euclid(tau),
        lhs,
    })
}

/// The three observed pair tables of one experiment, the raw material of
/// the coupling test.
#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseTables {
    t12: ContextTable,
    t23: ContextTable,
    t13: ContextTable,
}

impl PairwiseTables {
    /// Validates and bundles the tables for contexts `{1,2}`, `{2,3}`
    /// and `{1,3}` (in this order).
    ///
    /// # Errors
    ///
    /// [`Error::InvalidTables`] if a table has the wrong context label.
    pub fn new(t12: ContextTable, t23: ContextTable, t13: ContextTable) -> Result<Self> {
        for (table, expected) in [(&t12, [1u8, 2u8]), (&t23, [2, 3]), (&t13, [1, 3])] {
            if table.label().indices() != expected {
                return Err(Error::InvalidTables(format!(
                    "expected context {{{},{}}}, got {}",
                    expected[0],
                    expected[1],
                    table.label()
                )));
            }
        }
        Ok(Self { t12, t23, t13 })
    }

    /// Computes the three pair tables analytically for an ensemble
    /// prepared at phase 0 and measured on the grid `tau1 < tau2 < tau3`.
    ///
    /// # Errors
    ///
    /// As for [`crate::stats::MeasurementSchedule::from_grid`].
    pub fn from_state(
        initial: &EnsembleState,
        tau1: f64,
        tau2: f64,
        tau3: f64,
    ) -> Result<Self> {
        let grid = [tau1, tau2, tau3];
        Ok(Self {
            t12: context_distribution(initial, &MeasurementSchedule::from_grid(&[1, 2], &grid)?),
            t23: context_distribution(initial, &MeasurementSchedule::from_grid(&[2, 3], &grid)?),
            t13: context_distribution(initial, &MeasurementSchedule::from_grid(&[1, 3], &grid)?),
        })
    }

    /// Table of context `{1,2}`.
    pub fn t12(&self) -> &ContextTable {
        &self.t12
    }

    /// Table of context `{2,3}`.
    pub fn t23(&self) -> &ContextTable {
        &self.t23
    }

    /// Table of context `{1,3}`.
    pub fn t13(&self) -> &ContextTable {
        &self.t13
    }

    /// The correlator triple `(⟨Q₁Q₂⟩, ⟨Q₂Q₃⟩, ⟨Q₁Q₃⟩)` of the tables.
    ///
    /// # Errors
    ///
    /// [`Error::InvalidArgument`] if a table is so malformed its
    /// correlator leaves `[−1, 1]`.
    pub fn correlators(&self) -> Result<CorrelatorTriple> {
        CorrelatorTriple::new(
            self.t12.pair_correlator(0, 1),
            self.t23.pair_correlator(0, 1),
            self.t13.pair_correlator(0, 1),
        )
    }

    /// The signalling measure implied by the tables' marginals alone:
    /// half the summed disagreement of `⟨Q₁⟩`, `⟨Q₂⟩`, `⟨Q₃⟩` between the
    /// two contexts each appears in.  (The `⟨Q₁⟩` term vanishes for any
    /// sequential-measurement data, where later measurements cannot
    /// reach back.)
    pub fn delta0_check(&self) -> f64 {
        let q1 = (self.t12.marginal_expectation(0) - self.t13.marginal_expectation(0)).abs();
        let q2 = (self.t12.marginal_expectation(1) - self.t23.marginal_expectation(0)).abs();
        let q3 = (self.t13.marginal_expectation(1) - self.t23.marginal_expectation(1)).abs();
        0.5 * (q1 + q2 + q3)
    }
}

/// Verdict of the brute-force coupling construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingVerdict {
    /// Minimal achievable value of
    /// `P(Q₁^{12} ≠ Q₁^{13}) + P(Q₂^{12} ≠ Q₂^{23}) + P(Q₃^{13} ≠ Q₃^{23})`
    /// over all joint distributions reproducing the three pair tables.
    pub min_mismatch: f64,
    /// The lower bound on the mismatch forced by the marginals alone
    /// ([`PairwiseTables::delta0_check`]).
    pub delta0_check: f64,
    /// `min_mismatch > delta0_check + 1e-9`: the statistics are
    /// contextual — no coupling achieves the signalling-mandated minimum.
    pub contextual: bool,
}

/// Decides contextuality by explicit minimisation over couplings.
///
/// The six context-indexed variables
/// `(Q₁^{12}, Q₂^{12}, Q₂^{23}, Q₃^{23}, Q₁^{13}, Q₃^{13})` span a joint
/// distribution on 64 atoms; the three observed pair tables pin twelve
/// marginal cells, and the total mismatch probability across the three
/// bridged slots is minimised by a dense simplex solve.  The verdict must
/// agree with [`modified_evaluate`] applied to the same tables — the two
/// routes are independent implementations of the same criterion.
///
/// # Errors
///
/// [`Error::InvalidTables`] if the tables are not normalised (the
/// coupling polytope is never empty for valid tables, because the three
/// pair constraints act on disjoint variable pairs).
pub fn coupling_oracle(tables: &PairwiseTables) -> Result<CouplingVerdict> {
    for table in [tables.t12(), tables.t23(), tables.t13()] {
        if (table.total() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidTables(format!(
                "table {} sums to {}, not 1",
                table.label(),
                table.total()
            )));
        }
        if table.probabilities().iter().any(|&p| p < 0.0) {
            return Err(Error::InvalidTables(format!(
                "table {} has a negative probability",
                table.label()
            )));
        }
    }

    // Atom bit layout (bit set = Plus): v1 v2 v3 v4 v5 v6 from the most
    // significant of six bits, in the variable order documented above.
    const ATOMS: usize = 64;
    let bit = |atom: usize, position: usize| (atom >> (5 - position)) & 1;

    let mut a = Vec::with_capacity(12);
    let mut b = Vec::with_capacity(12);
    for (table, positions) in [
        (tables.t12(), (0usize, 1usize)),
        (tables.t23(), (2, 3)),
        (tables.t13(), (4, 5)),
    ] {
        for first in [Outcome::Minus, Outcome::Plus] {
            for second in [Outcome::Minus, Outcome::Plus] {
                let mut row = vec![0.0; ATOMS];
                for (atom, slot) in row.iter_mut().enumerate() {
                    if bit(atom, positions.0) == first.index()
                        && bit(atom, positions.1) == second.index()
                    {
                        *slot = 1.0;
                    }
                }
                a.push(row);
                b.push(table.probability(&[first, second]));
            }
        }
    }

    let cost: Vec<f64> = (0..ATOMS)
        .map(|atom| {
            let mismatches = usize::from(bit(atom, 0) != bit(atom, 4))
                + usize::from(bit(atom, 1) != bit(atom, 2))
                + usize::from(bit(atom, 5) != bit(atom, 3));
            mismatches as f64
        })
        .collect();

    let (_, value) = simplex::minimize(&a, &b, &cost).map_err(|err| {
        Error::InvalidTables(format!("coupling program failed: {err:?}"))
    })?;
    let min_mismatch = value.max(0.0);
    let delta0_check = tables.delta0_check();
    Ok(CouplingVerdict {
        min_mismatch,
        delta0_check,
        contextual: min_mismatch > delta0_check + 1e-9,
    })
}
