//! States and unitary dynamics of the two-level (double-well) system.
//!
//! All of the crate works in the dimensionless phase
//! `τ = ω·(t − t₀)` where `ω = ΔE/ħ` is the tunnelling frequency set by
//! the energy splitting `ΔE` of the two lowest eigenstates.  Free
//! evolution by a phase `τ` rotates the well amplitudes by the *half*
//! angle `τ/2`:
//!
//! ```text
//! |ψ(τ)⟩ = cos(τ/2)|R⟩ − i·sin(τ/2)|L⟩       (starting from |R⟩)
//! ```
//!
//! which produces the full-angle observables
//! `⟨Q(τ)⟩ = cos τ` and `⟨Q(τ_j)Q(τ_i)⟩ = cos(τ_j − τ_i)` for sequential
//! projective measurements of the well coordinate `Q = ±1`.  The
//! half-angle convention is used consistently in every amplitude and
//! probability of this crate.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dichotomic outcome of a well measurement: `Plus` is the right well
/// (`Q = +1`), `Minus` the left well (`Q = −1`).
///
/// The derived order (`Minus < Plus`) is the canonical order used for
/// outcome tuples throughout the crate: tuples are enumerated
/// lexicographically with −1 before +1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Outcome {
    /// Left well, `Q = −1`.
    Minus,
    /// Right well, `Q = +1`.
    Plus,
}

impl Outcome {
    /// The numerical value of `Q` for this outcome.
    pub fn sign(self) -> f64 {
        match self {
            Outcome::Minus => -1.0,
            Outcome::Plus => 1.0,
        }
    }

    /// The opposite outcome.
    pub fn flipped(self) -> Self {
        match self {
            Outcome::Minus => Outcome::Plus,
            Outcome::Plus => Outcome::Minus,
        }
    }

    /// Canonical index: `Minus → 0`, `Plus → 1`.
    pub fn index(self) -> usize {
        match self {
            Outcome::Minus => 0,
            Outcome::Plus => 1,
        }
    }

    /// Inverse of [`Outcome::index`]; any non-zero value maps to `Plus`.
    pub fn from_index(index: usize) -> Self {
        if index == 0 {
            Outcome::Minus
        } else {
            Outcome::Plus
        }
    }

    /// The well eigenstate this outcome projects onto.
    pub fn eigenstate(self) -> PureState {
        match self {
            Outcome::Minus => PureState::left(),
            Outcome::Plus => PureState::right(),
        }
    }
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Outcome::Minus => write!(f, "-1"),
            Outcome::Plus => write!(f, "+1"),
        }
    }
}

/// Born probabilities of the two well outcomes for some state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BornProbabilities {
    /// Probability of finding the system in the right well (`Q = +1`).
    pub p_right: f64,
    /// Probability of finding the system in the left well (`Q = −1`).
    pub p_left: f64,
}

impl BornProbabilities {
    /// Probability of the given outcome.
    pub fn of(&self, outcome: Outcome) -> f64 {
        match outcome {
            Outcome::Plus => self.p_right,
            Outcome::Minus => self.p_left,
        }
    }
}

/// A normalised pure state in the well basis `{|R⟩, |L⟩}`.
///
/// The constructor normalises, and free evolution is unitary, so the
/// invariant `|amp_right|² + |amp_left|² = 1` holds (to rounding) after
/// every operation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PureState {
    amp_right: Complex64,
    amp_left: Complex64,
}

impl PureState {
    /// Builds a state from well amplitudes, normalising them.
    ///
    /// # Errors
    ///
    /// [`Error::InvalidState`] if an amplitude is not finite or the norm
    /// is too close to zero to normalise.
    pub fn new(amp_right: Complex64, amp_left: Complex64) -> Result<Self> {
        let finite = |z: Complex64| z.re.is_finite() && z.im.is_finite();
        if !finite(amp_right) || !finite(amp_left) {
            return Err(Error::InvalidState(format!(
                "amplitudes must be finite, got ({amp_right}, {amp_left})"
            )));
        }
        let norm = (amp_right.norm_sqr() + amp_left.norm_sqr()).sqrt();
        if norm < 1e-12 {
            return Err(Error::InvalidState(
                "amplitudes have (nearly) zero norm".to_string(),
            ));
        }
        Ok(Self {
            amp_right: amp_right / norm,
            amp_left: amp_left / norm,
        })
    }

    /// The right-well eigenstate `|R⟩` (`Q = +1`).
    pub fn right() -> Self {
        Self {
            amp_right: Complex64::new(1.0, 0.0),
            amp_left: Complex64::new(0.0, 0.0),
        }
    }

    /// The left-well eigenstate `|L⟩` (`Q = −1`).
    pub fn left() -> Self {
        Self {
            amp_right: Complex64::new(0.0, 0.0),
            amp_left: Complex64::new(1.0, 0.0),
        }
    }

    /// Amplitude on the right well.
    pub fn amp_right(&self) -> Complex64 {
        self.amp_right
    }

    /// Amplitude on the left well.
    pub fn amp_left(&self) -> Complex64 {
        self.amp_left
    }

    /// The squared norm `|amp_right|² + |amp_left|²`.
    pub fn norm_sqr(&self) -> f64 {
        self.amp_right.norm_sqr() + self.amp_left.norm_sqr()
    }

    /// Free evolution by the phase `tau` (may be negative).
    ///
    /// Rotates the amplitudes by the half angle `τ/2`:
    /// `amp_right ← cos(τ/2)·amp_right − i·sin(τ/2)·amp_left` and
    /// symmetrically for the left amplitude.  Evolution is 4π-periodic in
    /// the amplitudes and 2π-periodic in all observables.
    ///
    /// # Errors
    ///
    /// [`Error::NonFinitePhase`] if `tau` is NaN or infinite.
    pub fn evolved(&self, tau: f64) -> Result<Self> {
        if !tau.is_finite() {
            return Err(Error::NonFinitePhase(tau));
        }
        let (sin_half, cos_half) = (0.5 * tau).sin_cos();
        Ok(self.rotated(cos_half, sin_half))
    }

    /// Evolution step with precomputed half-angle coefficients
    /// (`cos(τ/2)`, `sin(τ/2)`); hot path of the trajectory simulator.
    pub(crate) fn rotated(&self, cos_half: f64, sin_half: f64) -> Self {
        let coupling = Complex64::new(0.0, -sin_half);
        Self {
            amp_right: cos_half * self.amp_right + coupling * self.amp_left,
            amp_left: cos_half * self.amp_left + coupling * self.amp_right,
        }
    }

    /// Born probabilities of the two well outcomes.
    pub fn born_probabilities(&self) -> BornProbabilities {
        BornProbabilities {
            p_right: self.amp_right.norm_sqr(),
            p_left: self.amp_left.norm_sqr(),
        }
    }

    /// Projective collapse onto the measured outcome.
    ///
    /// Returns the corresponding well eigenstate; the irrelevant global
    /// phase of the projected amplitude is dropped.
    ///
    /// # Errors
    ///
    /// [`Error::ImpossibleOutcome`] if the outcome has exactly zero Born
    /// probability.
    pub fn collapsed(&self, outcome: Outcome) -> Result<Self> {
        if self.born_probabilities().of(outcome) == 0.0 {
            return Err(Error::ImpossibleOutcome(outcome));
        }
        Ok(outcome.eigenstate())
    }
}

/// A discrete statistical mixture of pure states.
///
/// Weights are normalised to sum to one.  A mixture is read as classical
/// ignorance of which pure state was prepared: stochastic simulations
/// draw a branch once per trajectory and keep it.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleState {
    branches: Vec<(f64, PureState)>,
}

impl EnsembleState {
    /// An ensemble with a single branch.
    pub fn pure(state: PureState) -> Self {
        Self {
            branches: vec![(1.0, state)],
        }
    }

    /// The maximally mixed state: `|R⟩` and `|L⟩` with weight ½ each.
    pub fn maximally_mixed() -> Self {
        Self {
            branches: vec![(0.5, PureState::right()), (0.5, PureState::left())],
        }
    }

    /// Builds a mixture from weighted branches, normalising the weights.
    ///
    /// # Errors
    ///
    /// [`Error::InvalidState`] if there are no branches, a weight is
    /// negative or not finite, or all weights are zero.
    pub fn new(branches: Vec<(f64, PureState)>) -> Result<Self> {
        if branches.is_empty() {
            return Err(Error::InvalidState(
                "an ensemble needs at least one branch".to_string(),
            ));
        }
        let mut total = 0.0;
        for (weight, _) in &branches {
            if !weight.is_finite() || *weight < 0.0 {
                return Err(Error::InvalidState(format!(
                    "branch weights must be finite and non-negative, got {weight}"
                )));
            }
            total += weight;
        }
        if total <= 0.0 {
            return Err(Error::InvalidState(
                "branch weights must not all be zero".to_string(),
            ));
        }
        Ok(Self {
            branches: branches
                .into_iter()
                .map(|(w, s)| (w / total, s))
                .collect(),
        })
    }

    /// The normalised `(weight, state)` branches.
    pub fn branches(&self) -> &[(f64, PureState)] {
        &self.branches
    }
}

/// Conversion between laboratory time and the dimensionless phase used
/// everywhere else in the crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseConvention {
    omega: f64,
    tau0: f64,
}

impl PhaseConvention {
    /// A convention with tunnelling frequency `omega = ΔE/ħ` (per unit
    /// time) and reference phase `tau0`.
    ///
    /// # Errors
    ///
    /// [`Error::InvalidArgument`] unless `omega` is finite and positive
    /// and `tau0` is finite.
    pub fn new(omega: f64, tau0: f64) -> Result<Self> {
        if !omega.is_finite() || omega <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "omega must be finite and positive, got {omega}"
            )));
        }
        if !tau0.is_finite() {
            return Err(Error::NonFinitePhase(tau0));
        }
        Ok(Self { omega, tau0 })
    }

    /// The dimensionless default: `omega = 1`, `tau0 = 0`, so phases and
    /// times coincide.
    pub fn dimensionless() -> Self {
        Self {
            omega: 1.0,
            tau0: 0.0,
        }
    }

    /// Tunnelling frequency `ΔE/ħ`.
    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// Reference phase subtracted by [`PhaseConvention::relative`].
    pub fn tau0(&self) -> f64 {
        self.tau0
    }

    /// Phase accumulated at laboratory time `t`.
    pub fn phase(&self, t: f64) -> f64 {
        self.omega * t
    }

    /// Phase measured from the reference phase.
    pub fn relative(&self, tau: f64) -> f64 {
        tau - self.tau0
    }
}

impl Default for PhaseConvention {
    fn default() -> Self {
        Self::dimensionless()
    }
}

/// Expectation `⟨Q(τ)⟩ = cos τ` of the well coordinate at relative phase
/// `tau_rel` for a state that was in the right well at relative phase 0.
pub fn expectation_q(tau_rel: f64) -> f64 {
    tau_rel.cos()
}

/// Two-time correlator `⟨Q(τ_j)Q(τ_i)⟩ = cos(τ_j − τ_i)` of sequential
/// projective well measurements at phases `tau_i ≤ tau_j`.
///
/// The value is independent of the state the system was prepared in: the
/// first measurement projects onto a well eigenstate, and both
/// conditional branches contribute the same product statistics.
///
/// # Errors
///
/// [`Error::NonFinitePhase`] for non-finite arguments and
/// [`Error::PhaseOrder`] if `tau_i > tau_j`.
pub fn two_time_correlator(tau_i: f64, tau_j: f64) -> Result<f64> {
    for tau in [tau_i, tau_j] {
        if !tau.is_finite() {
            return Err(Error::NonFinitePhase(tau));
        }
    }
    if tau_i > tau_j {
        return Err(Error::PhaseOrder {
            earlier: tau_i,
            later: tau_j,
        });
    }
    Ok((tau_j - tau_i).cos())
}
