//! Stochastic beable trajectories for the two-level system.
//!
//! The model gives the system a definite well occupation (the *beable*,
//! `+1` = right, `−1` = left) at every instant, guided by the usual
//! unitarily evolving state (the *pilot*).  The beable jumps between the
//! wells at the minimal stochastic rates that reproduce the pilot's Born
//! probabilities — the transition rate out of a well is nonzero only in
//! the direction the probability current actually flows:
//!
//! ```text
//! t(R→L) = max(0, j) / p_R,    t(L→R) = max(0, −j) / p_L,
//! j = Im(conj(amp_L)·amp_R) = dp_L/dτ.
//! ```
//!
//! With these rates the ensemble of beables satisfies the same master
//! equation as the Born probabilities (*equivariance*): a beable ensemble
//! started Born-distributed stays Born-distributed.  Measurements are
//! *faithful* — they record the beable as it is — and *invasive*: the
//! pilot is projected onto the recorded well, which redirects the guiding
//! current for everything that follows.
//!
//! The rates diverge where a well amplitude passes through zero (at phase
//! `π` from an eigenstate, `t(R→L) = tan(τ/2)`).  Two node policies keep
//! the discrete-time simulation honest there: [`NodePolicy::Adaptive`]
//! halves the substep until the per-step jump probability is small (the
//! default), [`NodePolicy::Clamp`] simply caps the probability and
//! accepts a small leakage of trajectories past the node.

use crate::error::{Error, Result};
use crate::quantum::{EnsembleState, Outcome, PureState};
use rand::Rng;

/// Smallest substep the adaptive node policy will take before giving up
/// and clamping the jump probability.
pub const DT_MIN: f64 = 1e-9;

/// How the integrator handles the rate divergence at wavefunction nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodePolicy {
    /// Keep the nominal step and cap the per-step jump probability at
    /// `rate_cap`.  Cheap, but lets a fraction `~rate_cap²/4` of the
    /// affected trajectories leak past a node without jumping.
    Clamp,
    /// Halve the substep until `rate · h ≤ rate_cap` (or `h` reaches
    /// [`DT_MIN`], after which the probability is capped as in `Clamp`).
    /// Leakage becomes negligible (`~1e−16` per node crossing).
    Adaptive,
}

/// Integration parameters for [`simulate_trajectory`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeableConfig {
    /// Nominal phase step of the integrator.
    pub dt: f64,
    /// Node handling; see [`NodePolicy`].
    pub node_policy: NodePolicy,
    /// Upper bound on the per-substep jump probability (and the adaptive
    /// subdivision target).  Must lie in `(0, 1)`.
    pub rate_cap: f64,
    /// Base seed; ensemble runners derive one independent stream per
    /// trajectory from it.
    pub seed: u64,
}

impl BeableConfig {
    /// Builds and validates a configuration.
    ///
    /// # Errors
    ///
    /// [`Error::InvalidArgument`] unless `0 < dt` (finite) and
    /// `0 < rate_cap < 1`.
    pub fn new(dt: f64, node_policy: NodePolicy, rate_cap: f64, seed: u64) -> Result<Self> {
        let cfg = Self {
            dt,
            node_policy,
            rate_cap,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks the field invariants listed on [`BeableConfig::new`].
    ///
    /// # Errors
    ///
    /// [`Error::InvalidArgument`] on the first violated invariant.
    pub fn validate(&self) -> Result<()> {
        if !self.dt.is_finite() || self.dt <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "dt must be finite and positive, got {}",
                self.dt
            )));
        }
        if !self.rate_cap.is_finite() || self.rate_cap <= 0.0 || self.rate_cap >= 1.0 {
            return Err(Error::InvalidArgument(format!(
                "rate_cap must lie strictly between 0 and 1, got {}",
                self.rate_cap
            )));
        }
        Ok(())
    }
}

impl Default for BeableConfig {
    /// `dt = 1e-3`, adaptive node policy, `rate_cap = 0.1`, seed 0.
    fn default() -> Self {
        Self {
            dt: 1e-3,
            node_policy: NodePolicy::Adaptive,
            rate_cap: 0.1,
            seed: 0,
        }
    }
}

/// The probability current `j = Im(conj(amp_L)·amp_R) = dp_L/dτ` of the
/// pilot state.  Positive when probability flows right → left.
pub fn quantum_current(state: &PureState) -> f64 {
    (state.amp_left().conj() * state.amp_right()).im
}

/// Directed beable transition rates derived from one pilot state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePair {
    /// Rate of `R → L` jumps, `max(0, j)/p_R`.
    pub l_from_r: f64,
    /// Rate of `L → R` jumps, `max(0, −j)/p_L`.
    pub r_from_l: f64,
}

impl RatePair {
    /// The rate at which a beable currently in `beable`'s well leaves it.
    pub fn out_of(&self, beable: Outcome) -> f64 {
        match beable {
            Outcome::Plus => self.l_from_r,
            Outcome::Minus => self.r_from_l,
        }
    }
}

/// The minimal (one-directional) jump rates for a pilot state.
///
/// At most one of the two rates is nonzero.  At a node of the source
/// well the rate diverges (e.g. `tan(τ/2) → ∞` as `τ → π` from `|R⟩`);
/// the integrator's node policy is responsible for handling this.
pub fn bell_rates(state: &PureState) -> RatePair {
    let j = quantum_current(state);
    let born = state.born_probabilities();
    if j > 0.0 {
        RatePair {
            l_from_r: j / born.p_right,
            r_from_l: 0.0,
        }
    } else if j < 0.0 {
        RatePair {
            l_from_r: 0.0,
            r_from_l: -j / born.p_left,
        }
    } else {
        RatePair {
            l_from_r: 0.0,
            r_from_l: 0.0,
        }
    }
}

/// Equivariance defect at phase `tau` along the free evolution of `|R⟩`:
/// the absolute difference between the exact Born flow `dp_L/dτ = ½ sin τ`
/// and the net beable flow `t(R→L)·p_R − t(L→R)·p_L` implied by
/// [`bell_rates`].  Identically zero up to rounding; a nonzero value
/// would indicate the rates no longer transport the Born distribution.
///
/// # Errors
///
/// [`Error::NonFinitePhase`] if `tau` is not finite.
pub fn master_equation_residual(tau: f64) -> Result<f64> {
    let state = PureState::right().evolved(tau)?;
    let born = state.born_probabilities();
    let rates = bell_rates(&state);
    let beable_flow = rates.l_from_r * born.p_right - rates.r_from_l * born.p_left;
    Ok((0.5 * tau.sin() - beable_flow).abs())
}

/// Draws the classical branch and the initial beable for one trajectory:
/// the branch by its ensemble weight, the beable from the branch's Born
/// probabilities.  Always consumes exactly two uniform variates.
pub fn sample_initial_beable(initial: &EnsembleState, rng: &mut impl Rng) -> (usize, Outcome) {
    let branches = initial.branches();
    let mut branch = branches.len() - 1;
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, (weight, _)) in branches.iter().enumerate() {
        acc += weight;
        if u < acc {
            branch = i;
            break;
        }
    }
    let p_right = branches[branch].1.born_probabilities().p_right;
    let v: f64 = rng.gen();
    let beable = if v < p_right {
        Outcome::Plus
    } else {
        Outcome::Minus
    };
    (branch, beable)
}

/// What happened at one recorded instant of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    /// The beable hopped to the other well; the pilot is unaffected.
    Jump,
    /// The beable was read out and the pilot projected onto its well.
    Measurement,
}

/// One recorded event of a [`BeableTrajectory`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryEvent {
    /// Phase at which the event occurred.
    pub phase: f64,
    /// Jump or measurement.
    pub kind: EventKind,
    /// Beable value immediately after the event.
    pub beable_after: Outcome,
    /// Pilot state immediately after the event.
    pub pilot_after: PureState,
}

/// A complete simulated history: initial conditions plus the ordered
/// list of jumps and measurements.
#[derive(Debug, Clone, PartialEq)]
pub struct BeableTrajectory {
    /// Index of the ensemble branch this trajectory was drawn from.
    pub branch: usize,
    /// Beable value at phase 0.
    pub initial_beable: Outcome,
    /// Pilot state at phase 0 (the drawn branch).
    pub initial_pilot: PureState,
    /// Jumps and measurements in non-decreasing phase order.
    pub events: Vec<TrajectoryEvent>,
}

impl BeableTrajectory {
    /// The beable value at `phase` (events at exactly `phase` count as
    /// already having happened).
    pub fn beable_at(&self, phase: f64) -> Outcome {
        let mut current = self.initial_beable;
        for event in &self.events {
            if event.phase > phase {
                break;
            }
            current = event.beable_after;
        }
        current
    }

    /// The recorded measurement outcomes, in measurement order.
    pub fn measurement_outcomes(&self) -> Vec<Outcome> {
        self.events
            .iter()
            .filter(|event| event.kind == EventKind::Measurement)
            .map(|event| event.beable_after)
            .collect()
    }

    /// Number of beable jumps along the trajectory.
    pub fn jump_count(&self) -> usize {
        self.events
            .iter()
            .filter(|event| event.kind == EventKind::Jump)
            .count()
    }
}

/// Simulates one beable trajectory from phase 0 to `horizon`, reading the
/// beable out (and collapsing the pilot) at each of `measurement_phases`.
///
/// The phases must be non-decreasing — repeats are allowed and model
/// back-to-back measurements, which trivially agree because nothing
/// evolves in between — and must lie in `[0, horizon]`.  An empty slice
/// simulates free (unmeasured) dynamics, which is how occupation
/// profiles for equivariance checks are produced.
///
/// Between targets the integrator takes substeps of at most `cfg.dt`:
/// it evaluates [`bell_rates`] at the substep start, applies the node
/// policy, draws a jump with probability `1 − exp(−rate·h)` (capped at
/// `cfg.rate_cap`), advances the pilot by the half-angle rotation for
/// `h`, and lands on every target phase exactly.
///
/// # Errors
///
/// [`Error::InvalidArgument`] for an invalid `cfg`,
/// [`Error::NonFinitePhase`] / [`Error::InvalidSchedule`] /
/// [`Error::PhaseOrder`] for an invalid horizon or phase list.
pub fn simulate_trajectory(
    initial: &EnsembleState,
    measurement_phases: &[f64],
    horizon: f64,
    cfg: &BeableConfig,
    rng: &mut impl Rng,
) -> Result<BeableTrajectory> {
    cfg.validate()?;
    if !horizon.is_finite() || horizon < 0.0 {
        return Err(Error::InvalidSchedule(format!(
            "horizon must be finite and non-negative, got {horizon}"
        )));
    }
    for (i, &phase) in measurement_phases.iter().enumerate() {
        if !phase.is_finite() {
            return Err(Error::NonFinitePhase(phase));
        }
        if phase < 0.0 || phase > horizon {
            return Err(Error::InvalidSchedule(format!(
                "measurement phase {phase} lies outside [0, {horizon}]"
            )));
        }
        if i > 0 && phase < measurement_phases[i - 1] {
            return Err(Error::PhaseOrder {
                earlier: measurement_phases[i - 1],
                later: phase,
            });
        }
    }

    let (branch, mut beable) = sample_initial_beable(initial, rng);
    let mut pilot = initial.branches()[branch].1;
    let initial_beable = beable;
    let initial_pilot = pilot;
    let mut events = Vec::new();

    let (sin_dt, cos_dt) = (0.5 * cfg.dt).sin_cos();
    let adaptive = cfg.node_policy == NodePolicy::Adaptive;
    let mut tau = 0.0;

    let targets = measurement_phases
        .iter()
        .map(|&phase| (phase, true))
        .chain(std::iter::once((horizon, false)));
    for (target, is_measurement) in targets {
        let mut remaining = target - tau;
        while remaining > 0.0 {
            let mut h = cfg.dt.min(remaining);
            let rate = bell_rates(&pilot).out_of(beable);
            if adaptive {
                while rate * h > cfg.rate_cap && h > DT_MIN {
                    h *= 0.5;
                }
            }
            // Sampling is skipped entirely for a dead channel, which is
            // the common case for half of every node-to-node stretch.
            let jump = rate > 0.0 && {
                let p = (-(-rate * h).exp_m1()).min(cfg.rate_cap);
                rng.gen::<f64>() < p
            };
            let (sin_h, cos_h) = if h == cfg.dt {
                (sin_dt, cos_dt)
            } else {
                (0.5 * h).sin_cos()
            };
            pilot = pilot.rotated(cos_h, sin_h);
            remaining -= h;
            if jump {
                beable = beable.flipped();
                events.push(TrajectoryEvent {
                    phase: target - remaining,
                    kind: EventKind::Jump,
                    beable_after: beable,
                    pilot_after: pilot,
                });
            }
        }
        tau = target;
        if is_measurement {
            pilot = beable.eigenstate();
            events.push(TrajectoryEvent {
                phase: tau,
                kind: EventKind::Measurement,
                beable_after: beable,
                pilot_after: pilot,
            });
        }
    }

    Ok(BeableTrajectory {
        branch,
        initial_beable,
        initial_pilot,
        events,
    })
}
