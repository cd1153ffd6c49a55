//! A desk-scale numerical laboratory for sequential measurements on a
//! two-level system (a particle tunnelling between the two wells of a
//! symmetric double-well potential, with `Q = ±1` labelling the occupied
//! well).
//!
//! The crate has two halves that answer the same questions by different
//! means and are meant to be compared against each other:
//!
//! * **Analytic half** — [`quantum`] evolves pure states and applies
//!   projective collapse; [`stats`] turns measurement schedules into exact
//!   joint outcome distributions, marginal expectations and the signalling
//!   measure Δ₀; [`inequalities`] evaluates the Leggett–Garg inequality,
//!   the Suppes–Zanotti bounds, their signalling-corrected modification,
//!   and a brute-force coupling construction that decides contextuality
//!   independently of the closed-form criterion.
//! * **Stochastic half** — [`beable`] simulates trajectories of a hidden
//!   well coordinate driven by the minimal jump rates compatible with the
//!   quantum probability current, and [`harness`] runs trajectory
//!   ensembles, reduces them into empirical tables with standard errors,
//!   and lines the results up with the analytic predictions.
//!
//! [`report`] serialises every result table to CSV/JSON in a canonical,
//! byte-reproducible form.
//!
//! # Example
//!
//! Maximal violation of the Leggett–Garg inequality at equal spacings of
//! 2π/3, together with the signalling measure of the same experiment:
//!
//! ```
//! use lglab_core::inequalities::{modified_evaluate, CorrelatorTriple};
//! use lglab_core::quantum::{EnsembleState, PureState};
//! use lglab_core::stats::{delta0, Scenario};
//!
//! let spacing = 2.0 * std::f64::consts::FRAC_PI_3;
//! let correlators = CorrelatorTriple::from_spacings(spacing, spacing)?;
//! let initial = EnsembleState::pure(PureState::right());
//! let signalling = delta0(&initial, 0.0, spacing, 2.0 * spacing, Scenario::SeparatePairs)?;
//! let report = modified_evaluate(&correlators, signalling.delta0)?;
//!
//! assert!((report.lg_lhs + 0.5).abs() < 1e-12); // maximal violation
//! assert!(!report.lg_satisfied);
//! assert!((report.delta0 - 0.375).abs() < 1e-12);
//! assert!(report.modified_satisfied); // signalling accounts for it
//! # Ok::<(), lglab_core::Error>(())
//! ```

pub mod beable;
pub mod error;
pub mod harness;
pub mod inequalities;
pub mod quantum;
pub mod report;
pub mod stats;

pub use error::{Error, Result};
