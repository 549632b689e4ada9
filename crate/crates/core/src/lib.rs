//! Time-scale calculus and SICA HIV dynamics on finite-horizon time scales.
//!
//! The crate is organised bottom-up:
//!
//! * [`timescale`] – finite unions of closed intervals and isolated points, the jump
//!   operators, graininess, circle algebra, the generalized exponential and the delta
//!   derivative.
//! * [`signal`] – bounded almost periodic contact-rate signals and finite-horizon
//!   translation-number searches.
//! * [`model`] – SICA parameters, compartment state, force of infection and the
//!   one-step dynamics (dense right-hand side and the exact right-scattered update).
//! * [`analysis`] – permanence bounds, the stability certificate, the Lyapunov
//!   distance and the comparison-inequality check.
//! * [`integrator`] – trajectories over arbitrary time scales plus the empirical
//!   permanence and contraction checks.
//! * [`scalar`] – the numeric type used for compartment values, including an
//!   extended-exponent float for long discrete runs whose infective compartments fall
//!   below the `f64` range.

pub mod analysis;
pub mod error;
pub mod integrator;
pub mod model;
pub mod scalar;
pub mod signal;
pub mod timescale;

pub use analysis::{
    certificate, check_h1, lower_bounds, lyapunov_v, upper_bounds, verify_comparison,
    ComparisonReport, Direction, H1Report, PermanenceBounds, Series, StabilityCertificate,
};
pub use error::{Error, Result};
pub use integrator::{
    pair_convergence, permanence_check, simulate, PairReport, PermanenceReport, SolverConfig,
    Trajectory,
};
pub use model::{
    contact_rate, disease_free_equilibrium, rhs_dense, scattered_step, ContactRateMode,
    SicaParams, State,
};
pub use scalar::{Scalar, Wide};
pub use signal::{AlmostPeriodicSignal, SineTerm};
pub use timescale::{GridPoint, QuadratureConfig, QuadratureRule, Segment, TimeFunction, TimeScale};
