//! Numerical toolkit for a bistable two-species competition-diffusion
//! Lotka-Volterra system with space-periodic coefficients:
//!
//! ```text
//! du1/dt =   d2u1/dx2 + u1 f1(u1, x) - k u1 u2
//! du2/dt = d d2u2/dx2 + u2 f2(u2, x) - a k u1 u2
//! ```
//!
//! with `f_i(u, x) = mu_i(x) - nu_i(x) u` and L-periodic positive
//! coefficients. The toolkit computes:
//!
//! * extinction states (the single-species logistic equilibria),
//! * periodic principal eigenvalues of the scalar and coupled
//!   linearized operators, and the Dirichlet radius map,
//! * periodic coexistence states, their stability classification and
//!   instability certificates,
//! * time integration of the parabolic system, its monotone
//!   (cooperative) transform and the associated time-t solution map,
//! * pulsating fronts on long multi-period domains, front speeds and
//!   counter-propagation bounds,
//! * the strong-competition segregation limit (the kinked scalar
//!   equations for `a u1 - d u2`) and k-sweeps.
//!
//! Everything operates on plain `f64` grids at desk scale; results are
//! deterministic for a fixed scenario and seed.

pub mod asymptotics;
pub mod error;
pub mod evolution;
pub mod eigen;
pub mod front;
pub mod grid;
pub mod linalg;
pub mod model;
pub mod scenario;
pub mod stationary;

pub use error::{Error, Result};
pub use eigen::{CoopOperator, EigenResult, Radius};
pub use grid::{Field, Interval, PeriodicGrid};
pub use model::{HypothesisReport, ReactionSpec, Species, SystemParams, TrigSeries};
pub use scenario::{Scenario, Tolerances};
pub use stationary::{StatePair, StationaryReport};
