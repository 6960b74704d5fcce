//! Two-step explicit-implicit time stepping (BDF2 with a one-leg extrapolated
//! Jacobian) for two-dimensional double-diffusive convection in a periodic
//! channel, written in vorticity-streamfunction form, plus the stability and
//! monitoring tools that go with it and a periodic Navier-Stokes test solver.
// `!(x > 0.0)` is used on purpose: it rejects NaN along with the bad range.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod elliptic;
pub mod error;
pub mod grid;
pub mod gstability;
pub mod initial;
pub mod lifting;
pub mod model;
pub mod nonlinear;
pub mod nse2d;
pub mod periodic;
pub mod stepper;

pub use error::{Error, Result};
pub use grid::{Field, FieldKind, Grid, L2Space};
pub use lifting::Lifting;
pub use model::{BoundaryFlux, ConstantsConfig, FourierMode, Params, State, Variable};
pub use periodic::PeriodicGrid;
pub use stepper::Stepper;
