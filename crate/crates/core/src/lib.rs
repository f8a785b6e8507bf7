//! Lower and upper bounds for finite-horizon stochastic optimal control.
//!
//! The lower bound comes from the martingale-dual representation of the value
//! function: a penalty `∫ z(t, X_t) dW_t` is subtracted inside the expectation,
//! the Brownian path is replaced by a truncated Karhunen–Loève series, and the
//! resulting deterministic control problem is solved one path at a time, either
//! by a damped forward–backward Pontryagin sweep ([`pontryagin`]) or by
//! maximising the generalized Hopf objective over the initial adjoint
//! ([`hopf`]). Upper bounds come from simulating any feedback control
//! ([`primal`]). [`estimator`] wraps both in Monte Carlo loops with
//! confidence intervals and [`reference`] provides the independent oracles.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod estimator;
pub mod hamiltonian;
pub mod hopf;
pub mod noise;
pub mod numeric;
pub mod pontryagin;
pub mod primal;
pub mod problem;
pub mod reference;
pub mod rng;

pub use error::{Error, Result};
pub use estimator::{BoundEstimate, GapReport, Method};
pub use hamiltonian::{MartingaleModel, PathwiseContext, ZeroModel};
pub use hopf::{HopfConfig, HopfResult};
pub use noise::NoisePath;
pub use pontryagin::{SweepConfig, Trajectory};
pub use problem::{Conjugate, ControlBox, ControlProblem};

/// Dense column vector used throughout the crate.
pub type Vector = nalgebra::DVector<f64>;
/// Dense matrix used throughout the crate.
pub type Matrix = nalgebra::DMatrix<f64>;
