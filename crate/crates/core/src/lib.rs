//! Numerical laboratory for the radial two-dimensional nonlinear Schrödinger
//! equation with harmonic confinement and inhomogeneous nonlinearity,
//!
//! ```text
//! i u_t + Δu − |x|² u + ε |x|^μ g(u) = 0,   g(u) = u G'(|u|²).
//! ```
//!
//! The crate computes ground states of `−Δφ + |x|²φ + φ = |x|^μ g(φ)`,
//! evolves the Cauchy problem with a mass-conserving Strang/Crank–Nicolson
//! scheme, evaluates the variational functionals (action, Nehari–Pohozaev
//! functionals, virial, dilation derivatives), and drives the experiments
//! that probe global existence, blow-up and instability of standing waves.

// `!(x > 0.0)` deliberately rejects NaN; stencil loops index several arrays.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod evolve;
pub mod functionals;
pub mod grid;
pub mod groundstate;
pub mod interp;
pub mod lab;
pub mod nonlin;
pub mod tridiag;

pub use error::{Error, Result};
pub use evolve::{DiagnosticsRecord, EvolveParams, EvolveState, Status};
pub use functionals::{Evaluation, FunctionalReport, KParts};
pub use grid::{Norms, RadialField, RadialGrid};
pub use groundstate::{GroundStateResult, ShootOutcome};
pub use nonlin::{ConditionReport, Family, NonlinearitySpec, Sign};

pub use num_complex::Complex64;
