//! Long-time asymptotic expansions of Lagrangian trajectories.
//!
//! A particle advected by a decaying velocity field
//! `u(x,t) ~ sum_n q_n(x,t) exp(-mu_n t)` converges to a limit point `x*`,
//! and its trajectory admits an expansion
//! `x(t) ~ x* + U0 t + sum_n zeta_n(t) exp(-mu_n t)` with polynomial
//! coefficients `zeta_n`. This crate computes those coefficients exactly
//! (or in double precision) and checks them against an independent
//! numerical trajectory.
//!
//! Module map:
//!
//! - [`semigroup`]: exact exponent lattice and index decompositions.
//! - [`polyvec`]: vector polynomials in time and the resolvent solver.
//! - [`field`]: velocity expansions and point derivative tensors.
//! - [`engine`]: the coefficient recursion and expansion evaluation.
//! - [`oracle`]: adaptive integration, limit estimation, decay fits.
//! - [`spectral2d`]: periodic 2D Navier-Stokes simulation.
//! - [`fixtures`]: standard fields with known trajectories.

pub mod engine;
pub mod error;
pub mod exec;
pub mod field;
pub mod fixtures;
pub mod oracle;
pub mod polyvec;
pub mod scalar;
pub mod semigroup;
pub mod spectral2d;

pub use engine::{compute_expansion, evaluate_expansion, galilean_compose, TrajectoryExpansion};
pub use error::{Error, Result};
pub use exec::Execution;
pub use field::{DerivativeTensor, FieldExpansion, PolyField, SpatialField, TrigField};
pub use polyvec::{resolvent_solve, Poly, PolyVec};
pub use scalar::{NumericMode, Rational, Scalar};
pub use semigroup::{build_semigroup, Decomposition, Exponent, Semigroup};

/// Crate version embedded in emitted reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
