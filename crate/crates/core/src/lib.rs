//! Numerical toolkit for the three-parameter deformed Virasoro algebra.
//!
//! The crate realizes the free-field currents on level-truncated two-color
//! Fock modules, evaluates the local (`I_n`) and nonlocal (`G_n`) integrals
//! of motion at small order, and certifies the algebraic identities the
//! construction rests on: defining relations, normal-ordering factors,
//! elliptic theta identities, commutativity, and Dynkin invariance.
//!
//! Modules follow the subsystem split:
//! - [`qseries`]: q-products, Jacobi theta functions, bracket symbols.
//! - [`structure`]: scalar structure functions (f/g/h/s families, constants).
//! - [`fock`]: the two-color bosonic Fock space and its bilinear pairing.
//! - [`currents`]: declarative vertex operators, normal ordering, matrix
//!   elements as truncated Laurent windows, relation residuals.
//! - [`identities`]: standalone numerical certification of theta identities.
//! - [`im`]: integrals of motion, constant-term and contour evaluation,
//!   s=2 specialization combinatorics.
//! - [`report`]: machine-readable verification reports.

pub mod error;
pub mod par;
pub mod qseries;
pub mod series;
pub mod window;
pub mod structure;
pub mod fock;
pub mod currents;
pub mod identities;
pub mod im;
pub mod report;

pub use error::{DvaError, Result};
pub use qseries::Params;

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
