//! Semi-proximal ADMM for convex composite quadratic conic programs.
//!
//! The crate is organised bottom-up:
//!
//! * [`matcone`] spectral calculus of the PSD/NSD cones,
//! * [`polyset`] box sets and their polyhedral cone calculus,
//! * [`model`] problem data, KKT residual maps and the restricted Wolfe dual,
//! * [`solver`] the generic two-block engine and its primal conic specialisation,
//! * [`sgs`] the symmetric Gauss-Seidel variant for the dual,
//! * [`diagnostics`] convergence constants, quadratic forms and inequality ledgers,
//! * [`vananalysis`] second-order condition verdicts at certified KKT points,
//! * [`generate`] and [`io`] seeded instance families and the text problem format.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod error;
pub mod generate;
pub mod io;
mod linalg;
pub mod matcone;
pub mod model;
pub mod polyset;
pub mod sgs;
pub mod solver;
pub mod vananalysis;

pub use error::{Error, Result};

/// Dense column vector used throughout.
pub type Vector = nalgebra::DVector<f64>;
/// Dense matrix used throughout.
pub type Matrix = nalgebra::DMatrix<f64>;
