//! Bicomplex proportional fractional calculus with weighted Cauchy-Riemann
//! operators, and quadrature checks of the integral identities that hold
//! for them.

// Comparisons are written `!(a < b)` on purpose so NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod expr;
pub mod frac_cr;
pub mod fracops1d;
pub mod hypercomplex;
pub mod oracle;
pub mod quadrature;
pub mod runner;
pub mod verify;
pub mod weighted_cr;

pub use error::{Error, Result};
pub use hypercomplex::{BicomplexNumber, HyperbolicNumber};
