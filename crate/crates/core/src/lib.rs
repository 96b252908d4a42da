//! Numerical laboratory for nonlocal Sobolev-type functionals and the
//! logarithmic Sobolev inequalities they control.
//!
//! * [`fields`] analytic test functions with exact metadata,
//! * [`quadrature`] reproducible Monte Carlo and deterministic radial engines,
//! * [`functionals`] nonlocal functionals, entropies and energies,
//! * [`inequalities`] per-instance checkers and admissible-constant extraction,
//! * [`limits`] the δ → 0 study,
//! * [`cli`] the configuration-driven command-line front end.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fields;
pub mod functionals;
pub mod inequalities;
pub mod limits;
pub mod cli;
pub mod quadrature;

pub use error::{Error, Result};
