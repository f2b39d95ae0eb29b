//! Numerical workbench for m-dissipative impedance boundary conditions.
//!
//! The crate realizes boundary-tuple extension theory on finite models:
//! Green-identity checks for abstract trace maps, the Cayley correspondence
//! between accretive impedance operators and contractions, m-dissipativity
//! certificates, compactness gates for pointwise multipliers between
//! fractional Sobolev spaces on the circle, analytic spectra of a damped
//! string and an impedance disk, and a P1 finite-element discretization of
//! the acoustic eigenproblem on polygons.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod boundary;
pub mod error;
pub mod extensions;
pub mod fem;
pub mod linalg;
pub mod model_problems;
pub mod quadrature;
pub mod report;
pub mod sobolev;
pub mod spectrum;

pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, GramMatrix};
pub use spectrum::{SpectrumEntry, SpectrumReport};

/// Scalar type used throughout.
pub type C64 = num_complex::Complex64;

pub(crate) const I: C64 = C64::new(0.0, 1.0);

pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}
