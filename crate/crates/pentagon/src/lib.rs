//! Numerical special functions for three-dimensional supersymmetric
//! partition functions, and a harness that checks the integral pentagon
//! identities they satisfy.
//!
//! The numeric core ([`qseries`], [`quadrature`], [`doublesine`]) is generic
//! over the real scalar via [`Real`]; the identity registry works in `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod doublesine;
pub mod error;
pub mod identities;
pub mod qseries;
pub mod quadrature;
mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;

pub use num_complex::Complex;

pub type Complex64 = Complex<f64>;
pub type Nome64 = qseries::Nome<f64>;
pub type Policy64 = qseries::TruncationPolicy<f64>;
pub type Squashing64 = doublesine::SquashingParameter<f64>;
pub type Quadrature64 = quadrature::QuadratureResult<f64>;
