//! Skew-orthogonal polynomials for even polynomial weights, with the quartic
//! weight `w(x) = exp(-(x⁴/4 + αx²/2))` as the worked case.
//!
//! Two independent pipelines produce the same recursion data: one evaluates
//! moment integrals, the other runs integral-free difference equations.

pub mod analysis;
pub mod bootstrap;
pub mod error;
pub mod moments;
pub mod num;
pub mod polynomials;
pub mod recursion_diffeq;
pub mod recursion_integral;
pub mod run;
pub mod weight;

pub use error::{Error, Result};
