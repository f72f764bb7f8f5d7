//! Block LDU factorization of checkerboard Gram matrices (all entries with
//! even `i + j` zero), the matrix biorthogonal polynomials they generate,
//! the Christoffel transformation `M -> ΛM`, and Christoffel-Darboux
//! kernels.
//!
//! Everything is generic over [`Scalar`]; use [`Rational`] for exact
//! identities and `f64` for quick numerical runs.

pub mod christoffel;
pub mod error;
pub mod gram;
pub mod kernels;
pub mod ldu;
pub mod linalg;
pub mod polys;
pub mod report;
pub mod scalar;

pub use error::{Error, Result};
pub use linalg::{BlockMatrix, Matrix};
pub use polys::{MatrixPolynomial, Parity, PolynomialFamily};
pub use report::{CheckRecord, Report};
pub use scalar::{Rational, Scalar, DEFAULT_TOLERANCE};
