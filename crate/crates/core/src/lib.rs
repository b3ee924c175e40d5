//! Low-degree MMSE oracle, lower-bound calculus and tensor-network estimator for
//! decomposing random order-`k` tensors `T = sum_j lambda_j a_j^{(x)k}` with `a_j` uniform in `{+-1}^n`.
//!
//! Most routines are generic over [`Scalar`]; the aliases below fix the two precisions
//! used in practice.

pub mod bound;
pub mod coeffmap;
pub mod combinat;
pub mod error;
pub mod estimator;
pub mod expander;
pub mod harness;
pub mod linalg;
pub mod model;
pub mod oracle;
pub mod scalar;
pub mod seeds;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Exact arithmetic.
pub type Rational = num_rational::BigRational;
pub type ExactMatrix = linalg::SparseMatrix<Rational>;
pub type FloatMatrix = linalg::SparseMatrix<f64>;
pub type ExactVTable = bound::VTable<Rational>;
