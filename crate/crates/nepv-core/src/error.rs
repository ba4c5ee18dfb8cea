//! Error type shared by the matrix kernels and solvers.

use alloc::string::String;
use core::fmt;

/// Failure modes of the numerical kernels and solver drivers.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Matrix or vector shapes do not conform for the requested operation.
    Dimension(String),
    /// A factorization or solve hit a singular (or non-positive-definite) pivot.
    Singular(String),
    /// An iterative kernel exceeded its iteration budget without reaching
    /// its tolerance. Solver drivers report non-convergence through their
    /// trace instead; this variant is for inner kernels where continuing
    /// silently would poison downstream results.
    NoConvergence(String),
    /// The model does not support the requested operation (for example a
    /// derivative request on a model without exact derivative when finite
    /// differences are disabled, or SCF on a generalized problem whose G is
    /// not symmetric positive definite).
    Capability(String),
    /// Invalid argument outside shape errors: empty input, bad fraction,
    /// a dataset with the wrong number of classes.
    InvalidInput(String),
    /// A numerical degeneracy that makes the result meaningless: NaN in the
    /// input, a zero denominator at a non-differentiable point.
    Numerical(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Dimension(msg) => write!(f, "dimension error: {msg}"),
            Error::Singular(msg) => write!(f, "singular matrix: {msg}"),
            Error::NoConvergence(msg) => write!(f, "no convergence: {msg}"),
            Error::Capability(msg) => write!(f, "unsupported operation: {msg}"),
            Error::InvalidInput(msg) => write!(f, "invalid input: {msg}"),
            Error::Numerical(msg) => write!(f, "numerical degeneracy: {msg}"),
        }
    }
}

impl core::error::Error for Error {}
