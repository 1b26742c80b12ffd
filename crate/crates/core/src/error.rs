use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Operand dimensions do not agree.
    Shape(String),
    /// Cholesky hit a non-positive pivot.
    NotPositiveDefinite { pivot: usize, value: f64 },
    /// Argument outside the domain of the operation.
    Domain(String),
    /// A configuration value violates its invariant.
    Config(String),
    /// Training produced a non-finite loss.
    Diverged { epoch: usize, step: usize },
    /// GPR covariance could not be factorized.
    Model(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Shape(msg) => write!(f, "shape mismatch: {msg}"),
            Error::NotPositiveDefinite { pivot, value } => write!(
                f,
                "matrix is not positive definite: pivot {pivot} is {value:e}"
            ),
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::Config(msg) => write!(f, "invalid configuration: {msg}"),
            Error::Diverged { epoch, step } => write!(
                f,
                "training diverged (non-finite loss) at epoch {epoch}, step {step}"
            ),
            Error::Model(msg) => write!(f, "model error: {msg}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}

macro_rules! shape_err {
    ($($arg:tt)*) => { $crate::Error::Shape(alloc::format!($($arg)*)) };
}
macro_rules! domain_err {
    ($($arg:tt)*) => { $crate::Error::Domain(alloc::format!($($arg)*)) };
}
macro_rules! config_err {
    ($($arg:tt)*) => { $crate::Error::Config(alloc::format!($($arg)*)) };
}
pub(crate) use {config_err, domain_err, shape_err};
