use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A parameter violates one of its stated invariants.
    InvalidParameter(String),
    /// Initial data rejected (sign, support or compatibility condition).
    InvalidData(String),
    /// Adaptive quadrature did not reach its tolerance within the subdivision budget.
    QuadratureFailure { subdivisions: usize, error_estimate: f64 },
    /// The value is positive but not representable as an `f64`.
    Underflow,
    /// A least-squares fit was refused because too few points were usable.
    FitRefused { usable: usize, required: usize },
    /// The discretization went unstable (as opposed to physical blow-up).
    NumericalFailure(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::InvalidData(msg) => write!(f, "invalid initial data: {msg}"),
            Error::QuadratureFailure { subdivisions, error_estimate } => write!(
                f,
                "quadrature did not converge after {subdivisions} subdivisions (error estimate {error_estimate:e})"
            ),
            Error::Underflow => f.write_str("value underflows f64; use the logarithmic form"),
            Error::FitRefused { usable, required } => write!(
                f,
                "fit refused: {usable} usable blow-up samples, at least {required} required"
            ),
            Error::NumericalFailure(msg) => write!(f, "numerical failure: {msg}"),
        }
    }
}

impl core::error::Error for Error {}

macro_rules! invalid {
    ($($arg:tt)*) => {
        $crate::error::Error::InvalidParameter(alloc::format!($($arg)*))
    };
}
pub(crate) use invalid;
