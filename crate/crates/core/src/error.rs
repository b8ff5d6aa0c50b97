use alloc::string::String;
use core::fmt;

/// Errors raised by the optimization core.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A scenario value violates an invariant. `key` names the offending field.
    InvalidScenario { key: &'static str, reason: String },
    /// Operand shapes do not agree.
    DimensionMismatch { context: &'static str, expected: usize, found: usize },
    /// A distance that must be positive was not.
    NonPositiveDistance(f64),
    /// The channel matrix is (numerically) rank deficient.
    RankDeficient { condition: f64 },
    /// A linear system that should be solvable was singular.
    Singular(&'static str),
    /// Power allocation produced a negative or non-finite power; the SINR
    /// targets cannot be met with the given directions.
    InfeasibleTargets,
    /// An iterative method hit its iteration cap.
    NotConverged { method: &'static str, iterations: usize },
    /// A solver failed inside an outer loop; `iteration` is the outer index.
    AtIteration { iteration: usize, source: alloc::boxed::Box<Error> },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidScenario { key, reason } => write!(f, "invalid scenario `{key}`: {reason}"),
            Error::DimensionMismatch { context, expected, found } => {
                write!(f, "dimension mismatch in {context}: expected {expected}, found {found}")
            }
            Error::NonPositiveDistance(d) => write!(f, "distance must be positive, got {d}"),
            Error::RankDeficient { condition } => {
                write!(f, "channel matrix is rank deficient (condition number {condition:.3e})")
            }
            Error::Singular(what) => write!(f, "singular system in {what}"),
            Error::InfeasibleTargets => f.write_str("SINR targets infeasible for these directions"),
            Error::NotConverged { method, iterations } => {
                write!(f, "{method} did not converge in {iterations} iterations")
            }
            Error::AtIteration { iteration, source } => write!(f, "outer iteration {iteration}: {source}"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T, E = Error> = core::result::Result<T, E>;

pub(crate) fn check_dim(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { context, expected, found })
    }
}
