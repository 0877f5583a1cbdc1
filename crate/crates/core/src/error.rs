use thiserror::Error;

/// Errors raised by the dynamics, prediction and simulation layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("gimbal lock: {what} = {value:.12} rad is outside the open interval (-pi/2, pi/2)")]
    GimbalLock { what: &'static str, value: f64 },

    #[error("degenerate LOS range rho = {0}")]
    DegenerateRange(f64),

    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("Hessian is not positive definite")]
    NotPositiveDefinite,

    #[error("QP is infeasible and no soft rows are available ({0})")]
    QpInfeasible(&'static str),

    #[error("invalid parameter: {0}")]
    Validation(String),

    #[error("scenario mismatch: {0}")]
    ScenarioMismatch(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("I/O error: {0}")]
    Io(String),
}

impl Error {
    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_) | Error::Parse(_) | Error::ScenarioMismatch(_) => 2,
            Error::QpInfeasible(_) => 4,
            Error::Io(_) => 1,
            _ => 3,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(Error::Validation("x".into()).exit_code(), 2);
        assert_eq!(Error::Parse("x".into()).exit_code(), 2);
        assert_eq!(Error::QpInfeasible("position").exit_code(), 4);
        assert_eq!(Error::GimbalLock { what: "theta", value: 1.6 }.exit_code(), 3);
        assert_eq!(Error::DegenerateRange(0.0).exit_code(), 3);
        assert_eq!(Error::NonFinite("x").exit_code(), 3);
    }
}
