use std::fmt;

/// Errors raised by the solver, the simulators and the data readers.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid time step {dt}: 1/dt must be a whole number of steps")]
    InvalidTimeStep { dt: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("simulation diverged on path {path} at step {step}: state {state}")]
    Diverged {
        path: usize,
        step: usize,
        state: StateDump,
    },

    #[error(
        "Gram matrix factorization failed with jitter up to {max_jitter:e} \
         (size {size}, diagonal range [{min_diag:e}, {max_diag:e}])"
    )]
    Factorization {
        size: usize,
        max_jitter: f64,
        min_diag: f64,
        max_diag: f64,
    },

    #[error("{0}")]
    Numerical(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// A state vector carried in an error message.
#[derive(Debug, Clone, PartialEq)]
pub struct StateDump(pub Vec<f64>);

impl fmt::Display for StateDump {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, "]")
    }
}

impl Error {
    /// True for failures of the numerics (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonFinite(_) | Error::Diverged { .. } | Error::Factorization { .. } | Error::Numerical(_)
        )
    }
}
