use thiserror::Error;

/// Errors produced anywhere in the design pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got} ({context})")]
    DimensionMismatch {
        expected: usize,
        got: usize,
        context: &'static str,
    },
    #[error("matrix is singular (pivot magnitude {pivot:e})")]
    Singular { pivot: f64 },
    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },
    #[error("matrix entries must be finite")]
    NonFinite,
    #[error("feasible region is empty: {0}")]
    Infeasible(String),
    #[error("allocation is not in the feasible region: {0}")]
    OutsideRegion(String),
    #[error("parameter outside the link domain: {0}")]
    Domain(String),
    #[error("parameter vector is not in the model's parameter space: {0}")]
    InfeasibleParameter(String),
    #[error("no allocation with positive determinant found in the region")]
    NoPositiveStart,
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("unknown {kind} '{name}'")]
    Unknown { kind: &'static str, name: String },
    #[error("design matrix is rank deficient")]
    RankDeficient,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(expected: usize, got: usize, context: &'static str) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            expected,
            got,
            context,
        })
    }
}
