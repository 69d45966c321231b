use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("N must be even (got {0})")]
    OddSize(usize),
    #[error("N must be at least 4 on every active axis (got {0})")]
    SizeTooSmall(usize),
    #[error("degenerate interval [{0}, {1}]")]
    EmptyRange(f64, f64),
    #[error("mesh functions live on different grids")]
    GridMismatch,
    #[error("axis {0:?} is not active on this grid")]
    InactiveAxis(crate::mesh::Axis),
    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("mesh function contains a non-finite value at index {0}")]
    NonFiniteValue(usize),

    #[error("imaginary residue {residue:e} exceeds tolerance {limit:e}; symbol is not conjugate-symmetric")]
    SymmetryViolation { residue: f64, limit: f64 },
    #[error("dense oracle limited to 64 grid points, grid has {0}")]
    OracleTooLarge(usize),

    #[error("invalid scheme configuration: {0}")]
    InvalidConfig(String),
    #[error("fixed-point iteration did not converge after {iterations} sweeps (last difference {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("iterate became non-finite at sweep {0}")]
    NonFinite(usize),
    #[error("final time {t_final} is not an integer multiple of tau = {tau}")]
    NotMultipleOfStep { t_final: f64, tau: f64 },
    #[error("state has no previous time level; call first_step before step")]
    MissingHistory,

    #[error("unknown problem {0:?} (expected soliton1d, manufactured2d or periodic2d)")]
    UnknownProblem(String),
    #[error("problem {0:?} has no exact solution")]
    NoExactSolution(String),
    #[error("problem {0:?} has a source term, momentum is not conserved")]
    ForcedProblem(String),
    #[error("invalid sweep: {0}")]
    InvalidSweep(String),
    #[error("row {index} ({resolution}) failed: {source}")]
    Row {
        index: usize,
        resolution: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by bad input rather than by the computation.
    pub fn is_usage(&self) -> bool {
        match self {
            Error::OddSize(_)
            | Error::SizeTooSmall(_)
            | Error::EmptyRange(..)
            | Error::InvalidConfig(_)
            | Error::NotMultipleOfStep { .. }
            | Error::UnknownProblem(_)
            | Error::NoExactSolution(_)
            | Error::ForcedProblem(_)
            | Error::InvalidSweep(_) => true,
            Error::Row { source, .. } => source.is_usage(),
            _ => false,
        }
    }
}
