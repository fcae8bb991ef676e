use thiserror::Error;

use crate::model::ValidationError;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not symmetric (max asymmetry {0:.3e})")]
    NotSymmetric(f64),

    #[error("matrix dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("parse error at row {row}, column {col}: {msg}")]
    Parse { row: usize, col: usize, msg: String },

    #[error("unknown class code {code:?} at row {row}, column {col}")]
    UnknownCode { row: usize, col: usize, code: String },

    #[error("asymmetric input: ({row}, {col}) is {lower} below the diagonal but {upper} above it")]
    Asymmetry {
        row: usize,
        col: usize,
        lower: String,
        upper: String,
    },

    #[error("invalid classification data: {}", format_validation(.0))]
    Validation(Vec<ValidationError>),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("problem is infeasible (phase-1 margin {margin:.3e})")]
    Infeasible { margin: f64 },

    #[error("iteration limit reached after {iterations} iterations (primal {primal_residual:.3e}, dual {dual_residual:.3e})")]
    IterationLimit {
        iterations: usize,
        primal_residual: f64,
        dual_residual: f64,
    },

    #[error("bracket [{lo}, {hi}] does not straddle the feasibility border (margins {margin_lo:.3e}, {margin_hi:.3e})")]
    Bracket {
        lo: f64,
        hi: f64,
        margin_lo: f64,
        margin_hi: f64,
    },

    #[error("pseudo degrees of freedom table built for n={table}, matrix has n={matrix} (or too few terms)")]
    DfMismatch { table: usize, matrix: usize },

    #[error("invalid grid: {0}")]
    Spec(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn format_validation(errs: &[ValidationError]) -> String {
    errs.iter()
        .map(|e| e.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

pub type Result<T> = std::result::Result<T, Error>;
