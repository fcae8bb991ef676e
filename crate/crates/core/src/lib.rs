//! Quantification of pairwise interactions from ternary class codes.

pub mod datasets;
pub mod error;
pub mod linalg;
pub mod model;
pub mod qqr;
pub mod solver;
pub mod spectral;

pub use error::{Error, Result};
pub use linalg::{Matrix, SymEig};
pub use model::{
    delta_of, parse_classification, validate, BoundsMode, ClassificationMatrix, DataFormat,
    PairClass, QqrConfig, Restriction,
};
pub use qqr::{quantify, QqrResult};
pub use solver::{SolverSettings, Status};
