use std::path::PathBuf;

use thiserror::Error;

use crate::model::{BranchId, BusId, ValidationReport};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("unknown bus {0}")]
    UnknownBus(BusId),
    #[error("case has no reference bus")]
    NoReferenceBus,
    #[error("invalid case:\n{0}")]
    Invalid(ValidationReport),
}

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("network is disconnected")]
    Disconnected,
    #[error("reduced susceptance matrix is singular")]
    SingularSusceptance,
    #[error("branch {0} is numerically radial but was not classified as a bridge")]
    NumericallyRadial(BranchId),
    #[error("branch {0} is a bridge and cannot be a contingency")]
    Bridge(BranchId),
    #[error("unknown branch {0}")]
    UnknownBranch(BranchId),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("engine failure: {0}")]
    Engine(String),
    #[error("LP solve requested for a model with binary variables")]
    NotLinear,
    #[error("strong duality check failed: primal {primal}, dual {dual}")]
    DualityGap { primal: f64, dual: f64 },
}

#[derive(Debug, Error)]
pub enum CaseError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}:{column}: malformed JSON: {message}")]
    Json { path: PathBuf, line: usize, column: usize, message: String },
    #[error("{path}:{line}:{column}: schema violation: {message}")]
    Schema { path: PathBuf, line: usize, column: usize, message: String },
    #[error("{path}: invalid case:\n{report}")]
    Validation { path: PathBuf, report: ValidationReport },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

/// Failures of a subproblem solve.
#[derive(Debug, Error)]
pub enum SubproblemError {
    #[error("feasibility check for contingency {contingency}, period {period}: {source}")]
    Solver {
        contingency: BranchId,
        period: usize,
        #[source]
        source: SolverError,
    },
    #[error("feasibility check for contingency {contingency}, period {period} returned {status}")]
    Unexpected { contingency: BranchId, period: usize, status: String },
    #[error(transparent)]
    Network(#[from] NetworkError),
}

#[derive(Debug, Error)]
pub enum ScucError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Subproblem(#[from] SubproblemError),
    #[error("{0}")]
    Options(String),
}
