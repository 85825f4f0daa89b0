//! Security-constrained unit commitment with corrective network
//! reconfiguration.

pub mod case_io;
pub mod error;
pub mod fixtures;
pub mod formulations;
pub mod model;
pub mod network;
pub mod orchestrator;
pub mod solver;
pub mod subproblems;

pub use error::{CaseError, ModelError, NetworkError, ScucError, SolverError, SubproblemError};
pub use model::*;
pub use orchestrator::{solve, verify_solution, Method, RunStatus, ScheduleResult, SolveOptions};
