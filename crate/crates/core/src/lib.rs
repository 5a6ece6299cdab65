//! DC programming solvers for the asymmetric eigenvalue complementarity
//! problem: find x ≥ 0, x ≠ 0 and λ with w = λBx − Ax ≥ 0 and xᵀw = 0.

pub mod engine;
pub mod error;
pub mod formulations;
pub mod instances;
pub mod linalg;
pub mod linesearch;
pub mod monitor;
pub mod rng;
pub mod solver;

pub use error::{Error, Result};
pub use formulations::{DcPoint, Formulation, FormulationKind};
pub use instances::{AeicpInstance, SolutionReport};
pub use engine::{run, DcaConfig, RunResult, RunStatus, TraceRecord, Variant};
