//! Hierarchical aggregation of unit observations into ranked, mutually consistent
//! solutions, one private working memory per candidate solution and phase.

pub mod doctrine;
pub mod hypotheses;
pub mod model;
pub mod pipeline;

use thiserror::Error;

use crate::atms::{AtmsError, InterpretError};
use crate::rules::RunError;

pub use doctrine::{Calibration, Doctrine, Factors, Requirement, Template, DEFAULT_DOCTRINE, EPSILON};
pub use hypotheses::{aggregate_id, generate_complete_hypotheses, generate_incomplete_hypotheses, Hypothesis};
pub use model::{Interval, Level, Observation, Scenario, Unit};
pub use pipeline::{
    compare_candidates, run_pipeline, PhaseTrace, PipelineOptions, PipelineOutput, Selection, Solution, UnitRecord,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FusionError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{0}")]
    Usage(String),
    #[error("two different units hash to id {0}")]
    IdCollision(String),
    #[error(transparent)]
    Rules(#[from] RunError),
    #[error(transparent)]
    Atms(#[from] AtmsError),
    #[error(transparent)]
    Interpret(#[from] InterpretError),
}
