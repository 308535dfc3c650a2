//! The possibilistic ATMS: weighted nodes and justifications, incremental label
//! propagation, the nogood store, contexts and interpretation selection.

mod engine;
mod env;
pub mod interpret;

pub use engine::{Atms, AtmsError, Justification, Node, NodeKind};
pub use env::{AssumptionSet, Environment, JustificationId, Label, NodeId};
pub use interpret::{
    best_interpretation, interpretations, GreedyOutcome, GreedyStats, InterpretError, Interpretation, Nogood,
    NogoodSystem, RankKey, DEFAULT_ENUMERATION_CAP,
};
