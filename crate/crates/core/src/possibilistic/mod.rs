//! Necessity-weight algebra, weighted clause bases and the exhaustive oracle.

pub mod clause;
pub mod oracle;
pub mod weight;

pub use clause::{alpha_cut, ClauseError, Literal, PropId, WeightedClause, WeightedClauseBase};
pub use oracle::{Oracle, OracleError, SwitchableProfile};
pub use weight::{combine_support, merge_degree, Degree, EmptyPremises, Weight, WeightError};
