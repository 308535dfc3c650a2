//! Possibilistic assumption-based truth maintenance.
//!
//! * [`possibilistic`]: necessity weights, weighted clause bases, α-cuts and an
//!   exhaustive entailment oracle.
//! * [`atms`]: the Π-ATMS with labels, nogoods, contexts and interpretations.
//! * [`rules`]: a forward-chaining production system whose firings emit weighted
//!   justifications into an ATMS instead of mutating working memory.
//! * [`fusion`]: hierarchical aggregation of unit observations into ranked,
//!   mutually consistent order-of-battle solutions.
//! * [`report`]: text and structured renderings of pipeline runs, and explanations.

pub mod atms;
pub mod fusion;
pub mod possibilistic;
pub mod report;
pub mod rules;
