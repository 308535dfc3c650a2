//! Weighted propositional clauses and clause bases.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use super::weight::Weight;

/// Identifier of a ground proposition.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct PropId(pub u32);

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Literal {
    pub prop: PropId,
    pub positive: bool,
}

impl Literal {
    pub fn pos(prop: PropId) -> Self {
        Literal { prop, positive: true }
    }

    pub fn neg(prop: PropId) -> Self {
        Literal { prop, positive: false }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.positive {
            write!(f, "p{}", self.prop.0)
        } else {
            write!(f, "¬p{}", self.prop.0)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClauseError {
    #[error("proposition p{0} occurs with both signs in one clause")]
    Tautology(u32),
}

/// A disjunction of literals carrying a necessity lower bound. The empty clause is ⊥.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct WeightedClause {
    literals: BTreeSet<Literal>,
    weight: Weight,
}

impl WeightedClause {
    pub fn new(literals: impl IntoIterator<Item = Literal>, weight: Weight) -> Result<Self, ClauseError> {
        let literals: BTreeSet<Literal> = literals.into_iter().collect();
        for lit in &literals {
            if lit.positive && literals.contains(&Literal::neg(lit.prop)) {
                return Err(ClauseError::Tautology(lit.prop.0));
            }
        }
        Ok(WeightedClause { literals, weight })
    }

    /// `p @ weight`
    pub fn unit(prop: PropId, weight: Weight) -> Self {
        WeightedClause {
            literals: BTreeSet::from([Literal::pos(prop)]),
            weight,
        }
    }

    /// `a₁ ∧ … ∧ aₙ → c @ weight`, or `a₁ ∧ … ∧ aₙ → ⊥` when `consequent` is `None`.
    pub fn horn(antecedents: &[PropId], consequent: Option<PropId>, weight: Weight) -> Result<Self, ClauseError> {
        let lits = antecedents
            .iter()
            .map(|&p| Literal::neg(p))
            .chain(consequent.map(Literal::pos));
        WeightedClause::new(lits, weight)
    }

    pub fn literals(&self) -> &BTreeSet<Literal> {
        &self.literals
    }

    pub fn weight(&self) -> Weight {
        self.weight
    }

    pub fn is_empty(&self) -> bool {
        self.literals.is_empty()
    }
}

/// A multiset of weighted clauses over a registry of propositions.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct WeightedClauseBase {
    clauses: Vec<WeightedClause>,
    propositions: BTreeSet<PropId>,
}

impl WeightedClauseBase {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a proposition that may not occur in any clause (e.g. a query goal).
    pub fn declare(&mut self, prop: PropId) {
        self.propositions.insert(prop);
    }

    pub fn push(&mut self, clause: WeightedClause) {
        for lit in clause.literals() {
            self.propositions.insert(lit.prop);
        }
        self.clauses.push(clause);
    }

    pub fn clauses(&self) -> &[WeightedClause] {
        &self.clauses
    }

    pub fn propositions(&self) -> &BTreeSet<PropId> {
        &self.propositions
    }

    pub fn max_weight(&self) -> Option<Weight> {
        self.clauses.iter().map(|c| c.weight()).max()
    }

    pub fn len(&self) -> usize {
        self.clauses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clauses.is_empty()
    }
}

impl FromIterator<WeightedClause> for WeightedClauseBase {
    fn from_iter<T: IntoIterator<Item = WeightedClause>>(iter: T) -> Self {
        let mut base = WeightedClauseBase::new();
        for c in iter {
            base.push(c);
        }
        base
    }
}

/// The sub-base of clauses whose weight is at least `threshold`. The proposition
/// registry is kept whole so that cuts of one base stay comparable.
pub fn alpha_cut(base: &WeightedClauseBase, threshold: Weight) -> WeightedClauseBase {
    WeightedClauseBase {
        clauses: base
            .clauses
            .iter()
            .filter(|c| c.weight() >= threshold)
            .cloned()
            .collect(),
        propositions: base.propositions.clone(),
    }
}
