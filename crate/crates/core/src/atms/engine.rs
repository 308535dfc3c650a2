use std::collections::VecDeque;
use std::fmt::Write as _;

use thiserror::Error;

use super::env::{AssumptionSet, Environment, JustificationId, Label, NodeId};
use super::interpret::{self, GreedyOutcome, InterpretError, Interpretation, Nogood, NogoodSystem};
use crate::possibilistic::{Degree, PropId, Weight, WeightedClause, WeightedClauseBase};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum NodeKind {
    Assumption,
    Fact,
    Derived,
    Contradiction,
}

impl NodeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::Assumption => "assumption",
            NodeKind::Fact => "fact",
            NodeKind::Derived => "derived",
            NodeKind::Contradiction => "contradiction",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Node {
    pub id: NodeId,
    pub kind: NodeKind,
    /// Necessity lower bound of an assumption or fact.
    pub intrinsic_weight: Option<Weight>,
    label: Label,
    /// Justifications in which this node is an antecedent.
    consumers: Vec<JustificationId>,
}

impl Node {
    pub fn label(&self) -> &Label {
        &self.label
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Justification {
    pub id: JustificationId,
    pub antecedents: Vec<NodeId>,
    pub consequent: NodeId,
    pub weight: Weight,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AtmsError {
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("a justification needs at least one antecedent")]
    NoAntecedents,
    #[error("the contradiction node cannot be an antecedent")]
    ContradictionAntecedent,
    #[error("node {0} cannot justify itself")]
    SelfJustification(NodeId),
    #[error("node {0} is not an assumption")]
    NotAnAssumption(NodeId),
}

/// A possibilistic ATMS.
///
/// Node 0 is the contradiction node. Labels and the nogood store are kept
/// minimal and weakly consistent after every mutation.
#[derive(Clone, Debug)]
pub struct Atms {
    nodes: Vec<Node>,
    justifications: Vec<Justification>,
    /// Minimal nogoods in canonical order (by assumption set).
    nogoods: Vec<Nogood>,
}

impl Default for Atms {
    fn default() -> Self {
        Self::new()
    }
}

impl Atms {
    pub fn new() -> Self {
        let bottom = Node {
            id: NodeId(0),
            kind: NodeKind::Contradiction,
            intrinsic_weight: None,
            label: Label::default(),
            consumers: Vec::new(),
        };
        Atms {
            nodes: vec![bottom],
            justifications: Vec::new(),
            nogoods: Vec::new(),
        }
    }

    pub fn contradiction(&self) -> NodeId {
        NodeId(0)
    }

    pub fn contains(&self, id: NodeId) -> bool {
        (id.0 as usize) < self.nodes.len()
    }

    pub fn node(&self, id: NodeId) -> Result<&Node, AtmsError> {
        self.nodes.get(id.0 as usize).ok_or(AtmsError::UnknownNode(id))
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn justifications(&self) -> &[Justification] {
        &self.justifications
    }

    pub fn nogoods(&self) -> &[Nogood] {
        &self.nogoods
    }

    pub fn assumptions(&self) -> impl Iterator<Item = &Node> {
        self.nodes.iter().filter(|n| n.kind == NodeKind::Assumption)
    }

    fn push_node(&mut self, kind: NodeKind, weight: Option<Weight>) -> NodeId {
        let id = NodeId(self.nodes.len() as u32);
        self.nodes.push(Node {
            id,
            kind,
            intrinsic_weight: weight,
            label: Label::default(),
            consumers: Vec::new(),
        });
        id
    }

    pub fn add_assumption(&mut self, weight: Weight) -> NodeId {
        let id = self.push_node(NodeKind::Assumption, Some(weight));
        self.seed(id, Environment::new(AssumptionSet::singleton(id), weight));
        id
    }

    pub fn add_fact(&mut self, weight: Weight) -> NodeId {
        let id = self.push_node(NodeKind::Fact, Some(weight));
        self.seed(id, Environment::new(AssumptionSet::empty(), weight));
        id
    }

    /// A node with no intrinsic support; it only holds through justifications.
    pub fn add_derived(&mut self) -> NodeId {
        self.push_node(NodeKind::Derived, None)
    }

    fn seed(&mut self, id: NodeId, env: Environment) {
        let mut queue = VecDeque::new();
        self.offer(id, env, &mut queue);
        self.propagate(queue);
    }

    pub fn add_justification(
        &mut self,
        antecedents: &[NodeId],
        consequent: NodeId,
        weight: Weight,
    ) -> Result<JustificationId, AtmsError> {
        if antecedents.is_empty() {
            return Err(AtmsError::NoAntecedents);
        }
        let mut ants = antecedents.to_vec();
        ants.sort_unstable();
        ants.dedup();
        for &a in ants.iter().chain(std::iter::once(&consequent)) {
            if !self.contains(a) {
                return Err(AtmsError::UnknownNode(a));
            }
        }
        if ants.contains(&self.contradiction()) {
            return Err(AtmsError::ContradictionAntecedent);
        }
        if ants.contains(&consequent) {
            return Err(AtmsError::SelfJustification(consequent));
        }
        let id = JustificationId(self.justifications.len() as u32);
        for &a in &ants {
            self.nodes[a.0 as usize].consumers.push(id);
        }
        self.justifications.push(Justification {
            id,
            antecedents: ants,
            consequent,
            weight,
        });

        let mut queue = VecDeque::new();
        for env in self.combinations(id, None) {
            self.offer(consequent, env, &mut queue);
        }
        self.propagate(queue);
        Ok(id)
    }

    /// Candidate environments for the consequent of `jid`. With `fixed = Some((n, e))`
    /// antecedent `n` contributes only `e`; every other antecedent contributes its label.
    fn combinations(&self, jid: JustificationId, fixed: Option<(NodeId, &Environment)>) -> Vec<Environment> {
        let j = &self.justifications[jid.0 as usize];
        let mut partial = vec![Environment::new(AssumptionSet::empty(), j.weight)];
        for &a in &j.antecedents {
            let choices: Vec<&Environment> = match fixed {
                Some((n, e)) if n == a => vec![e],
                _ => self.nodes[a.0 as usize].label.environments().iter().collect(),
            };
            let mut next = Vec::with_capacity(partial.len() * choices.len());
            for p in &partial {
                for c in &choices {
                    let env = Environment::new(p.assumptions.union(&c.assumptions), p.degree.min(c.degree));
                    if !self.weakly_inconsistent(&env) {
                        next.push(env);
                    }
                }
            }
            if next.is_empty() {
                return next;
            }
            partial = next;
        }
        partial
    }

    fn weakly_inconsistent(&self, env: &Environment) -> bool {
        self.nogoods
            .iter()
            .any(|g| g.degree >= env.degree && g.assumptions.is_subset_of(&env.assumptions))
    }

    /// Routes a candidate environment to a label or, for ⊥, to the nogood store.
    fn offer(&mut self, node: NodeId, env: Environment, queue: &mut VecDeque<(NodeId, Environment)>) {
        if node == self.contradiction() {
            self.record_nogood(env);
            return;
        }
        if self.weakly_inconsistent(&env) {
            return;
        }
        if self.nodes[node.0 as usize].label.insert_minimal(env.clone()) {
            queue.push_back((node, env));
        }
    }

    fn record_nogood(&mut self, env: Environment) {
        let candidate = Nogood {
            assumptions: env.assumptions,
            degree: env.degree,
        };
        if self.nogoods.iter().any(|g| g.subsumes(&candidate)) {
            return;
        }
        self.nogoods.retain(|g| !candidate.subsumes(g));
        let pos = self.nogoods.binary_search(&candidate).unwrap_or_else(|p| p);
        self.nogoods.insert(pos, candidate.clone());
        for node in self.nodes.iter_mut() {
            node.label
                .retain(|e| !(e.degree <= candidate.degree && candidate.assumptions.is_subset_of(&e.assumptions)));
        }
    }

    fn propagate(&mut self, mut queue: VecDeque<(NodeId, Environment)>) {
        while let Some((node, env)) = queue.pop_front() {
            // Evicted since it was queued: whatever evicted it is queued as well.
            if !self.nodes[node.0 as usize].label.contains(&env) {
                continue;
            }
            let consumers = self.nodes[node.0 as usize].consumers.clone();
            for jid in consumers {
                let consequent = self.justifications[jid.0 as usize].consequent;
                for cand in self.combinations(jid, Some((node, &env))) {
                    self.offer(consequent, cand, &mut queue);
                }
            }
        }
    }

    pub fn label(&self, node: NodeId) -> Result<&Label, AtmsError> {
        Ok(&self.node(node)?.label)
    }

    /// Greatest degree among stored nogoods contained in `env`.
    pub fn environment_inconsistency_degree(&self, env: &AssumptionSet) -> Degree {
        self.nogoods
            .iter()
            .filter(|g| g.assumptions.is_subset_of(env))
            .map(|g| g.degree)
            .max()
    }

    /// `val_H(d)`: the best degree with which `node` holds given the assumptions `h`.
    pub fn context_degree(&self, node: NodeId, h: &AssumptionSet) -> Result<Degree, AtmsError> {
        for &a in h.ids() {
            if self.node(a)?.kind != NodeKind::Assumption {
                return Err(AtmsError::NotAnAssumption(a));
            }
        }
        Ok(self.label(node)?.degree_within(h))
    }

    pub fn nogood_system(&self) -> NogoodSystem {
        NogoodSystem::new(
            self.assumptions()
                .map(|n| (n.id, n.intrinsic_weight.expect("assumptions carry weights"))),
            self.nogoods.iter().cloned(),
        )
    }

    pub fn interpretations(&self, limit: usize) -> Result<Vec<Interpretation>, InterpretError> {
        interpret::interpretations(&self.nogood_system(), limit, interpret::DEFAULT_ENUMERATION_CAP)
    }

    pub fn best_interpretation(&self) -> GreedyOutcome {
        interpret::best_interpretation(&self.nogood_system())
    }

    /// Encodes the engine as a clause base: assumptions and facts become unit clauses
    /// (assumption units are returned separately so callers can switch them),
    /// justifications become Horn clauses. Node `n` maps to proposition `n`.
    pub fn clause_encoding(&self) -> (WeightedClauseBase, Vec<(PropId, Weight)>) {
        let mut base = WeightedClauseBase::new();
        let mut switches = Vec::new();
        for n in &self.nodes[1..] {
            let p = PropId(n.id.0);
            base.declare(p);
            match n.kind {
                NodeKind::Fact => base.push(WeightedClause::unit(p, n.intrinsic_weight.unwrap())),
                NodeKind::Assumption => switches.push((p, n.intrinsic_weight.unwrap())),
                _ => {}
            }
        }
        for j in &self.justifications {
            let ants: Vec<PropId> = j.antecedents.iter().map(|a| PropId(a.0)).collect();
            let cons = (j.consequent != self.contradiction()).then_some(PropId(j.consequent.0));
            base.push(WeightedClause::horn(&ants, cons, j.weight).expect("justifications are never tautologies"));
        }
        (base, switches)
    }

    /// One line per node then one per nogood, sorted by id.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for n in &self.nodes {
            let _ = writeln!(out, "node {} {} label={}", n.id, n.kind.as_str(), n.label);
        }
        for g in &self.nogoods {
            let _ = writeln!(out, "nogood ({},{})", g.assumptions, g.degree);
        }
        out
    }
}
