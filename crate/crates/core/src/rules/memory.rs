//! Private working memories and the match-select-act loop.
//!
//! Each working memory owns its Π-ATMS instance. Rule actions never touch existing
//! elements: they add nodes and justifications, and new elements backed by them.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use thiserror::Error;

use super::expr::{eval, Bindings, EvalError, Value};
use super::rule::{Action, Element, Pattern, RuleId, Rulebase, Test};
use crate::atms::{Atms, AtmsError, JustificationId, NodeId};
use crate::possibilistic::Weight;

pub const DEFAULT_MAX_FIRINGS: usize = 10_000;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct ElementHandle(pub u32);

#[derive(Clone, Debug)]
pub struct WmElement {
    pub handle: ElementHandle,
    pub element: Element,
    pub node: NodeId,
    /// Assumption introduced for the element when a rule hypothesised it.
    pub assumption: Option<NodeId>,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Firing {
    pub rule: RuleId,
    pub rule_name: String,
    pub matched: Vec<ElementHandle>,
    pub justification: JustificationId,
    pub consequent: NodeId,
    /// Element added by this firing, if its content was new.
    pub created: Option<ElementHandle>,
}

#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct FiringReport {
    pub firings: Vec<Firing>,
}

impl FiringReport {
    pub fn len(&self) -> usize {
        self.firings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.firings.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RunError {
    #[error("node {0} does not exist in this working memory's engine")]
    DanglingNode(NodeId),
    #[error("stopped after {cap} firings (last rule `{rule}`); raise the cap or check for generative rules")]
    FiringCap { cap: usize, rule: String },
    #[error("rule `{rule}`: {source}")]
    Eval { rule: String, source: EvalError },
    #[error("rule `{rule}`: {what} evaluated to {found}, expected {expected}")]
    Type {
        rule: String,
        what: &'static str,
        expected: &'static str,
        found: &'static str,
    },
    #[error("rule `{rule}`: {source}")]
    Atms { rule: String, source: AtmsError },
}

type ActivationKey = (Reverse<i32>, RuleId, Vec<ElementHandle>);

pub struct WorkingMemory {
    id: u32,
    rulebase: Arc<Rulebase>,
    atms: Atms,
    elements: Vec<WmElement>,
    by_content: BTreeMap<Element, ElementHandle>,
    by_class: BTreeMap<String, Vec<ElementHandle>>,
    /// Elements below this index have been joined against every rule.
    matched_upto: usize,
    conflict_set: BTreeMap<ActivationKey, Bindings>,
    fired: BTreeSet<(RuleId, Vec<ElementHandle>)>,
    max_firings: usize,
    total_firings: usize,
}

impl WorkingMemory {
    pub fn new(id: u32, rulebase: Arc<Rulebase>) -> Self {
        WorkingMemory {
            id,
            rulebase,
            atms: Atms::new(),
            elements: Vec::new(),
            by_content: BTreeMap::new(),
            by_class: BTreeMap::new(),
            matched_upto: 0,
            conflict_set: BTreeMap::new(),
            fired: BTreeSet::new(),
            max_firings: DEFAULT_MAX_FIRINGS,
            total_firings: 0,
        }
    }

    pub fn id(&self) -> u32 {
        self.id
    }

    pub fn set_max_firings(&mut self, cap: usize) {
        self.max_firings = cap;
    }

    pub fn rulebase(&self) -> &Rulebase {
        &self.rulebase
    }

    pub fn atms(&self) -> &Atms {
        &self.atms
    }

    /// Direct engine access for seeding nodes before asserting elements on them.
    pub fn atms_mut(&mut self) -> &mut Atms {
        &mut self.atms
    }

    pub fn elements(&self) -> &[WmElement] {
        &self.elements
    }

    pub fn element(&self, h: ElementHandle) -> &WmElement {
        &self.elements[h.0 as usize]
    }

    pub fn find(&self, content: &Element) -> Option<&WmElement> {
        self.by_content.get(content).map(|&h| self.element(h))
    }

    /// Makes `element`, backed by `node`, visible to matching. Re-asserting equal
    /// content returns the existing handle and leaves its backing node unchanged.
    pub fn assert_element(&mut self, element: Element, node: NodeId) -> Result<ElementHandle, RunError> {
        if !self.atms.contains(node) {
            return Err(RunError::DanglingNode(node));
        }
        if let Some(&h) = self.by_content.get(&element) {
            return Ok(h);
        }
        Ok(self.insert(element, node, None))
    }

    fn insert(&mut self, element: Element, node: NodeId, assumption: Option<NodeId>) -> ElementHandle {
        let handle = ElementHandle(self.elements.len() as u32);
        self.by_content.insert(element.clone(), handle);
        self.by_class.entry(element.class.clone()).or_default().push(handle);
        self.elements.push(WmElement {
            handle,
            element,
            node,
            assumption,
        });
        handle
    }

    pub fn run_to_quiescence(&mut self) -> Result<FiringReport, RunError> {
        let mut report = FiringReport::default();
        loop {
            self.discover()?;
            let Some((key, bindings)) = self.conflict_set.pop_first() else {
                return Ok(report);
            };
            let (_, rule, tuple) = key;
            if !self.fired.insert((rule, tuple.clone())) {
                continue;
            }
            if self.total_firings >= self.max_firings {
                return Err(RunError::FiringCap {
                    cap: self.max_firings,
                    rule: self.rulebase.rule(rule).name.clone(),
                });
            }
            self.total_firings += 1;
            report.firings.push(self.fire(rule, tuple, &bindings)?);
        }
    }

    /// Semi-naive join: every tuple containing at least one element added since the
    /// last call is enumerated exactly once.
    fn discover(&mut self) -> Result<(), RunError> {
        let new_from = self.matched_upto;
        let n = self.elements.len();
        if new_from == n {
            return Ok(());
        }
        let rulebase = Arc::clone(&self.rulebase);
        for (ri, rule) in rulebase.rules().iter().enumerate() {
            let ordered = rule.ordered_indices();
            for pivot in 0..rule.conditions.len() {
                let mut found = Vec::new();
                let mut tuple = Vec::with_capacity(rule.conditions.len());
                self.join(
                    &rule.conditions,
                    &ordered,
                    pivot,
                    new_from,
                    n,
                    &mut tuple,
                    Bindings::new(),
                    &mut found,
                );
                for (tuple, bindings) in found {
                    let keep = match &rule.guard {
                        None => true,
                        Some(g) => match eval(g, &bindings, rulebase.functions()) {
                            Ok(Value::Bool(b)) => b,
                            Ok(other) => {
                                return Err(RunError::Type {
                                    rule: rule.name.clone(),
                                    what: "guard",
                                    expected: "bool",
                                    found: other.type_name(),
                                })
                            }
                            Err(source) => {
                                return Err(RunError::Eval {
                                    rule: rule.name.clone(),
                                    source,
                                })
                            }
                        },
                    };
                    let id = RuleId(ri);
                    if keep && !self.fired.contains(&(id, tuple.clone())) {
                        self.conflict_set.insert((Reverse(rule.priority), id, tuple), bindings);
                    }
                }
            }
        }
        self.matched_upto = n;
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    fn join(
        &self,
        conditions: &[Pattern],
        ordered: &[Vec<usize>],
        pivot: usize,
        new_from: usize,
        n: usize,
        tuple: &mut Vec<ElementHandle>,
        bindings: Bindings,
        out: &mut Vec<(Vec<ElementHandle>, Bindings)>,
    ) {
        let pos = tuple.len();
        if pos == conditions.len() {
            out.push((tuple.clone(), bindings));
            return;
        }
        let (lo, hi) = match pos.cmp(&pivot) {
            std::cmp::Ordering::Less => (0, new_from),
            std::cmp::Ordering::Equal => (new_from, n),
            std::cmp::Ordering::Greater => (0, n),
        };
        let pattern = &conditions[pos];
        let Some(candidates) = self.by_class.get(&pattern.class) else {
            return;
        };
        for &h in candidates {
            let i = h.0 as usize;
            if i < lo || i >= hi {
                continue;
            }
            if !ordered_ok(ordered, tuple, pos, h) {
                continue;
            }
            if let Some(b) = match_pattern(pattern, &self.elements[i].element, &bindings) {
                tuple.push(h);
                self.join(conditions, ordered, pivot, new_from, n, tuple, b, out);
                tuple.pop();
            }
        }
    }

    fn fire(&mut self, rule_id: RuleId, tuple: Vec<ElementHandle>, bindings: &Bindings) -> Result<Firing, RunError> {
        let rulebase = Arc::clone(&self.rulebase);
        let rule = rulebase.rule(rule_id);
        let name = &rule.name;
        let host = rulebase.functions();
        let atms_err = |source| RunError::Atms {
            rule: name.clone(),
            source,
        };
        let eval_err = |source| RunError::Eval {
            rule: name.clone(),
            source,
        };
        let mut antecedents: Vec<NodeId> = tuple.iter().map(|h| self.element(*h).node).collect();
        antecedents.sort_unstable();
        antecedents.dedup();

        let build = |class: &str, attrs: &[(String, super::expr::Expr)]| -> Result<Element, RunError> {
            let mut e = Element::new(class);
            for (k, x) in attrs {
                e.attrs.insert(k.clone(), eval(x, bindings, host).map_err(eval_err)?);
            }
            Ok(e)
        };
        let weight_of = |x: &super::expr::Expr| -> Result<Weight, RunError> {
            match eval(x, bindings, host).map_err(eval_err)? {
                Value::Weight(w) => Ok(w),
                other => Err(RunError::Type {
                    rule: name.clone(),
                    what: "weight",
                    expected: "weight",
                    found: other.type_name(),
                }),
            }
        };

        let (consequent, justification, created) = match &rule.action {
            Action::Contradiction => {
                let bottom = self.atms.contradiction();
                let j = self
                    .atms
                    .add_justification(&antecedents, bottom, rule.weight)
                    .map_err(atms_err)?;
                (bottom, j, None)
            }
            Action::Derive { class, attrs, weight } => {
                let element = build(class, attrs)?;
                let w = weight.as_ref().map(weight_of).transpose()?.unwrap_or(rule.weight);
                let (node, created) = match self.by_content.get(&element) {
                    Some(&h) => (self.element(h).node, None),
                    None => {
                        let node = self.atms.add_derived();
                        (node, Some(element))
                    }
                };
                let j = self.atms.add_justification(&antecedents, node, w).map_err(atms_err)?;
                let created = created.map(|e| self.insert(e, node, None));
                (node, j, created)
            }
            Action::Assume { class, attrs, weight } => {
                let element = build(class, attrs)?;
                let w = weight_of(weight)?;
                let existing = self.by_content.get(&element).map(|&h| self.element(h).clone());
                let (node, assumption) = match &existing {
                    Some(e) => (e.node, e.assumption.unwrap_or_else(|| self.atms.add_assumption(w))),
                    None => (self.atms.add_derived(), self.atms.add_assumption(w)),
                };
                let mut ants = antecedents.clone();
                ants.push(assumption);
                let j = self
                    .atms
                    .add_justification(&ants, node, rule.weight)
                    .map_err(atms_err)?;
                let created = match existing {
                    Some(_) => None,
                    None => Some(self.insert(element, node, Some(assumption))),
                };
                (node, j, created)
            }
        };
        Ok(Firing {
            rule: rule_id,
            rule_name: name.clone(),
            matched: tuple,
            justification,
            consequent,
            created,
        })
    }
}

fn ordered_ok(ordered: &[Vec<usize>], tuple: &[ElementHandle], pos: usize, h: ElementHandle) -> bool {
    let at = |c: usize| if c == pos { Some(h) } else { tuple.get(c).copied() };
    ordered.iter().all(|group| {
        group.windows(2).all(|w| {
            if w[0] != pos && w[1] != pos {
                return true;
            }
            match (at(w[0]), at(w[1])) {
                (Some(a), Some(b)) => a < b,
                _ => true,
            }
        })
    })
}

fn match_pattern(pattern: &Pattern, element: &Element, bindings: &Bindings) -> Option<Bindings> {
    let mut out = bindings.clone();
    for (attr, test) in &pattern.tests {
        let v = element.get(attr)?;
        match test {
            Test::Const(c) => {
                if v != c {
                    return None;
                }
            }
            Test::Var(name) => match out.get(name) {
                Some(bound) if bound != v => return None,
                Some(_) => {}
                None => {
                    out.insert(name.clone(), v.clone());
                }
            },
        }
    }
    Some(out)
}
