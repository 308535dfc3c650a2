//! Elements, patterns, rules and the rulebase that validates them.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use super::expr::{Expr, HostFn, Value, BUILTINS};
use crate::possibilistic::Weight;

/// A working-memory element: a class name and attribute values.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Element {
    pub class: String,
    pub attrs: BTreeMap<String, Value>,
}

impl Element {
    pub fn new(class: impl Into<String>) -> Self {
        Element {
            class: class.into(),
            attrs: BTreeMap::new(),
        }
    }

    pub fn with(mut self, attr: impl Into<String>, value: Value) -> Self {
        self.attrs.insert(attr.into(), value);
        self
    }

    pub fn get(&self, attr: &str) -> Option<&Value> {
        self.attrs.get(attr)
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.class)?;
        for (k, v) in &self.attrs {
            write!(f, " {k}={v}")?;
        }
        Ok(())
    }
}

/// Test applied to one attribute.
#[derive(Clone, PartialEq, Debug)]
pub enum Test {
    Const(Value),
    /// Binds the variable on first occurrence, tests equality afterwards.
    Var(String),
}

#[derive(Clone, PartialEq, Debug)]
pub struct Pattern {
    /// Handle name used by `ordered` constraints.
    pub label: Option<String>,
    pub class: String,
    pub tests: Vec<(String, Test)>,
}

impl Pattern {
    pub fn new(class: impl Into<String>) -> Self {
        Pattern {
            label: None,
            class: class.into(),
            tests: Vec::new(),
        }
    }

    pub fn labeled(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn eq(mut self, attr: impl Into<String>, value: Value) -> Self {
        self.tests.push((attr.into(), Test::Const(value)));
        self
    }

    pub fn bind(mut self, attr: impl Into<String>, var: impl Into<String>) -> Self {
        self.tests.push((attr.into(), Test::Var(var.into())));
        self
    }
}

#[derive(Clone, PartialEq, Debug)]
pub enum Action {
    /// New hypothesis: an assumption weighted by `weight` and a node justified by the
    /// matched elements together with that assumption.
    Assume {
        class: String,
        attrs: Vec<(String, Expr)>,
        weight: Expr,
    },
    /// New derived element justified by the matched elements. `weight` overrides the
    /// rule weight for this firing.
    Derive {
        class: String,
        attrs: Vec<(String, Expr)>,
        weight: Option<Expr>,
    },
    /// The matched elements cannot hold together.
    Contradiction,
}

#[derive(Clone, PartialEq, Debug)]
pub struct Rule {
    pub name: String,
    pub priority: i32,
    pub weight: Weight,
    pub conditions: Vec<Pattern>,
    /// Groups of condition labels whose matched elements must be strictly increasing.
    pub ordered: Vec<Vec<String>>,
    pub guard: Option<Expr>,
    pub action: Action,
}

impl Rule {
    pub fn new(name: impl Into<String>, action: Action) -> Self {
        Rule {
            name: name.into(),
            priority: 0,
            weight: Weight::ONE,
            conditions: Vec::new(),
            ordered: Vec::new(),
            guard: None,
            action,
        }
    }

    pub fn priority(mut self, p: i32) -> Self {
        self.priority = p;
        self
    }

    pub fn weight(mut self, w: Weight) -> Self {
        self.weight = w;
        self
    }

    pub fn when(mut self, p: Pattern) -> Self {
        self.conditions.push(p);
        self
    }

    pub fn ordered<S: AsRef<str>>(mut self, labels: &[S]) -> Self {
        self.ordered
            .push(labels.iter().map(|s| s.as_ref().to_string()).collect());
        self
    }

    pub fn guard(mut self, g: Expr) -> Self {
        self.guard = Some(g);
        self
    }

    fn bound_variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for p in &self.conditions {
            for (_, t) in &p.tests {
                if let Test::Var(v) = t {
                    out.insert(v.clone());
                }
            }
        }
        out
    }

    fn expressions(&self) -> Vec<&Expr> {
        let mut out: Vec<&Expr> = self.guard.iter().collect();
        match &self.action {
            Action::Assume { attrs, weight, .. } => {
                out.extend(attrs.iter().map(|(_, e)| e));
                out.push(weight);
            }
            Action::Derive { attrs, weight, .. } => {
                out.extend(attrs.iter().map(|(_, e)| e));
                out.extend(weight.iter());
            }
            Action::Contradiction => {}
        }
        out
    }

    /// Indices of each ordered group, resolved against condition labels.
    pub(crate) fn ordered_indices(&self) -> Vec<Vec<usize>> {
        self.ordered
            .iter()
            .map(|g| {
                g.iter()
                    .map(|l| {
                        self.conditions
                            .iter()
                            .position(|p| p.label.as_deref() == Some(l))
                            .unwrap()
                    })
                    .collect()
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DefinitionError {
    #[error("rule `{0}` is already defined")]
    DuplicateName(String),
    #[error("rule `{rule}` uses unbound variable ?{var}")]
    UnboundVariable { rule: String, var: String },
    #[error("rule `{rule}` calls unknown function `{function}`")]
    UnknownFunction { rule: String, function: String },
    #[error("rule `{rule}` has no conditions")]
    NoConditions { rule: String },
    #[error("rule `{rule}` orders unknown condition label ?{label}")]
    UnknownLabel { rule: String, label: String },
    #[error("rule `{rule}` reuses condition label ?{label}")]
    DuplicateLabel { rule: String, label: String },
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct RuleId(pub usize);

/// Rules plus the host functions their expressions may call.
#[derive(Clone, Default)]
pub struct Rulebase {
    rules: Vec<Rule>,
    functions: BTreeMap<String, HostFn>,
}

impl fmt::Debug for Rulebase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Rulebase")
            .field("rules", &self.rules.iter().map(|r| &r.name).collect::<Vec<_>>())
            .field("functions", &self.functions.keys().collect::<Vec<_>>())
            .finish()
    }
}

impl Rulebase {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register_function<F>(&mut self, name: impl Into<String>, f: F)
    where
        F: Fn(&[Value]) -> Result<Value, String> + Send + Sync + 'static,
    {
        self.functions.insert(name.into(), Arc::new(f));
    }

    pub fn functions(&self) -> &BTreeMap<String, HostFn> {
        &self.functions
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn rule(&self, id: RuleId) -> &Rule {
        &self.rules[id.0]
    }

    pub fn define_rule(&mut self, rule: Rule) -> Result<RuleId, DefinitionError> {
        let name = rule.name.clone();
        if self.rules.iter().any(|r| r.name == name) {
            return Err(DefinitionError::DuplicateName(name));
        }
        if rule.conditions.is_empty() {
            return Err(DefinitionError::NoConditions { rule: name });
        }
        let mut labels = BTreeSet::new();
        for p in &rule.conditions {
            if let Some(l) = &p.label {
                if !labels.insert(l.clone()) {
                    return Err(DefinitionError::DuplicateLabel {
                        rule: name,
                        label: l.clone(),
                    });
                }
            }
        }
        for l in rule.ordered.iter().flatten() {
            if !labels.contains(l) {
                return Err(DefinitionError::UnknownLabel {
                    rule: name,
                    label: l.clone(),
                });
            }
        }
        let bound = rule.bound_variables();
        let mut used = BTreeSet::new();
        let mut called = BTreeSet::new();
        for e in rule.expressions() {
            e.variables(&mut used);
            e.functions(&mut called);
        }
        if let Some(var) = used.difference(&bound).next() {
            return Err(DefinitionError::UnboundVariable {
                rule: name,
                var: var.clone(),
            });
        }
        if let Some(f) = called
            .iter()
            .find(|f| !self.functions.contains_key(*f) && !BUILTINS.contains(&f.as_str()))
        {
            return Err(DefinitionError::UnknownFunction {
                rule: name,
                function: f.clone(),
            });
        }
        self.rules.push(rule);
        Ok(RuleId(self.rules.len() - 1))
    }
}
