use std::fmt;

use crate::possibilistic::Weight;

/// Identifier of an ATMS node. Assigned in creation order.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct JustificationId(pub u32);

/// Sorted, duplicate-free set of assumption nodes.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct AssumptionSet(Vec<NodeId>);

impl AssumptionSet {
    pub fn empty() -> Self {
        AssumptionSet(Vec::new())
    }

    pub fn singleton(id: NodeId) -> Self {
        AssumptionSet(vec![id])
    }

    pub fn from_ids(ids: impl IntoIterator<Item = NodeId>) -> Self {
        let mut v: Vec<NodeId> = ids.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        AssumptionSet(v)
    }

    pub fn ids(&self) -> &[NodeId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.0.binary_search(&id).is_ok()
    }

    pub fn is_subset_of(&self, other: &AssumptionSet) -> bool {
        if self.0.len() > other.0.len() {
            return false;
        }
        let mut it = other.0.iter();
        'outer: for a in &self.0 {
            for b in it.by_ref() {
                if b == a {
                    continue 'outer;
                }
                if b > a {
                    return false;
                }
            }
            return false;
        }
        true
    }

    pub fn union(&self, other: &AssumptionSet) -> AssumptionSet {
        let mut out = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].cmp(&other.0[j]) {
                std::cmp::Ordering::Less => {
                    out.push(self.0[i]);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(other.0[j]);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    out.push(self.0[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.0[i..]);
        out.extend_from_slice(&other.0[j..]);
        AssumptionSet(out)
    }
}

impl fmt::Display for AssumptionSet {
    /// Space-separated ids, e.g. `1 2`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, id) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{id}")?;
        }
        Ok(())
    }
}

/// A weighted assumption set `(E, α)`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Environment {
    pub assumptions: AssumptionSet,
    pub degree: Weight,
}

impl Environment {
    pub fn new(assumptions: AssumptionSet, degree: Weight) -> Self {
        Environment { assumptions, degree }
    }

    /// `self` makes `other` redundant: smaller-or-equal set, greater-or-equal degree.
    pub fn subsumes(&self, other: &Environment) -> bool {
        self.degree >= other.degree && self.assumptions.is_subset_of(&other.assumptions)
    }
}

impl fmt::Display for Environment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.assumptions, self.degree)
    }
}

/// An antichain of environments under subsumption, kept in canonical (sorted) order.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct Label {
    envs: Vec<Environment>,
}

impl Label {
    pub fn environments(&self) -> &[Environment] {
        &self.envs
    }

    pub fn is_empty(&self) -> bool {
        self.envs.is_empty()
    }

    pub fn len(&self) -> usize {
        self.envs.len()
    }

    pub fn contains(&self, env: &Environment) -> bool {
        self.envs.binary_search(env).is_ok()
    }

    /// Inserts `env` unless something already subsumes it, evicting whatever it subsumes.
    /// Returns whether the label changed.
    pub(crate) fn insert_minimal(&mut self, env: Environment) -> bool {
        if self.envs.iter().any(|e| e.subsumes(&env)) {
            return false;
        }
        self.envs.retain(|e| !env.subsumes(e));
        let pos = self.envs.binary_search(&env).unwrap_or_else(|p| p);
        self.envs.insert(pos, env);
        true
    }

    pub(crate) fn retain(&mut self, keep: impl FnMut(&Environment) -> bool) {
        self.envs.retain(keep);
    }

    /// Greatest degree among environments contained in `h`.
    pub fn degree_within(&self, h: &AssumptionSet) -> Option<Weight> {
        self.envs
            .iter()
            .filter(|e| e.assumptions.is_subset_of(h))
            .map(|e| e.degree)
            .max()
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for e in &self.envs {
            write!(f, "{e}")?;
        }
        f.write_str("}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(ids: &[u32]) -> AssumptionSet {
        AssumptionSet::from_ids(ids.iter().map(|&i| NodeId(i)))
    }

    fn w(s: &str) -> Weight {
        s.parse().unwrap()
    }

    #[test]
    fn subset_and_union() {
        assert!(set(&[]).is_subset_of(&set(&[1])));
        assert!(set(&[1, 3]).is_subset_of(&set(&[1, 2, 3])));
        assert!(!set(&[1, 4]).is_subset_of(&set(&[1, 2, 3])));
        assert!(!set(&[0]).is_subset_of(&set(&[1, 2, 3])));
        assert_eq!(set(&[1, 3]).union(&set(&[2, 3, 5])), set(&[1, 2, 3, 5]));
        assert_eq!(set(&[3, 1, 3]).ids(), &[NodeId(1), NodeId(3)]);
    }

    #[test]
    fn label_keeps_an_antichain() {
        let mut l = Label::default();
        assert!(l.insert_minimal(Environment::new(set(&[1, 2]), w("0.6"))));
        assert!(l.insert_minimal(Environment::new(set(&[4]), w("0.9"))));
        // Dominated: superset with lower degree.
        assert!(!l.insert_minimal(Environment::new(set(&[1, 2, 3]), w("0.5"))));
        // Superset with higher degree is not dominated.
        assert!(l.insert_minimal(Environment::new(set(&[1, 2, 3]), w("0.7"))));
        // Same set, higher degree replaces.
        assert!(l.insert_minimal(Environment::new(set(&[1, 2]), w("0.8"))));
        assert_eq!(l.to_string(), "{(1 2,0.8)(4,0.9)}");
    }
}
