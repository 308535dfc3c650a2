#![allow(dead_code)]

use piatms::atms::{AssumptionSet, Atms, NodeId, NodeKind};
use piatms::possibilistic::{Oracle, PropId, Weight};
use rand::seq::SliceRandom;
use rand::Rng;

/// Weight drawn from the ten-value grid 0.1, 0.2, …, 1.0.
pub fn grid_weight(rng: &mut impl Rng) -> Weight {
    Weight::units_unchecked(rng.gen_range(1..=10) * 1000)
}

/// Node layout of a random Horn instance, with justifications kept apart so callers
/// can insert them in any order.
pub struct HornInstance {
    pub assumptions: Vec<Weight>,
    pub facts: Vec<Weight>,
    pub derived: usize,
    /// (antecedent indices into the node order, consequent index or None for ⊥, weight)
    pub justifications: Vec<(Vec<usize>, Option<usize>, Weight)>,
}

impl HornInstance {
    pub fn random(rng: &mut impl Rng, max_assumptions: usize, max_justifications: usize) -> Self {
        let na = rng.gen_range(1..=max_assumptions);
        let nf = rng.gen_range(0..=2);
        let nd = rng.gen_range(1..=5);
        let assumptions = (0..na).map(|_| grid_weight(rng)).collect();
        let facts = (0..nf).map(|_| grid_weight(rng)).collect();
        let total = na + nf + nd;
        let nj = rng.gen_range(1..=max_justifications);
        let mut justifications = Vec::with_capacity(nj);
        for _ in 0..nj {
            let consequent = if rng.gen_bool(0.2) {
                None
            } else {
                Some(na + nf + rng.gen_range(0..nd))
            };
            let k = rng.gen_range(1..=3);
            let mut pool: Vec<usize> = (0..total).filter(|&i| Some(i) != consequent).collect();
            pool.shuffle(rng);
            let mut ants: Vec<usize> = pool.into_iter().take(k).collect();
            ants.sort_unstable();
            justifications.push((ants, consequent, grid_weight(rng)));
        }
        HornInstance {
            assumptions,
            facts,
            derived: nd,
            justifications,
        }
    }

    /// Builds the engine, inserting justifications in `order`.
    pub fn build(&self, order: &[usize]) -> Atms {
        let mut atms = Atms::new();
        let mut ids: Vec<NodeId> = Vec::new();
        for &w in &self.assumptions {
            ids.push(atms.add_assumption(w));
        }
        for &w in &self.facts {
            ids.push(atms.add_fact(w));
        }
        for _ in 0..self.derived {
            ids.push(atms.add_derived());
        }
        for &j in order {
            let (ants, cons, w) = &self.justifications[j];
            let ants: Vec<NodeId> = ants.iter().map(|&i| ids[i]).collect();
            let cons = cons.map_or(atms.contradiction(), |i| ids[i]);
            atms.add_justification(&ants, cons, *w).unwrap();
        }
        atms
    }

    pub fn build_in_order(&self) -> Atms {
        let order: Vec<usize> = (0..self.justifications.len()).collect();
        self.build(&order)
    }
}

/// Checks labels and nogoods of `atms` against the exhaustive oracle: soundness,
/// weak consistency, completeness and minimality of every label, and exactness,
/// completeness and minimality of the nogood store.
pub fn check_oracle_equivalence(atms: &Atms) -> Result<(), String> {
    let (base, switches) = atms.clause_encoding();
    let profile = Oracle::default()
        .switchable(&base, &switches)
        .map_err(|e| e.to_string())?;
    let position = |id: NodeId| switches.iter().position(|s| s.0 == PropId(id.0)).unwrap();
    let mask_of = |set: &AssumptionSet| set.ids().iter().fold(0usize, |m, &id| m | 1 << position(id));
    let set_of = |mask: usize| {
        AssumptionSet::from_ids(
            (0..switches.len())
                .filter(|i| mask & (1 << i) != 0)
                .map(|i| NodeId(switches[i].0 .0)),
        )
    };
    let masks = 1usize << switches.len();

    for node in atms.nodes() {
        if node.kind == NodeKind::Contradiction {
            continue;
        }
        let goal = PropId(node.id.0);
        let envs = node.label().environments();
        for e in envs {
            let m = mask_of(&e.assumptions);
            let ent = profile.entailment_degree(m, goal);
            if ent != Some(e.degree) {
                return Err(format!(
                    "node {}: env {} unsound (oracle entailment {:?})",
                    node.id, e, ent
                ));
            }
            let inc = profile.inconsistency_degree(m);
            if inc >= Some(e.degree) {
                return Err(format!(
                    "node {}: env {} not weakly consistent (inconsistency {:?})",
                    node.id, e, inc
                ));
            }
        }
        for (i, a) in envs.iter().enumerate() {
            for (j, b) in envs.iter().enumerate() {
                if i != j && a.subsumes(b) {
                    return Err(format!("node {}: {} subsumes {}", node.id, a, b));
                }
            }
        }
        for m in 0..masks {
            let ent = profile.entailment_degree(m, goal);
            let inc = profile.inconsistency_degree(m);
            if ent > inc {
                let s = set_of(m);
                let covered = envs
                    .iter()
                    .any(|e| e.assumptions.is_subset_of(&s) && Some(e.degree) >= ent);
                if !covered {
                    return Err(format!(
                        "node {}: incomplete, ({}) derives it at {:?} > inconsistency {:?}; label {}",
                        node.id,
                        s,
                        ent,
                        inc,
                        node.label()
                    ));
                }
            }
        }
    }

    let nogoods = atms.nogoods();
    for g in nogoods {
        let inc = profile.inconsistency_degree(mask_of(&g.assumptions));
        if inc != Some(g.degree) {
            return Err(format!(
                "nogood ({},{}) has oracle degree {:?}",
                g.assumptions, g.degree, inc
            ));
        }
    }
    for (i, a) in nogoods.iter().enumerate() {
        for (j, b) in nogoods.iter().enumerate() {
            if i != j && a.subsumes(b) {
                return Err(format!(
                    "nogood store not minimal: ({}) subsumes ({})",
                    a.assumptions, b.assumptions
                ));
            }
        }
    }
    for m in 0..masks {
        if let Some(beta) = profile.inconsistency_degree(m) {
            let s = set_of(m);
            if !nogoods
                .iter()
                .any(|g| g.assumptions.is_subset_of(&s) && g.degree >= beta)
            {
                return Err(format!("nogood store incomplete: ({}) is {}-inconsistent", s, beta));
            }
        }
    }
    Ok(())
}

/// Visits every permutation of `0..n` (Heap's algorithm).
pub fn for_each_permutation(n: usize, mut visit: impl FnMut(&[usize])) {
    let mut perm: Vec<usize> = (0..n).collect();
    let mut c = vec![0usize; n];
    visit(&perm);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            visit(&perm);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

impl HornInstance {
    /// Like [`HornInstance::random`] but with exactly `justifications` justifications.
    pub fn random_exact(rng: &mut impl Rng, max_assumptions: usize, justifications: usize) -> Self {
        loop {
            let inst = HornInstance::random(rng, max_assumptions, justifications);
            if inst.justifications.len() == justifications {
                return inst;
            }
        }
    }
}

/// Random section-level scenario: `n` reports of two types on up to three axes
/// within six hours, confidences from the grid.
pub fn random_scenario(rng: &mut impl Rng, n: usize) -> piatms::fusion::Scenario {
    let mut text = String::from("piatms-scenario 1\n");
    let types = ["tank", "motorised_rifle"];
    for i in 0..n {
        let ty = types[rng.gen_range(0..2)];
        let axis = rng.gen_range(1..=3);
        let t = rng.gen_range(0..360);
        let conf = if rng.gen_bool(0.5) {
            Weight::ONE
        } else {
            grid_weight(rng)
        };
        text.push_str(&format!(
            "obs id=o{i:02} level=section type={ty} axis=A{axis} t={t} conf={conf}\n"
        ));
    }
    piatms::fusion::Scenario::parse(&text).expect("generated scenario parses")
}
