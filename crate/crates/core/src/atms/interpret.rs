//! Interpretations: maximal assumption sets that embed no nogood.
//!
//! Two selection procedures work on a [`NogoodSystem`]: exhaustive enumeration
//! ranked by [`RankKey`], and the greedy single-best procedure (most certain nogood
//! first, drop its least certain assumption) followed by a restoration pass.

use std::cmp::Ordering;

use thiserror::Error;

use super::env::{AssumptionSet, NodeId};
use crate::possibilistic::Weight;

pub const DEFAULT_ENUMERATION_CAP: usize = 24;

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Nogood {
    pub assumptions: AssumptionSet,
    pub degree: Weight,
}

impl Nogood {
    pub fn new(assumptions: AssumptionSet, degree: Weight) -> Self {
        Nogood { assumptions, degree }
    }

    pub fn subsumes(&self, other: &Nogood) -> bool {
        self.degree >= other.degree && self.assumptions.is_subset_of(&other.assumptions)
    }
}

/// Weighted assumptions plus the nogoods over them. Nogood ids are their positions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NogoodSystem {
    assumptions: Vec<(NodeId, Weight)>,
    nogoods: Vec<Nogood>,
}

impl NogoodSystem {
    pub fn new(
        assumptions: impl IntoIterator<Item = (NodeId, Weight)>,
        nogoods: impl IntoIterator<Item = Nogood>,
    ) -> Self {
        let mut assumptions: Vec<(NodeId, Weight)> = assumptions.into_iter().collect();
        assumptions.sort_unstable_by_key(|a| a.0);
        assumptions.dedup_by_key(|a| a.0);
        let nogoods: Vec<Nogood> = nogoods.into_iter().collect();
        debug_assert!(nogoods.iter().all(|g| g
            .assumptions
            .ids()
            .iter()
            .all(|id| assumptions.binary_search_by_key(id, |a| a.0).is_ok())));
        NogoodSystem { assumptions, nogoods }
    }

    pub fn assumptions(&self) -> &[(NodeId, Weight)] {
        &self.assumptions
    }

    pub fn nogoods(&self) -> &[Nogood] {
        &self.nogoods
    }

    pub fn weight_of(&self, id: NodeId) -> Weight {
        let i = self
            .assumptions
            .binary_search_by_key(&id, |a| a.0)
            .expect("nogood member is a known assumption");
        self.assumptions[i].1
    }

    /// Nogoods that some choice of assumptions can avoid. An empty nogood holds in
    /// every context, so it never discriminates between interpretations.
    fn avoidable(&self) -> impl Iterator<Item = (usize, &Nogood)> {
        self.nogoods
            .iter()
            .enumerate()
            .filter(|(_, g)| !g.assumptions.is_empty())
    }

    pub fn embeds_nogood(&self, kept: &AssumptionSet) -> bool {
        self.avoidable().any(|(_, g)| g.assumptions.is_subset_of(kept))
    }

    pub fn interpretation(&self, kept: AssumptionSet) -> Interpretation {
        let discarded = AssumptionSet::from_ids(self.assumptions.iter().map(|a| a.0).filter(|id| !kept.contains(*id)));
        let mut weights: Vec<Weight> = discarded.ids().iter().map(|&id| self.weight_of(id)).collect();
        weights.sort_unstable_by(|a, b| b.cmp(a));
        let rank_key = RankKey {
            discarded_weights: weights,
            discarded_ids: discarded.ids().to_vec(),
        };
        Interpretation {
            kept,
            discarded,
            rank_key,
        }
    }
}

/// Ordering key of an interpretation; smaller is better.
///
/// Compares the descending vector of discarded weights lexicographically (a prefix
/// ranks first, so fewer discards win on equal heads), then the discarded ids.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct RankKey {
    pub discarded_weights: Vec<Weight>,
    pub discarded_ids: Vec<NodeId>,
}

impl Ord for RankKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.discarded_weights
            .cmp(&other.discarded_weights)
            .then_with(|| self.discarded_ids.len().cmp(&other.discarded_ids.len()))
            .then_with(|| self.discarded_ids.cmp(&other.discarded_ids))
    }
}

impl PartialOrd for RankKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Interpretation {
    pub kept: AssumptionSet,
    pub discarded: AssumptionSet,
    pub rank_key: RankKey,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InterpretError {
    #[error(
        "{count} contested assumptions exceed the enumeration cap of {cap}; \
         use the greedy best-interpretation path instead"
    )]
    CapExceeded { count: usize, cap: usize },
}

/// All maximal consistent assumption sets, best first, truncated to `limit`.
///
/// Assumptions that occur in no nogood belong to every interpretation, so the cap
/// applies to the contested ones only.
pub fn interpretations(system: &NogoodSystem, limit: usize, cap: usize) -> Result<Vec<Interpretation>, InterpretError> {
    let mut contested: Vec<NodeId> = system
        .avoidable()
        .flat_map(|(_, g)| g.assumptions.ids().iter().copied())
        .collect();
    contested.sort_unstable();
    contested.dedup();
    if contested.len() > cap || contested.len() > 63 {
        return Err(InterpretError::CapExceeded {
            count: contested.len(),
            cap,
        });
    }
    let bit = |id: NodeId| 1u64 << contested.binary_search(&id).unwrap();
    let masks: Vec<u64> = system
        .avoidable()
        .map(|(_, g)| g.assumptions.ids().iter().fold(0, |m, &id| m | bit(id)))
        .collect();
    // Nogoods containing each contested assumption.
    let touching: Vec<Vec<u64>> = (0..contested.len())
        .map(|i| masks.iter().copied().filter(|m| m & (1 << i) != 0).collect())
        .collect();

    let mut found = Vec::new();
    let mut search = Search {
        n: contested.len(),
        masks: &masks,
        touching: &touching,
        found: &mut found,
    };
    search.descend(0, 0, 0);

    let free = system
        .assumptions()
        .iter()
        .map(|a| a.0)
        .filter(|id| contested.binary_search(id).is_err());
    let free: Vec<NodeId> = free.collect();
    let mut out: Vec<Interpretation> = found
        .into_iter()
        .map(|included| {
            let kept = free.iter().copied().chain(
                (0..contested.len())
                    .filter(|i| included & (1 << i) != 0)
                    .map(|i| contested[i]),
            );
            system.interpretation(AssumptionSet::from_ids(kept))
        })
        .collect();
    out.sort_by(|a, b| a.rank_key.cmp(&b.rank_key));
    out.truncate(limit);
    Ok(out)
}

struct Search<'a> {
    n: usize,
    masks: &'a [u64],
    touching: &'a [Vec<u64>],
    found: &'a mut Vec<u64>,
}

impl Search<'_> {
    fn descend(&mut self, i: usize, included: u64, excluded: u64) {
        if i == self.n {
            // Maximal iff every excluded assumption would complete a nogood.
            let maximal = (0..self.n)
                .filter(|j| excluded & (1 << j) != 0)
                .all(|j| self.touching[j].iter().any(|&m| m & !(included | 1 << j) == 0));
            if maximal {
                self.found.push(included);
            }
            return;
        }
        let b = 1u64 << i;
        let with = included | b;
        if self.masks.iter().all(|&m| m & !with != 0) {
            self.descend(i + 1, with, excluded);
        }
        // Excluding only pays off if some nogood through `i` can still be completed.
        if self.touching[i].iter().any(|&m| m & (excluded | b) == b) {
            self.descend(i + 1, included, excluded | b);
        }
    }
}

/// Work counters of one greedy run.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub struct GreedyStats {
    /// Number of avoidable nogoods, |N|.
    pub nogoods: usize,
    /// Nogood inspections made by the selection loop.
    pub inspections: usize,
    /// Loop iterations (one discarded assumption each).
    pub iterations: usize,
    /// Nogood inspections made by the restoration pass.
    pub restoration_checks: usize,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct GreedyOutcome {
    pub interpretation: Interpretation,
    pub stats: GreedyStats,
}

/// Greedy best interpretation.
///
/// While nogoods remain: take the most certain one (lowest id on ties), drop its least
/// certain assumption (lowest id on ties) and forget every nogood that mentions it.
/// Each iteration scans the surviving nogoods once, which both forgets those involving
/// the dropped assumption and locates the next most certain, so the loop inspects at
/// most |N|(|N|+1)/2 nogoods. Dropped assumptions are then re-added in decreasing
/// weight order whenever that embeds no nogood, which makes the result maximal.
pub fn best_interpretation(system: &NogoodSystem) -> GreedyOutcome {
    let mut stats = GreedyStats::default();
    let mut alive: Vec<usize> = system.avoidable().map(|(i, _)| i).collect();
    stats.nogoods = alive.len();
    let nogoods = system.nogoods();

    let more_certain =
        |a: usize, b: usize| nogoods[a].degree > nogoods[b].degree || (nogoods[a].degree == nogoods[b].degree && a < b);

    let mut selected: Option<usize> = None;
    for &g in &alive {
        stats.inspections += 1;
        if selected.is_none_or(|s| more_certain(g, s)) {
            selected = Some(g);
        }
    }

    let mut kept: Vec<NodeId> = system.assumptions().iter().map(|a| a.0).collect();
    let mut dropped: Vec<NodeId> = Vec::new();
    while let Some(g) = selected.take() {
        stats.iterations += 1;
        alive.retain(|&x| x != g);
        let victim = nogoods[g]
            .assumptions
            .ids()
            .iter()
            .copied()
            .min_by(|&a, &b| system.weight_of(a).cmp(&system.weight_of(b)).then(a.cmp(&b)))
            .expect("avoidable nogoods are non-empty");
        kept.retain(|&a| a != victim);
        dropped.push(victim);

        let mut survivors = Vec::with_capacity(alive.len());
        for &h in &alive {
            stats.inspections += 1;
            if nogoods[h].assumptions.contains(victim) {
                continue;
            }
            if selected.is_none_or(|s| more_certain(h, s)) {
                selected = Some(h);
            }
            survivors.push(h);
        }
        alive = survivors;
    }

    dropped.sort_by(|&a, &b| system.weight_of(b).cmp(&system.weight_of(a)).then(a.cmp(&b)));
    let mut kept = AssumptionSet::from_ids(kept);
    for candidate in dropped {
        let trial = kept.union(&AssumptionSet::singleton(candidate));
        let mut blocked = false;
        for (_, g) in system.avoidable().filter(|(_, g)| g.assumptions.contains(candidate)) {
            stats.restoration_checks += 1;
            if g.assumptions.is_subset_of(&trial) {
                blocked = true;
                break;
            }
        }
        if !blocked {
            kept = trial;
        }
    }
    GreedyOutcome {
        interpretation: system.interpretation(kept),
        stats,
    }
}
