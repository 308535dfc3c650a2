//! Exhaustive possibilistic entailment over small propositional bases.
//!
//! For a weighted base `B`, the inconsistency degree is the greatest `α` such that the
//! α-cut of `B` is classically unsatisfiable, and the entailment degree of a goal `g`
//! is the greatest `α` such that the α-cut entails `g`. Both are computed by
//! enumerating every truth assignment: for an assignment `σ` let `viol(σ)` be the
//! largest weight among clauses falsified by `σ` (zero when none is). Then
//!
//! * `Inc(B) = min_σ viol(σ)`
//! * `Ent(B, g) = min_{σ : σ(g) = false} viol(σ)`
//!
//! This module is a test oracle. It shares no code with the ATMS and refuses bases
//! with more propositions than its configured cap.

use std::collections::BTreeMap;

use thiserror::Error;

use super::clause::{PropId, WeightedClauseBase};
use super::weight::{Degree, Weight};

pub const DEFAULT_PROPOSITION_CAP: usize = 20;
/// Largest number of switchable unit clauses a [`SwitchableProfile`] accepts.
pub const MAX_SWITCHES: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("{count} propositions exceed the oracle cap of {cap}")]
    TooManyPropositions { count: usize, cap: usize },
    #[error("{count} switchable clauses exceed the limit of {MAX_SWITCHES}")]
    TooManySwitches { count: usize },
    #[error("switch proposition p{0} is listed twice")]
    DuplicateSwitch(u32),
}

#[derive(Debug, Clone, Copy)]
pub struct Oracle {
    cap: usize,
}

impl Default for Oracle {
    fn default() -> Self {
        Oracle {
            cap: DEFAULT_PROPOSITION_CAP,
        }
    }
}

const NEVER: u32 = u32::MAX;

/// Clause compiled to bitmasks over assignment bit positions.
struct Compiled {
    pos: u64,
    neg: u64,
    units: u32,
}

impl Compiled {
    fn violated(&self, sigma: u64) -> bool {
        sigma & self.pos == 0 && sigma & self.neg == self.neg
    }
}

struct Layout {
    index: BTreeMap<PropId, usize>,
    clauses: Vec<Compiled>,
}

impl Layout {
    /// `order` fixes the bit position of the first propositions; the rest follow in id order.
    fn new(base: &WeightedClauseBase, order: &[PropId], extra: Option<PropId>) -> Layout {
        let mut index = BTreeMap::new();
        for &p in order {
            let next = index.len();
            index.entry(p).or_insert(next);
        }
        for &p in base.propositions().iter().chain(extra.iter()) {
            let next = index.len();
            index.entry(p).or_insert(next);
        }
        let mut clauses: Vec<Compiled> = base
            .clauses()
            .iter()
            .map(|c| {
                let mut pos = 0;
                let mut neg = 0;
                for lit in c.literals() {
                    let bit = 1u64 << index[&lit.prop];
                    if lit.positive {
                        pos |= bit;
                    } else {
                        neg |= bit;
                    }
                }
                Compiled {
                    pos,
                    neg,
                    units: c.weight().units(),
                }
            })
            .collect();
        // Heaviest first so the first falsified clause gives viol(σ).
        clauses.sort_by_key(|c| std::cmp::Reverse(c.units));
        Layout { index, clauses }
    }

    fn width(&self) -> usize {
        self.index.len()
    }

    fn viol(&self, sigma: u64) -> u32 {
        self.clauses.iter().find(|c| c.violated(sigma)).map_or(0, |c| c.units)
    }
}

fn to_degree(units: u32) -> Degree {
    if units == NEVER {
        // No assignment falsifies the goal: it is a tautology of the empty cut, which
        // cannot happen for an atomic goal over a non-empty registry.
        unreachable!("atomic goals are always falsifiable")
    }
    Weight::from_units(units)
}

impl Oracle {
    pub fn with_cap(cap: usize) -> Self {
        Oracle { cap }
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    fn check(&self, width: usize) -> Result<(), OracleError> {
        if width > self.cap || width > 63 {
            Err(OracleError::TooManyPropositions {
                count: width,
                cap: self.cap,
            })
        } else {
            Ok(())
        }
    }

    pub fn inconsistency_degree(&self, base: &WeightedClauseBase) -> Result<Degree, OracleError> {
        let layout = Layout::new(base, &[], None);
        self.check(layout.width())?;
        let mut best = NEVER;
        for sigma in 0..(1u64 << layout.width()) {
            best = best.min(layout.viol(sigma));
            if best == 0 {
                break;
            }
        }
        Ok(Weight::from_units(best))
    }

    pub fn entailment_degree(&self, base: &WeightedClauseBase, goal: PropId) -> Result<Degree, OracleError> {
        let layout = Layout::new(base, &[], Some(goal));
        self.check(layout.width())?;
        let goal_bit = 1u64 << layout.index[&goal];
        let mut best = NEVER;
        for sigma in 0..(1u64 << layout.width()) {
            if sigma & goal_bit != 0 {
                continue;
            }
            best = best.min(layout.viol(sigma));
            if best == 0 {
                break;
            }
        }
        Ok(to_degree(best))
    }

    /// Precomputes degrees for every base `fixed ∪ {sᵢ @ wᵢ : i ∈ S}` where `S` ranges over
    /// subsets of `switches`. Queries then take a bitmask over `switches`.
    pub fn switchable(
        &self,
        fixed: &WeightedClauseBase,
        switches: &[(PropId, Weight)],
    ) -> Result<SwitchableProfile, OracleError> {
        if switches.len() > MAX_SWITCHES {
            return Err(OracleError::TooManySwitches { count: switches.len() });
        }
        let order: Vec<PropId> = switches.iter().map(|s| s.0).collect();
        for (i, p) in order.iter().enumerate() {
            if order[..i].contains(p) {
                return Err(OracleError::DuplicateSwitch(p.0));
            }
        }
        let layout = Layout::new(fixed, &order, None);
        self.check(layout.width())?;

        let k = switches.len();
        let width = layout.width();
        let props: Vec<PropId> = {
            let mut v = vec![PropId(0); width];
            for (&p, &i) in &layout.index {
                v[i] = p;
            }
            v
        };
        let patterns = 1usize << k;
        let mut inc = vec![NEVER; patterns];
        let mut ent = vec![NEVER; patterns * width];
        for sigma in 0..(1u64 << width) {
            let viol = layout.viol(sigma);
            let a = (sigma as usize) & (patterns - 1);
            inc[a] = inc[a].min(viol);
            let row = &mut ent[a * width..(a + 1) * width];
            for (bit, slot) in row.iter_mut().enumerate() {
                if sigma & (1u64 << bit) == 0 && viol < *slot {
                    *slot = viol;
                }
            }
        }
        // Heaviest switch weight inside each mask.
        let mut mask_max = vec![0u32; patterns];
        for mask in 1..patterns {
            let low = mask.trailing_zeros() as usize;
            mask_max[mask] = mask_max[mask & (mask - 1)].max(switches[low].1.units());
        }
        Ok(SwitchableProfile {
            switches: switches.to_vec(),
            index: layout.index,
            props,
            inc,
            ent,
            mask_max,
        })
    }
}

/// Degrees of a base under every selection of its switchable unit clauses.
pub struct SwitchableProfile {
    switches: Vec<(PropId, Weight)>,
    index: BTreeMap<PropId, usize>,
    props: Vec<PropId>,
    /// min viol over assignments whose switch bits equal the pattern.
    inc: Vec<u32>,
    /// Same, restricted to assignments falsifying each proposition.
    ent: Vec<u32>,
    mask_max: Vec<u32>,
}

impl SwitchableProfile {
    pub fn switches(&self) -> &[(PropId, Weight)] {
        &self.switches
    }

    pub fn propositions(&self) -> &[PropId] {
        &self.props
    }

    fn fold(&self, selected: usize, value: impl Fn(usize) -> u32) -> u32 {
        let patterns = self.inc.len();
        debug_assert!(selected < patterns);
        let mut best = NEVER;
        for a in 0..patterns {
            let base = value(a);
            if base == NEVER {
                continue;
            }
            // Selected switches that the pattern sets to false are falsified unit clauses.
            let v = base.max(self.mask_max[selected & !a]);
            best = best.min(v);
        }
        best
    }

    pub fn inconsistency_degree(&self, selected: usize) -> Degree {
        Weight::from_units(self.fold(selected, |a| self.inc[a]))
    }

    /// `None` is returned both for "not entailed" and for a goal outside the registry.
    pub fn entailment_degree(&self, selected: usize, goal: PropId) -> Degree {
        let &bit = self.index.get(&goal)?;
        let width = self.props.len();
        let units = self.fold(selected, |a| self.ent[a * width + bit]);
        to_degree(units)
    }
}
