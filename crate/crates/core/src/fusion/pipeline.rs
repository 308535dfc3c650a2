//! Phase-by-phase k-best aggregation.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::atms::NodeId;
use crate::possibilistic::Weight;
use crate::rules::WorkingMemory;

use super::doctrine::{Doctrine, Factors};
use super::hypotheses::{
    complete_greedily, conflicts_of, generate_complete_hypotheses, generate_incomplete_hypotheses, phase_rulebase,
    seed_memory, Generation, Hypothesis,
};
use super::model::{Level, Scenario, Unit};
use super::FusionError;

/// How each working memory picks its consistent combinations of complete hypotheses.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Selection {
    /// The k best interpretations by rank key.
    Enumerate,
    /// The single greedy best interpretation.
    Greedy,
}

#[derive(Clone, Debug)]
pub struct PipelineOptions {
    pub k: usize,
    pub m: usize,
    pub selection: Selection,
    /// Stop after this many phases (all four by default).
    pub max_phases: Option<usize>,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            k: 3,
            m: 3,
            selection: Selection::Enumerate,
            max_phases: None,
        }
    }
}

/// A consistent combination of units.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Solution {
    /// Highest level among the members.
    pub level: Level,
    /// Member ids, sorted.
    pub members: Vec<String>,
    /// Certainties of the complete aggregates at `level`, descending. Ranking key.
    pub score: Vec<Weight>,
}

/// Ranking of candidate solutions. Larger scores first, compared lexicographically
/// with a longer vector beating its own prefix; ties keep the order of the input
/// solution and, within it, of the interpretation the candidate was built from.
pub fn compare_candidates(a: (&Solution, (usize, usize)), b: (&Solution, (usize, usize))) -> Ordering {
    b.0.score.cmp(&a.0.score).then(a.1.cmp(&b.1))
}

/// What the report needs to know about a unit.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct UnitRecord {
    pub unit: Unit,
    /// None for observations.
    pub factors: Option<Factors>,
    /// Label of the unit's node in the memory that first produced it, with
    /// assumptions named by the unit they hypothesise.
    pub label: Vec<(Vec<String>, Weight)>,
    /// Nogoods the unit's hypothesis took part in: the other units and the degree.
    pub conflicts: Vec<(Vec<String>, Weight)>,
}

#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct PhaseTrace {
    pub phase: usize,
    pub from: Option<Level>,
    pub to: Option<Level>,
    pub memories: usize,
    pub complete_hypotheses: usize,
    pub incomplete_hypotheses: usize,
    pub nogoods: usize,
    pub combinations: usize,
    /// Greedy nogood inspections and the |N|² bound, summed over memories.
    pub inspections: usize,
    pub inspection_bound: usize,
    /// Memories whose best interpretation ties with the runner-up on weights.
    pub tied_optima: usize,
    pub subsumed: usize,
    pub kept: usize,
}

#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct PipelineOutput {
    pub solutions: Vec<Solution>,
    pub units: BTreeMap<String, UnitRecord>,
    pub trace: Vec<PhaseTrace>,
}

struct UnitStore {
    records: BTreeMap<String, UnitRecord>,
}

impl UnitStore {
    fn get(&self, id: &str) -> &Unit {
        &self.records[id].unit
    }

    fn insert(&mut self, record: UnitRecord) -> Result<(), FusionError> {
        match self.records.get(&record.unit.id) {
            Some(existing) if existing.unit != record.unit => Err(FusionError::IdCollision(record.unit.id)),
            Some(_) => Ok(()),
            None => {
                self.records.insert(record.unit.id.clone(), record);
                Ok(())
            }
        }
    }

    fn record_hypotheses(&mut self, wm: &WorkingMemory, hyps: &[Hypothesis]) -> Result<(), FusionError> {
        let by_assumption: BTreeMap<NodeId, &str> = hyps.iter().map(|h| (h.assumption, h.unit.id.as_str())).collect();
        let name = |ids: &[NodeId]| -> Vec<String> {
            ids.iter()
                .map(|a| {
                    by_assumption
                        .get(a)
                        .map_or_else(|| format!("#{}", a.0), |s| s.to_string())
                })
                .collect()
        };
        for h in hyps {
            let label = wm
                .atms()
                .label(h.node)?
                .environments()
                .iter()
                .map(|e| (name(e.assumptions.ids()), e.degree))
                .collect();
            let conflicts = conflicts_of(wm, h.assumption)
                .into_iter()
                .map(|(ids, w)| (name(&ids), w))
                .collect();
            self.insert(UnitRecord {
                unit: h.unit.clone(),
                factors: Some(h.factors),
                label,
                conflicts,
            })?;
        }
        Ok(())
    }
}

/// Checks observation types against the doctrine.
fn validate(scenario: &Scenario, doctrine: &Doctrine) -> Result<(), FusionError> {
    for o in &scenario.observations {
        if !doctrine.types.contains(&o.unit_type) {
            return Err(FusionError::Parse {
                line: o.line,
                message: format!("type `{}` is not declared by the doctrine", o.unit_type),
            });
        }
    }
    Ok(())
}

pub fn run_pipeline(
    scenario: &Scenario,
    doctrine: &Doctrine,
    options: &PipelineOptions,
) -> Result<PipelineOutput, FusionError> {
    if options.k == 0 || options.m == 0 {
        return Err(FusionError::Usage("k and m must be at least 1".into()));
    }
    validate(scenario, doctrine)?;
    let doctrine = Arc::new(doctrine.clone());
    let mut store = UnitStore {
        records: BTreeMap::new(),
    };
    let mut trace = Vec::new();
    if scenario.observations.is_empty() {
        return Ok(PipelineOutput::default());
    }
    for o in &scenario.observations {
        let unit = o.to_unit();
        let record = UnitRecord {
            label: vec![(Vec::new(), unit.certainty)],
            unit,
            factors: None,
            conflicts: Vec::new(),
        };
        store.insert(record)?;
    }
    let mut members: Vec<String> = scenario.observations.iter().map(|o| o.id.clone()).collect();
    members.sort();
    let level = scenario.observations.iter().map(|o| o.level).max().unwrap();
    let mut solutions = vec![Solution {
        level,
        members,
        score: Vec::new(),
    }];

    let phases = options.max_phases.unwrap_or(4).min(4);
    for phase in 1..=phases {
        let source = Level::ALL[phase - 1];
        let (next, t) = aggregate_phase(phase, source, &solutions, &doctrine, options, &mut store)?;
        solutions = next;
        trace.push(t);
    }
    solutions.truncate(options.m);
    Ok(PipelineOutput {
        solutions,
        units: store.records,
        trace,
    })
}

/// One aggregation phase from `source`-level units. Every input solution gets its
/// own working memories; their combinations are pooled, ranked and cut to k.
fn aggregate_phase(
    phase: usize,
    source: Level,
    inputs: &[Solution],
    doctrine: &Arc<Doctrine>,
    options: &PipelineOptions,
    store: &mut UnitStore,
) -> Result<(Vec<Solution>, PhaseTrace), FusionError> {
    let mut trace = PhaseTrace {
        phase,
        from: Some(source),
        to: source.above(),
        ..PhaseTrace::default()
    };
    let complete_rules = Arc::new(phase_rulebase(doctrine, source, Generation::Complete));
    let k = options.k;
    let mut pool: Vec<(Solution, (usize, usize))> = Vec::new();
    let mut wm_id = 0u32;
    for (wi, input) in inputs.iter().enumerate() {
        let units: Vec<Unit> = input.members.iter().map(|id| store.get(id).clone()).collect();
        let refs: Vec<&Unit> = units.iter().collect();
        let (mut wm, _) = seed_memory(wm_id, Arc::clone(&complete_rules), &refs)?;
        wm_id += 1;
        trace.memories += 1;
        let hyps = generate_complete_hypotheses(&mut wm, doctrine)?;
        store.record_hypotheses(&wm, &hyps)?;
        trace.complete_hypotheses += hyps.len();
        trace.nogoods += wm.atms().nogoods().len();
        let by_assumption: BTreeMap<NodeId, &Hypothesis> = hyps.iter().map(|h| (h.assumption, h)).collect();

        let combos: Vec<Vec<&Hypothesis>> = match options.selection {
            Selection::Enumerate => {
                let interps = wm.atms().interpretations(k.max(2))?;
                if interps.len() >= 2 && interps[0].rank_key.discarded_weights == interps[1].rank_key.discarded_weights
                {
                    trace.tied_optima += 1;
                }
                interps
                    .iter()
                    .take(k)
                    .map(|i| i.kept.ids().iter().map(|a| by_assumption[a]).collect())
                    .collect()
            }
            Selection::Greedy => {
                let out = wm.atms().best_interpretation();
                trace.inspections += out.stats.inspections;
                trace.inspection_bound += out.stats.nogoods * out.stats.nogoods;
                vec![out.interpretation.kept.ids().iter().map(|a| by_assumption[a]).collect()]
            }
        };
        for (ci, combo) in combos.into_iter().enumerate() {
            trace.combinations += 1;
            let committed: Vec<&Unit> = combo.iter().map(|h| &h.unit).collect();
            let (iwm, inc) = generate_incomplete_hypotheses(wm_id, doctrine, source, &refs, &committed)?;
            wm_id += 1;
            store.record_hypotheses(&iwm, &inc)?;
            trace.incomplete_hypotheses += inc.len();
            let chosen: Vec<&Unit> = complete_greedily(&iwm, &inc)
                .into_iter()
                .map(|i| &inc[i].unit)
                .collect();
            let absorbed: BTreeSet<&String> = committed.iter().chain(&chosen).flat_map(|u| &u.subs).collect();
            let mut members: Vec<String> = committed
                .iter()
                .chain(&chosen)
                .map(|u| u.id.clone())
                .chain(units.iter().filter(|u| !absorbed.contains(&u.id)).map(|u| u.id.clone()))
                .collect();
            members.sort();
            let level = members.iter().map(|id| store.get(id).level).max().unwrap_or(source);
            let mut score: Vec<Weight> = committed.iter().map(|u| u.certainty).collect();
            score.sort_unstable_by(|a, b| b.cmp(a));
            pool.push((Solution { level, members, score }, (wi, ci)));
        }
    }
    pool.sort_by(|a, b| compare_candidates((&a.0, a.1), (&b.0, b.1)));
    let sets: Vec<BTreeSet<&String>> = pool.iter().map(|(s, _)| s.members.iter().collect()).collect();
    let mut kept: Vec<Solution> = Vec::new();
    let mut kept_sets: Vec<&BTreeSet<&String>> = Vec::new();
    for (i, (s, _)) in pool.iter().enumerate() {
        if kept_sets.iter().any(|k| **k == sets[i]) {
            continue;
        }
        if sets.iter().any(|o| sets[i].len() < o.len() && sets[i].is_subset(o)) {
            trace.subsumed += 1;
            continue;
        }
        kept_sets.push(&sets[i]);
        kept.push(s.clone());
    }
    kept.truncate(k);
    trace.kept = kept.len();
    Ok((kept, trace))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> Weight {
        s.parse().unwrap()
    }

    fn sol(score: &[&str]) -> Solution {
        Solution {
            level: Level::Company,
            members: Vec::new(),
            score: score.iter().map(|s| w(s)).collect(),
        }
    }

    #[test]
    fn comparator_is_leximax_then_source() {
        let a = sol(&["0.8"]);
        let b = sol(&["0.6", "0.6"]);
        assert_eq!(compare_candidates((&a, (1, 0)), (&b, (0, 0))), Ordering::Less);
        let c = sol(&["0.8", "0.1"]);
        assert_eq!(compare_candidates((&c, (1, 0)), (&a, (0, 0))), Ordering::Less);
        assert_eq!(compare_candidates((&a, (0, 1)), (&a, (0, 0))), Ordering::Greater);
    }

    fn four_sections() -> Scenario {
        Scenario::parse(
            "piatms-scenario 1\n\
             obs id=s1 level=section type=tank axis=A1 t=0\n\
             obs id=s2 level=section type=tank axis=A1 t=10\n\
             obs id=s3 level=section type=tank axis=A1 t=20\n\
             obs id=s4 level=section type=tank axis=A1 t=65\n",
        )
        .unwrap()
    }

    #[test]
    fn first_phase_of_four_sections() {
        let d = Doctrine::default_doctrine();
        let opts = PipelineOptions {
            max_phases: Some(1),
            ..PipelineOptions::default()
        };
        let out = run_pipeline(&four_sections(), &d, &opts).unwrap();
        assert_eq!(out.solutions.len(), 2);
        assert_eq!(out.solutions[0].score, vec![w("0.6667")]);
        assert_eq!(out.solutions[1].score, vec![w("0.0833")]);
        let first = &out.units[&out.solutions[0].members[0]];
        assert_eq!(out.trace[0].complete_hypotheses, 2);
        assert_eq!(out.trace[0].nogoods, 1);
        assert!(out.solutions[0]
            .members
            .iter()
            .any(|m| out.units[m].unit.subs == ["s1", "s2", "s3"]));
        assert_eq!(first.unit.level, Level::Company);
    }

    #[test]
    fn empty_scenario_gives_no_solutions() {
        let out = run_pipeline(
            &Scenario::default(),
            &Doctrine::default_doctrine(),
            &PipelineOptions::default(),
        )
        .unwrap();
        assert!(out.solutions.is_empty());
    }

    #[test]
    fn single_input_two_conflicting_hypotheses() {
        // Two readings of the same pair of sections: h1 at 0.8 and h2 at 0.6.
        let d = Doctrine::parse(
            "piatms-doctrine 1\ntypes tank motorised_rifle\n\
             template a\n  result company tank\n  requires section tank 2\n  max_span 100\n  max_axes 1\n  base 0.8\nend\n\
             template b\n  result company motorised_rifle\n  requires section tank 2\n  max_span 100\n  max_axes 1\n  base 0.6\nend\n",
        )
        .unwrap();
        let s = Scenario::parse(
            "piatms-scenario 1\nobs id=x level=section type=tank axis=A1 t=0\nobs id=y level=section type=tank axis=A1 t=0\n",
        )
        .unwrap();
        let out = run_pipeline(
            &s,
            &d,
            &PipelineOptions {
                max_phases: Some(1),
                ..PipelineOptions::default()
            },
        )
        .unwrap();
        assert_eq!(out.trace[0].complete_hypotheses, 2);
        assert_eq!(out.trace[0].incomplete_hypotheses, 0);
        assert_eq!(out.solutions.len(), 2);
        assert_eq!(out.solutions[0].score, vec![w("0.8")]);
        assert_eq!(out.units[&out.solutions[0].members[0]].unit.unit_type, "tank");
        assert_eq!(out.solutions[1].score, vec![w("0.6")]);
    }

    #[test]
    fn empty_phases_pass_units_through() {
        let d = Doctrine::default_doctrine();
        let out = run_pipeline(
            &four_sections(),
            &d,
            &PipelineOptions {
                k: 1,
                ..PipelineOptions::default()
            },
        )
        .unwrap();
        assert_eq!(out.trace.len(), 4);
        assert_eq!(out.solutions.len(), 1);
        // Incomplete aggregates carry the companies up; the top level is reached.
        assert_eq!(out.solutions[0].level, Level::Division);
    }

    #[test]
    fn unknown_type_is_an_input_error() {
        let s = Scenario::parse("piatms-scenario 1\nobs id=s1 level=section type=jet axis=A1 t=0\n").unwrap();
        match run_pipeline(&s, &Doctrine::default_doctrine(), &PipelineOptions::default()) {
            Err(FusionError::Parse { line: 2, .. }) => {}
            other => panic!("{other:?}"),
        }
    }
}
