//! Doctrine templates compiled to rules, and hypothesis generation in private
//! working memories.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::atms::{AssumptionSet, NodeId};
use crate::possibilistic::Weight;
use crate::rules::{Action, BinOp, Element, Expr, Pattern, Rule, Rulebase, Value, WorkingMemory};

use super::doctrine::{Doctrine, Factors, Template};
use super::model::{Interval, Level, Unit};
use super::FusionError;

pub const UNIT_CLASS: &str = "unit";
pub const HYPOTHESIS_CLASS: &str = "hyp";

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Generation {
    /// Every required sub-unit present.
    Complete,
    /// At least one but not all required sub-units present.
    Incomplete,
}

/// A hypothesised unit and its backing in the working memory's engine.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Hypothesis {
    pub unit: Unit,
    pub factors: Factors,
    pub assumption: NodeId,
    pub node: NodeId,
}

/// Stable id of an aggregate, derived from its content so that it does not depend
/// on the order hypotheses are generated in.
pub fn aggregate_id(level: Level, unit_type: &str, template: &str, subs: &[String]) -> String {
    // FNV-1a, 64 bit, folded to 32.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut feed = |s: &str| {
        for b in s.bytes().chain(std::iter::once(0xff)) {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    };
    feed(level.as_str());
    feed(unit_type);
    feed(template);
    for s in subs {
        feed(s);
    }
    format!("{}-{:08x}", level.prefix(), (h ^ (h >> 32)) as u32)
}

fn sym(s: &str) -> Expr {
    Expr::Lit(Value::sym(s))
}

fn int(i: i64) -> Expr {
    Expr::Lit(Value::Int(i))
}

fn vars(prefix: &str, n: usize) -> Vec<Expr> {
    (0..n).map(|i| Expr::var(format!("{prefix}{i}"))).collect()
}

/// Rule for `template` with `counts[i]` members of requirement `i`.
fn template_rule(template: &Template, counts: &[usize], name: String) -> Rule {
    let n: usize = counts.iter().sum();
    let span = || {
        Expr::bin(
            BinOp::Sub,
            Expr::call("max", vars("e", n)),
            Expr::call("min", vars("s", n)),
        )
    };
    let action = Action::Assume {
        class: HYPOTHESIS_CLASS.into(),
        attrs: vec![
            ("template".into(), sym(&template.name)),
            ("level".into(), sym(template.level.as_str())),
            ("type".into(), sym(&template.unit_type)),
            ("subs".into(), Expr::call("set", vars("id", n))),
            ("start".into(), Expr::call("min", vars("s", n))),
            ("end".into(), Expr::call("max", vars("e", n))),
            ("axes".into(), Expr::call("union", vars("a", n))),
            ("observed".into(), int(n as i64)),
        ],
        weight: Expr::call("certainty", vec![sym(&template.name), int(n as i64), span()]),
    };
    let mut rule = Rule::new(name, action);
    let mut slot = 0;
    let mut groups = 0;
    for (req, &count) in template.requires.iter().zip(counts) {
        if count == 0 {
            continue;
        }
        groups += 1;
        let mut labels = Vec::new();
        for _ in 0..count {
            let label = format!("u{slot}");
            let mut p = Pattern::new(UNIT_CLASS)
                .labeled(&label)
                .eq("level", Value::sym(template.sub_level.as_str()));
            p = match &req.unit_type {
                Some(t) => p.eq("type", Value::sym(t)),
                None => p,
            };
            p = p
                .bind("id", format!("id{slot}"))
                .bind("start", format!("s{slot}"))
                .bind("end", format!("e{slot}"))
                .bind("axes", format!("a{slot}"));
            rule = rule.when(p);
            labels.push(label);
            slot += 1;
        }
        if labels.len() > 1 {
            rule = rule.ordered(&labels);
        }
    }
    let mut guard = Expr::bin(
        BinOp::And,
        Expr::bin(BinOp::Le, span(), int(template.max_span)),
        Expr::bin(
            BinOp::Le,
            Expr::call("count", vec![Expr::call("union", vars("a", n))]),
            int(template.max_axes as i64),
        ),
    );
    if groups > 1 {
        // A wildcard requirement could otherwise reuse a unit matched by a typed one.
        let distinct = Expr::bin(
            BinOp::Eq,
            Expr::call("count", vec![Expr::call("set", vars("id", n))]),
            int(n as i64),
        );
        guard = Expr::bin(BinOp::And, guard, distinct);
    }
    rule.guard(guard)
}

/// Count vectors `c` with `0 <= c[i] <= max[i]` and `1 <= sum < sum(max)`.
fn partial_counts(max: &[usize]) -> Vec<Vec<usize>> {
    let total: usize = max.iter().sum();
    let mut out = Vec::new();
    let mut c = vec![0; max.len()];
    loop {
        let s: usize = c.iter().sum();
        if s >= 1 && s < total {
            out.push(c.clone());
        }
        let mut i = 0;
        loop {
            if i == c.len() {
                return out;
            }
            if c[i] < max[i] {
                c[i] += 1;
                break;
            }
            c[i] = 0;
            i += 1;
        }
    }
}

/// Rules aggregating units of `level`, plus the shared-sub-unit conflict rule.
pub fn phase_rulebase(doctrine: &Arc<Doctrine>, level: Level, generation: Generation) -> Rulebase {
    let mut rb = Rulebase::new();
    let d = Arc::clone(doctrine);
    rb.register_function("certainty", move |args: &[Value]| match args {
        [Value::Sym(t), Value::Int(observed), Value::Int(span)] => {
            let template = d.template(t).ok_or_else(|| format!("no template `{t}`"))?;
            Ok(Value::Weight(
                d.factors(template, *observed as usize, *span).certainty(),
            ))
        }
        _ => Err("takes (template, observed, span)".into()),
    });
    for t in doctrine.templates_from(level) {
        let max: Vec<usize> = t.requires.iter().map(|r| r.count).collect();
        let rules = match generation {
            Generation::Complete => vec![template_rule(t, &max, t.name.clone())],
            Generation::Incomplete => partial_counts(&max)
                .into_iter()
                .map(|c| {
                    let name = format!(
                        "{}/{}",
                        t.name,
                        c.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("-")
                    );
                    template_rule(t, &c, name)
                })
                .collect(),
        };
        for r in rules {
            rb.define_rule(r).expect("generated rules are well formed");
        }
    }
    let conflict = Rule::new("shared_sub_unit", Action::Contradiction)
        .when(Pattern::new(HYPOTHESIS_CLASS).labeled("p").bind("subs", "sp"))
        .when(Pattern::new(HYPOTHESIS_CLASS).labeled("q").bind("subs", "sq"))
        .ordered(&["p", "q"])
        .guard(Expr::call("intersects", vec![Expr::var("sp"), Expr::var("sq")]));
    rb.define_rule(conflict).expect("conflict rule is well formed");
    rb
}

pub fn unit_element(u: &Unit) -> Element {
    Element::new(UNIT_CLASS)
        .with("id", Value::sym(&u.id))
        .with("level", Value::sym(u.level.as_str()))
        .with("type", Value::sym(&u.unit_type))
        .with("start", Value::Int(u.time.start))
        .with("end", Value::Int(u.time.end))
        .with("axes", Value::Set(u.axes.clone()))
}

/// A fresh working memory holding `units` as facts weighted by their certainty.
/// Returns the memory and the fact node of each unit id.
pub fn seed_memory(
    id: u32,
    rulebase: Arc<Rulebase>,
    units: &[&Unit],
) -> Result<(WorkingMemory, BTreeMap<String, NodeId>), FusionError> {
    let mut wm = WorkingMemory::new(id, rulebase);
    let mut nodes = BTreeMap::new();
    for u in units {
        let node = wm.atms_mut().add_fact(u.certainty);
        wm.assert_element(unit_element(u), node)?;
        nodes.insert(u.id.clone(), node);
    }
    Ok((wm, nodes))
}

fn hypotheses_of(wm: &WorkingMemory, doctrine: &Doctrine) -> Result<Vec<Hypothesis>, FusionError> {
    let mut out = Vec::new();
    for e in wm.elements() {
        if e.element.class != HYPOTHESIS_CLASS {
            continue;
        }
        let get = |k: &str| e.element.get(k).expect("hypotheses carry every attribute");
        let template_name = get("template").as_sym().unwrap();
        let template = doctrine.template(template_name).expect("rules come from this doctrine");
        let subs: Vec<String> = get("subs").as_set().unwrap().iter().cloned().collect();
        let time = Interval {
            start: get("start").as_int().unwrap(),
            end: get("end").as_int().unwrap(),
        };
        let observed = get("observed").as_int().unwrap() as usize;
        let factors = doctrine.factors(template, observed, time.span());
        let assumption = e.assumption.expect("hypotheses are assumed");
        let weight = wm.atms().node(assumption)?.intrinsic_weight;
        debug_assert_eq!(weight, Some(factors.certainty()));
        out.push(Hypothesis {
            unit: Unit {
                id: aggregate_id(template.level, &template.unit_type, &template.name, &subs),
                level: template.level,
                unit_type: template.unit_type.clone(),
                time,
                axes: get("axes").as_set().unwrap().clone(),
                subs,
                certainty: factors.certainty(),
                complete: observed == template.required(),
                template: Some(template.name.clone()),
            },
            factors,
            assumption,
            node: e.node,
        });
    }
    Ok(out)
}

/// Runs the complete-unit rules of a memory seeded by [`seed_memory`]. Pairs of
/// hypotheses sharing a sub-unit are recorded as nogoods by the conflict rule.
pub fn generate_complete_hypotheses(
    wm: &mut WorkingMemory,
    doctrine: &Doctrine,
) -> Result<Vec<Hypothesis>, FusionError> {
    wm.run_to_quiescence()?;
    hypotheses_of(wm, doctrine)
}

/// Incomplete aggregates of the `level` units in `units` that no member of
/// `committed` uses, generated in a fresh working memory.
pub fn generate_incomplete_hypotheses(
    id: u32,
    doctrine: &Arc<Doctrine>,
    level: Level,
    units: &[&Unit],
    committed: &[&Unit],
) -> Result<(WorkingMemory, Vec<Hypothesis>), FusionError> {
    let used: BTreeSet<&String> = committed.iter().flat_map(|u| &u.subs).collect();
    let leftover: Vec<&Unit> = units
        .iter()
        .copied()
        .filter(|u| u.level == level && !used.contains(&u.id))
        .collect();
    let rb = Arc::new(phase_rulebase(doctrine, level, Generation::Incomplete));
    let (mut wm, _) = seed_memory(id, rb, &leftover)?;
    wm.run_to_quiescence()?;
    let hyps = hypotheses_of(&wm, doctrine)?;
    Ok((wm, hyps))
}

/// Greedy completion: most certain first (id breaks ties), skipping any hypothesis
/// whose assumption would join a nogood with those already chosen. Returns indices.
pub fn complete_greedily(wm: &WorkingMemory, hyps: &[Hypothesis]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..hyps.len()).collect();
    order.sort_by(|&a, &b| {
        hyps[b]
            .unit
            .certainty
            .cmp(&hyps[a].unit.certainty)
            .then_with(|| hyps[a].unit.id.cmp(&hyps[b].unit.id))
    });
    let mut chosen = Vec::new();
    let mut env = AssumptionSet::empty();
    for i in order {
        let next = env.union(&AssumptionSet::singleton(hyps[i].assumption));
        if wm.atms().environment_inconsistency_degree(&next).is_none() {
            env = next;
            chosen.push(i);
        }
    }
    chosen.sort_unstable();
    chosen
}

/// Weight of the strongest nogood containing `assumption`, with the other members.
pub fn conflicts_of(wm: &WorkingMemory, assumption: NodeId) -> Vec<(Vec<NodeId>, Weight)> {
    wm.atms()
        .nogoods()
        .iter()
        .filter(|g| g.assumptions.contains(assumption))
        .map(|g| {
            (
                g.assumptions
                    .ids()
                    .iter()
                    .copied()
                    .filter(|&a| a != assumption)
                    .collect(),
                g.degree,
            )
        })
        .collect()
}
