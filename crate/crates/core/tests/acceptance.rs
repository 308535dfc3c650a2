//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and exits
//! nonzero if any failed.

mod common;

use std::collections::BTreeSet;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use common::{check_oracle_equivalence, for_each_permutation, random_scenario, HornInstance};
use piatms::atms::{
    best_interpretation, interpretations, AssumptionSet, Atms, Environment, NodeId, Nogood, NogoodSystem,
    DEFAULT_ENUMERATION_CAP,
};
use piatms::fusion::{
    run_pipeline, Calibration, Doctrine, Level, PipelineOptions, PipelineOutput, Scenario, Selection, EPSILON,
};
use piatms::possibilistic::Weight;
use piatms::report::{Mode, Report};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const FOUR_SECTIONS: &str = include_str!("../data/four_sections.scenario");
const RECONSTRUCTED: &str = include_str!("../data/reconstructed.scenario");

type Criterion = (&'static str, u64, fn() -> Outcome);

struct Outcome {
    ok: bool,
    detail: String,
}

fn check(ok: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        ok,
        detail: detail.into(),
    }
}

fn within(elapsed: Duration, limit: Duration, mut o: Outcome) -> Outcome {
    o.detail = format!(
        "{}; {:.3}s (limit {}s)",
        o.detail,
        elapsed.as_secs_f64(),
        limit.as_secs()
    );
    if elapsed > limit {
        o.ok = false;
    }
    o
}

fn w(units: u32) -> Weight {
    Weight::units_unchecked(units)
}

fn run(s: &Scenario, d: &Doctrine, k: usize, m: usize, selection: Selection) -> PipelineOutput {
    run_pipeline(
        s,
        d,
        &PipelineOptions {
            k,
            m,
            selection,
            max_phases: None,
        },
    )
    .unwrap()
}

fn member_sets(out: &PipelineOutput) -> Vec<Vec<String>> {
    out.solutions.iter().map(|s| s.members.clone()).collect()
}

// 1. Update rule

fn update_rule() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let cases = 2000;
    for case in 0..cases {
        let (aa, ab, aj) = (
            rng.gen_range(1..=10_000),
            rng.gen_range(1..=10_000),
            rng.gen_range(1..=10_000),
        );
        let prior: Option<u32> = rng.gen_bool(0.7).then(|| rng.gen_range(1..=10_000));
        let mut atms = Atms::new();
        let c = atms.add_derived();
        if let Some(ac) = prior {
            let f = atms.add_fact(Weight::ONE);
            atms.add_justification(&[f], c, w(ac)).unwrap();
        }
        let a = atms.add_fact(w(aa));
        let b = atms.add_fact(w(ab));
        atms.add_justification(&[a, b], c, w(aj)).unwrap();
        let expected = prior.unwrap_or(0).max(aa.min(ab).min(aj));
        let label = atms.label(c).unwrap().environments().to_vec();
        if label != [Environment::new(AssumptionSet::empty(), w(expected))] {
            return check(
                false,
                format!("case {case}: expected degree {}, label {:?}", w(expected), label),
            );
        }
    }
    check(true, format!("{cases} cases bit-exact"))
}

// 2. Oracle equivalence

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let instances = 250;
    for case in 0..instances {
        let inst = HornInstance::random(&mut rng, 8, 15);
        let atms = inst.build_in_order();
        if let Err(e) = check_oracle_equivalence(&atms) {
            return check(false, format!("instance {case}: {e}"));
        }
    }
    check(true, format!("{instances} instances match the exhaustive oracle"))
}

// 3. Four-section example

fn four_sections() -> Outcome {
    let s = Scenario::parse(FOUR_SECTIONS).unwrap();
    let opts = PipelineOptions {
        max_phases: Some(1),
        ..PipelineOptions::default()
    };
    let out = run_pipeline(&s, &Doctrine::default_doctrine(), &opts).unwrap();
    let t = &out.trace[0];
    let companies: Vec<_> = out
        .units
        .values()
        .filter(|r| r.unit.level == Level::Company && r.unit.complete)
        .collect();
    if t.complete_hypotheses != 2 || companies.len() != 2 || t.nogoods != 1 {
        return check(
            false,
            format!("{} complete hypotheses, {} nogoods", t.complete_hypotheses, t.nogoods),
        );
    }
    let compact = companies.iter().min_by_key(|r| r.unit.time.span()).unwrap();
    let spread = companies.iter().max_by_key(|r| r.unit.time.span()).unwrap();
    let top = &out.solutions[0];
    let ok = compact.unit.subs == ["s1", "s2", "s3"]
        && compact.unit.certainty > spread.unit.certainty
        && top.members.contains(&compact.unit.id)
        && !top.members.contains(&spread.unit.id)
        && out.solutions.len() == 2
        && out.solutions[0].score > out.solutions[1].score;
    check(
        ok,
        format!(
            "2 complete companies, 1 nogood; compact {} at {} outranks {} at {}",
            compact.unit.subs.join("+"),
            compact.unit.certainty,
            spread.unit.subs.join("+"),
            spread.unit.certainty
        ),
    )
}

// 4. Greedy best interpretation

fn random_system(rng: &mut ChaCha8Rng, distinct: bool) -> NogoodSystem {
    let n = rng.gen_range(1..=12);
    let draw = |rng: &mut ChaCha8Rng, count: usize| -> Vec<Weight> {
        if distinct {
            index::sample(rng, 10_000, count)
                .into_iter()
                .map(|u| w(u as u32 + 1))
                .collect()
        } else {
            (0..count).map(|_| common::grid_weight(rng)).collect()
        }
    };
    let weights = draw(rng, n);
    let ng = rng.gen_range(1..=8);
    let degrees = draw(rng, ng);
    let nogoods = degrees.into_iter().map(|d| {
        let size = rng.gen_range(1..=3.min(n));
        let members = index::sample(rng, n, size).into_iter().map(|i| NodeId(i as u32 + 1));
        Nogood::new(AssumptionSet::from_ids(members), d)
    });
    NogoodSystem::new(
        (0..n).map(|i| (NodeId(i as u32 + 1), weights[i])),
        nogoods.collect::<Vec<_>>(),
    )
}

fn greedy() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let systems = 1000;
    let (mut agree, mut distinct_total, mut distinct_agree) = (0, 0, 0);
    for case in 0..systems {
        let distinct = case % 2 == 1;
        let sys = random_system(&mut rng, distinct);
        let out = best_interpretation(&sys);
        let kept = &out.interpretation.kept;
        if sys.embeds_nogood(kept) {
            return check(false, format!("system {case}: result embeds a nogood"));
        }
        for &a in out.interpretation.discarded.ids() {
            if !sys.embeds_nogood(&kept.union(&AssumptionSet::singleton(a))) {
                return check(false, format!("system {case}: not maximal, {a} can be re-added"));
            }
        }
        let n = out.stats.nogoods;
        if out.stats.inspections > n * n {
            return check(
                false,
                format!("system {case}: {} inspections for {n} nogoods", out.stats.inspections),
            );
        }
        let best = interpretations(&sys, 1, DEFAULT_ENUMERATION_CAP).unwrap();
        let same = best[0].kept == *kept;
        agree += same as usize;
        if distinct {
            distinct_total += 1;
            distinct_agree += same as usize;
        }
    }
    check(
        distinct_agree == distinct_total,
        format!(
            "{systems} systems maximal and consistent, inspections <= |N|^2; agreement {agree}/{systems} ({:.1}%), \
             distinct-weight subfamily {distinct_agree}/{distinct_total}",
            100.0 * agree as f64 / systems as f64
        ),
    )
}

// 5. Non-subsumption

fn subsumed_pair(sets: &[Vec<String>]) -> Option<(usize, usize)> {
    let sets: Vec<BTreeSet<&String>> = sets.iter().map(|s| s.iter().collect()).collect();
    for (i, a) in sets.iter().enumerate() {
        for (j, b) in sets.iter().enumerate() {
            if i != j && a.is_subset(b) {
                return Some((i, j));
            }
        }
    }
    None
}

fn non_subsumption() -> Outcome {
    let d = Doctrine::default_doctrine();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut scenarios = vec![("reconstructed".to_string(), Scenario::parse(RECONSTRUCTED).unwrap())];
    for i in 0..50 {
        let n = rng.gen_range(4..=12);
        scenarios.push((format!("random {i}"), random_scenario(&mut rng, n)));
    }
    let mut reported = 0;
    let mut multi = 0;
    for (name, s) in &scenarios {
        let out = run(s, &d, 3, 3, Selection::Enumerate);
        reported += out.solutions.len();
        multi += (out.solutions.len() > 1) as usize;
        if let Some((i, j)) = subsumed_pair(&member_sets(&out)) {
            return check(
                false,
                format!("{name}: solution {} is a subset of solution {}", i + 1, j + 1),
            );
        }
    }
    check(
        true,
        format!(
            "{} scenarios, {reported} solutions reported, {multi} with several; no subset pairs",
            scenarios.len()
        ),
    )
}

// 6. Order-only sensitivity

/// Every raw value a certainty can be built from under `d`, plus the confidences.
fn weight_domain(d: &Doctrine, s: &Scenario) -> BTreeSet<Weight> {
    let mut dom: BTreeSet<Weight> = BTreeSet::from([Weight::ONE, EPSILON]);
    dom.extend(s.observations.iter().map(|o| o.conf));
    for t in &d.templates {
        dom.insert(t.base);
        for observed in 1..=t.required() {
            let f = d.factors(t, observed, 0);
            dom.insert(f.complete);
        }
        for span in 0..=t.max_span {
            dom.insert(d.factors(t, 1, span).temporal);
        }
    }
    dom
}

/// A random strictly increasing map of `dom` into (0, 1] that fixes 1.0.
fn random_remap(rng: &mut ChaCha8Rng, dom: &BTreeSet<Weight>) -> Vec<(Weight, Weight)> {
    let n = dom.len();
    let mut images: Vec<u32> = index::sample(rng, 9_999, n - 1)
        .into_iter()
        .map(|u| u as u32 + 1)
        .collect();
    images.sort_unstable();
    images.push(10_000);
    dom.iter().copied().zip(images.into_iter().map(w)).collect()
}

fn remapped(d: &Doctrine, s: &Scenario, map: &[(Weight, Weight)]) -> (Doctrine, Scenario) {
    let g = |x: Weight| map.iter().find(|(r, _)| *r == x).expect("value in domain").1;
    let mut d2 = d.clone();
    for t in &mut d2.templates {
        t.base = g(t.base);
    }
    d2.calibration = Calibration::from_knots(map.to_vec()).unwrap();
    let mut s2 = s.clone();
    for o in &mut s2.observations {
        o.conf = g(o.conf);
    }
    (d2, s2)
}

fn order_only() -> Outcome {
    let d = Doctrine::default_doctrine();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let pairs = 20;
    for i in 0..pairs {
        let s = if i == 0 {
            Scenario::parse(RECONSTRUCTED).unwrap()
        } else {
            let n = rng.gen_range(4..=12);
            random_scenario(&mut rng, n)
        };
        let map = random_remap(&mut rng, &weight_domain(&d, &s));
        let (d2, s2) = remapped(&d, &s, &map);
        for (selection, k) in [(Selection::Enumerate, 3), (Selection::Greedy, 1)] {
            let a = run(&s, &d, k, 3, selection);
            let b = run(&s2, &d2, k, 3, selection);
            if member_sets(&a) != member_sets(&b) {
                return check(false, format!("pair {i} ({selection:?}): rankings differ"));
            }
        }
    }
    check(
        true,
        format!("{pairs} scenario/remap pairs rank identically under run and best"),
    )
}

// 7. Determinism and prefix

fn determinism_and_prefix() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("reconstructed.scenario");
    std::fs::write(&path, RECONSTRUCTED).unwrap();
    let cli = |cmd: &str| {
        let out = Command::new(env!("CARGO_BIN_EXE_piatms"))
            .args([
                cmd,
                "--scenario",
                path.to_str().unwrap(),
                "--format",
                "structured",
                "--trace",
            ])
            .output()
            .unwrap();
        assert!(out.status.success());
        out.stdout
    };
    for cmd in ["run", "best"] {
        if cli(cmd) != cli(cmd) {
            return check(false, format!("two `{cmd}` invocations differ"));
        }
    }

    let d = Doctrine::default_doctrine();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut scenarios = vec![
        Scenario::parse(FOUR_SECTIONS).unwrap(),
        Scenario::parse(RECONSTRUCTED).unwrap(),
    ];
    for _ in 0..30 {
        let n = rng.gen_range(4..=12);
        scenarios.push(random_scenario(&mut rng, n));
    }
    let (mut prefix_fail, mut unique, mut best_fail) = (Vec::new(), 0, Vec::new());
    for (i, s) in scenarios.iter().enumerate() {
        let text = |o: &PipelineOutput, k, m| Report::from_output(Mode::Run, k, m, 4, o, true).to_structured();
        let three = run(s, &d, 3, 3, Selection::Enumerate);
        if text(&three, 3, 3) != text(&run(s, &d, 3, 3, Selection::Enumerate), 3, 3) {
            return check(false, format!("scenario {i}: repeated runs differ"));
        }
        let one = run(s, &d, 1, 1, Selection::Enumerate);
        if one.solutions.first() != three.solutions.first() {
            prefix_fail.push(i);
        }
        if one.trace.iter().all(|t| t.tied_optima == 0) {
            unique += 1;
            let best = run(s, &d, 1, 1, Selection::Greedy);
            if best.solutions != one.solutions {
                best_fail.push(i);
            }
        }
    }
    check(
        prefix_fail.is_empty() && best_fail.is_empty(),
        format!(
            "byte-identical reruns; k=1 head mismatches {prefix_fail:?} of {}; best vs run --k 1 mismatches \
             {best_fail:?} of {unique} with a unique optimum",
            scenarios.len()
        ),
    )
}

// 8. Propagation order independence

fn order_independence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let sets = 100;
    let mut perms = 0;
    for case in 0..sets {
        let inst = HornInstance::random_exact(&mut rng, 5, 5);
        let reference = inst.build_in_order();
        let (labels, nogoods) = (reference.dump(), reference.nogoods().to_vec());
        let mut bad = None;
        for_each_permutation(5, |order| {
            perms += 1;
            let a = inst.build(order);
            if bad.is_none() && (a.dump() != labels || a.nogoods() != nogoods.as_slice()) {
                bad = Some(order.to_vec());
            }
        });
        if let Some(order) = bad {
            return check(false, format!("set {case}: order {order:?} differs"));
        }
    }
    check(perms == sets * 120, format!("{sets} sets x 120 permutations identical"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("1 update rule", 1, update_rule),
        ("2 oracle equivalence", 60, oracle_equivalence),
        ("3 four-section example", 1, four_sections),
        ("4 greedy interpretation", 30, greedy),
        ("5 non-subsumption", 30, non_subsumption),
        ("6 order-only sensitivity", 30, order_only),
        ("7 determinism and prefix", 10, determinism_and_prefix),
        ("8 order independence", 30, order_independence),
    ];
    let mut failed = 0;
    for (name, limit, f) in criteria {
        let start = Instant::now();
        let o = f();
        let o = within(start.elapsed(), Duration::from_secs(limit), o);
        println!(
            "criterion {name}: {} ({})",
            if o.ok { "PASS" } else { "FAIL" },
            o.detail
        );
        failed += !o.ok as usize;
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
