use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const FOUR_SECTIONS: &str = include_str!("../data/four_sections.scenario");

fn piatms(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_piatms")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn four_sections_run_ranks_compact_company_first() {
    let dir = tempfile::tempdir().unwrap();
    let s = write(dir.path(), "four_sections.scenario", FOUR_SECTIONS);
    let out = piatms(&["run", "--scenario", &s, "--phases", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.starts_with("Solution 1 (company, score 0.6667)"), "{text}");
    assert!(text.contains("Solution 2 (company, score 0.0833)"));
    assert!(!text.contains("Solution 3"));
}

#[test]
fn k1_is_the_head_of_k3() {
    let dir = tempfile::tempdir().unwrap();
    let s = write(dir.path(), "four_sections.scenario", FOUR_SECTIONS);
    let three = stdout(&piatms(&["run", "--scenario", &s, "--format", "structured"]));
    let one = stdout(&piatms(&[
        "run",
        "--scenario",
        &s,
        "--format",
        "structured",
        "--k",
        "1",
        "--m",
        "1",
    ]));
    let head = |t: &str| {
        t.lines()
            .find(|l| l.starts_with("solution rank=1"))
            .unwrap()
            .to_string()
    };
    assert_eq!(head(&one), head(&three));
}

#[test]
fn best_on_empty_scenario_is_empty() {
    let dir = tempfile::tempdir().unwrap();
    let s = write(dir.path(), "empty.scenario", "piatms-scenario 1\n");
    let out = piatms(&["best", "--scenario", &s, "--trace"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "No solutions.\n");
}

#[test]
fn best_trace_shows_inspection_bound() {
    let dir = tempfile::tempdir().unwrap();
    let s = write(dir.path(), "four_sections.scenario", FOUR_SECTIONS);
    let text = stdout(&piatms(&["best", "--scenario", &s, "--trace"]));
    assert!(text.contains("greedy nogood inspections 1 (bound 1)"), "{text}");
}

#[test]
fn explain_reads_a_structured_report() {
    let dir = tempfile::tempdir().unwrap();
    let s = write(dir.path(), "four_sections.scenario", FOUR_SECTIONS);
    let report = stdout(&piatms(&[
        "run",
        "--scenario",
        &s,
        "--format",
        "structured",
        "--phases",
        "1",
    ]));
    let r = write(dir.path(), "four_sections.report", &report);
    let company = report
        .lines()
        .find(|l| l.starts_with("unit ") && l.contains("subs=s1,s2,s3"))
        .and_then(|l| l.split_whitespace().nth(1))
        .and_then(|f| f.strip_prefix("id="))
        .unwrap()
        .to_string();
    let out = piatms(&["explain", "--report", &r, "--explain-id", &company]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(
        text.contains("certainty 0.6667 = min(base 0.9, completeness 1.0, temporal 0.6667)"),
        "{text}"
    );
    for sub in ["s1", "s2", "s3"] {
        assert!(text.contains(&format!("    {sub} section tank observed")));
    }

    let leaf = stdout(&piatms(&["explain", "--report", &r, "--explain-id", "s4"]));
    assert!(leaf.contains("label {({},1.0)}"));

    let missing = piatms(&["explain", "--report", &r, "--explain-id", "C-00000000"]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(stderr(&missing).contains("C-00000000"));
}

#[test]
fn input_errors_exit_2_with_locations() {
    let dir = tempfile::tempdir().unwrap();
    let s = write(dir.path(), "four_sections.scenario", FOUR_SECTIONS);
    let nope = dir.path().join("nope.doctrine");
    let out = piatms(&["run", "--scenario", &s, "--doctrine", nope.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("nope.doctrine"));

    let bad = write(dir.path(), "bad.scenario", "piatms-scenario 1\nobs id=a level=section type=tank axis=A1 t=0\nobs id=b level=section type=hover axis=A1 t=1\n");
    let out = piatms(&["run", "--scenario", &bad]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("bad.scenario:3:"), "{}", stderr(&out));

    let d = write(
        dir.path(),
        "bad.doctrine",
        "piatms-doctrine 1\ntypes tank\nfrobnicate\n",
    );
    let out = piatms(&["run", "--scenario", &s, "--doctrine", &d]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("bad.doctrine:3:"), "{}", stderr(&out));

    let r = write(dir.path(), "bad.report", "piatms-report 1\nrun mode=run k=1\n");
    let out = piatms(&["explain", "--report", &r, "--explain-id", "x"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("bad.report:2:"));
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(piatms(&[]).status.code(), Some(1));
    assert_eq!(piatms(&["run"]).status.code(), Some(1));
    assert_eq!(piatms(&["run", "--scenario", "x", "--k", "0"]).status.code(), Some(1));
    assert_eq!(
        piatms(&["run", "--scenario", "x", "--format", "xml"]).status.code(),
        Some(1)
    );
    assert_eq!(piatms(&["--help"]).status.code(), Some(0));
}

#[test]
fn bundled_doctrine_matches_explicit_file() {
    let dir = tempfile::tempdir().unwrap();
    let s = write(dir.path(), "four_sections.scenario", FOUR_SECTIONS);
    let d = write(dir.path(), "default.doctrine", include_str!("../data/default.doctrine"));
    let a = piatms(&["run", "--scenario", &s, "--format", "structured"]);
    let b = piatms(&["run", "--scenario", &s, "--doctrine", &d, "--format", "structured"]);
    assert_eq!(a.stdout, b.stdout);
}
