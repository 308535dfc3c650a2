//! Run reports: text rendering, a line-oriented structured format that parses back
//! to the same value, and explanations of single units.
//!
//! ```text
//! piatms-report 1
//! run mode=run k=3 m=3 phases=4
//! solution rank=1 level=company score=0.6667 members=C-9a07c1e2,C-ffe1d0a3
//! unit id=C-9a07c1e2 level=company type=tank start=0 end=20 axes=A1 subs=s1,s2,s3 certainty=0.6667 complete=true template=tank_company
//! factors id=C-9a07c1e2 base=0.9 complete=1.0 temporal=0.6667
//! label id=C-9a07c1e2 env=C-9a07c1e2 degree=0.6667
//! conflict id=C-9a07c1e2 with=C-41d2d0b8 degree=0.0833
//! trace phase=1 from=section to=company memories=1 ...
//! ```
//!
//! Lists are comma separated and `-` stands for an empty list or an absent value.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use thiserror::Error;

use crate::fusion::{Factors, Interval, Level, PhaseTrace, PipelineOutput, Unit, UnitRecord};
use crate::possibilistic::Weight;

pub const REPORT_HEADER: &str = "piatms-report 1";

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Mode {
    Run,
    Best,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Run => "run",
            Mode::Best => "best",
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SolutionRecord {
    pub rank: usize,
    pub level: Level,
    pub score: Vec<Weight>,
    pub members: Vec<String>,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Report {
    pub mode: Mode,
    pub k: usize,
    pub m: usize,
    pub phases: usize,
    pub solutions: Vec<SolutionRecord>,
    /// Every unit reachable from a reported solution, by id.
    pub units: BTreeMap<String, UnitRecord>,
    pub trace: Vec<PhaseTrace>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReportError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("no unit `{0}` in this report")]
    UnknownId(String),
}

pub fn format_time(minutes: i64) -> String {
    format!("{:02}:{:02}", minutes / 60, minutes % 60)
}

fn format_interval(t: Interval) -> String {
    if t.start == t.end {
        format_time(t.start)
    } else {
        format!("{}-{}", format_time(t.start), format_time(t.end))
    }
}

fn list<I, S>(items: I) -> String
where
    I: IntoIterator<Item = S>,
    S: ToString,
{
    let v: Vec<String> = items.into_iter().map(|s| s.to_string()).collect();
    if v.is_empty() {
        "-".into()
    } else {
        v.join(",")
    }
}

fn weights_text(ws: &[Weight]) -> String {
    ws.iter().map(|w| w.to_string()).collect::<Vec<_>>().join(" ")
}

fn env_text(env: &[String], degree: Weight) -> String {
    format!("({{{}}},{})", env.join(" "), degree)
}

impl Report {
    /// Collects the reported solutions and the units below them. `trace` keeps
    /// the per-phase statistics.
    pub fn from_output(mode: Mode, k: usize, m: usize, phases: usize, out: &PipelineOutput, trace: bool) -> Report {
        let mut units = BTreeMap::new();
        let mut stack: Vec<&String> = out.solutions.iter().flat_map(|s| &s.members).collect();
        while let Some(id) = stack.pop() {
            if units.contains_key(id) {
                continue;
            }
            let r = &out.units[id];
            stack.extend(&r.unit.subs);
            units.insert(id.clone(), r.clone());
        }
        Report {
            mode,
            k,
            m,
            phases,
            solutions: out
                .solutions
                .iter()
                .enumerate()
                .map(|(i, s)| SolutionRecord {
                    rank: i + 1,
                    level: s.level,
                    score: s.score.clone(),
                    members: s.members.clone(),
                })
                .collect(),
            units,
            trace: if trace { out.trace.clone() } else { Vec::new() },
        }
    }

    // ---- structured ----

    pub fn to_structured(&self) -> String {
        let mut out = format!("{REPORT_HEADER}\n");
        let _ = writeln!(
            out,
            "run mode={} k={} m={} phases={}",
            self.mode.as_str(),
            self.k,
            self.m,
            self.phases
        );
        for s in &self.solutions {
            let _ = writeln!(
                out,
                "solution rank={} level={} score={} members={}",
                s.rank,
                s.level,
                list(&s.score),
                list(&s.members)
            );
        }
        for r in self.units.values() {
            let u = &r.unit;
            let _ = writeln!(
                out,
                "unit id={} level={} type={} start={} end={} axes={} subs={} certainty={} complete={} template={}",
                u.id,
                u.level,
                u.unit_type,
                u.time.start,
                u.time.end,
                list(&u.axes),
                list(&u.subs),
                u.certainty,
                u.complete,
                u.template.as_deref().unwrap_or("-")
            );
            if let Some(f) = &r.factors {
                let _ = writeln!(
                    out,
                    "factors id={} base={} complete={} temporal={}",
                    u.id, f.base, f.complete, f.temporal
                );
            }
            for (env, d) in &r.label {
                let _ = writeln!(out, "label id={} env={} degree={}", u.id, list(env), d);
            }
            for (with, d) in &r.conflicts {
                let _ = writeln!(out, "conflict id={} with={} degree={}", u.id, list(with), d);
            }
        }
        for t in &self.trace {
            let lvl = |l: Option<Level>| l.map_or("-".to_string(), |l| l.to_string());
            let _ = writeln!(
                out,
                "trace phase={} from={} to={} memories={} complete={} incomplete={} nogoods={} combinations={} \
                 inspections={} bound={} tied={} subsumed={} kept={}",
                t.phase,
                lvl(t.from),
                lvl(t.to),
                t.memories,
                t.complete_hypotheses,
                t.incomplete_hypotheses,
                t.nogoods,
                t.combinations,
                t.inspections,
                t.inspection_bound,
                t.tied_optima,
                t.subsumed,
                t.kept
            );
        }
        out
    }

    pub fn parse_structured(text: &str) -> Result<Report, ReportError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        match lines.next() {
            Some((_, h)) if h == REPORT_HEADER => {}
            Some((n, _)) => return perr(n, format!("expected header `{REPORT_HEADER}`")),
            None => return perr(1, "empty report"),
        }
        let mut report: Option<Report> = None;
        for (n, l) in lines {
            let (kw, rest) = l.split_once(' ').unwrap_or((l, ""));
            let mut f = Fields::parse(rest, n)?;
            if kw == "run" {
                if report.is_some() {
                    return perr(n, "duplicate `run` record");
                }
                let mode = match f.take("mode")? {
                    "run" => Mode::Run,
                    "best" => Mode::Best,
                    other => return perr(n, format!("unknown mode `{other}`")),
                };
                report = Some(Report {
                    mode,
                    k: f.num("k")?,
                    m: f.num("m")?,
                    phases: f.num("phases")?,
                    solutions: Vec::new(),
                    units: BTreeMap::new(),
                    trace: Vec::new(),
                });
                f.finish()?;
                continue;
            }
            let Some(r) = report.as_mut() else {
                return perr(n, "expected `run` record first");
            };
            match kw {
                "solution" => {
                    r.solutions.push(SolutionRecord {
                        rank: f.num("rank")?,
                        level: f.level("level")?,
                        score: f.weights("score")?,
                        members: f.list("members")?,
                    });
                }
                "unit" => {
                    let id = f.take("id")?.to_string();
                    let unit = Unit {
                        id: id.clone(),
                        level: f.level("level")?,
                        unit_type: f.take("type")?.to_string(),
                        time: Interval {
                            start: f.num("start")?,
                            end: f.num("end")?,
                        },
                        axes: f.list("axes")?.into_iter().collect::<BTreeSet<_>>(),
                        subs: f.list("subs")?,
                        certainty: f.weight("certainty")?,
                        complete: match f.take("complete")? {
                            "true" => true,
                            "false" => false,
                            other => return perr(n, format!("bad boolean `{other}`")),
                        },
                        template: f.optional("template")?,
                    };
                    if r.units.contains_key(&id) {
                        return perr(n, format!("duplicate unit `{id}`"));
                    }
                    r.units.insert(
                        id,
                        UnitRecord {
                            unit,
                            factors: None,
                            label: Vec::new(),
                            conflicts: Vec::new(),
                        },
                    );
                }
                "factors" | "label" | "conflict" => {
                    let id = f.take("id")?.to_string();
                    let Some(u) = r.units.get_mut(&id) else {
                        return perr(n, format!("`{kw}` for unknown unit `{id}`"));
                    };
                    match kw {
                        "factors" => {
                            u.factors = Some(Factors {
                                base: f.weight("base")?,
                                complete: f.weight("complete")?,
                                temporal: f.weight("temporal")?,
                            })
                        }
                        "label" => u.label.push((f.list("env")?, f.weight("degree")?)),
                        _ => u.conflicts.push((f.list("with")?, f.weight("degree")?)),
                    }
                }
                "trace" => {
                    r.trace.push(PhaseTrace {
                        phase: f.num("phase")?,
                        from: f
                            .optional("from")?
                            .map(|s| s.parse())
                            .transpose()
                            .map_err(|e| perr_v(n, e))?,
                        to: f
                            .optional("to")?
                            .map(|s| s.parse())
                            .transpose()
                            .map_err(|e| perr_v(n, e))?,
                        memories: f.num("memories")?,
                        complete_hypotheses: f.num("complete")?,
                        incomplete_hypotheses: f.num("incomplete")?,
                        nogoods: f.num("nogoods")?,
                        combinations: f.num("combinations")?,
                        inspections: f.num("inspections")?,
                        inspection_bound: f.num("bound")?,
                        tied_optima: f.num("tied")?,
                        subsumed: f.num("subsumed")?,
                        kept: f.num("kept")?,
                    });
                }
                other => return perr(n, format!("unknown record `{other}`")),
            }
            f.finish()?;
        }
        report.ok_or(ReportError::Parse {
            line: 1,
            message: "missing `run` record".into(),
        })
    }

    // ---- text ----

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        if self.solutions.is_empty() {
            out.push_str("No solutions.\n");
        }
        for s in &self.solutions {
            let _ = writeln!(
                out,
                "Solution {} ({}, score {})",
                s.rank,
                s.level,
                if s.score.is_empty() {
                    "-".to_string()
                } else {
                    weights_text(&s.score)
                }
            );
            for id in &s.members {
                self.render_unit(&mut out, id, 1);
            }
        }
        if !self.trace.is_empty() {
            out.push_str("\nTrace\n");
            for t in &self.trace {
                let lvl = |l: Option<Level>| l.map_or("-".to_string(), |l| l.to_string());
                let _ = writeln!(
                    out,
                    "  phase {} {} -> {}: {} memories, {} complete and {} incomplete hypotheses, {} nogoods, \
                     {} combinations, {} subsumed, {} kept",
                    t.phase,
                    lvl(t.from),
                    lvl(t.to),
                    t.memories,
                    t.complete_hypotheses,
                    t.incomplete_hypotheses,
                    t.nogoods,
                    t.combinations,
                    t.subsumed,
                    t.kept
                );
                if self.mode == Mode::Best {
                    let _ = writeln!(
                        out,
                        "    greedy nogood inspections {} (bound {})",
                        t.inspections, t.inspection_bound
                    );
                }
            }
        }
        out
    }

    fn render_unit(&self, out: &mut String, id: &str, depth: usize) {
        let pad = "  ".repeat(depth);
        let Some(r) = self.units.get(id) else {
            let _ = writeln!(out, "{pad}{id} (not in report)");
            return;
        };
        let u = &r.unit;
        let axes = u.axes.iter().cloned().collect::<Vec<_>>().join(",");
        if u.is_observation() {
            let _ = writeln!(
                out,
                "{pad}{} {} {} observed {} on {}, conf {}",
                u.id,
                u.level,
                u.unit_type,
                format_interval(u.time),
                axes,
                u.certainty
            );
        } else {
            let _ = writeln!(
                out,
                "{pad}{} {} {} {} on {}, certainty {}{}",
                u.id,
                u.level,
                u.unit_type,
                format_interval(u.time),
                axes,
                u.certainty,
                if u.complete { "" } else { ", incomplete" }
            );
            for s in &u.subs {
                self.render_unit(out, s, depth + 1);
            }
        }
    }

    // ---- explain ----

    pub fn explain(&self, id: &str) -> Result<String, ReportError> {
        let r = self
            .units
            .get(id)
            .ok_or_else(|| ReportError::UnknownId(id.to_string()))?;
        let u = &r.unit;
        let mut out = String::new();
        let _ = writeln!(out, "{} {} {}", u.id, u.level, u.unit_type);
        if let Some(t) = &u.template {
            let _ = writeln!(out, "  template {}{}", t, if u.complete { "" } else { " (incomplete)" });
        }
        let axes = u.axes.iter().cloned().collect::<Vec<_>>().join(",");
        let _ = writeln!(out, "  time {}, axes {}", format_interval(u.time), axes);
        match &r.factors {
            Some(f) => {
                let _ = writeln!(
                    out,
                    "  certainty {} = min(base {}, completeness {}, temporal {})",
                    u.certainty, f.base, f.complete, f.temporal
                );
            }
            None => {
                let _ = writeln!(out, "  certainty {} (observation confidence)", u.certainty);
            }
        }
        let label: Vec<String> = r.label.iter().map(|(e, d)| env_text(e, *d)).collect();
        let _ = writeln!(out, "  label {{{}}}", label.join(""));
        if u.subs.is_empty() {
            let _ = writeln!(out, "  justification: observed");
        } else {
            let _ = writeln!(
                out,
                "  justification: {} <- {} and its hypothesis",
                u.id,
                u.subs.join(", ")
            );
            for s in &u.subs {
                self.chain(&mut out, s, 2);
            }
        }
        if r.conflicts.is_empty() {
            let _ = writeln!(out, "  conflicts: none");
        } else {
            let _ = writeln!(out, "  conflicts:");
            for (with, d) in &r.conflicts {
                let _ = writeln!(
                    out,
                    "    nogood {} with {}",
                    env_text(&[vec![u.id.clone()], with.clone()].concat(), *d),
                    with.join(", ")
                );
            }
        }
        Ok(out)
    }

    fn chain(&self, out: &mut String, id: &str, depth: usize) {
        let pad = "  ".repeat(depth);
        match self.units.get(id) {
            None => {
                let _ = writeln!(out, "{pad}{id}");
            }
            Some(r) if r.unit.is_observation() => {
                let u = &r.unit;
                let axes = u.axes.iter().cloned().collect::<Vec<_>>().join(",");
                let _ = writeln!(
                    out,
                    "{pad}{} {} {} observed {} on {}, conf {}",
                    u.id,
                    u.level,
                    u.unit_type,
                    format_interval(u.time),
                    axes,
                    u.certainty
                );
            }
            Some(r) => {
                let u = &r.unit;
                let _ = writeln!(
                    out,
                    "{pad}{} {} {} certainty {} <- {}",
                    u.id,
                    u.level,
                    u.unit_type,
                    u.certainty,
                    u.subs.join(", ")
                );
                for s in &u.subs {
                    self.chain(out, s, depth + 1);
                }
            }
        }
    }
}

fn perr<T>(line: usize, message: impl Into<String>) -> Result<T, ReportError> {
    Err(ReportError::Parse {
        line,
        message: message.into(),
    })
}

fn perr_v(line: usize, message: impl Into<String>) -> ReportError {
    ReportError::Parse {
        line,
        message: message.into(),
    }
}

/// `key=value` fields of one record; every field must be consumed.
struct Fields<'a> {
    line: usize,
    map: BTreeMap<&'a str, &'a str>,
}

impl<'a> Fields<'a> {
    fn parse(rest: &'a str, line: usize) -> Result<Self, ReportError> {
        let mut map = BTreeMap::new();
        for f in rest.split_whitespace() {
            let (k, v) = f
                .split_once('=')
                .ok_or_else(|| perr_v(line, format!("expected key=value, found `{f}`")))?;
            if map.insert(k, v).is_some() {
                return perr(line, format!("duplicate field `{k}`"));
            }
        }
        Ok(Fields { line, map })
    }

    fn take(&mut self, k: &str) -> Result<&'a str, ReportError> {
        self.map
            .remove(k)
            .ok_or_else(|| perr_v(self.line, format!("missing field `{k}`")))
    }

    fn optional(&mut self, k: &str) -> Result<Option<String>, ReportError> {
        Ok(Some(self.take(k)?).filter(|v| *v != "-").map(str::to_string))
    }

    fn num<T: std::str::FromStr>(&mut self, k: &str) -> Result<T, ReportError> {
        let v = self.take(k)?;
        v.parse()
            .map_err(|_| perr_v(self.line, format!("bad number `{v}` for `{k}`")))
    }

    fn weight(&mut self, k: &str) -> Result<Weight, ReportError> {
        let v = self.take(k)?;
        v.parse()
            .map_err(|e| perr_v(self.line, format!("bad weight `{v}` for `{k}`: {e}")))
    }

    fn level(&mut self, k: &str) -> Result<Level, ReportError> {
        let v = self.take(k)?;
        v.parse().map_err(|e: String| perr_v(self.line, e))
    }

    fn list(&mut self, k: &str) -> Result<Vec<String>, ReportError> {
        let v = self.take(k)?;
        Ok(if v == "-" {
            Vec::new()
        } else {
            v.split(',').map(str::to_string).collect()
        })
    }

    fn weights(&mut self, k: &str) -> Result<Vec<Weight>, ReportError> {
        let line = self.line;
        self.list(k)?
            .iter()
            .map(|s| s.parse().map_err(|e| perr_v(line, format!("bad weight `{s}`: {e}"))))
            .collect()
    }

    fn finish(self) -> Result<(), ReportError> {
        match self.map.keys().next() {
            Some(k) => perr(self.line, format!("unexpected field `{k}`")),
            None => Ok(()),
        }
    }
}
