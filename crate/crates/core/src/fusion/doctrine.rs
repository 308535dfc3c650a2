//! Doctrine templates and certainty scoring.
//!
//! ```text
//! piatms-doctrine 1
//! types tank motorised_rifle
//! template tank_company
//!   result company tank
//!   requires section tank 3
//!   max_span 60
//!   max_axes 1
//!   base 0.9
//! end
//! calibrate 0.5 0.4
//! ```
//!
//! `requires` may repeat and takes `*` for any type. `calibrate <raw> <out>` knots
//! define a strictly increasing piecewise-linear map applied to the computed
//! completeness and temporal factors; without knots the map is the identity.

use std::collections::BTreeSet;

use crate::possibilistic::Weight;

use super::model::{valid_ident, Level};
use super::FusionError;

pub const DOCTRINE_HEADER: &str = "piatms-doctrine 1";
pub const DEFAULT_DOCTRINE: &str = include_str!("../../data/default.doctrine");

/// Floor of the completeness and temporal factors.
pub const EPSILON: Weight = Weight::units_unchecked(500);

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Requirement {
    /// None matches any type.
    pub unit_type: Option<String>,
    pub count: usize,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Template {
    pub name: String,
    pub level: Level,
    pub unit_type: String,
    pub sub_level: Level,
    pub requires: Vec<Requirement>,
    pub max_span: i64,
    pub max_axes: usize,
    pub base: Weight,
}

impl Template {
    pub fn required(&self) -> usize {
        self.requires.iter().map(|r| r.count).sum()
    }
}

#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct Calibration {
    knots: Vec<(Weight, Weight)>,
}

impl Calibration {
    pub fn identity() -> Self {
        Self::default()
    }

    /// Knots must be strictly increasing in both coordinates. (1.0, 1.0) is implied
    /// unless a knot at 1.0 is given.
    pub fn from_knots(mut knots: Vec<(Weight, Weight)>) -> Result<Self, String> {
        knots.sort();
        if knots.last().is_some_and(|k| k.0 != Weight::ONE) {
            knots.push((Weight::ONE, Weight::ONE));
        }
        for w in knots.windows(2) {
            if w[0].0 >= w[1].0 || w[0].1 >= w[1].1 {
                return Err(format!(
                    "calibration knots ({}, {}) and ({}, {}) are not strictly increasing",
                    w[0].0, w[0].1, w[1].0, w[1].1
                ));
            }
        }
        Ok(Calibration { knots })
    }

    pub fn knots(&self) -> &[(Weight, Weight)] {
        &self.knots
    }

    pub fn is_identity(&self) -> bool {
        self.knots.is_empty()
    }

    pub fn apply(&self, raw: Weight) -> Weight {
        if self.knots.is_empty() {
            return raw;
        }
        let x = raw.units() as i64;
        let (mut x0, mut y0) = (0i64, 0i64);
        for &(kx, ky) in &self.knots {
            let (x1, y1) = (kx.units() as i64, ky.units() as i64);
            if x <= x1 {
                // Round half up.
                let num = y0 * (x1 - x0) + (y1 - y0) * (x - x0);
                let den = x1 - x0;
                let y = (2 * num + den) / (2 * den);
                return Weight::from_units(y.clamp(1, 10_000) as u32).unwrap();
            }
            (x0, y0) = (x1, y1);
        }
        unreachable!("knots end at 1.0")
    }
}

/// The three factors whose minimum is a unit's certainty.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Factors {
    pub base: Weight,
    pub complete: Weight,
    pub temporal: Weight,
}

impl Factors {
    pub fn certainty(&self) -> Weight {
        self.base.min(self.complete).min(self.temporal)
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Doctrine {
    pub types: BTreeSet<String>,
    pub templates: Vec<Template>,
    pub calibration: Calibration,
}

fn parse_error(line: usize, message: impl Into<String>) -> FusionError {
    FusionError::Parse {
        line,
        message: message.into(),
    }
}

impl Doctrine {
    pub fn default_doctrine() -> Doctrine {
        Doctrine::parse(DEFAULT_DOCTRINE).expect("bundled doctrine parses")
    }

    pub fn template(&self, name: &str) -> Option<&Template> {
        self.templates.iter().find(|t| t.name == name)
    }

    /// Templates that aggregate units of `level`.
    pub fn templates_from(&self, level: Level) -> impl Iterator<Item = &Template> {
        self.templates.iter().filter(move |t| t.sub_level == level)
    }

    /// Factors for `observed` of the template's required sub-units spanning `span`
    /// minutes. `observed` must not exceed the requirement.
    pub fn factors(&self, template: &Template, observed: usize, span: i64) -> Factors {
        let floor = |d: Option<Weight>| d.map_or(EPSILON, |w| w.max(EPSILON));
        let complete = floor(Weight::from_ratio(observed as u64, template.required() as u64));
        let left = (template.max_span - span).max(0) as u64;
        let temporal = floor(Weight::from_ratio(left, template.max_span as u64));
        Factors {
            base: template.base,
            complete: self.calibration.apply(complete),
            temporal: self.calibration.apply(temporal),
        }
    }

    pub fn parse(text: &str) -> Result<Doctrine, FusionError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        match lines.next() {
            Some((_, h)) if h == DOCTRINE_HEADER => {}
            Some((n, h)) => {
                return Err(parse_error(
                    n,
                    format!("expected header `{DOCTRINE_HEADER}`, found `{h}`"),
                ))
            }
            None => return Err(parse_error(1, format!("missing header `{DOCTRINE_HEADER}`"))),
        }
        let mut types = BTreeSet::new();
        let mut templates: Vec<(usize, Template)> = Vec::new();
        let mut knots = Vec::new();
        let mut knot_line = 0;
        // (start line, name, result, requires, max_span, max_axes, base)
        type Partial = (
            usize,
            String,
            Option<(Level, String)>,
            Vec<(usize, Level, Requirement)>,
            Option<i64>,
            Option<usize>,
            Option<Weight>,
        );
        let mut current: Option<Partial> = None;
        for (n, l) in lines {
            let words: Vec<&str> = l.split_whitespace().collect();
            let kw = words[0];
            let args = &words[1..];
            let arity = |k: usize| {
                if args.len() == k {
                    Ok(())
                } else {
                    Err(parse_error(n, format!("`{kw}` takes {k} argument(s)")))
                }
            };
            let weight = |s: &str| {
                s.parse::<Weight>()
                    .map_err(|e| parse_error(n, format!("bad weight `{s}`: {e}")))
            };
            match (&mut current, kw) {
                (None, "types") => {
                    if args.is_empty() {
                        return Err(parse_error(n, "`types` needs at least one type"));
                    }
                    for t in args {
                        if !valid_ident(t) {
                            return Err(parse_error(n, format!("bad type name `{t}`")));
                        }
                        types.insert(t.to_string());
                    }
                }
                (None, "calibrate") => {
                    arity(2)?;
                    knots.push((weight(args[0])?, weight(args[1])?));
                    knot_line = n;
                }
                (None, "template") => {
                    arity(1)?;
                    if templates.iter().any(|(_, t)| t.name == args[0]) {
                        return Err(parse_error(n, format!("duplicate template `{}`", args[0])));
                    }
                    current = Some((n, args[0].to_string(), None, Vec::new(), None, None, None));
                }
                (None, other) => {
                    return Err(parse_error(
                        n,
                        format!("expected `types`, `template` or `calibrate`, found `{other}`"),
                    ))
                }
                (Some(_), "template") => return Err(parse_error(n, "missing `end` before next template")),
                (Some(p), _) => match kw {
                    "result" => {
                        arity(2)?;
                        let level = args[0].parse::<Level>().map_err(|e| parse_error(n, e))?;
                        p.2 = Some((level, args[1].to_string()));
                    }
                    "requires" => {
                        arity(3)?;
                        let level = args[0].parse::<Level>().map_err(|e| parse_error(n, e))?;
                        let unit_type = (args[1] != "*").then(|| args[1].to_string());
                        let count = args[2]
                            .parse::<usize>()
                            .ok()
                            .filter(|&c| c > 0)
                            .ok_or_else(|| parse_error(n, format!("bad count `{}`", args[2])))?;
                        p.3.push((n, level, Requirement { unit_type, count }));
                    }
                    "max_span" => {
                        arity(1)?;
                        p.4 = Some(
                            args[0]
                                .parse::<i64>()
                                .ok()
                                .filter(|&s| s > 0)
                                .ok_or_else(|| parse_error(n, "max_span must be a positive number of minutes"))?,
                        );
                    }
                    "max_axes" => {
                        arity(1)?;
                        p.5 = Some(
                            args[0]
                                .parse::<usize>()
                                .ok()
                                .filter(|&s| s > 0)
                                .ok_or_else(|| parse_error(n, "max_axes must be a positive integer"))?,
                        );
                    }
                    "base" => {
                        arity(1)?;
                        p.6 = Some(weight(args[0])?);
                    }
                    "end" => {
                        arity(0)?;
                        let (start, name, result, requires, span, axes, base) = current.take().unwrap();
                        let missing = |what: &str| parse_error(start, format!("template `{name}` is missing `{what}`"));
                        let (level, unit_type) = result.ok_or_else(|| missing("result"))?;
                        let sub_level = level
                            .below()
                            .ok_or_else(|| parse_error(start, format!("template `{name}` cannot produce sections")))?;
                        if requires.is_empty() {
                            return Err(missing("requires"));
                        }
                        let mut reqs: Vec<Requirement> = Vec::new();
                        for (line, l, r) in requires {
                            if l != sub_level {
                                return Err(parse_error(
                                    line,
                                    format!("a {level} is built from {sub_level} units, not {l} units"),
                                ));
                            }
                            match reqs.iter_mut().find(|x| x.unit_type == r.unit_type) {
                                Some(x) => x.count += r.count,
                                None => reqs.push(r),
                            }
                        }
                        let max_span = span.ok_or_else(|| missing("max_span"))?;
                        let max_axes = axes.ok_or_else(|| missing("max_axes"))?;
                        let base = base.ok_or_else(|| missing("base"))?;
                        templates.push((
                            start,
                            Template {
                                name,
                                level,
                                unit_type,
                                sub_level,
                                requires: reqs,
                                max_span,
                                max_axes,
                                base,
                            },
                        ));
                    }
                    other => return Err(parse_error(n, format!("unknown template field `{other}`"))),
                },
            }
        }
        if let Some((start, name, ..)) = current {
            return Err(parse_error(start, format!("template `{name}` is missing `end`")));
        }
        if types.is_empty() {
            return Err(parse_error(1, "doctrine declares no `types`"));
        }
        for (line, t) in &templates {
            let known = |ty: &String| types.contains(ty);
            if !known(&t.unit_type) {
                return Err(parse_error(
                    *line,
                    format!("template `{}` uses undeclared type `{}`", t.name, t.unit_type),
                ));
            }
            if let Some(ty) = t
                .requires
                .iter()
                .filter_map(|r| r.unit_type.as_ref())
                .find(|ty| !known(ty))
            {
                return Err(parse_error(
                    *line,
                    format!("template `{}` requires undeclared type `{ty}`", t.name),
                ));
            }
        }
        let calibration = Calibration::from_knots(knots).map_err(|e| parse_error(knot_line, e))?;
        Ok(Doctrine {
            types,
            templates: templates.into_iter().map(|(_, t)| t).collect(),
            calibration,
        })
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{DOCTRINE_HEADER}\ntypes");
        for t in &self.types {
            out.push(' ');
            out.push_str(t);
        }
        out.push('\n');
        for t in &self.templates {
            out.push_str(&format!("template {}\n  result {} {}\n", t.name, t.level, t.unit_type));
            for r in &t.requires {
                out.push_str(&format!(
                    "  requires {} {} {}\n",
                    t.sub_level,
                    r.unit_type.as_deref().unwrap_or("*"),
                    r.count
                ));
            }
            out.push_str(&format!(
                "  max_span {}\n  max_axes {}\n  base {}\nend\n",
                t.max_span, t.max_axes, t.base
            ));
        }
        for (x, y) in self.calibration.knots() {
            out.push_str(&format!("calibrate {x} {y}\n"));
        }
        out
    }
}
