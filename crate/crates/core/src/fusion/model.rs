//! Unit model and scenario files.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use crate::possibilistic::Weight;

use super::FusionError;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Level {
    Section,
    Company,
    Battalion,
    Regiment,
    Division,
}

impl Level {
    pub const ALL: [Level; 5] = [
        Level::Section,
        Level::Company,
        Level::Battalion,
        Level::Regiment,
        Level::Division,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Level::Section => "section",
            Level::Company => "company",
            Level::Battalion => "battalion",
            Level::Regiment => "regiment",
            Level::Division => "division",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn above(self) -> Option<Level> {
        Level::ALL.get(self.index() + 1).copied()
    }

    pub fn below(self) -> Option<Level> {
        self.index().checked_sub(1).map(|i| Level::ALL[i])
    }

    /// Letter used in generated ids.
    pub fn prefix(self) -> char {
        match self {
            Level::Section => 'S',
            Level::Company => 'C',
            Level::Battalion => 'B',
            Level::Regiment => 'R',
            Level::Division => 'D',
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Level {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Level::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| format!("unknown level `{s}`"))
    }
}

/// Minutes since scenario start, inclusive on both ends.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Interval {
    pub start: i64,
    pub end: i64,
}

impl Interval {
    pub fn instant(t: i64) -> Self {
        Interval { start: t, end: t }
    }

    pub fn span(self) -> i64 {
        self.end - self.start
    }

    pub fn hull(self, other: Interval) -> Interval {
        Interval {
            start: self.start.min(other.start),
            end: self.end.max(other.end),
        }
    }
}

/// An observed or hypothesised unit.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Unit {
    pub id: String,
    pub level: Level,
    pub unit_type: String,
    pub time: Interval,
    pub axes: BTreeSet<String>,
    /// Ids of the units one level below, sorted. Empty for observations.
    pub subs: Vec<String>,
    pub certainty: Weight,
    pub complete: bool,
    /// Doctrine template that produced the unit; None for observations.
    pub template: Option<String>,
}

impl Unit {
    pub fn is_observation(&self) -> bool {
        self.template.is_none()
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Observation {
    pub line: usize,
    pub id: String,
    pub level: Level,
    pub unit_type: String,
    pub axis: String,
    pub t: i64,
    pub conf: Weight,
}

impl Observation {
    pub fn to_unit(&self) -> Unit {
        Unit {
            id: self.id.clone(),
            level: self.level,
            unit_type: self.unit_type.clone(),
            time: Interval::instant(self.t),
            axes: BTreeSet::from([self.axis.clone()]),
            subs: Vec::new(),
            certainty: self.conf,
            complete: true,
            template: None,
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct Scenario {
    pub observations: Vec<Observation>,
}

pub const SCENARIO_HEADER: &str = "piatms-scenario 1";

fn parse_error(line: usize, message: impl Into<String>) -> FusionError {
    FusionError::Parse {
        line,
        message: message.into(),
    }
}

/// Splits `k=v` fields; bare words are rejected.
pub(crate) fn fields(rest: &str, line: usize) -> Result<Vec<(&str, &str)>, FusionError> {
    rest.split_whitespace()
        .map(|f| {
            f.split_once('=')
                .ok_or_else(|| parse_error(line, format!("expected key=value, found `{f}`")))
        })
        .collect()
}

pub(crate) fn valid_ident(s: &str) -> bool {
    !s.is_empty()
        && s.chars().next().is_some_and(|c| c.is_alphanumeric() || c == '_')
        && s.chars()
            .all(|c| c.is_alphanumeric() || c == '_' || c == '-' || c == '.')
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Scenario, FusionError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        match lines.next() {
            Some((_, h)) if h == SCENARIO_HEADER => {}
            Some((n, h)) => {
                return Err(parse_error(
                    n,
                    format!("expected header `{SCENARIO_HEADER}`, found `{h}`"),
                ))
            }
            None => return Err(parse_error(1, format!("missing header `{SCENARIO_HEADER}`"))),
        }
        let mut observations: Vec<Observation> = Vec::new();
        for (n, l) in lines {
            let (kw, rest) = l.split_once(char::is_whitespace).unwrap_or((l, ""));
            if kw != "obs" {
                return Err(parse_error(n, format!("expected `obs`, found `{kw}`")));
            }
            let (mut id, mut level, mut ty, mut axis, mut t, mut conf) = (None, None, None, None, None, Weight::ONE);
            for (k, v) in fields(rest, n)? {
                let slot = match k {
                    "id" => &mut id,
                    "type" => &mut ty,
                    "axis" => &mut axis,
                    "level" => {
                        level = Some(v.parse::<Level>().map_err(|e| parse_error(n, e))?);
                        continue;
                    }
                    "t" => {
                        t = Some(
                            v.parse::<i64>()
                                .map_err(|_| parse_error(n, format!("bad time `{v}`")))?,
                        );
                        continue;
                    }
                    "conf" => {
                        conf = v
                            .parse()
                            .map_err(|e| parse_error(n, format!("bad confidence `{v}`: {e}")))?;
                        continue;
                    }
                    other => return Err(parse_error(n, format!("unknown field `{other}`"))),
                };
                if !valid_ident(v) {
                    return Err(parse_error(n, format!("bad {k} `{v}`")));
                }
                *slot = Some(v.to_string());
            }
            let missing = |what: &str| parse_error(n, format!("missing {what}="));
            let obs = Observation {
                line: n,
                id: id.ok_or_else(|| missing("id"))?,
                level: level.ok_or_else(|| missing("level"))?,
                unit_type: ty.ok_or_else(|| missing("type"))?,
                axis: axis.ok_or_else(|| missing("axis"))?,
                t: t.ok_or_else(|| missing("t"))?,
                conf,
            };
            if obs.t < 0 {
                return Err(parse_error(n, "time must be non-negative"));
            }
            if let Some(prev) = observations.iter().find(|o| o.id == obs.id) {
                return Err(parse_error(
                    n,
                    format!("duplicate id `{}` (first on line {})", obs.id, prev.line),
                ));
            }
            observations.push(obs);
        }
        Ok(Scenario { observations })
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{SCENARIO_HEADER}\n");
        for o in &self.observations {
            out.push_str(&format!(
                "obs id={} level={} type={} axis={} t={} conf={}\n",
                o.id, o.level, o.unit_type, o.axis, o.t, o.conf
            ));
        }
        out
    }
}
