//! Declarative rule files.
//!
//! ```text
//! piatms-rules 1
//! # comment
//! rule company
//!   priority 0
//!   weight 1.0
//!   when ?a: unit level=section axis=?x id=?i1 t=?t1
//!   when ?b: unit level=section axis=?x id=?i2 t=?t2
//!   ordered ?a ?b
//!   guard max(?t1, ?t2) - min(?t1, ?t2) <= 60
//!   then assume company subs=set(?i1, ?i2) weight=0.9
//! end
//! ```
//!
//! `when` lines take an optional `?label:` followed by a class and `attr=test` pairs,
//! where a test is a constant or a variable. `then` is one of `assume <class> attrs..
//! weight=<expr>`, `derive <class> attrs.. [weight=<expr>]` or `contradiction`.
//! Expressions have integers, decimal weights (anything with a `.`), symbols,
//! variables, calls, `+ -`, comparisons and `and or not`. A bare word may contain
//! `-`, so subtraction needs spaces around it unless its left operand ends in a
//! `)` or a variable.

use thiserror::Error;

use super::expr::{BinOp, Expr, Value};
use super::rule::{Action, DefinitionError, Pattern, Rule, Rulebase, Test};
use crate::possibilistic::Weight;

pub const RULES_HEADER: &str = "piatms-rules 1";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

fn err<T>(line: usize, message: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError {
        line,
        message: message.into(),
    })
}

#[derive(Clone, PartialEq, Debug)]
enum Tok {
    Int(i64),
    Dec(String),
    Word(String),
    Var(String),
    LParen,
    RParen,
    Comma,
    Op(&'static str),
}

fn tokenize(s: &str, line: usize) -> Result<Vec<Tok>, ParseError> {
    let chars: Vec<char> = s.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let word_char = |c: char| c.is_alphanumeric() || c == '_' || c == '-' || c == '.';
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        match c {
            '(' => out.push(Tok::LParen),
            ')' => out.push(Tok::RParen),
            ',' => out.push(Tok::Comma),
            '+' => out.push(Tok::Op("+")),
            '-' => out.push(Tok::Op("-")),
            '<' | '>' | '=' | '!' => {
                let two = chars.get(i + 1) == Some(&'=');
                let op = match (c, two) {
                    ('<', true) => "<=",
                    ('<', false) => "<",
                    ('>', true) => ">=",
                    ('>', false) => ">",
                    ('=', true) => "==",
                    ('=', false) => "=",
                    ('!', true) => "!=",
                    _ => return err(line, "stray `!`"),
                };
                if two {
                    i += 1;
                }
                out.push(Tok::Op(op));
            }
            '?' => {
                let start = i + 1;
                let mut j = start;
                while j < chars.len() && (chars[j].is_alphanumeric() || chars[j] == '_') {
                    j += 1;
                }
                if j == start {
                    return err(line, "`?` must be followed by a variable name");
                }
                out.push(Tok::Var(chars[start..j].iter().collect()));
                i = j;
                continue;
            }
            c if c.is_ascii_digit() => {
                let mut j = i;
                while j < chars.len() && (chars[j].is_ascii_digit() || chars[j] == '.') {
                    j += 1;
                }
                let text: String = chars[i..j].iter().collect();
                if text.contains('.') {
                    out.push(Tok::Dec(text));
                } else {
                    match text.parse() {
                        Ok(v) => out.push(Tok::Int(v)),
                        Err(_) => return err(line, format!("integer `{text}` out of range")),
                    }
                }
                i = j;
                continue;
            }
            c if c.is_alphabetic() || c == '_' => {
                let mut j = i;
                while j < chars.len() && word_char(chars[j]) {
                    j += 1;
                }
                out.push(Tok::Word(chars[i..j].iter().collect()));
                i = j;
                continue;
            }
            other => return err(line, format!("unexpected character `{other}`")),
        }
        i += 1;
    }
    Ok(out)
}

struct Cursor<'a> {
    toks: &'a [Tok],
    pos: usize,
    line: usize,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<&'a Tok> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<&'a Tok> {
        let t = self.toks.get(self.pos);
        self.pos += 1;
        t
    }

    fn done(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn eat_op(&mut self, op: &str) -> bool {
        if self.peek() == Some(&Tok::Op(op_static(op))) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_word(&mut self, w: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Word(x)) if x == w) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn word(&mut self, what: &str) -> Result<String, ParseError> {
        match self.next() {
            Some(Tok::Word(w)) => Ok(w.clone()),
            _ => err(self.line, format!("expected {what}")),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        self.or()
    }

    fn or(&mut self) -> Result<Expr, ParseError> {
        let mut l = self.and()?;
        while self.eat_word("or") {
            l = Expr::bin(BinOp::Or, l, self.and()?);
        }
        Ok(l)
    }

    fn and(&mut self) -> Result<Expr, ParseError> {
        let mut l = self.cmp()?;
        while self.eat_word("and") {
            l = Expr::bin(BinOp::And, l, self.cmp()?);
        }
        Ok(l)
    }

    fn cmp(&mut self) -> Result<Expr, ParseError> {
        let l = self.add()?;
        for (op, bin) in [
            ("<=", BinOp::Le),
            ("<", BinOp::Lt),
            (">=", BinOp::Ge),
            (">", BinOp::Gt),
            ("==", BinOp::Eq),
            ("!=", BinOp::Ne),
        ] {
            if self.eat_op(op) {
                return Ok(Expr::bin(bin, l, self.add()?));
            }
        }
        Ok(l)
    }

    fn add(&mut self) -> Result<Expr, ParseError> {
        let mut l = self.unary()?;
        loop {
            if self.eat_op("+") {
                l = Expr::bin(BinOp::Add, l, self.unary()?);
            } else if self.eat_op("-") {
                l = Expr::bin(BinOp::Sub, l, self.unary()?);
            } else {
                return Ok(l);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat_word("not") {
            return Ok(Expr::Not(Box::new(self.unary()?)));
        }
        if self.eat_op("-") {
            return match self.next() {
                Some(Tok::Int(i)) => Ok(Expr::Lit(Value::Int(-i))),
                _ => err(self.line, "`-` prefix only applies to integer literals"),
            };
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let line = self.line;
        match self.next() {
            Some(Tok::Int(i)) => Ok(Expr::Lit(Value::Int(*i))),
            Some(Tok::Dec(d)) => Ok(Expr::Lit(Value::Weight(parse_weight(d, line)?))),
            Some(Tok::Var(v)) => Ok(Expr::Var(v.clone())),
            Some(Tok::LParen) => {
                let e = self.expr()?;
                match self.next() {
                    Some(Tok::RParen) => Ok(e),
                    _ => err(line, "expected `)`"),
                }
            }
            Some(Tok::Word(w)) => {
                if self.peek() == Some(&Tok::LParen) {
                    self.pos += 1;
                    let mut args = Vec::new();
                    if self.peek() == Some(&Tok::RParen) {
                        self.pos += 1;
                        return Ok(Expr::Call(w.clone(), args));
                    }
                    loop {
                        args.push(self.expr()?);
                        match self.next() {
                            Some(Tok::Comma) => continue,
                            Some(Tok::RParen) => return Ok(Expr::Call(w.clone(), args)),
                            _ => return err(line, format!("expected `,` or `)` in call to `{w}`")),
                        }
                    }
                }
                Ok(Expr::Lit(match w.as_str() {
                    "true" => Value::Bool(true),
                    "false" => Value::Bool(false),
                    _ => Value::Sym(w.clone()),
                }))
            }
            Some(t) => err(line, format!("unexpected {t:?}")),
            None => err(line, "unexpected end of line"),
        }
    }

    /// `attr=<expr>` pairs until the end of the line.
    fn assignments(&mut self) -> Result<Vec<(String, Expr)>, ParseError> {
        let mut out = Vec::new();
        while !self.done() {
            let name = self.word("attribute name")?;
            if !self.eat_op("=") {
                return err(self.line, format!("expected `=` after `{name}`"));
            }
            out.push((name, self.expr()?));
        }
        Ok(out)
    }
}

fn op_static(op: &str) -> &'static str {
    ["+", "-", "<=", "<", ">=", ">", "==", "=", "!="]
        .into_iter()
        .find(|o| *o == op)
        .unwrap()
}

fn parse_weight(s: &str, line: usize) -> Result<Weight, ParseError> {
    s.parse().or_else(|e| err(line, format!("bad weight `{s}`: {e}")))
}

fn parse_condition(rest: &str, line: usize) -> Result<Pattern, ParseError> {
    let trimmed = rest.trim_start();
    let (label, body) = match trimmed.strip_prefix('?') {
        Some(after) => match after.split_once(':') {
            Some((name, body)) if !name.is_empty() && name.chars().all(|ch| ch.is_alphanumeric() || ch == '_') => {
                (Some(name.to_string()), body)
            }
            _ => return err(line, "condition label must look like `?name:`"),
        },
        None => (None, trimmed),
    };
    let toks = tokenize(body, line)?;
    let mut c = Cursor {
        toks: &toks,
        pos: 0,
        line,
    };
    let mut p = Pattern::new(c.word("element class")?);
    p.label = label;
    while !c.done() {
        let attr = c.word("attribute name")?;
        if !c.eat_op("=") {
            return err(line, format!("expected `=` after `{attr}`"));
        }
        let test = match c.next() {
            Some(Tok::Var(v)) => Test::Var(v.clone()),
            Some(Tok::Int(i)) => Test::Const(Value::Int(*i)),
            Some(Tok::Dec(d)) => Test::Const(Value::Weight(parse_weight(d, line)?)),
            Some(Tok::Word(w)) => Test::Const(Value::Sym(w.clone())),
            Some(Tok::Op("-")) => match c.next() {
                Some(Tok::Int(i)) => Test::Const(Value::Int(-i)),
                _ => return err(line, "expected integer after `-`"),
            },
            _ => return err(line, format!("expected constant or variable for `{attr}`")),
        };
        p.tests.push((attr, test));
    }
    Ok(p)
}

fn parse_action(rest: &str, line: usize) -> Result<Action, ParseError> {
    let toks = tokenize(rest, line)?;
    let mut c = Cursor {
        toks: &toks,
        pos: 0,
        line,
    };
    let kind = c.word("`assume`, `derive` or `contradiction`")?;
    match kind.as_str() {
        "contradiction" => {
            if !c.done() {
                return err(line, "`contradiction` takes no arguments");
            }
            Ok(Action::Contradiction)
        }
        "assume" | "derive" => {
            let class = c.word("element class")?;
            let mut attrs = c.assignments()?;
            let weight = attrs.iter().position(|(k, _)| k == "weight").map(|i| attrs.remove(i).1);
            if kind == "assume" {
                match weight {
                    Some(weight) => Ok(Action::Assume { class, attrs, weight }),
                    None => err(line, "`assume` needs weight=<expr>"),
                }
            } else {
                Ok(Action::Derive { class, attrs, weight })
            }
        }
        other => err(line, format!("unknown action `{other}`")),
    }
}

fn parse_expr_line(rest: &str, line: usize) -> Result<Expr, ParseError> {
    let toks = tokenize(rest, line)?;
    let mut c = Cursor {
        toks: &toks,
        pos: 0,
        line,
    };
    let e = c.expr()?;
    if !c.done() {
        return err(line, "trailing tokens after expression");
    }
    Ok(e)
}

/// Parses a rule file, returning each rule with the line it starts on.
pub fn parse_rules(text: &str) -> Result<Vec<(usize, Rule)>, ParseError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    match lines.next() {
        Some((_, h)) if h == RULES_HEADER => {}
        Some((n, h)) => return err(n, format!("expected header `{RULES_HEADER}`, found `{h}`")),
        None => return err(1, format!("missing header `{RULES_HEADER}`")),
    }
    let mut out = Vec::new();
    let mut current: Option<(usize, Rule, bool)> = None;
    for (n, l) in lines {
        let (kw, rest) = l.split_once(char::is_whitespace).unwrap_or((l, ""));
        let rest = rest.trim();
        match (&mut current, kw) {
            (None, "rule") => {
                if rest.is_empty() || rest.contains(char::is_whitespace) {
                    return err(n, "expected `rule <name>`");
                }
                current = Some((n, Rule::new(rest, Action::Contradiction), false));
            }
            (None, _) => return err(n, format!("expected `rule`, found `{kw}`")),
            (Some(_), "rule") => return err(n, "missing `end` before next rule"),
            (Some((start, rule, has_action)), _) => match kw {
                "priority" => {
                    rule.priority = rest.parse().or_else(|_| err(n, format!("bad priority `{rest}`")))?;
                }
                "weight" => rule.weight = parse_weight(rest, n)?,
                "when" => rule.conditions.push(parse_condition(rest, n)?),
                "ordered" => {
                    let toks = tokenize(rest, n)?;
                    let mut group = Vec::new();
                    for t in toks {
                        match t {
                            Tok::Var(v) => group.push(v),
                            _ => return err(n, "`ordered` takes condition labels like `?a ?b`"),
                        }
                    }
                    if group.len() < 2 {
                        return err(n, "`ordered` needs at least two labels");
                    }
                    rule.ordered.push(group);
                }
                "guard" => {
                    if rule.guard.is_some() {
                        return err(n, "rule already has a guard");
                    }
                    rule.guard = Some(parse_expr_line(rest, n)?);
                }
                "then" => {
                    if *has_action {
                        return err(n, "rule already has an action");
                    }
                    rule.action = parse_action(rest, n)?;
                    *has_action = true;
                }
                "end" => {
                    if !*has_action {
                        return err(n, format!("rule `{}` has no `then` line", rule.name));
                    }
                    let (start, rule) = (*start, rule.clone());
                    out.push((start, rule));
                    current = None;
                }
                other => return err(n, format!("unknown rule field `{other}`")),
            },
        }
    }
    if let Some((start, rule, _)) = current {
        return err(start, format!("rule `{}` is missing `end`", rule.name));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LoadError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("line {line}: {source}")]
    Definition { line: usize, source: DefinitionError },
}

/// Parses `text` and defines every rule in `rulebase`, in file order.
pub fn load_rules(rulebase: &mut Rulebase, text: &str) -> Result<usize, LoadError> {
    let rules = parse_rules(text)?;
    let n = rules.len();
    for (line, rule) in rules {
        rulebase
            .define_rule(rule)
            .map_err(|source| LoadError::Definition { line, source })?;
    }
    Ok(n)
}

#[cfg(test)]
mod tests {
    use super::*;

    const COMPANY: &str = "piatms-rules 1
# three-of-a-kind on one axis
rule company
  priority 2
  weight 1.0
  when ?a: unit level=section axis=?x id=?i1 t=?t1
  when ?b: unit level=section axis=?x id=?i2 t=?t2
  when ?c: unit level=section axis=?x id=?i3 t=?t3
  ordered ?a ?b ?c
  guard max(?t1, ?t2, ?t3) - min(?t1, ?t2, ?t3) <= 60 and not (?x == A9)
  then assume company subs=set(?i1, ?i2, ?i3) axis=?x weight=0.9
end
";

    #[test]
    fn parses_a_full_rule() {
        let rules = parse_rules(COMPANY).unwrap();
        assert_eq!(rules.len(), 1);
        let (line, r) = &rules[0];
        assert_eq!(*line, 3);
        assert_eq!(r.name, "company");
        assert_eq!(r.priority, 2);
        assert_eq!(r.conditions.len(), 3);
        assert_eq!(r.conditions[0].label.as_deref(), Some("a"));
        assert_eq!(
            r.conditions[0].tests[0],
            ("level".to_string(), Test::Const(Value::sym("section")))
        );
        assert_eq!(r.ordered, vec![vec!["a".to_string(), "b".into(), "c".into()]]);
        assert!(matches!(&r.action, Action::Assume { class, attrs, .. } if class == "company" && attrs.len() == 2));
        let mut rb = Rulebase::new();
        assert_eq!(load_rules(&mut rb, COMPANY), Ok(1));
    }

    #[test]
    fn expression_precedence() {
        let e = parse_expr_line("?a + 1 <= ?b - 2 or ?c", 1).unwrap();
        let expected = Expr::bin(
            BinOp::Or,
            Expr::bin(
                BinOp::Le,
                Expr::bin(BinOp::Add, Expr::var("a"), Expr::Lit(Value::Int(1))),
                Expr::bin(BinOp::Sub, Expr::var("b"), Expr::Lit(Value::Int(2))),
            ),
            Expr::var("c"),
        );
        assert_eq!(e, expected);
    }

    #[test]
    fn errors_cite_lines() {
        let missing_then = "piatms-rules 1\nrule r\n  when unit id=?i\nend\n";
        assert_eq!(parse_rules(missing_then).unwrap_err().line, 4);
        let bad_weight = "piatms-rules 1\n\nrule r\n  weight 1.5\n";
        assert_eq!(parse_rules(bad_weight).unwrap_err().line, 4);
        let bad_header = "# c\npiatms-rules 2\n";
        assert_eq!(parse_rules(bad_header).unwrap_err().line, 2);
        let unterminated = "piatms-rules 1\nrule r\n  when unit id=?i\n  then contradiction\n";
        assert_eq!(parse_rules(unterminated).unwrap_err().line, 2);
        let unknown = "piatms-rules 1\nrule r\n  when unit id=?i\n  colour red\n";
        assert_eq!(parse_rules(unknown).unwrap_err().line, 4);
    }

    #[test]
    fn definition_errors_cite_rule_line() {
        let text = "piatms-rules 1\nrule r\n  when unit id=?i\n  guard ?t < 3\n  then contradiction\nend\n";
        let mut rb = Rulebase::new();
        match load_rules(&mut rb, text) {
            Err(LoadError::Definition {
                line: 2,
                source: DefinitionError::UnboundVariable { .. },
            }) => {}
            other => panic!("{other:?}"),
        }
    }
}
