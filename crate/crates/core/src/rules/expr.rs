//! Values, expressions and their evaluation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::possibilistic::Weight;

/// Attribute value of a working-memory element.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Value {
    Int(i64),
    Weight(Weight),
    Sym(String),
    Set(BTreeSet<String>),
    Bool(bool),
}

impl Value {
    pub fn sym(s: impl Into<String>) -> Value {
        Value::Sym(s.into())
    }

    pub fn set<I, S>(items: I) -> Value
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Value::Set(items.into_iter().map(Into::into).collect())
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            Value::Int(_) => "int",
            Value::Weight(_) => "weight",
            Value::Sym(_) => "symbol",
            Value::Set(_) => "set",
            Value::Bool(_) => "bool",
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(i) => Some(*i),
            _ => None,
        }
    }

    pub fn as_sym(&self) -> Option<&str> {
        match self {
            Value::Sym(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_set(&self) -> Option<&BTreeSet<String>> {
        match self {
            Value::Set(s) => Some(s),
            _ => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(i) => write!(f, "{i}"),
            Value::Weight(w) => write!(f, "{w}"),
            Value::Sym(s) => f.write_str(s),
            Value::Set(s) => {
                f.write_str("{")?;
                for (i, x) in s.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    f.write_str(x)?;
                }
                f.write_str("}")
            }
            Value::Bool(b) => write!(f, "{b}"),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum BinOp {
    Add,
    Sub,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
}

#[derive(Clone, PartialEq, Debug)]
pub enum Expr {
    Lit(Value),
    Var(String),
    Call(String, Vec<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
}

impl Expr {
    pub fn var(name: impl Into<String>) -> Expr {
        Expr::Var(name.into())
    }

    pub fn call(name: impl Into<String>, args: Vec<Expr>) -> Expr {
        Expr::Call(name.into(), args)
    }

    pub fn bin(op: BinOp, l: Expr, r: Expr) -> Expr {
        Expr::Binary(op, Box::new(l), Box::new(r))
    }

    /// Variables referenced anywhere in the expression.
    pub fn variables(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Lit(_) => {}
            Expr::Var(v) => {
                out.insert(v.clone());
            }
            Expr::Call(_, args) => args.iter().for_each(|a| a.variables(out)),
            Expr::Binary(_, l, r) => {
                l.variables(out);
                r.variables(out);
            }
            Expr::Not(e) => e.variables(out),
        }
    }

    pub fn functions(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Lit(_) | Expr::Var(_) => {}
            Expr::Call(f, args) => {
                out.insert(f.clone());
                args.iter().for_each(|a| a.functions(out));
            }
            Expr::Binary(_, l, r) => {
                l.functions(out);
                r.functions(out);
            }
            Expr::Not(e) => e.functions(out),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("unbound variable ?{0}")]
    Unbound(String),
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("`{op}` cannot combine {left} and {right}")]
    Mismatch {
        op: String,
        left: &'static str,
        right: &'static str,
    },
    #[error("`{function}`: {message}")]
    Function { function: String, message: String },
}

/// Function callable from guards and actions.
pub type HostFn = Arc<dyn Fn(&[Value]) -> Result<Value, String> + Send + Sync>;

pub const BUILTINS: &[&str] = &["min", "max", "union", "set", "count", "intersects"];

pub type Bindings = BTreeMap<String, Value>;

pub fn eval(expr: &Expr, bindings: &Bindings, host: &BTreeMap<String, HostFn>) -> Result<Value, EvalError> {
    match expr {
        Expr::Lit(v) => Ok(v.clone()),
        Expr::Var(v) => bindings.get(v).cloned().ok_or_else(|| EvalError::Unbound(v.clone())),
        Expr::Not(e) => match eval(e, bindings, host)? {
            Value::Bool(b) => Ok(Value::Bool(!b)),
            other => Err(EvalError::Mismatch {
                op: "not".into(),
                left: other.type_name(),
                right: "-",
            }),
        },
        Expr::Binary(op, l, r) => {
            let lv = eval(l, bindings, host)?;
            // Short-circuit logic operators.
            match (op, &lv) {
                (BinOp::And, Value::Bool(false)) => return Ok(Value::Bool(false)),
                (BinOp::Or, Value::Bool(true)) => return Ok(Value::Bool(true)),
                _ => {}
            }
            let rv = eval(r, bindings, host)?;
            binary(*op, lv, rv)
        }
        Expr::Call(name, args) => {
            let vals = args
                .iter()
                .map(|a| eval(a, bindings, host))
                .collect::<Result<Vec<_>, _>>()?;
            if let Some(f) = host.get(name) {
                return f(&vals).map_err(|message| EvalError::Function {
                    function: name.clone(),
                    message,
                });
            }
            builtin(name, vals)
        }
    }
}

fn binary(op: BinOp, l: Value, r: Value) -> Result<Value, EvalError> {
    use std::cmp::Ordering::*;
    let mismatch = |l: &Value, r: &Value| EvalError::Mismatch {
        op: format!("{op:?}").to_lowercase(),
        left: l.type_name(),
        right: r.type_name(),
    };
    match op {
        BinOp::Add | BinOp::Sub => match (&l, &r) {
            (Value::Int(a), Value::Int(b)) => Ok(Value::Int(if op == BinOp::Add { a + b } else { a - b })),
            _ => Err(mismatch(&l, &r)),
        },
        BinOp::And | BinOp::Or => match (&l, &r) {
            (Value::Bool(a), Value::Bool(b)) => Ok(Value::Bool(if op == BinOp::And { *a && *b } else { *a || *b })),
            _ => Err(mismatch(&l, &r)),
        },
        BinOp::Eq => Ok(Value::Bool(l == r)),
        BinOp::Ne => Ok(Value::Bool(l != r)),
        BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
            let ord = match (&l, &r) {
                (Value::Int(a), Value::Int(b)) => a.cmp(b),
                (Value::Weight(a), Value::Weight(b)) => a.cmp(b),
                (Value::Sym(a), Value::Sym(b)) => a.cmp(b),
                _ => return Err(mismatch(&l, &r)),
            };
            Ok(Value::Bool(match op {
                BinOp::Lt => ord == Less,
                BinOp::Le => ord != Greater,
                BinOp::Gt => ord == Greater,
                _ => ord != Less,
            }))
        }
    }
}

fn builtin(name: &str, args: Vec<Value>) -> Result<Value, EvalError> {
    let err = |message: &str| EvalError::Function {
        function: name.to_string(),
        message: message.to_string(),
    };
    match name {
        "min" | "max" => {
            let pick_max = name == "max";
            let mut it = args.into_iter();
            let first = it.next().ok_or_else(|| err("needs at least one argument"))?;
            it.try_fold(first, |acc, v| match (&acc, &v) {
                (Value::Int(a), Value::Int(b)) => Ok(Value::Int(if pick_max { *a.max(b) } else { *a.min(b) })),
                (Value::Weight(a), Value::Weight(b)) => Ok(Value::Weight(if pick_max {
                    Weight::max(*a, *b)
                } else {
                    Weight::min(*a, *b)
                })),
                _ => Err(err("arguments must all be ints or all be weights")),
            })
        }
        "union" | "set" => {
            let mut out = BTreeSet::new();
            for v in args {
                match v {
                    Value::Set(s) => out.extend(s),
                    Value::Sym(s) => {
                        out.insert(s);
                    }
                    Value::Int(i) => {
                        out.insert(i.to_string());
                    }
                    other => return Err(err(&format!("cannot collect a {}", other.type_name()))),
                }
            }
            Ok(Value::Set(out))
        }
        "count" => match args.as_slice() {
            [Value::Set(s)] => Ok(Value::Int(s.len() as i64)),
            _ => Err(err("takes one set")),
        },
        "intersects" => match args.as_slice() {
            [Value::Set(a), Value::Set(b)] => Ok(Value::Bool(a.intersection(b).next().is_some())),
            _ => Err(err("takes two sets")),
        },
        _ => Err(EvalError::UnknownFunction(name.to_string())),
    }
}
