//! Forward-chaining rules whose firings add Π-ATMS nodes and justifications.

mod expr;
mod memory;
mod parse;
mod rule;

pub use expr::{eval, BinOp, Bindings, EvalError, Expr, HostFn, Value, BUILTINS};
pub use memory::{ElementHandle, Firing, FiringReport, RunError, WmElement, WorkingMemory, DEFAULT_MAX_FIRINGS};
pub use parse::{load_rules, parse_rules, LoadError, ParseError, RULES_HEADER};
pub use rule::{Action, DefinitionError, Element, Pattern, Rule, RuleId, Rulebase, Test};
