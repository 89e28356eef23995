use thiserror::Error;

use crate::egraph::ClassId;
use crate::interval::Interval;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("`{op}` expects {expected} operand(s), found {found}")]
    Arity {
        op: String,
        expected: usize,
        found: usize,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("evaluation error: {0}")]
    Eval(String),

    #[error("unbound variable `{0}`")]
    UnboundVariable(String),

    #[error("invalid interval: {0}")]
    InvalidInterval(String),

    /// Two sound over-approximations of the same value set failed to
    /// intersect. Always a bug in a rule or in rounding.
    #[error("{}", empty_meet_message(.a, .b, .class, .rule))]
    EmptyMeet {
        a: Interval,
        b: Interval,
        class: Option<ClassId>,
        rule: Option<String>,
    },

    #[error("rule manifest line {line}: {msg}")]
    Manifest { line: usize, msg: String },

    #[error("{0}")]
    Input(String),
}

fn empty_meet_message(
    a: &Interval,
    b: &Interval,
    class: &Option<ClassId>,
    rule: &Option<String>,
) -> String {
    let mut msg = format!("soundness violation: empty meet of {a} and {b}");
    if let Some(c) = class {
        msg.push_str(&format!(" in class {c}"));
    }
    if let Some(r) = rule {
        msg.push_str(&format!(" while applying rule `{r}`"));
    }
    msg
}

impl Error {
    pub(crate) fn with_rule(self, name: &str) -> Self {
        match self {
            Error::EmptyMeet { a, b, class, rule: None } => Error::EmptyMeet {
                a,
                b,
                class,
                rule: Some(name.to_string()),
            },
            other => other,
        }
    }

    pub fn is_soundness_violation(&self) -> bool {
        matches!(self, Error::EmptyMeet { .. })
    }
}
