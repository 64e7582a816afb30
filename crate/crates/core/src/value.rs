use std::fmt;

use crate::lang::Literal;

/// An abstract value. The derived order is the canonical output order:
/// integers ascending, then strings, then `*`, then undefined, then `•`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Lit(Literal),
    /// Statically unknown value.
    Star,
    Undef,
    /// Index name of the unknown field. Never stored in a value set.
    Bullet,
}

impl Value {
    pub fn int(n: i64) -> Self {
        Value::Lit(Literal::Int(n))
    }

    pub fn str(s: &str) -> Self {
        Value::Lit(Literal::Str(s.to_string()))
    }

    pub fn is_literal(&self) -> bool {
        matches!(self, Value::Lit(_))
    }
}

impl From<Literal> for Value {
    fn from(l: Literal) -> Self {
        Value::Lit(l)
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Lit(l) => write!(f, "{l}"),
            Value::Star => f.write_str("star"),
            Value::Undef => f.write_str("undef"),
            Value::Bullet => f.write_str("•"),
        }
    }
}
