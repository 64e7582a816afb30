use std::fmt;

use crate::lang::{ast::write_quoted, Literal};
use crate::value::Value;

/// A read or write access: either a single value, or a sequence with one
/// element per array dimension. Nested sequences are dynamic indices,
/// evaluated from the symbol table. The empty sequence denotes the variable
/// the access starts from.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum AccessPath {
    Atom(Value),
    Seq(Vec<AccessPath>),
}

impl AccessPath {
    /// A fully resolved path made of index names only.
    pub fn concrete(names: &[Value]) -> Self {
        AccessPath::Seq(names.iter().cloned().map(AccessPath::Atom).collect())
    }

    pub fn len(&self) -> usize {
        match self {
            AccessPath::Atom(_) => 0,
            AccessPath::Seq(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl fmt::Display for AccessPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AccessPath::Atom(v) => write!(f, "{v}"),
            AccessPath::Seq(elems) => {
                f.write_str("[]")?;
                for e in elems {
                    write!(f, "[{e}]")?;
                }
                Ok(())
            }
        }
    }
}

/// A concrete variable path: index names from the symbol table downward.
pub type VarPath = Vec<Value>;

/// Renders a variable path in source syntax, e.g. `$arr[2]['k'][•]`.
pub fn render_var_path(path: &[Value]) -> String {
    struct R<'a>(&'a [Value]);
    impl fmt::Display for R<'_> {
        fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            let Some((first, rest)) = self.0.split_first() else {
                return f.write_str("$");
            };
            match first {
                Value::Lit(Literal::Str(s)) if is_plain_ident(s) => write!(f, "${s}")?,
                Value::Lit(Literal::Str(s)) => {
                    f.write_str("${")?;
                    write_quoted(f, s)?;
                    f.write_str("}")?
                }
                other => write!(f, "${{{other}}}")?,
            }
            for v in rest {
                match v {
                    Value::Lit(l) => write!(f, "[{l}]")?,
                    Value::Bullet => f.write_str("[•]")?,
                    Value::Star => f.write_str("[*]")?,
                    Value::Undef => f.write_str("[undef]")?,
                }
            }
            Ok(())
        }
    }
    R(path).to_string()
}

fn is_plain_ident(s: &str) -> bool {
    let mut cs = s.chars();
    matches!(cs.next(), Some(c) if c == '_' || c.is_ascii_alphabetic())
        && cs.all(|c| c == '_' || c.is_ascii_alphanumeric())
        && s != "_GET"
}
