use super::ast::{AccessExpr, Expr, VarName};
use crate::path::AccessPath;
use crate::value::Value;

/// Lowers a source access into an access path rooted at the symbol table:
/// one path element per dimension, the variable name being the first.
pub fn lower_access(e: &AccessExpr) -> AccessPath {
    let mut elems = Vec::with_capacity(e.depth());
    elems.push(match &e.base {
        VarName::Ident(name) => AccessPath::Atom(Value::str(name)),
        VarName::Dynamic(inner) => lower_expr(inner),
    });
    elems.extend(e.indices.iter().map(lower_expr));
    AccessPath::Seq(elems)
}

pub fn lower_expr(e: &Expr) -> AccessPath {
    match e {
        Expr::Lit(l) => AccessPath::Atom(Value::Lit(l.clone())),
        Expr::Input => AccessPath::Atom(Value::Star),
        Expr::Access(a) => lower_access(a),
    }
}
