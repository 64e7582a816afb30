//! Read accesses: evaluating an access path against a state.
//!
//! Reads never change the state and never follow alias links; aliasing is
//! already reflected in the value sets of all partners.

use std::collections::BTreeSet;

use crate::path::AccessPath;
use crate::state::{State, ValueSet, VarId};
use crate::value::Value;

/// The possible values of an access.
pub fn eval(state: &State, ap: &AccessPath) -> ValueSet {
    match ap {
        AccessPath::Atom(a) => BTreeSet::from([a.clone()]),
        AccessPath::Seq(items) => state.values_undef(&vars(state, items)),
    }
}

/// The variables an access may denote, walking from the symbol table.
/// `VarId::UNDEF` stands for a location that does not exist.
pub fn vars(state: &State, items: &[AccessPath]) -> BTreeSet<VarId> {
    let mut cur = BTreeSet::from([state.root()]);
    for item in items {
        let idx = eval(state, item);
        cur = indices_read(state, &cur, &idx);
    }
    cur
}

/// One step of [`vars`]: the children of `vars` selected by `idx`.
pub fn indices_read(state: &State, vars: &BTreeSet<VarId>, idx: &ValueSet) -> BTreeSet<VarId> {
    let mut out = BTreeSet::new();
    for &v in vars {
        if v.is_undef() || !state.contains(v) {
            out.insert(VarId::UNDEF);
            continue;
        }
        if state.is_collapsed(v) {
            out.insert(v);
            out.insert(VarId::UNDEF);
            continue;
        }
        let fallback = state.unknown_child(v).unwrap_or(VarId::UNDEF);
        if idx.contains(&Value::Star) {
            out.extend(state.children(v).map(|(_, c)| c));
            if state.unknown_child(v).is_none() {
                out.insert(VarId::UNDEF);
            }
            continue;
        }
        for i in idx {
            match i {
                Value::Lit(_) => {
                    out.insert(state.child(v, i).unwrap_or(fallback));
                }
                Value::Undef | Value::Bullet => {
                    out.insert(fallback);
                }
                Value::Star => unreachable!(),
            }
        }
    }
    if out.is_empty() {
        out.insert(VarId::UNDEF);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{lower_expr, parse, Expr, StmtKind};

    fn rhs(src: &str) -> AccessPath {
        let p = parse(&format!("$x = {src};")).unwrap();
        let StmtKind::Assign { rhs, .. } = &p.body[0].kind else { panic!() };
        lower_expr(rhs)
    }

    fn set(vals: &[Value]) -> ValueSet {
        vals.iter().cloned().collect()
    }

    #[test]
    fn undefined_reads() {
        let s = State::initial();
        assert_eq!(eval(&s, &rhs("$a")), set(&[Value::Undef]));
        assert_eq!(eval(&s, &rhs("$a[1][$b]")), set(&[Value::Undef]));
        assert_eq!(eval(&s, &rhs("3")), set(&[Value::int(3)]));
        assert!(matches!(lower_expr(&Expr::Input), AccessPath::Atom(Value::Star)));
    }

    #[test]
    fn fallback_and_star() {
        let mut s = State::initial();
        let root = s.root();
        let a = s.create_index(root, Value::str("a")).unwrap();
        s.set_values(a, set(&[Value::int(0)]));
        let a1 = s.create_index(a, Value::int(1)).unwrap();
        s.set_values(a1, set(&[Value::int(5)]));
        let au = s.create_index(a, Value::Bullet).unwrap();
        s.set_values(au, set(&[Value::int(9), Value::Undef]));
        let i = s.create_index(root, Value::str("i")).unwrap();
        s.set_values(i, set(&[Value::int(1), Value::int(2)]));

        assert_eq!(eval(&s, &rhs("$a[1]")), set(&[Value::int(5)]));
        assert_eq!(eval(&s, &rhs("$a[7]")), set(&[Value::int(9), Value::Undef]));
        assert_eq!(eval(&s, &rhs("$a[$i]")), set(&[Value::int(5), Value::int(9), Value::Undef]));
        assert_eq!(eval(&s, &rhs("$a[input()]")), set(&[Value::int(5), Value::int(9), Value::Undef]));
        // scalar under an index without an unknown field
        assert_eq!(eval(&s, &rhs("$i[1]")), set(&[Value::Undef]));
        assert_eq!(vars(&s, &[AccessPath::Atom(Value::str("a"))]), BTreeSet::from([a]));
    }

    #[test]
    fn collapsed_reads_absorb_depth() {
        let mut s = State::with_depth_limit(1);
        let a = s.create_index(s.root(), Value::str("a")).unwrap();
        s.set_values(a, set(&[Value::int(4)]));
        assert_eq!(eval(&s, &rhs("$a[1][2]")), set(&[Value::int(4), Value::Undef]));
    }
}
