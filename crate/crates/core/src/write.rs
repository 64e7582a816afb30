//! Write accesses: assignments and alias statements.
//!
//! A write first collects the variables it may touch, split into must
//! targets (certainly overwritten, strong update) and may targets (weak
//! update). All indices and the right-hand side are evaluated on the input
//! state; the update itself is applied to a copy.

use std::collections::BTreeSet;

use crate::error::Result;
use crate::merge::{merge_vars, MergedNode, Source};
use crate::path::AccessPath;
use crate::read::{eval, vars};
use crate::state::{State, ValueSet, VarId};
use crate::value::Value;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TargetSets {
    pub must: BTreeSet<VarId>,
    pub may: BTreeSet<VarId>,
}

/// Deliberate defects, used to check that the soundness oracle notices.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Faults {
    pub drop_weak_updates: bool,
}

/// The child of `parent` named `name`, created if missing. A fresh index
/// starts as a copy of the parent's unknown field. The flag tells whether
/// the result denotes exactly one concrete location.
pub fn index_write(state: &mut State, parent: VarId, name: &Value) -> Result<(VarId, bool)> {
    if state.is_collapsed(parent) {
        return Ok((parent, false));
    }
    let c = match state.child(parent, name) {
        Some(c) => c,
        None => {
            let c = state.create_index(parent, name.clone())?;
            if let Some(u) = state.unknown_child(parent).filter(|u| *u != c) {
                state.copy_from_unknown(u, c)?;
            }
            c
        }
    };
    Ok((c, !state.is_summary(c)))
}

/// Ensures every non-collapsed parent has an unknown field, then returns
/// all children (collapsed parents stand for themselves).
fn all_indices(state: &mut State, parents: &BTreeSet<VarId>) -> Result<BTreeSet<VarId>> {
    let mut out = BTreeSet::new();
    for &p in parents {
        if state.is_collapsed(p) {
            out.insert(p);
            continue;
        }
        if state.unknown_child(p).is_none() {
            state.create_index(p, Value::Bullet)?;
        }
        out.extend(state.children(p).map(|(_, c)| c));
    }
    Ok(out)
}

/// Collects the targets of a write to `lhs`. Indices are evaluated on
/// `input`; missing indices are created in `work`, which must start as a
/// copy of `input`. With `alias_stmt`, the last level is not widened to
/// the aliases of the selected variables, since the statement rebinds them.
pub fn collect_targets(work: &mut State, input: &State, lhs: &[AccessPath], alias_stmt: bool) -> Result<TargetSets> {
    let mut must = BTreeSet::from([work.root()]);
    let mut may = BTreeSet::new();
    for (j, item) in lhs.iter().enumerate() {
        let expand = !(alias_stmt && j + 1 == lhs.len());
        let idx = eval(input, item);
        let lits: Vec<&Value> = idx.iter().filter(|v| v.is_literal()).collect();
        let parents: BTreeSet<VarId> = must.union(&may).copied().collect();

        if idx.contains(&Value::Star) || idx.contains(&Value::Undef) || lits.len() != 1 {
            let base = if idx.contains(&Value::Star) || idx.contains(&Value::Undef) {
                all_indices(work, &parents)?
            } else {
                let mut base = BTreeSet::new();
                for &p in &parents {
                    for l in &lits {
                        base.insert(index_write(work, p, l)?.0);
                    }
                }
                base
            };
            must = BTreeSet::new();
            may = if expand { work.aliases_of(&base) } else { base };
            continue;
        }

        let lit = lits[0];
        let mut exact = BTreeSet::new();
        let mut inexact = BTreeSet::new();
        for &p in &must {
            let (c, is_exact) = index_write(work, p, lit)?;
            if is_exact {
                exact.insert(c);
            } else {
                inexact.insert(c);
            }
        }
        for &p in &may {
            inexact.insert(index_write(work, p, lit)?.0);
        }
        if expand {
            must = work.aliases_must_of(&exact);
            may = work.aliases_of(&inexact);
            may.extend(work.aliases_may_of(&exact));
        } else {
            must = exact;
            may = inexact;
        }
    }
    let summaries: Vec<VarId> = must.iter().copied().filter(|v| work.is_summary(*v)).collect();
    for s in summaries {
        must.remove(&s);
        may.insert(s);
    }
    let may = may.difference(&must).copied().collect();
    Ok(TargetSets { must, may })
}

fn rhs_sources<'a>(input: &'a State, rhs: &AccessPath, bind: bool) -> Vec<Source<'a>> {
    match rhs {
        AccessPath::Atom(v) => vec![Source::Const(ValueSet::from([v.clone()]))],
        AccessPath::Seq(items) => vars(input, items)
            .into_iter()
            .map(|v| if bind { Source::bound(input, v) } else { Source::var(input, v) })
            .collect(),
    }
}

fn apply(input: &State, lhs: &[AccessPath], rhs: &AccessPath, alias_stmt: bool, faults: Faults) -> Result<State> {
    let mut work = input.clone();
    let targets = collect_targets(&mut work, input, lhs, alias_stmt)?;
    let sources = rhs_sources(input, rhs, alias_stmt);
    let id = |_: &State, v: VarId| Some(v);
    let strong: MergedNode<VarId> = merge_vars(&sources, &id);

    let resolve = |s: &State, v: &VarId| s.contains(*v).then_some(*v);
    for &t in &targets.must {
        if !work.contains(t) {
            continue;
        }
        work.kill_content(t);
        if alias_stmt {
            work.unlink_all(t);
        }
        work.materialize(&strong, t, alias_stmt, &resolve)?;
    }
    if !faults.drop_weak_updates {
        work.overlay(&strong, targets.may.iter().copied(), alias_stmt, &resolve)?;
    }
    work.enforce_unknown_undef();
    Ok(work)
}

/// `lhs = rhs` where `rhs` is a literal, `*` (input) or an access.
pub fn apply_assign(input: &State, lhs: &[AccessPath], rhs: &AccessPath, faults: Faults) -> Result<State> {
    apply(input, lhs, rhs, false, faults)
}

/// `lhs = &rhs`.
pub fn apply_alias(input: &State, lhs: &[AccessPath], rhs: &AccessPath, faults: Faults) -> Result<State> {
    apply(input, lhs, rhs, true, faults)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{lower_access, lower_expr, parse, StmtKind};

    fn run(src: &str) -> State {
        let p = parse(src).unwrap();
        let mut s = State::initial();
        for st in &p.body {
            s = match &st.kind {
                StmtKind::Assign { lhs, rhs } => {
                    let AccessPath::Seq(l) = lower_access(lhs) else { unreachable!() };
                    apply_assign(&s, &l, &lower_expr(rhs), Faults::default()).unwrap()
                }
                StmtKind::Alias { lhs, rhs } => {
                    let AccessPath::Seq(l) = lower_access(lhs) else { unreachable!() };
                    apply_alias(&s, &l, &lower_access(rhs), Faults::default()).unwrap()
                }
                _ => panic!("straight-line only"),
            };
            s.validate().unwrap();
        }
        s
    }

    fn read(s: &State, expr: &str) -> ValueSet {
        let p = parse(&format!("$q = {expr};")).unwrap();
        let StmtKind::Assign { rhs, .. } = &p.body[0].kind else { panic!() };
        eval(s, &lower_expr(rhs))
    }

    fn vals(items: &[Value]) -> ValueSet {
        items.iter().cloned().collect()
    }

    #[test]
    fn strong_update_replaces() {
        let s = run("$a = 1; $a = 2;");
        assert_eq!(read(&s, "$a"), vals(&[Value::int(2)]));
    }

    #[test]
    fn nested_write_creates_path() {
        let s = run("$a[1][2] = 3;");
        assert_eq!(read(&s, "$a[1][2]"), vals(&[Value::int(3)]));
        assert_eq!(read(&s, "$a[1][5]"), vals(&[Value::Undef]));
    }

    #[test]
    fn dynamic_index_is_weak() {
        let s = run("$a[1] = 1; $a[2] = 2; $i = input(); $a[$i] = 7;");
        assert_eq!(read(&s, "$a[1]"), vals(&[Value::int(1), Value::int(7)]));
        assert_eq!(read(&s, "$a[9]"), vals(&[Value::int(7), Value::Undef]));
    }

    #[test]
    fn weak_copy_joins_both_shapes() {
        let s = run("$t[1]['x'] = 1; $r['y'] = 3; $i = input(); $t[$i] = $r;");
        // the old index survives, possibly gone after the copy
        assert_eq!(read(&s, "$t[1]['x']"), vals(&[Value::int(1), Value::Undef]));
        // the copied index may or may not be there
        assert_eq!(read(&s, "$t[1]['y']"), vals(&[Value::int(3), Value::Undef]));
    }

    #[test]
    fn single_valued_index_is_strong() {
        let s = run("$a[1] = 1; $a[2] = 2; $i = 1; $a[$i] = 5;");
        assert_eq!(read(&s, "$a[1]"), vals(&[Value::int(5)]));
    }

    #[test]
    fn alias_propagates_writes() {
        let s = run("$b = 1; $a = &$b; $a = 4; $b[1] = 6;");
        assert_eq!(read(&s, "$b"), vals(&[Value::int(4)]));
        assert_eq!(read(&s, "$a[1]"), vals(&[Value::int(6)]));
        let a = s.var_at(&[Value::str("a")]).unwrap();
        let b = s.var_at(&[Value::str("b")]).unwrap();
        assert!(s.must_partners(a).contains(&b));
    }

    #[test]
    fn rebinding_breaks_alias() {
        let s = run("$b = 1; $a = &$b; $c = 2; $a = &$c; $a = 9;");
        assert_eq!(read(&s, "$b"), vals(&[Value::int(1)]));
        assert_eq!(read(&s, "$c"), vals(&[Value::int(9)]));
    }

    #[test]
    fn copy_is_not_alias() {
        let s = run("$a[1] = 2; $b = $a; $b[1] = 3;");
        assert_eq!(read(&s, "$a[1]"), vals(&[Value::int(2)]));
        assert_eq!(read(&s, "$b[1]"), vals(&[Value::int(3)]));
    }

    #[test]
    fn weak_updates_can_be_dropped() {
        let p = parse("$i = input(); $a[$i] = 7;").unwrap();
        let mut s = State::initial();
        for (n, st) in p.body.iter().enumerate() {
            let StmtKind::Assign { lhs, rhs } = &st.kind else { panic!() };
            let AccessPath::Seq(l) = lower_access(lhs) else { unreachable!() };
            let faults = Faults { drop_weak_updates: n == 1 };
            s = apply_assign(&s, &l, &lower_expr(rhs), faults).unwrap();
        }
        assert_eq!(read(&s, "$a[3]"), vals(&[Value::Undef]));
    }

    #[test]
    fn depth_limit_flattens() {
        let p = parse("$a[1][2][3] = 5;").unwrap();
        let StmtKind::Assign { lhs, rhs } = &p.body[0].kind else { panic!() };
        let AccessPath::Seq(l) = lower_access(lhs) else { unreachable!() };
        let s = apply_assign(&State::with_depth_limit(2), &l, &lower_expr(rhs), Faults::default()).unwrap();
        s.validate().unwrap();
        assert!(read(&s, "$a[1][2][3]").contains(&Value::int(5)));
    }
}
