//! Joining variables and whole states.
//!
//! A merge is computed top-down. Each result variable has one contributor
//! per source, found with read semantics: where a source lacks an index the
//! contributor is that level's unknown field (or `undefVar`). The children
//! of a result variable are the union of its contributors' children, which
//! materializes indices that exist in one source but, in another, are only
//! reachable through an unknown field.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::path::VarPath;
use crate::state::{State, ValueSet, VarId};
use crate::value::Value;

/// The result of merging, detached from any state. Alias partners are
/// keys chosen by the caller (variable ids or paths).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MergedNode<K> {
    pub values: ValueSet,
    /// Some contributor was folded, so this node stands for its subtree.
    pub folded: bool,
    pub must: BTreeSet<K>,
    pub may: BTreeSet<K>,
    pub children: BTreeMap<Value, MergedNode<K>>,
}

#[derive(Clone, Debug)]
pub enum Source<'a> {
    Var {
        state: &'a State,
        var: VarId,
        /// Contribute `var` itself as a must partner even when it has no
        /// other aliases (the right-hand side of `&`).
        force_self: bool,
    },
    /// A scalar right-hand side.
    Const(ValueSet),
}

impl<'a> Source<'a> {
    pub fn var(state: &'a State, var: VarId) -> Self {
        Source::Var { state, var, force_self: false }
    }

    pub fn bound(state: &'a State, var: VarId) -> Self {
        Source::Var { state, var, force_self: true }
    }
}

#[derive(Clone, Copy)]
enum Contrib<'a> {
    Var { state: &'a State, var: VarId, exact: bool, force_self: bool },
    Const(&'a ValueSet),
    Undef,
}

pub type Translate<'t, K> = dyn Fn(&State, VarId) -> Option<K> + 't;

/// Most nodes a single merge may produce before it is redone with a
/// shallower tree whose bottom nodes are folded.
pub const MERGE_NODE_BUDGET: usize = 2_048;

struct Budget {
    nodes: usize,
    deepest: usize,
    max_depth: usize,
}

/// Merges `sources` into a detached tree.
pub fn merge_vars<K: Ord + Clone>(sources: &[Source<'_>], translate: &Translate<'_, K>) -> MergedNode<K> {
    let contribs: Vec<Contrib<'_>> = sources
        .iter()
        .map(|s| match s {
            Source::Var { var, .. } if var.is_undef() => Contrib::Undef,
            Source::Var { state, var, force_self } => {
                Contrib::Var { state, var: *var, exact: true, force_self: *force_self }
            }
            Source::Const(vs) => Contrib::Const(vs),
        })
        .collect();
    let mut max_depth = usize::MAX;
    loop {
        let mut budget = Budget { nodes: 0, deepest: 0, max_depth };
        if let Some(tree) = merge_node(&contribs, translate, 0, &mut budget) {
            return tree;
        }
        max_depth = budget.deepest.min(max_depth).saturating_sub(1);
    }
}

fn contrib_aliases<K: Ord + Clone>(c: &Contrib<'_>, translate: &Translate<'_, K>) -> (BTreeSet<K>, BTreeSet<K>) {
    let Contrib::Var { state, var, exact, force_self } = *c else {
        return (BTreeSet::new(), BTreeSet::new());
    };
    let must_p = state.must_partners(var);
    let may_p = state.may_partners(var);
    // binding to a variable that may not exist leaves the target unbound
    // on that path
    let maybe_missing = state.values_ref(var).is_none_or(|v| v.contains(&Value::Undef));
    let (mut must, mut may): (BTreeSet<VarId>, BTreeSet<VarId>) = if force_self && maybe_missing {
        (BTreeSet::new(), must_p.iter().chain(may_p.iter()).copied().chain([var]).collect())
    } else if force_self || !must_p.is_empty() {
        (must_p.iter().copied().chain([var]).collect(), may_p.clone())
    } else if !may_p.is_empty() {
        (BTreeSet::new(), may_p.iter().copied().chain([var]).collect())
    } else {
        (BTreeSet::new(), BTreeSet::new())
    };
    if !exact {
        // reached through an unknown field: only possible aliasing
        may.extend(std::mem::take(&mut must));
        may.remove(&var);
    }
    let tr = |set: BTreeSet<VarId>| set.into_iter().filter_map(|v| translate(state, v)).collect();
    (tr(must), tr(may))
}

fn merge_node<K: Ord + Clone>(
    contribs: &[Contrib<'_>],
    translate: &Translate<'_, K>,
    depth: usize,
    budget: &mut Budget,
) -> Option<MergedNode<K>> {
    budget.nodes += 1;
    budget.deepest = budget.deepest.max(depth);
    if budget.nodes > MERGE_NODE_BUDGET && depth > 0 {
        return None;
    }
    let mut values = ValueSet::new();
    let mut folded = false;
    let mut must: Option<BTreeSet<K>> = None;
    let mut any_alias = BTreeSet::new();
    let mut single_may: Option<BTreeSet<K>> = None;
    let mut names: BTreeSet<&Value> = BTreeSet::new();

    for c in contribs {
        match c {
            Contrib::Var { state, var, .. } => {
                values.extend(state.values(*var));
                folded |= state.is_folded(*var);
                names.extend(state.children(*var).map(|(n, _)| n));
            }
            Contrib::Const(vs) => values.extend(vs.iter().cloned()),
            Contrib::Undef => {
                values.insert(Value::Undef);
            }
        }
        let (m, y) = contrib_aliases(c, translate);
        if contribs.len() == 1 {
            // a single contributor's sets are already disjoint
            single_may = Some(y);
            must = Some(m);
            break;
        }
        any_alias.extend(m.iter().cloned());
        any_alias.extend(y);
        must = Some(match must {
            None => m,
            Some(prev) => prev.intersection(&m).cloned().collect(),
        });
    }
    let mut must = must.unwrap_or_default();

    if depth >= budget.max_depth && !names.is_empty() {
        // too large: this node absorbs everything below it
        any_alias.extend(single_may.take().into_iter().flatten());
        for c in contribs {
            if let Contrib::Var { state, var, .. } = *c {
                let mut stack: Vec<VarId> = state.children(var).map(|(_, v)| v).collect();
                while let Some(v) = stack.pop() {
                    values.extend(state.values(v));
                    let partners = state.must_partners(v).iter().chain(state.may_partners(v));
                    any_alias.extend(partners.filter_map(|p| translate(state, *p)));
                    stack.extend(state.children(v).map(|(_, g)| g));
                }
            }
        }
        values.insert(Value::Undef);
        any_alias.extend(std::mem::take(&mut must));
        return Some(MergedNode { values, folded: true, must, may: any_alias, children: BTreeMap::new() });
    }
    let may = match single_may {
        Some(y) => y,
        None => any_alias.difference(&must).cloned().collect(),
    };

    let mut children = BTreeMap::new();
    for name in names {
        let mut next = Vec::with_capacity(contribs.len());
        for c in contribs {
            match *c {
                Contrib::Var { state, var, exact, .. } => {
                    if let Some(child) = state.child(var, name) {
                        next.push(Contrib::Var { state, var: child, exact, force_self: false });
                    } else if state.is_collapsed(var) {
                        next.push(Contrib::Var { state, var, exact: false, force_self: false });
                        next.push(Contrib::Undef);
                    } else if let Some(u) = state.unknown_child(var).filter(|_| *name != Value::Bullet) {
                        next.push(Contrib::Var { state, var: u, exact: false, force_self: false });
                    } else {
                        next.push(Contrib::Undef);
                    }
                }
                Contrib::Const(_) | Contrib::Undef => next.push(Contrib::Undef),
            }
        }
        children.insert(name.clone(), merge_node(&next, translate, depth + 1, budget)?);
    }

    Some(MergedNode { values, folded, must, may, children })
}

/// Joins the states flowing into a program point.
pub fn merge_states(preds: &[&State]) -> State {
    assert!(!preds.is_empty(), "merge_states needs at least one state");
    // alias partners are keyed by interned paths, shared across the sources
    let mut interned: HashMap<VarPath, u32> = HashMap::new();
    let mut paths: Vec<VarPath> = Vec::new();
    let keys: Vec<Vec<u32>> = preds
        .iter()
        .map(|st| {
            let mut ids = vec![u32::MAX; st.id_bound()];
            for v in st.var_ids() {
                let p = st.path(v);
                ids[v.index()] = *interned.entry(p.clone()).or_insert_with(|| {
                    paths.push(p);
                    (paths.len() - 1) as u32
                });
            }
            ids
        })
        .collect();
    let sources: Vec<Source<'_>> = preds.iter().map(|s| Source::var(s, s.root())).collect();
    let translate = |st: &State, v: VarId| {
        let i = preds.iter().position(|p| std::ptr::eq(*p, st))?;
        keys[i].get(v.index()).copied()
    };
    let tree = merge_vars(&sources, &translate);
    let mut out = State::bare(preds[0].depth_limit());
    let root = out.root();
    let resolved: RefCell<Vec<Option<Option<VarId>>>> = RefCell::new(vec![None; paths.len()]);
    let resolve = |s: &State, k: &u32| {
        *resolved.borrow_mut()[*k as usize].get_or_insert_with(|| s.var_at_or_folded(&paths[*k as usize]))
    };
    out.materialize(&tree, root, true, &resolve)
        .expect("merged paths stay within the sources' depth");
    out
}

/// All index paths below `var`, relative to it, plus the empty path.
pub fn collect_access_paths(state: &State, var: VarId) -> BTreeSet<VarPath> {
    fn walk(state: &State, v: VarId, prefix: &mut VarPath, out: &mut BTreeSet<VarPath>) {
        out.insert(prefix.clone());
        for (name, c) in state.children(v) {
            prefix.push(name.clone());
            walk(state, c, prefix, out);
            prefix.pop();
        }
    }
    let mut out = BTreeSet::new();
    walk(state, var, &mut Vec::new(), &mut out);
    out
}

/// Closes a path set under substitution of `•` at level `l` by every
/// literal occurring at level `l` of some path in the set.
pub fn extend_paths(aps: &BTreeSet<VarPath>) -> BTreeSet<VarPath> {
    let mut out = aps.clone();
    loop {
        let mut level_values: BTreeMap<usize, BTreeSet<Value>> = BTreeMap::new();
        for p in &out {
            for (l, v) in p.iter().enumerate() {
                if v.is_literal() {
                    level_values.entry(l).or_default().insert(v.clone());
                }
            }
        }
        let mut added = Vec::new();
        for p in &out {
            for (l, v) in p.iter().enumerate() {
                if *v != Value::Bullet {
                    continue;
                }
                for lit in level_values.get(&l).into_iter().flatten() {
                    let mut np = p.clone();
                    np[l] = lit.clone();
                    if !out.contains(&np) {
                        added.push(np);
                    }
                }
            }
        }
        if added.is_empty() {
            return out;
        }
        out.extend(added);
    }
}
