//! The analysis state: a forest of variables rooted at the symbol table,
//! per-variable value sets, and must/may alias relations.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use crate::error::{AnalysisError, Result};
use crate::merge::{merge_vars, MergedNode, Source};
use crate::path::{render_var_path, VarPath};
use crate::value::Value;

pub type ValueSet = BTreeSet<Value>;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(u32);

impl VarId {
    /// Stands for "no such variable"; its value set is `{undefined}`.
    pub const UNDEF: VarId = VarId(u32::MAX);

    pub fn is_undef(self) -> bool {
        self == VarId::UNDEF
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Debug for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_undef() {
            f.write_str("undefVar")
        } else {
            write!(f, "v{}", self.0)
        }
    }
}

pub const DEFAULT_DEPTH_LIMIT: u32 = 8;

#[derive(Clone, Debug)]
struct VarData {
    parent: Option<(VarId, Value)>,
    depth: u32,
    /// Inside an unknown-field subtree.
    summary: bool,
    /// Folded by the variable budget: stands for itself and everything
    /// below it, like a variable at the depth limit.
    folded: bool,
    values: ValueSet,
    children: BTreeMap<Value, VarId>,
    must: BTreeSet<VarId>,
    may: BTreeSet<VarId>,
}

#[derive(Clone, Debug)]
pub struct State {
    vars: Vec<Option<VarData>>,
    root: VarId,
    depth_limit: u32,
}

fn undef_set() -> ValueSet {
    BTreeSet::from([Value::Undef])
}

impl State {
    pub fn initial() -> Self {
        Self::with_depth_limit(DEFAULT_DEPTH_LIMIT)
    }

    /// The entry state: the symbol table and its unknown field.
    pub fn with_depth_limit(depth_limit: u32) -> Self {
        let mut s = Self::bare(depth_limit.max(1));
        let root = s.root;
        s.create_index(root, Value::Bullet).expect("fresh root has no children");
        s
    }

    pub(crate) fn bare(depth_limit: u32) -> Self {
        let root = VarData {
            parent: None,
            depth: 0,
            summary: false,
            folded: false,
            values: undef_set(),
            children: BTreeMap::new(),
            must: BTreeSet::new(),
            may: BTreeSet::new(),
        };
        State { vars: vec![Some(root)], root: VarId(0), depth_limit }
    }

    pub fn root(&self) -> VarId {
        self.root
    }

    pub fn depth_limit(&self) -> u32 {
        self.depth_limit
    }

    fn data(&self, v: VarId) -> Option<&VarData> {
        self.vars.get(v.0 as usize).and_then(Option::as_ref)
    }

    fn data_mut(&mut self, v: VarId) -> &mut VarData {
        self.vars[v.0 as usize].as_mut().expect("live variable")
    }

    pub fn contains(&self, v: VarId) -> bool {
        self.data(v).is_some()
    }

    pub fn var_ids(&self) -> impl Iterator<Item = VarId> + '_ {
        self.vars.iter().enumerate().filter(|(_, d)| d.is_some()).map(|(i, _)| VarId(i as u32))
    }

    /// One past the largest id ever allocated in this state.
    pub fn id_bound(&self) -> usize {
        self.vars.len()
    }

    /// Number of alias pairs, must and may.
    pub fn alias_pair_count(&self) -> usize {
        self.vars.iter().flatten().map(|d| d.must.len() + d.may.len()).sum::<usize>() / 2
    }

    pub fn var_count(&self) -> usize {
        self.vars.iter().filter(|d| d.is_some()).count()
    }

    // ---- projections ----

    pub fn values(&self, v: VarId) -> ValueSet {
        match self.data(v) {
            Some(d) => d.values.clone(),
            None => undef_set(),
        }
    }

    pub fn values_ref(&self, v: VarId) -> Option<&ValueSet> {
        self.data(v).map(|d| &d.values)
    }

    /// Union of the value sets of `vars`; `{undefined}` for the empty set.
    pub fn values_undef<'a>(&self, vars: impl IntoIterator<Item = &'a VarId>) -> ValueSet {
        let mut out = ValueSet::new();
        let mut any = false;
        for v in vars {
            any = true;
            match self.data(*v) {
                Some(d) => out.extend(d.values.iter().cloned()),
                None => {
                    out.insert(Value::Undef);
                }
            }
        }
        if !any {
            out.insert(Value::Undef);
        }
        out
    }

    pub fn parent(&self, v: VarId) -> Option<(VarId, &Value)> {
        self.data(v).and_then(|d| d.parent.as_ref().map(|(p, n)| (*p, n)))
    }

    pub fn depth(&self, v: VarId) -> u32 {
        self.data(v).map_or(0, |d| d.depth)
    }

    /// Whether `v` lies inside an unknown field and so stands for many
    /// concrete locations.
    pub fn is_summary(&self, v: VarId) -> bool {
        self.data(v).is_some_and(|d| d.summary)
    }

    /// Variables at the depth limit (or folded) absorb everything written
    /// below them.
    pub fn is_collapsed(&self, v: VarId) -> bool {
        self.data(v).is_some_and(|d| d.depth >= self.depth_limit || d.folded)
    }

    pub fn is_folded(&self, v: VarId) -> bool {
        self.data(v).is_some_and(|d| d.folded)
    }

    pub fn child(&self, v: VarId, name: &Value) -> Option<VarId> {
        self.data(v).and_then(|d| d.children.get(name).copied())
    }

    pub fn unknown_child(&self, v: VarId) -> Option<VarId> {
        self.child(v, &Value::Bullet)
    }

    pub fn children(&self, v: VarId) -> impl Iterator<Item = (&Value, VarId)> + '_ {
        self.data(v).into_iter().flat_map(|d| d.children.iter().map(|(n, c)| (n, *c)))
    }

    pub fn has_children(&self, v: VarId) -> bool {
        self.data(v).is_some_and(|d| !d.children.is_empty())
    }

    /// All children of any variable in `vars`, unknown fields included.
    pub fn indices<'a>(&self, vars: impl IntoIterator<Item = &'a VarId>) -> BTreeSet<VarId> {
        vars.into_iter().flat_map(|v| self.children(*v).map(|(_, c)| c)).collect()
    }

    /// Children of `vars` under any of `names`.
    pub fn indices_named(&self, vars: &BTreeSet<VarId>, names: &BTreeSet<Value>) -> BTreeSet<VarId> {
        let mut out = BTreeSet::new();
        for v in vars {
            for n in names {
                if let Some(c) = self.child(*v, n) {
                    out.insert(c);
                }
            }
        }
        out
    }

    pub fn path(&self, v: VarId) -> VarPath {
        let mut out = Vec::new();
        let mut cur = v;
        while let Some((p, name)) = self.parent(cur) {
            out.push(name.clone());
            cur = p;
        }
        out.reverse();
        out
    }

    pub fn render(&self, v: VarId) -> String {
        if v.is_undef() {
            "undefVar".into()
        } else {
            render_var_path(&self.path(v))
        }
    }

    /// Exact lookup of a variable by its index names.
    pub fn var_at(&self, path: &[Value]) -> Option<VarId> {
        let mut cur = self.root;
        for n in path {
            cur = self.child(cur, n)?;
        }
        Some(cur)
    }

    /// As [`State::var_at`], but a path running into a folded variable
    /// ends there.
    pub fn var_at_or_folded(&self, path: &[Value]) -> Option<VarId> {
        let mut cur = self.root;
        for n in path {
            cur = match self.child(cur, n) {
                Some(c) => c,
                None if self.is_folded(cur) => return Some(cur),
                None => return None,
            };
        }
        Some(cur)
    }

    /// Must-aliases including `v` itself.
    pub fn aliases_must(&self, v: VarId) -> BTreeSet<VarId> {
        let mut out = BTreeSet::from([v]);
        if let Some(d) = self.data(v) {
            out.extend(d.must.iter().copied());
        }
        out
    }

    pub fn aliases_may(&self, v: VarId) -> BTreeSet<VarId> {
        self.data(v).map(|d| d.may.clone()).unwrap_or_default()
    }

    /// Must partners other than `v` itself.
    pub fn must_partners(&self, v: VarId) -> &BTreeSet<VarId> {
        static EMPTY: BTreeSet<VarId> = BTreeSet::new();
        self.data(v).map_or(&EMPTY, |d| &d.must)
    }

    pub fn may_partners(&self, v: VarId) -> &BTreeSet<VarId> {
        static EMPTY: BTreeSet<VarId> = BTreeSet::new();
        self.data(v).map_or(&EMPTY, |d| &d.may)
    }

    pub fn aliases(&self, v: VarId) -> BTreeSet<VarId> {
        let mut out = self.aliases_must(v);
        out.extend(self.aliases_may(v));
        out
    }

    pub fn aliases_must_of<'a>(&self, vars: impl IntoIterator<Item = &'a VarId>) -> BTreeSet<VarId> {
        vars.into_iter().flat_map(|v| self.aliases_must(*v)).collect()
    }

    pub fn aliases_may_of<'a>(&self, vars: impl IntoIterator<Item = &'a VarId>) -> BTreeSet<VarId> {
        vars.into_iter().flat_map(|v| self.aliases_may(*v)).collect()
    }

    pub fn aliases_of<'a>(&self, vars: impl IntoIterator<Item = &'a VarId>) -> BTreeSet<VarId> {
        vars.into_iter().flat_map(|v| self.aliases(*v)).collect()
    }

    // ---- construction ----

    /// Adds a fresh child of `parent` named `name` holding `{undefined}`.
    pub fn create_index(&mut self, parent: VarId, name: Value) -> Result<VarId> {
        let Some(p) = self.data(parent) else {
            return Err(AnalysisError::Internal(format!("create_index under missing variable {parent:?}")));
        };
        if p.children.contains_key(&name) {
            return Err(AnalysisError::DuplicateIndex { parent: self.render(parent), name: name.to_string() });
        }
        if p.depth >= self.depth_limit || p.folded {
            return Err(AnalysisError::DepthLimitExceeded { parent: self.render(parent), limit: self.depth_limit });
        }
        let data = VarData {
            parent: Some((parent, name.clone())),
            depth: p.depth + 1,
            summary: p.summary || name == Value::Bullet,
            folded: false,
            values: undef_set(),
            children: BTreeMap::new(),
            must: BTreeSet::new(),
            may: BTreeSet::new(),
        };
        let id = VarId(self.vars.len() as u32);
        self.vars.push(Some(data));
        self.data_mut(parent).children.insert(name, id);
        Ok(id)
    }

    pub fn set_values(&mut self, v: VarId, values: ValueSet) {
        self.data_mut(v).values = values;
    }

    pub fn add_values(&mut self, v: VarId, values: impl IntoIterator<Item = Value>) {
        self.data_mut(v).values.extend(values);
    }

    /// Records an alias pair. Pairs touching a summary variable are
    /// demoted to may; an existing must pair is never weakened here.
    pub fn link(&mut self, a: VarId, b: VarId, must: bool) {
        if a == b {
            return;
        }
        let (Some(da), Some(db)) = (self.data(a), self.data(b)) else { return };
        let must = must && !da.summary && !db.summary && !da.folded && !db.folded;
        if da.must.contains(&b) || (!must && da.may.contains(&b)) {
            return;
        }
        if must {
            self.data_mut(a).may.remove(&b);
            self.data_mut(b).may.remove(&a);
            self.data_mut(a).must.insert(b);
            self.data_mut(b).must.insert(a);
        } else {
            self.data_mut(a).may.insert(b);
            self.data_mut(b).may.insert(a);
        }
    }

    /// Turns a must pair into a may pair.
    pub fn demote(&mut self, a: VarId, b: VarId) {
        if self.contains(a) && self.contains(b) && self.data(a).unwrap().must.contains(&b) {
            self.data_mut(a).must.remove(&b);
            self.data_mut(b).must.remove(&a);
            self.link(a, b, false);
        }
    }

    /// Removes every alias pair involving `v`.
    pub fn unlink_all(&mut self, v: VarId) {
        let Some(d) = self.data(v) else { return };
        let partners: Vec<VarId> = d.must.iter().chain(d.may.iter()).copied().collect();
        for p in partners {
            if let Some(Some(pd)) = self.vars.get_mut(p.0 as usize) {
                pd.must.remove(&v);
                pd.may.remove(&v);
            }
        }
        let d = self.data_mut(v);
        d.must.clear();
        d.may.clear();
    }

    /// Removes all descendants of `v` (and their alias pairs).
    pub fn remove_children(&mut self, v: VarId) {
        let kids: Vec<VarId> = self.children(v).map(|(_, c)| c).collect();
        for c in kids {
            self.remove_subtree(c);
        }
        self.data_mut(v).children.clear();
    }

    fn remove_subtree(&mut self, v: VarId) {
        let kids: Vec<VarId> = self.children(v).map(|(_, c)| c).collect();
        for c in kids {
            self.remove_subtree(c);
        }
        self.unlink_all(v);
        self.vars[v.0 as usize] = None;
    }

    /// KILL: drops the values and indices of `v`.
    pub fn kill_content(&mut self, v: VarId) {
        self.remove_children(v);
        self.data_mut(v).values.clear();
    }

    /// Every unknown field must contain `undefined`.
    pub fn enforce_unknown_undef(&mut self) {
        for d in self.vars.iter_mut().flatten() {
            if matches!(d.parent, Some((_, Value::Bullet))) {
                d.values.insert(Value::Undef);
            }
        }
    }

    /// Replaces every value set wider than `limit` by `*` (keeping
    /// `undefined`) and drops literals next to `*`. Returns the variables
    /// that exceeded the limit.
    pub fn widen(&mut self, limit: usize) -> Vec<VarId> {
        let mut widened = Vec::new();
        for (i, d) in self.vars.iter_mut().enumerate() {
            let Some(d) = d else { continue };
            let wide = d.values.len() > limit;
            if wide || (d.values.contains(&Value::Star) && d.values.iter().any(Value::is_literal)) {
                // `*` already covers every literal
                d.values.retain(|v| !v.is_literal());
                d.values.insert(Value::Star);
            }
            if wide {
                widened.push(VarId(i as u32));
            }
        }
        widened
    }

    /// Folds the subtree below `v` into `v`: its values absorb those of
    /// every descendant (and `undefined`), and every alias pair of a
    /// descendant becomes a may pair of `v`.
    pub fn fold(&mut self, v: VarId) {
        let mut below = Vec::new();
        let mut stack: Vec<VarId> = self.children(v).map(|(_, c)| c).collect();
        while let Some(c) = stack.pop() {
            below.push(c);
            stack.extend(self.children(c).map(|(_, g)| g));
        }
        let mut values = undef_set();
        let mut partners = BTreeSet::new();
        for &c in &below {
            let d = self.data(c).unwrap();
            values.extend(d.values.iter().cloned());
            partners.extend(d.must.iter().chain(d.may.iter()).copied());
        }
        let own: Vec<VarId> = self.must_partners(v).iter().copied().collect();
        self.remove_children(v);
        let d = self.data_mut(v);
        d.folded = true;
        d.values.extend(values);
        for p in own {
            self.demote(v, p);
        }
        for p in partners {
            self.link(v, p, false);
        }
    }

    /// Folds the deepest non-leaf variables until at most `max_vars`
    /// variables and `max_pairs` alias pairs remain (or only the top level
    /// is left). Returns how many variables were folded.
    pub fn enforce_budget(&mut self, max_vars: usize, max_pairs: usize) -> usize {
        let mut folded = 0;
        while self.var_count() > max_vars || self.alias_pair_count() > max_pairs {
            let deepest = self.var_ids().map(|v| self.depth(v)).max().unwrap_or(0);
            if deepest <= 2 {
                break;
            }
            let parents: Vec<VarId> =
                self.var_ids().filter(|v| self.depth(*v) == deepest - 1 && self.has_children(*v)).collect();
            for p in parents {
                if self.contains(p) {
                    self.fold(p);
                    folded += 1;
                }
            }
        }
        folded
    }

    // ---- copying ----

    /// Writes `node` into `target`: values are joined, children are
    /// created or merged into, and alias pairs are added. Subtrees that
    /// would exceed the depth limit are flattened into the deepest
    /// representable variable.
    pub fn materialize<K: Ord + Clone>(
        &mut self,
        node: &MergedNode<K>,
        target: VarId,
        top_aliases: bool,
        resolve: &dyn Fn(&State, &K) -> Option<VarId>,
    ) -> Result<()> {
        let mut placed: Vec<(VarId, &MergedNode<K>, bool)> = Vec::new();
        self.place(node, target, &mut placed)?;
        if !node.children.contains_key(&Value::Bullet) && !self.is_collapsed(target) && self.unknown_child(target).is_none() {
            self.create_index(target, Value::Bullet)?;
        }
        for (i, (var, n, flattened)) in placed.iter().enumerate() {
            let top = i == 0;
            if top && !top_aliases {
                continue;
            }
            let must: BTreeSet<VarId> = n.must.iter().filter_map(|k| resolve(self, k)).collect();
            let may: BTreeSet<VarId> = n.may.iter().filter_map(|k| resolve(self, k)).collect();
            for p in must {
                self.link(*var, p, !flattened);
            }
            for p in may {
                self.link(*var, p, false);
            }
        }
        Ok(())
    }

    /// Weakly joins `node` into `target`, as if `target` were merged with
    /// `node`: indices only one side has take the other side's unknown
    /// field (or `undefined`), must pairs survive only where both sides
    /// agree, and everything else becomes may.
    pub fn overlay<K: Ord + Clone>(
        &mut self,
        node: &MergedNode<K>,
        targets: impl IntoIterator<Item = VarId>,
        top_aliases: bool,
        resolve: &dyn Fn(&State, &K) -> Option<VarId>,
    ) -> Result<()> {
        let mut flat = HashMap::new();
        for t in targets {
            if self.contains(t) {
                self.overlay_var(Some(node), true, t, top_aliases, resolve, &mut flat)?;
            }
        }
        Ok(())
    }

    fn overlay_var<'n, K: Ord + Clone>(
        &mut self,
        node: Option<&'n MergedNode<K>>,
        exact: bool,
        target: VarId,
        top_aliases: bool,
        resolve: &dyn Fn(&State, &K) -> Option<VarId>,
        flat: &mut HashMap<*const MergedNode<K>, (ValueSet, Vec<VarId>)>,
    ) -> Result<()> {
        match node {
            Some(n) => self.add_values(target, n.values.iter().cloned()),
            None => self.add_values(target, [Value::Undef]),
        }
        if top_aliases {
            let (must, may): (BTreeSet<VarId>, BTreeSet<VarId>) = match node {
                Some(n) if exact => (
                    n.must.iter().filter_map(|k| resolve(self, k)).collect(),
                    n.may.iter().filter_map(|k| resolve(self, k)).collect(),
                ),
                Some(n) => (
                    BTreeSet::new(),
                    n.must.iter().chain(n.may.iter()).filter_map(|k| resolve(self, k)).collect(),
                ),
                None => Default::default(),
            };
            let old: Vec<VarId> = self.must_partners(target).iter().copied().collect();
            for p in old {
                if !must.contains(&p) {
                    self.demote(target, p);
                }
            }
            for p in must.into_iter().chain(may) {
                self.link(target, p, false);
            }
        }
        if node.is_some_and(|n| n.folded) && !self.is_collapsed(target) {
            self.fold(target);
        }
        if self.is_collapsed(target) {
            if let Some(n) = node {
                // everything below `n`, summarized once per node
                let (values, partners) = flat.entry(n as *const _).or_insert_with(|| {
                    let mut placed = Vec::new();
                    let mut values = ValueSet::new();
                    let mut partners = BTreeSet::new();
                    for child in n.children.values() {
                        collect_below(child, &mut placed);
                    }
                    for c in placed {
                        values.extend(c.values.iter().cloned());
                        partners.extend(c.must.iter().chain(c.may.iter()).filter_map(|k| resolve(self, k)));
                    }
                    (values, partners.into_iter().collect())
                });
                let (values, partners) = (values.clone(), partners.clone());
                self.add_values(target, values);
                for p in partners {
                    self.link(target, p, false);
                }
            }
            self.add_values(target, [Value::Undef]);
            return Ok(());
        }
        let mut names: BTreeSet<Value> = self.children(target).map(|(n, _)| n.clone()).collect();
        if let Some(n) = node {
            names.extend(n.children.keys().cloned());
        }
        for name in names {
            let (child_node, child_exact) = match node {
                Some(n) => match n.children.get(&name) {
                    Some(c) => (Some(c), exact),
                    None if name != Value::Bullet => (n.children.get(&Value::Bullet), false),
                    None => (None, false),
                },
                None => (None, false),
            };
            let cv = match self.child(target, &name) {
                Some(c) => c,
                None => {
                    let c = self.create_index(target, name.clone())?;
                    if let Some(u) = self.unknown_child(target).filter(|u| *u != c) {
                        self.copy_from_unknown(u, c)?;
                    }
                    c
                }
            };
            self.overlay_var(child_node, child_exact, cv, true, resolve, flat)?;
        }
        Ok(())
    }

    fn place<'n, K: Ord + Clone>(
        &mut self,
        node: &'n MergedNode<K>,
        var: VarId,
        placed: &mut Vec<(VarId, &'n MergedNode<K>, bool)>,
    ) -> Result<()> {
        self.add_values(var, node.values.iter().cloned());
        placed.push((var, node, false));
        if node.folded && !self.is_folded(var) && !self.is_collapsed(var) {
            self.fold(var);
        }
        if node.children.is_empty() {
            return Ok(());
        }
        if self.is_collapsed(var) {
            for child in node.children.values() {
                self.flatten_into(child, var, placed);
            }
            self.add_values(var, [Value::Undef]);
            return Ok(());
        }
        for (name, child) in &node.children {
            let cv = match self.child(var, name) {
                Some(c) => c,
                None => {
                    // a copied index certainly exists: no placeholder undefined
                    let c = self.create_index(var, name.clone())?;
                    self.data_mut(c).values.clear();
                    c
                }
            };
            self.place(child, cv, placed)?;
        }
        Ok(())
    }

    fn flatten_into<'n, K: Ord + Clone>(
        &mut self,
        node: &'n MergedNode<K>,
        var: VarId,
        placed: &mut Vec<(VarId, &'n MergedNode<K>, bool)>,
    ) {
        self.add_values(var, node.values.iter().cloned());
        placed.push((var, node, true));
        for child in node.children.values() {
            self.flatten_into(child, var, placed);
        }
    }
}

impl State {
    /// `dst` receives the values and (deep-copied) indices of `src`;
    /// alias pairs are copied below the first level only.
    pub fn deep_copy_assign(&mut self, src_state: &State, src: VarId, dst: VarId) -> Result<()> {
        self.copy_from(src_state, src, dst, false)
    }

    /// As [`State::deep_copy_assign`], additionally giving `dst` the alias
    /// pairs of `src`.
    pub fn deep_copy(&mut self, src_state: &State, src: VarId, dst: VarId) -> Result<()> {
        self.copy_from(src_state, src, dst, true)
    }

    /// Initializes a fresh index `dst` from the unknown field `src` it
    /// was split off. Alias pairs are copied, except those into `src`
    /// itself: `dst` is one of the locations `src` stood for, not a
    /// location aliased with it.
    pub fn copy_from_unknown(&mut self, src: VarId, dst: VarId) -> Result<()> {
        let tree = merge_vars(&[Source::var(self, src)], &|_, v| Some(v));
        self.materialize(&tree, dst, true, &|s, v| {
            (s.contains(*v) && !s.is_within(*v, src)).then_some(*v)
        })
    }

    /// Whether `v` is `ancestor` or lies below it.
    pub fn is_within(&self, mut v: VarId, ancestor: VarId) -> bool {
        loop {
            if v == ancestor {
                return true;
            }
            match self.parent(v) {
                Some((p, _)) => v = p,
                None => return false,
            }
        }
    }

    fn copy_from(&mut self, src_state: &State, src: VarId, dst: VarId, top_aliases: bool) -> Result<()> {
        if !self.contains(dst) {
            return Err(AnalysisError::Internal(format!("deep copy into missing variable {dst:?}")));
        }
        let tree = merge_vars(&[Source::var(src_state, src)], &|_, v| Some(v));
        self.materialize(&tree, dst, top_aliases, &|s, v| s.contains(*v).then_some(*v))
    }
}

/// Path-indexed form of a state; two states are path-isomorphic iff their
/// canonical forms are equal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Canonical {
    pub vars: BTreeMap<VarPath, CanonicalVar>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CanonicalVar {
    pub values: ValueSet,
    pub folded: bool,
    pub must: BTreeSet<VarPath>,
    pub may: BTreeSet<VarPath>,
}

impl State {
    pub fn canonical(&self) -> Canonical {
        let paths: BTreeMap<VarId, VarPath> = self.var_ids().map(|v| (v, self.path(v))).collect();
        let vars = self
            .var_ids()
            .map(|v| {
                let d = self.data(v).unwrap();
                let cv = CanonicalVar {
                    values: d.values.clone(),
                    folded: d.folded,
                    must: d.must.iter().map(|p| paths[p].clone()).collect(),
                    may: d.may.iter().map(|p| paths[p].clone()).collect(),
                };
                (paths[&v].clone(), cv)
            })
            .collect();
        Canonical { vars }
    }

    pub fn isomorphic(&self, other: &State) -> bool {
        if self.var_count() != other.var_count() {
            return false;
        }
        // pair up variables by walking both trees in step
        let mut map = vec![VarId::UNDEF; self.vars.len()];
        let mut stack = vec![(self.root, other.root)];
        while let Some((a, b)) = stack.pop() {
            map[a.0 as usize] = b;
            let (da, db) = (self.data(a).unwrap(), other.data(b).unwrap());
            if da.values != db.values || da.folded != db.folded || da.children.len() != db.children.len() {
                return false;
            }
            for (name, ca) in &da.children {
                match db.children.get(name) {
                    Some(cb) => stack.push((*ca, *cb)),
                    None => return false,
                }
            }
        }
        let same = |xs: &BTreeSet<VarId>, ys: &BTreeSet<VarId>| {
            xs.len() == ys.len() && xs.iter().all(|x| ys.contains(&map[x.0 as usize]))
        };
        self.var_ids().all(|a| {
            let (da, db) = (self.data(a).unwrap(), other.data(map[a.0 as usize]).unwrap());
            same(&da.must, &db.must) && same(&da.may, &db.may)
        })
    }

    /// Rebuilds a state from its canonical form.
    pub fn from_canonical(c: &Canonical, depth_limit: u32) -> Result<State> {
        let mut s = State::bare(depth_limit);
        let root = s.root;
        for (path, cv) in &c.vars {
            let id = match path.split_last() {
                None => root,
                Some((name, parent)) => {
                    let p = s
                        .var_at(parent)
                        .ok_or_else(|| AnalysisError::Internal(format!("missing parent of {}", render_var_path(path))))?;
                    s.create_index(p, name.clone())?
                }
            };
            s.set_values(id, cv.values.clone());
            s.data_mut(id).folded = cv.folded;
        }
        for (path, cv) in &c.vars {
            let v = s.var_at(path).unwrap();
            for (set, must) in [(&cv.must, true), (&cv.may, false)] {
                for p in set {
                    let other = s
                        .var_at(p)
                        .ok_or_else(|| AnalysisError::Internal(format!("alias to missing {}", render_var_path(p))))?;
                    if v != other {
                        if must {
                            s.data_mut(v).must.insert(other);
                            s.data_mut(other).must.insert(v);
                        } else {
                            s.data_mut(v).may.insert(other);
                            s.data_mut(other).may.insert(v);
                        }
                    }
                }
            }
        }
        Ok(s)
    }

    /// Checks the structural invariants of the state.
    pub fn validate(&self) -> std::result::Result<(), String> {
        let root = self.data(self.root).ok_or("root missing")?;
        if root.parent.is_some() {
            return Err("root has a parent".into());
        }
        for v in self.var_ids() {
            let d = self.data(v).unwrap();
            let name = self.render(v);
            if d.values.is_empty() {
                return Err(format!("{name}: empty value set"));
            }
            if d.values.contains(&Value::Bullet) {
                return Err(format!("{name}: • stored as a value"));
            }
            if let Some((p, n)) = &d.parent {
                let pd = self.data(*p).ok_or_else(|| format!("{name}: parent missing"))?;
                if pd.children.get(n) != Some(&v) {
                    return Err(format!("{name}: not registered under its parent"));
                }
                if d.depth != pd.depth + 1 {
                    return Err(format!("{name}: bad depth"));
                }
                if d.summary != (pd.summary || *n == Value::Bullet) {
                    return Err(format!("{name}: bad summary flag"));
                }
                if *n == Value::Bullet && !d.values.contains(&Value::Undef) {
                    return Err(format!("{name}: unknown field without undefined"));
                }
            } else if v != self.root {
                return Err(format!("{name}: detached variable"));
            }
            if d.folded && (!d.children.is_empty() || !d.must.is_empty()) {
                return Err(format!("{name}: folded variable with indices or must-aliases"));
            }
            if d.depth > self.depth_limit {
                return Err(format!("{name}: deeper than the limit"));
            }
            for (n, c) in &d.children {
                match self.data(*c) {
                    Some(cd) if cd.parent.as_ref() == Some(&(v, n.clone())) => {}
                    _ => return Err(format!("{name}: dangling child {n}")),
                }
            }
            if d.must.contains(&v) || d.may.contains(&v) {
                return Err(format!("{name}: explicit self alias"));
            }
            for p in &d.must {
                let pd = self.data(*p).ok_or_else(|| format!("{name}: must-alias to a dead variable"))?;
                if !pd.must.contains(&v) {
                    return Err(format!("{name}: asymmetric must-alias"));
                }
                if d.may.contains(p) {
                    return Err(format!("{name}: pair both must and may"));
                }
                if d.summary || pd.summary {
                    return Err(format!("{name}: must-alias involving an unknown field"));
                }
            }
            for p in &d.may {
                let pd = self.data(*p).ok_or_else(|| format!("{name}: may-alias to a dead variable"))?;
                if !pd.may.contains(&v) {
                    return Err(format!("{name}: asymmetric may-alias"));
                }
            }
        }
        Ok(())
    }
}

fn collect_below<'n, K>(node: &'n MergedNode<K>, out: &mut Vec<&'n MergedNode<K>>) {
    out.push(node);
    for c in node.children.values() {
        collect_below(c, out);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn initial_state_shape() {
        let s = State::initial();
        let kids: Vec<_> = s.children(s.root()).collect();
        assert_eq!(kids.len(), 1);
        assert_eq!(kids[0].0, &Value::Bullet);
        assert_eq!(s.values(kids[0].1), BTreeSet::from([Value::Undef]));
        s.validate().unwrap();
    }

    #[test]
    fn projections_of_undefined() {
        let s = State::initial();
        assert_eq!(s.values(VarId::UNDEF), BTreeSet::from([Value::Undef]));
        assert_eq!(s.values_undef([].iter()), BTreeSet::from([Value::Undef]));
        assert!(s.aliases_must(s.root()).contains(&s.root()));
    }

    #[test]
    fn create_index_rules() {
        let mut s = State::initial();
        let root = s.root();
        let a = s.create_index(root, Value::str("a")).unwrap();
        assert_eq!(s.values(a), BTreeSet::from([Value::Undef]));
        assert_eq!(s.path(a), vec![Value::str("a")]);
        assert!(s.aliases_must(a).contains(&a));
        let u = s.create_index(a, Value::Bullet).unwrap();
        assert!(s.is_summary(u));
        assert!(matches!(s.create_index(root, Value::str("a")), Err(AnalysisError::DuplicateIndex { .. })));
        s.validate().unwrap();
    }

    #[test]
    fn depth_limit_on_creation() {
        let mut s = State::with_depth_limit(2);
        let a = s.create_index(s.root(), Value::str("a")).unwrap();
        let b = s.create_index(a, Value::int(1)).unwrap();
        assert!(s.is_collapsed(b));
        assert!(matches!(s.create_index(b, Value::int(1)), Err(AnalysisError::DepthLimitExceeded { .. })));
    }

    #[test]
    fn copying_a_leaf_adds_unknown_field() {
        let mut s = State::initial();
        let root = s.root();
        let a = s.create_index(root, Value::str("a")).unwrap();
        s.set_values(a, BTreeSet::from([Value::int(1)]));
        let b = s.create_index(root, Value::str("b")).unwrap();
        let snap = s.clone();
        s.deep_copy_assign(&snap, a, b).unwrap();
        assert!(s.values(b).contains(&Value::int(1)));
        let u = s.unknown_child(b).unwrap();
        assert_eq!(s.values(u), BTreeSet::from([Value::Undef]));
        s.validate().unwrap();
    }

    #[test]
    fn canonical_round_trip() {
        let mut s = State::initial();
        let root = s.root();
        let a = s.create_index(root, Value::str("a")).unwrap();
        let b = s.create_index(root, Value::str("b")).unwrap();
        let c = s.create_index(a, Value::int(3)).unwrap();
        s.link(c, b, true);
        s.link(a, b, false);
        let back = State::from_canonical(&s.canonical(), s.depth_limit()).unwrap();
        assert!(back.isomorphic(&s));
        back.validate().unwrap();
    }

    #[test]
    fn summary_pairs_are_never_must() {
        let mut s = State::initial();
        let root = s.root();
        let a = s.create_index(root, Value::str("a")).unwrap();
        let u = s.create_index(a, Value::Bullet).unwrap();
        let b = s.create_index(root, Value::str("b")).unwrap();
        s.link(u, b, true);
        assert!(s.may_partners(b).contains(&u));
        assert!(s.must_partners(b).is_empty());
        s.unlink_all(b);
        assert!(s.may_partners(u).is_empty());
    }

    #[test]
    fn widen_keeps_undefined() {
        let mut s = State::initial();
        let a = s.create_index(s.root(), Value::str("a")).unwrap();
        s.set_values(a, (1..=16).map(Value::int).chain([Value::Undef]).collect());
        let mut again = s.clone();
        assert_eq!(s.widen(16), vec![a]);
        assert_eq!(s.values(a), BTreeSet::from([Value::Star, Value::Undef]));
        assert!(s.widen(16).is_empty());
        again.set_values(a, (1..=17).map(Value::int).collect());
        again.widen(16);
        assert_eq!(again.values(a), BTreeSet::from([Value::Star]));
    }

    #[test]
    fn fold_absorbs_subtree() {
        let mut s = State::initial();
        let root = s.root();
        let a = s.create_index(root, Value::str("a")).unwrap();
        let b = s.create_index(root, Value::str("b")).unwrap();
        let a1 = s.create_index(a, Value::int(1)).unwrap();
        let a12 = s.create_index(a1, Value::int(2)).unwrap();
        s.set_values(a12, BTreeSet::from([Value::int(5)]));
        s.link(a12, b, true);
        s.fold(a);
        s.validate().unwrap();
        assert!(s.is_folded(a) && s.is_collapsed(a));
        assert!(!s.has_children(a));
        assert!(s.values(a).is_superset(&BTreeSet::from([Value::int(5), Value::Undef])));
        assert!(s.may_partners(a).contains(&b));
        // a folded variable cannot hold a must pair
        s.link(a, b, true);
        assert!(s.must_partners(a).is_empty());
    }

    #[test]
    fn budget_folds_deepest_level_first() {
        let mut s = State::initial();
        let root = s.root();
        for i in 0..4 {
            let top = s.create_index(root, Value::int(i)).unwrap();
            for j in 0..4 {
                let mid = s.create_index(top, Value::int(j)).unwrap();
                for k in 0..4 {
                    s.create_index(mid, Value::int(k)).unwrap();
                }
            }
        }
        let before = s.var_count();
        assert_eq!(s.enforce_budget(before, usize::MAX), 0);
        assert!(s.enforce_budget(30, usize::MAX) > 0);
        s.validate().unwrap();
        assert!(s.var_count() <= 30);
        let top = s.var_at(&[Value::int(0)]).unwrap();
        assert!(!s.is_folded(top));
        assert!(s.is_folded(s.var_at(&[Value::int(0), Value::int(1)]).unwrap()));
    }

    #[test]
    fn folded_flag_round_trips() {
        let mut s = State::initial();
        let a = s.create_index(s.root(), Value::str("a")).unwrap();
        s.create_index(a, Value::int(1)).unwrap();
        let mut t = s.clone();
        t.fold(a);
        assert!(!t.isomorphic(&s));
        let back = State::from_canonical(&t.canonical(), DEFAULT_DEPTH_LIMIT).unwrap();
        assert!(back.isomorphic(&t));
    }
}
