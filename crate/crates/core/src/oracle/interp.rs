//! Concrete interpreter with PHP-like reference semantics.
//!
//! Every variable and array slot points to a cell on a heap. Alias
//! statements make two slots point to the same cell. Assignment copies
//! arrays; a slot whose cell is referenced from more than one place is a
//! reference and the copy keeps sharing it.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use thiserror::Error;

use crate::lang::{AccessExpr, Expr, Literal, Program, Stmt, StmtId, StmtKind, VarName};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Key {
    Int(i64),
    Str(String),
    /// The key produced by indexing with an undefined value.
    Null,
}

impl fmt::Display for Key {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Key::Int(n) => write!(f, "{n}"),
            Key::Str(s) => write!(f, "{}", Literal::Str(s.clone())),
            Key::Null => f.write_str("null"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CellId(usize);

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ConcreteValue {
    Int(i64),
    Str(String),
    Null,
    Array(BTreeMap<Key, CellId>),
}

/// A value that is not an array.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Scalar {
    Int(i64),
    Str(String),
    Null,
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Int(n) => write!(f, "{n}"),
            Scalar::Str(s) => write!(f, "{}", Literal::Str(s.clone())),
            Scalar::Null => f.write_str("null"),
        }
    }
}

impl From<&Literal> for Scalar {
    fn from(l: &Literal) -> Self {
        match l {
            Literal::Int(n) => Scalar::Int(*n),
            Literal::Str(s) => Scalar::Str(s.clone()),
        }
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum InterpError {
    #[error("step budget of {0} exceeded")]
    StepBudgetExceeded(usize),
    #[error("line {0}: an array used as an index")]
    ArrayIndex(u32),
}

pub type KeyPath = Vec<Key>;

/// The memory of a running program. The symbol table is the root array.
#[derive(Clone, Debug)]
pub struct Env {
    cells: Vec<ConcreteValue>,
    root: CellId,
}

impl Default for Env {
    fn default() -> Self {
        Env { cells: vec![ConcreteValue::Array(BTreeMap::new())], root: CellId(0) }
    }
}

impl Env {
    pub fn value(&self, c: CellId) -> &ConcreteValue {
        &self.cells[c.0]
    }

    fn alloc(&mut self, v: ConcreteValue) -> CellId {
        self.cells.push(v);
        CellId(self.cells.len() - 1)
    }

    /// Follows `path` from the symbol table without creating anything.
    pub fn lookup(&self, path: &[Key]) -> Option<CellId> {
        let mut cur = self.root;
        for k in path {
            match self.value(cur) {
                ConcreteValue::Array(m) => cur = *m.get(k)?,
                _ => return None,
            }
        }
        Some(cur)
    }

    /// The scalar at `path`, `Null` when the path does not exist.
    pub fn get(&self, path: &[Key]) -> Option<Scalar> {
        match self.lookup(path).map(|c| self.value(c)) {
            None | Some(ConcreteValue::Null) => Some(Scalar::Null),
            Some(ConcreteValue::Int(n)) => Some(Scalar::Int(*n)),
            Some(ConcreteValue::Str(s)) => Some(Scalar::Str(s.clone())),
            Some(ConcreteValue::Array(_)) => None,
        }
    }

    /// Whether two paths lead to the same cell.
    pub fn same_cell(&self, a: &[Key], b: &[Key]) -> bool {
        matches!((self.lookup(a), self.lookup(b)), (Some(x), Some(y)) if x == y)
    }

    /// Every scalar reachable from the symbol table within `max_depth`
    /// indices, with the arrays passed through (for probing absent keys).
    pub fn scalars(&self, max_depth: usize) -> (Vec<(KeyPath, Scalar)>, Vec<KeyPath>) {
        let mut leaves = Vec::new();
        let mut arrays = Vec::new();
        let mut stack = vec![self.root];
        self.walk(self.root, &mut Vec::new(), max_depth, &mut stack, &mut leaves, &mut arrays);
        (leaves, arrays)
    }

    fn walk(
        &self,
        c: CellId,
        path: &mut Vec<Key>,
        max_depth: usize,
        on_stack: &mut Vec<CellId>,
        leaves: &mut Vec<(Vec<Key>, Scalar)>,
        arrays: &mut Vec<Vec<Key>>,
    ) {
        match self.value(c) {
            ConcreteValue::Array(m) => {
                arrays.push(path.clone());
                if path.len() >= max_depth {
                    return;
                }
                for (k, child) in m {
                    if on_stack.contains(child) {
                        continue;
                    }
                    path.push(k.clone());
                    on_stack.push(*child);
                    self.walk(*child, path, max_depth, on_stack, leaves, arrays);
                    on_stack.pop();
                    path.pop();
                }
            }
            ConcreteValue::Int(n) => leaves.push((path.clone(), Scalar::Int(*n))),
            ConcreteValue::Str(s) => leaves.push((path.clone(), Scalar::Str(s.clone()))),
            ConcreteValue::Null => leaves.push((path.clone(), Scalar::Null)),
        }
    }

    fn refcounts(&self) -> HashMap<CellId, usize> {
        let mut counts = HashMap::new();
        let mut seen = vec![false; self.cells.len()];
        let mut stack = vec![self.root];
        seen[self.root.0] = true;
        while let Some(c) = stack.pop() {
            if let ConcreteValue::Array(m) = self.value(c) {
                for child in m.values() {
                    *counts.entry(*child).or_insert(0) += 1;
                    if !std::mem::replace(&mut seen[child.0], true) {
                        stack.push(*child);
                    }
                }
            }
        }
        counts
    }

    /// A copy of the value in `c`; reference slots stay shared.
    fn copy_value(&mut self, c: CellId) -> ConcreteValue {
        let counts = self.refcounts();
        self.copy_with(c, &counts)
    }

    fn copy_with(&mut self, c: CellId, counts: &HashMap<CellId, usize>) -> ConcreteValue {
        match self.value(c).clone() {
            ConcreteValue::Array(m) => {
                let mut out = BTreeMap::new();
                for (k, child) in m {
                    let slot = if counts.get(&child).copied().unwrap_or(0) >= 2 {
                        child
                    } else {
                        let v = self.copy_with(child, counts);
                        self.alloc(v)
                    };
                    out.insert(k, slot);
                }
                ConcreteValue::Array(out)
            }
            other => other,
        }
    }

    /// The slot cell at `path`, creating arrays and indices on the way.
    fn slot_for_write(&mut self, path: &[Key]) -> CellId {
        let mut cur = self.root;
        for k in path {
            if !matches!(self.value(cur), ConcreteValue::Array(_)) {
                self.cells[cur.0] = ConcreteValue::Array(BTreeMap::new());
            }
            let existing = match self.value(cur) {
                ConcreteValue::Array(m) => m.get(k).copied(),
                _ => unreachable!(),
            };
            cur = match existing {
                Some(c) => c,
                None => {
                    let c = self.alloc(ConcreteValue::Null);
                    if let ConcreteValue::Array(m) = &mut self.cells[cur.0] {
                        m.insert(k.clone(), c);
                    }
                    c
                }
            };
        }
        cur
    }

    fn bind(&mut self, path: &[Key], cell: CellId) {
        let (last, parent) = path.split_last().expect("a variable path is never empty");
        let p = self.slot_for_write(parent);
        if !matches!(self.value(p), ConcreteValue::Array(_)) {
            self.cells[p.0] = ConcreteValue::Array(BTreeMap::new());
        }
        if let ConcreteValue::Array(m) = &mut self.cells[p.0] {
            m.insert(last.clone(), cell);
        }
    }
}

/// One executed assignment or alias statement and the memory after it.
#[derive(Clone, Debug)]
pub struct TracePoint {
    pub stmt: StmtId,
    pub env: Env,
}

pub struct Interpreter<'a> {
    env: Env,
    inputs: &'a [Literal],
    next_input: usize,
    exhausted: Literal,
    steps: usize,
    budget: usize,
    trace: Vec<TracePoint>,
}

/// Runs `program`; `input()` consumes `inputs` in order and then returns
/// `exhausted` forever.
pub fn run_concrete(
    program: &Program,
    inputs: &[Literal],
    exhausted: &Literal,
    budget: usize,
) -> Result<Vec<TracePoint>, InterpError> {
    let mut it = Interpreter {
        env: Env::default(),
        inputs,
        next_input: 0,
        exhausted: exhausted.clone(),
        steps: 0,
        budget,
        trace: Vec::new(),
    };
    it.block(&program.body)?;
    Ok(it.trace)
}

impl Interpreter<'_> {
    fn tick(&mut self) -> Result<(), InterpError> {
        self.steps += 1;
        if self.steps > self.budget {
            Err(InterpError::StepBudgetExceeded(self.budget))
        } else {
            Ok(())
        }
    }

    fn block(&mut self, stmts: &[Stmt]) -> Result<(), InterpError> {
        for s in stmts {
            self.stmt(s)?;
        }
        Ok(())
    }

    fn stmt(&mut self, s: &Stmt) -> Result<(), InterpError> {
        self.tick()?;
        let line = s.span.line;
        match &s.kind {
            StmtKind::Assign { lhs, rhs } => {
                let value = match rhs {
                    Expr::Lit(l) => literal_value(l),
                    Expr::Input => literal_value(&self.input()),
                    Expr::Access(a) => match self.read(a, line)? {
                        Some(c) => self.env.copy_value(c),
                        None => ConcreteValue::Null,
                    },
                };
                let path = self.path(lhs, line)?;
                let slot = self.env.slot_for_write(&path);
                self.env.cells[slot.0] = value;
                self.record(s.id);
            }
            StmtKind::Alias { lhs, rhs } => {
                let target = self.read(rhs, line)?;
                let path = self.path(lhs, line)?;
                let cell = target.unwrap_or_else(|| self.env.alloc(ConcreteValue::Null));
                self.env.bind(&path, cell);
                self.record(s.id);
            }
            StmtKind::If { cond, then_block, else_block } => {
                if self.truthy(cond, line)? {
                    self.block(&then_block.stmts)?;
                } else {
                    self.block(&else_block.stmts)?;
                }
            }
            StmtKind::While { cond, body } => {
                while self.truthy(cond, line)? {
                    self.tick()?;
                    self.block(&body.stmts)?;
                }
            }
        }
        Ok(())
    }

    fn record(&mut self, stmt: StmtId) {
        self.trace.push(TracePoint { stmt, env: self.env.clone() });
    }

    fn input(&mut self) -> Literal {
        let v = self.inputs.get(self.next_input).cloned().unwrap_or_else(|| self.exhausted.clone());
        self.next_input += 1;
        v
    }

    fn truthy(&mut self, cond: &Expr, line: u32) -> Result<bool, InterpError> {
        let v = self.scalar_or_array(cond, line)?;
        Ok(match v {
            ConcreteValue::Int(n) => n != 0,
            ConcreteValue::Str(s) => !s.is_empty(),
            ConcreteValue::Null => false,
            ConcreteValue::Array(m) => !m.is_empty(),
        })
    }

    fn scalar_or_array(&mut self, e: &Expr, line: u32) -> Result<ConcreteValue, InterpError> {
        Ok(match e {
            Expr::Lit(l) => literal_value(l),
            Expr::Input => literal_value(&self.input()),
            Expr::Access(a) => match self.read(a, line)? {
                Some(c) => self.env.value(c).clone(),
                None => ConcreteValue::Null,
            },
        })
    }

    fn key(&mut self, e: &Expr, line: u32) -> Result<Key, InterpError> {
        match self.scalar_or_array(e, line)? {
            ConcreteValue::Int(n) => Ok(Key::Int(n)),
            ConcreteValue::Str(s) => Ok(Key::Str(s)),
            ConcreteValue::Null => Ok(Key::Null),
            ConcreteValue::Array(_) => Err(InterpError::ArrayIndex(line)),
        }
    }

    /// Evaluates every index of `a` (left to right) into a key path.
    fn path(&mut self, a: &AccessExpr, line: u32) -> Result<Vec<Key>, InterpError> {
        let mut out = Vec::with_capacity(a.indices.len() + 1);
        out.push(match &a.base {
            VarName::Ident(n) => Key::Str(n.clone()),
            VarName::Dynamic(e) => self.key(e, line)?,
        });
        for i in &a.indices {
            out.push(self.key(i, line)?);
        }
        Ok(out)
    }

    fn read(&mut self, a: &AccessExpr, line: u32) -> Result<Option<CellId>, InterpError> {
        let path = self.path(a, line)?;
        Ok(self.env.lookup(&path))
    }
}

fn literal_value(l: &Literal) -> ConcreteValue {
    match l {
        Literal::Int(n) => ConcreteValue::Int(*n),
        Literal::Str(s) => ConcreteValue::Str(s.clone()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse;

    fn run(src: &str, inputs: &[Literal]) -> Env {
        let trace = run_concrete(&parse(src).unwrap(), inputs, &Literal::Int(0), 10_000).unwrap();
        trace.last().map(|t| t.env.clone()).unwrap_or_default()
    }

    fn k(s: &str) -> Key {
        Key::Str(s.into())
    }

    #[test]
    fn copies_are_distinct() {
        let env = run("$a = 1; $b = $a; $b = 2;", &[]);
        assert_eq!(env.get(&[k("a")]), Some(Scalar::Int(1)));
        assert!(!env.same_cell(&[k("a")], &[k("b")]));
    }

    #[test]
    fn fig1_with_any_one() {
        let src = include_str!("../../tests/fixtures/fig1.mdy");
        let program = parse(src).unwrap();
        let trace = run_concrete(&program, &[Literal::Int(1)], &Literal::Int(0), 10_000).unwrap();
        let at = |line: u32| {
            let id = program.statements().into_iter().rfind(|s| s.span.line == line).unwrap().id;
            trace.iter().rfind(|t| t.stmt == id).unwrap().env.clone()
        };
        let env = at(4);
        assert!(env.same_cell(&[k("arr"), Key::Int(1)], &[k("alias")]));
        assert_eq!(at(5).get(&[k("t")]), Some(Scalar::Int(1)));
        assert_eq!(at(18).get(&[k("alias3")]), Some(Scalar::Int(8)));
    }

    #[test]
    fn copies_keep_reference_slots() {
        let env = run("$x = 1; $a[1] = &$x; $b = $a; $b[1] = 5;", &[]);
        assert_eq!(env.get(&[k("x")]), Some(Scalar::Int(5)));
        assert_eq!(env.get(&[k("a"), Key::Int(1)]), Some(Scalar::Int(5)));
    }

    #[test]
    fn reads_do_not_create() {
        let env = run("$a = $b[1][2];", &[]);
        assert!(env.lookup(&[k("b")]).is_none());
        assert_eq!(env.get(&[k("a")]), Some(Scalar::Null));
    }

    #[test]
    fn writes_convert_scalars() {
        let env = run("$a = 3; $a[1][2] = 4;", &[]);
        assert_eq!(env.get(&[k("a"), Key::Int(1), Key::Int(2)]), Some(Scalar::Int(4)));
    }

    #[test]
    fn inputs_run_out() {
        let env = run("$a = input(); $b = input();", &[Literal::Str("k".into())]);
        assert_eq!(env.get(&[k("a")]), Some(Scalar::Str("k".into())));
        assert_eq!(env.get(&[k("b")]), Some(Scalar::Int(0)));
    }

    #[test]
    fn alias_of_missing_variable_is_fresh() {
        let env = run("$a = &$b; $a = 1;", &[]);
        assert!(env.lookup(&[k("b")]).is_none());
        assert_eq!(env.get(&[k("a")]), Some(Scalar::Int(1)));
    }

    #[test]
    fn budget_and_array_index() {
        let p = parse("while (1) { $a = 1; }").unwrap();
        assert_eq!(run_concrete(&p, &[], &Literal::Int(0), 50).unwrap_err(), InterpError::StepBudgetExceeded(50));
        let p = parse("$a[1] = 1; $b[$a] = 2;").unwrap();
        assert_eq!(run_concrete(&p, &[], &Literal::Int(0), 50).unwrap_err(), InterpError::ArrayIndex(1));
    }

    #[test]
    fn cycles_are_walked_safely() {
        let env = run("$a[1] = 2; $a[2] = &$a; $b = $a;", &[]);
        let (leaves, _) = env.scalars(6);
        assert!(leaves.iter().any(|(p, v)| p == &vec![k("b"), Key::Int(1)] && *v == Scalar::Int(2)));
    }
}
