//! Soundness check: every value a concrete run observes must be contained
//! in the abstract value set the analysis reports at the same point.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::Serialize;

use super::interp::{run_concrete, InterpError, Key, Scalar, TracePoint};
use crate::engine::AnalysisResult;
use crate::lang::{Literal, Program, StmtId};
use crate::path::{render_var_path, AccessPath};
use crate::query::format_values;
use crate::read::eval;
use crate::value::Value;

#[derive(Clone, Debug)]
pub struct OracleConfig {
    pub pool: Vec<Literal>,
    /// Enumerate every input sequence when there are at most this many.
    pub max_exhaustive: u64,
    /// Number of random input sequences otherwise.
    pub samples: usize,
    pub seed: u64,
    pub step_budget: usize,
    pub max_path_depth: usize,
    /// Violations to minimize and report in full.
    pub max_witnesses: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            pool: default_pool(),
            max_exhaustive: 100_000,
            samples: 1_000,
            seed: 42,
            step_budget: 10_000,
            max_path_depth: 6,
            max_witnesses: 10,
        }
    }
}

pub fn default_pool() -> Vec<Literal> {
    vec![Literal::Int(0), Literal::Int(1), Literal::Int(2), Literal::Int(3), Literal::Str("k".into())]
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Violation {
    pub line: u32,
    pub path: String,
    pub concrete: String,
    pub abstract_values: String,
    pub inputs: Vec<String>,
}

#[derive(Clone, Debug, Default, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct OracleReport {
    pub assignments_tried: usize,
    pub points_checked: usize,
    pub budget_exceeded: usize,
    pub runtime_errors: usize,
    pub exhaustive: bool,
    /// Distinct (line, path, value) violations; `violations` holds the
    /// first `max_witnesses` of them with minimized inputs.
    pub distinct_violations: usize,
    pub violations: Vec<Violation>,
}

impl OracleReport {
    pub fn is_sound(&self) -> bool {
        self.distinct_violations == 0
    }
}

/// Number of `input()` values to draw per run.
pub fn input_count(program: &Program) -> usize {
    let k = program.input_sites() * if program.has_loops() { 3 } else { 1 };
    k.min(8)
}

fn to_value(k: &Key) -> Value {
    match k {
        Key::Int(n) => Value::int(*n),
        Key::Str(s) => Value::str(s),
        Key::Null => Value::Undef,
    }
}

fn scalar_value(s: &Scalar) -> Value {
    match s {
        Scalar::Int(n) => Value::int(*n),
        Scalar::Str(s) => Value::str(s),
        Scalar::Null => Value::Undef,
    }
}

fn pool_key(l: &Literal) -> Key {
    match l {
        Literal::Int(n) => Key::Int(*n),
        Literal::Str(s) => Key::Str(s.clone()),
    }
}

type ViolationKey = (StmtId, Vec<Key>, Scalar);

struct Checker<'a> {
    program: &'a Program,
    result: &'a AnalysisResult,
    config: &'a OracleConfig,
    lines: BTreeMap<StmtId, u32>,
    /// Verdicts per observation; `Some` holds the abstract values of a
    /// violation. The abstract side is fixed, so each is computed once.
    seen: RefCell<HashMap<ViolationKey, Option<BTreeSet<Value>>>>,
}

enum RunResult {
    Checked { points: usize, bad: Vec<(ViolationKey, BTreeSet<Value>)> },
    Skipped(InterpError),
}

impl Checker<'_> {
    fn observations(&self, point: &TracePoint) -> Vec<(Vec<Key>, Scalar)> {
        let (mut obs, arrays) = point.env.scalars(self.config.max_path_depth);
        for a in arrays {
            if a.len() >= self.config.max_path_depth {
                continue;
            }
            for l in &self.config.pool {
                let mut p = a.clone();
                p.push(pool_key(l));
                if point.env.lookup(&p).is_none() {
                    obs.push((p, Scalar::Null));
                }
            }
        }
        obs
    }

    fn run(&self, inputs: &[Literal]) -> RunResult {
        let exhausted = &self.config.pool[0];
        let trace = match run_concrete(self.program, inputs, exhausted, self.config.step_budget) {
            Ok(t) => t,
            Err(e) => return RunResult::Skipped(e),
        };
        let mut points = 0;
        let mut bad = Vec::new();
        for tp in &trace {
            let Some(state) = self.result.cfg.node_of_stmt(tp.stmt).and_then(|n| self.result.out(n)) else {
                continue;
            };
            for (path, scalar) in self.observations(tp) {
                points += 1;
                let key = (tp.stmt, path, scalar);
                let mut seen = self.seen.borrow_mut();
                let verdict = seen.entry(key.clone()).or_insert_with(|| {
                    let ap = AccessPath::concrete(&key.1.iter().map(to_value).collect::<Vec<_>>());
                    let abs = eval(state, &ap);
                    let v = scalar_value(&key.2);
                    let covered = abs.contains(&v) || (v.is_literal() && abs.contains(&Value::Star));
                    (!covered).then_some(abs)
                });
                if let Some(abs) = verdict {
                    bad.push((key, abs.clone()));
                }
            }
        }
        RunResult::Checked { points, bad }
    }

    fn still_fails(&self, inputs: &[Literal], key: &ViolationKey) -> bool {
        match self.run(inputs) {
            RunResult::Checked { bad, .. } => bad.iter().any(|(k, _)| k.0 == key.0 && k.1 == key.1),
            RunResult::Skipped(_) => false,
        }
    }

    /// Greedy shrinking: drop trailing inputs, then lower each remaining
    /// input to an earlier pool value.
    fn minimize(&self, mut inputs: Vec<Literal>, key: &ViolationKey) -> Vec<Literal> {
        while !inputs.is_empty() {
            let shorter = &inputs[..inputs.len() - 1];
            if self.still_fails(shorter, key) {
                inputs.pop();
            } else {
                break;
            }
        }
        for i in 0..inputs.len() {
            let current = self.config.pool.iter().position(|p| *p == inputs[i]).unwrap_or(self.config.pool.len());
            for cand in &self.config.pool[..current] {
                let mut trial = inputs.clone();
                trial[i] = cand.clone();
                if self.still_fails(&trial, key) {
                    inputs = trial;
                    break;
                }
            }
        }
        inputs
    }
}

fn input_sequences(config: &OracleConfig, k: usize) -> (bool, Vec<Vec<Literal>>) {
    let pool = &config.pool;
    let total = (pool.len() as u64).checked_pow(k as u32).unwrap_or(u64::MAX);
    if total <= config.max_exhaustive {
        let mut out = Vec::with_capacity(total as usize);
        let mut digits = vec![0usize; k];
        loop {
            out.push(digits.iter().map(|d| pool[*d].clone()).collect());
            let mut i = 0;
            while i < k {
                digits[i] += 1;
                if digits[i] < pool.len() {
                    break;
                }
                digits[i] = 0;
                i += 1;
            }
            if i == k {
                return (true, out);
            }
        }
    }
    let mut rng = StdRng::seed_from_u64(config.seed);
    let out = (0..config.samples).map(|_| (0..k).map(|_| pool[rng.gen_range(0..pool.len())].clone()).collect()).collect();
    (false, out)
}

/// Runs `program` concretely on the configured inputs and compares every
/// observation with `result`.
pub fn check_soundness(program: &Program, result: &AnalysisResult, config: &OracleConfig) -> OracleReport {
    assert!(!config.pool.is_empty(), "the input pool must not be empty");
    let checker = Checker {
        program,
        result,
        config,
        lines: program.statements().iter().map(|s| (s.id, s.span.line)).collect(),
        seen: RefCell::new(HashMap::new()),
    };
    let (exhaustive, sequences) = input_sequences(config, input_count(program));
    let mut report = OracleReport { exhaustive, ..Default::default() };
    let mut found: BTreeMap<ViolationKey, (Vec<Literal>, BTreeSet<Value>)> = BTreeMap::new();
    for inputs in sequences {
        report.assignments_tried += 1;
        match checker.run(&inputs) {
            RunResult::Checked { points, bad } => {
                report.points_checked += points;
                for (k, abs) in bad {
                    found.entry(k).or_insert_with(|| (inputs.clone(), abs));
                }
            }
            RunResult::Skipped(InterpError::StepBudgetExceeded(_)) => report.budget_exceeded += 1,
            RunResult::Skipped(InterpError::ArrayIndex(_)) => report.runtime_errors += 1,
        }
    }
    report.distinct_violations = found.len();
    for (key, (inputs, abs)) in found.into_iter().take(config.max_witnesses) {
        let inputs = checker.minimize(inputs, &key);
        let (stmt, path, scalar) = key;
        report.violations.push(Violation {
            line: checker.lines.get(&stmt).copied().unwrap_or(0),
            path: render_var_path(&path.iter().map(to_value).collect::<Vec<_>>()),
            concrete: scalar.to_string(),
            abstract_values: format_values(&abs),
            inputs: inputs.iter().map(ToString::to_string).collect(),
        });
    }
    report
}
