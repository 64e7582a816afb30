//! Worklist fixpoint over the control-flow graph.

use std::collections::BTreeSet;

use crate::cfg::{Cfg, NodeId, NodeKind};
use crate::error::{AnalysisError, Result};
use crate::lang::{lower_access, lower_expr, StmtKind};
use crate::merge::merge_states;
use crate::path::AccessPath;
use crate::state::{State, DEFAULT_DEPTH_LIMIT};
use crate::write::{apply_alias, apply_assign};

pub use crate::write::Faults;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum WorklistOrder {
    /// Lowest reverse-postorder position first: loops settle before the
    /// code after them runs.
    #[default]
    Rpo,
    Fifo,
    Lifo,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EngineConfig {
    pub depth_limit: u32,
    pub value_width_limit: usize,
    pub max_iterations: usize,
    /// States with more variables or alias pairs have their deepest
    /// subtrees folded.
    pub max_vars: usize,
    pub max_alias_pairs: usize,
    /// Check the state invariants after every transfer.
    pub validate: bool,
    pub order: WorklistOrder,
    pub faults: Faults,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            depth_limit: DEFAULT_DEPTH_LIMIT,
            value_width_limit: 16,
            max_iterations: 10_000,
            max_vars: 4_096,
            max_alias_pairs: 20_000,
            validate: false,
            order: WorklistOrder::default(),
            faults: Faults::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WideningEvent {
    pub node: NodeId,
    pub line: Option<u32>,
    pub var: String,
}

#[derive(Clone, Debug)]
pub struct AnalysisResult {
    pub cfg: Cfg,
    ins: Vec<Option<State>>,
    outs: Vec<Option<State>>,
    pub iterations: usize,
    pub widenings: Vec<WideningEvent>,
}

impl AnalysisResult {
    pub fn out(&self, node: NodeId) -> Option<&State> {
        self.outs.get(node.0).and_then(Option::as_ref)
    }

    pub fn input(&self, node: NodeId) -> Option<&State> {
        self.ins.get(node.0).and_then(Option::as_ref)
    }

    /// OUT of the last node on `line`.
    pub fn at_line(&self, line: u32) -> Option<&State> {
        self.cfg.last_node_on_line(line).and_then(|n| self.out(n))
    }

    pub fn exit_state(&self) -> Option<&State> {
        self.out(self.cfg.exit)
    }
}

fn lhs_items(path: AccessPath) -> Vec<AccessPath> {
    match path {
        AccessPath::Seq(items) => items,
        AccessPath::Atom(_) => unreachable!("a variable access lowers to a sequence"),
    }
}

/// The effect of one node on its IN state.
pub fn transfer(cfg: &Cfg, node: NodeId, input: &State, faults: Faults) -> Result<State> {
    let n = cfg.node(node);
    match (n.kind, n.stmt.as_ref().map(|s| &s.kind)) {
        (NodeKind::Assign, Some(StmtKind::Assign { lhs, rhs })) => {
            apply_assign(input, &lhs_items(lower_access(lhs)), &lower_expr(rhs), faults)
        }
        (NodeKind::Alias, Some(StmtKind::Alias { lhs, rhs })) => {
            apply_alias(input, &lhs_items(lower_access(lhs)), &lower_access(rhs), faults)
        }
        _ => Ok(input.clone()),
    }
}

pub fn analyze(cfg: &Cfg, config: &EngineConfig) -> Result<AnalysisResult> {
    let len = cfg.len();
    let mut ins: Vec<Option<State>> = vec![None; len];
    let mut outs: Vec<Option<State>> = vec![None; len];
    let mut widenings = Vec::new();
    let initial = State::with_depth_limit(config.depth_limit);
    ins[cfg.entry.0] = Some(initial.clone());
    outs[cfg.entry.0] = Some(initial);

    let mut rank = vec![usize::MAX; len];
    for (i, n) in cfg.reverse_postorder().into_iter().enumerate() {
        rank[n.0] = i;
    }
    // entries are (priority, node); the smallest is taken, except LIFO
    let mut queue: BTreeSet<(usize, NodeId)> = BTreeSet::new();
    let mut queued = vec![false; len];
    let mut pushes = 0usize;
    let mut push = |queue: &mut BTreeSet<(usize, NodeId)>, queued: &mut Vec<bool>, n: NodeId| {
        if !std::mem::replace(&mut queued[n.0], true) {
            pushes += 1;
            let key = if config.order == WorklistOrder::Rpo { rank[n.0] } else { pushes };
            queue.insert((key, n));
        }
    };
    for &s in cfg.succs(cfg.entry) {
        push(&mut queue, &mut queued, s);
    }

    let mut iterations = 0;
    while let Some((_, node)) = match config.order {
        WorklistOrder::Lifo => queue.pop_last(),
        WorklistOrder::Rpo | WorklistOrder::Fifo => queue.pop_first(),
    } {
        queued[node.0] = false;
        iterations += 1;
        if iterations > config.max_iterations {
            return Err(AnalysisError::IterationLimitExceeded(config.max_iterations));
        }

        let preds: BTreeSet<NodeId> = cfg.preds(node).iter().copied().collect();
        let available: Vec<&State> = preds.iter().filter_map(|p| outs[p.0].as_ref()).collect();
        let input = match available.as_slice() {
            [] => continue,
            [one] => (*one).clone(),
            many => merge_states(many),
        };
        let mut out = transfer(cfg, node, &input, config.faults)?;
        out.enforce_budget(config.max_vars, config.max_alias_pairs);
        for v in out.widen(config.value_width_limit) {
            widenings.push(WideningEvent { node, line: cfg.node(node).line(), var: out.render(v) });
        }
        if config.validate {
            out.validate().map_err(|e| {
                AnalysisError::Internal(format!("invalid state after node {}: {e}", node.0))
            })?;
        }
        ins[node.0] = Some(input);
        let changed = outs[node.0].as_ref().is_none_or(|old| !old.isomorphic(&out));
        if changed {
            outs[node.0] = Some(out);
            for &s in cfg.succs(node) {
                push(&mut queue, &mut queued, s);
            }
        }
    }

    Ok(AnalysisResult { cfg: cfg.clone(), ins, outs, iterations, widenings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cfg::build_cfg;
    use crate::lang::parse;
    use crate::read::eval;
    use crate::value::Value;

    fn run(src: &str, config: &EngineConfig) -> AnalysisResult {
        analyze(&build_cfg(&parse(src).unwrap()), config).unwrap()
    }

    fn read(s: &State, path: &[Value]) -> BTreeSet<Value> {
        eval(s, &AccessPath::concrete(path))
    }

    #[test]
    fn empty_program_exit_is_initial() {
        let r = run("", &EngineConfig::default());
        assert!(r.exit_state().unwrap().isomorphic(&State::initial()));
    }

    #[test]
    fn branches_join() {
        let r = run("if (input()) { $a = 1; } else { $a = 2; }", &EngineConfig::default());
        let got = read(r.exit_state().unwrap(), &[Value::str("a")]);
        assert_eq!(got, BTreeSet::from([Value::int(1), Value::int(2)]));
    }

    #[test]
    fn loop_reaches_fixpoint() {
        let src = "$i = 0; while (input()) { $a[$i] = 1; $i = input(); }";
        let config = EngineConfig { validate: true, ..Default::default() };
        let r = run(src, &config);
        let got = read(r.exit_state().unwrap(), &[Value::str("a"), Value::Bullet]);
        assert!(got.contains(&Value::int(1)) && got.contains(&Value::Undef));
        assert!(r.widenings.is_empty());
        let lifo = run(src, &EngineConfig { order: WorklistOrder::Lifo, ..config });
        assert!(lifo.exit_state().unwrap().isomorphic(r.exit_state().unwrap()));
    }

    #[test]
    fn counting_loop_widens() {
        let mut src = String::from("$i = 0;");
        for k in 1..=17 {
            src.push_str(&format!(" if (input()) {{ $i = {k}; }}"));
        }
        let r = run(&src, &EngineConfig::default());
        let got = read(r.exit_state().unwrap(), &[Value::str("i")]);
        assert_eq!(got, BTreeSet::from([Value::Star]));
        assert!(!r.widenings.is_empty());
    }

    #[test]
    fn iteration_limit_is_reported() {
        let cfg = build_cfg(&parse("while (input()) { $a = 1; }").unwrap());
        let err = analyze(&cfg, &EngineConfig { max_iterations: 2, ..Default::default() }).unwrap_err();
        assert_eq!(err, AnalysisError::IterationLimitExceeded(2));
    }
}
