//! Control-flow graph with one node per statement plus explicit branch and
//! join nodes.

use std::fmt::Write as _;

use crate::lang::{Expr, Program, SourceSpan, Stmt, StmtId, StmtKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeKind {
    Entry,
    Exit,
    Assign,
    Alias,
    Join,
    Branch,
}

impl NodeKind {
    fn label(self) -> &'static str {
        match self {
            NodeKind::Entry => "entry",
            NodeKind::Exit => "exit",
            NodeKind::Assign => "assign",
            NodeKind::Alias => "alias",
            NodeKind::Join => "join",
            NodeKind::Branch => "branch",
        }
    }
}

#[derive(Clone, Debug)]
pub struct CfgNode {
    pub id: NodeId,
    pub kind: NodeKind,
    pub stmt: Option<Stmt>,
    pub span: Option<SourceSpan>,
}

impl CfgNode {
    pub fn line(&self) -> Option<u32> {
        self.span.map(|s| s.line)
    }
}

/// Predecessor lists may repeat a node: an `if` whose arms are both empty
/// reaches its join twice from the same branch node.
#[derive(Clone, Debug)]
pub struct Cfg {
    pub nodes: Vec<CfgNode>,
    pub entry: NodeId,
    pub exit: NodeId,
    preds: Vec<Vec<NodeId>>,
    succs: Vec<Vec<NodeId>>,
}

impl Cfg {
    pub fn node(&self, id: NodeId) -> &CfgNode {
        &self.nodes[id.0]
    }

    pub fn preds(&self, id: NodeId) -> &[NodeId] {
        &self.preds[id.0]
    }

    pub fn succs(&self, id: NodeId) -> &[NodeId] {
        &self.succs[id.0]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.succs.iter().enumerate().flat_map(|(i, ss)| ss.iter().map(move |s| (NodeId(i), *s)))
    }

    /// Nodes reachable from the entry, in reverse postorder. Successors
    /// are explored last to first, so a loop body precedes the loop exit.
    pub fn reverse_postorder(&self) -> Vec<NodeId> {
        let mut seen = vec![false; self.len()];
        let mut post = Vec::with_capacity(self.len());
        let mut stack = vec![(self.entry, 0usize)];
        seen[self.entry.0] = true;
        while let Some((n, i)) = stack.pop() {
            match self.succs(n).iter().rev().nth(i) {
                Some(&s) => {
                    stack.push((n, i + 1));
                    if !std::mem::replace(&mut seen[s.0], true) {
                        stack.push((s, 0));
                    }
                }
                None => post.push(n),
            }
        }
        post.reverse();
        post
    }

    pub fn node_of_stmt(&self, id: StmtId) -> Option<NodeId> {
        self.nodes
            .iter()
            .find(|n| matches!(n.kind, NodeKind::Assign | NodeKind::Alias) && n.stmt.as_ref().map(|s| s.id) == Some(id))
            .map(|n| n.id)
    }

    /// The last node (in construction order) whose statement starts on
    /// `line`; joins count under the line of their closing brace.
    pub fn last_node_on_line(&self, line: u32) -> Option<NodeId> {
        self.nodes.iter().filter(|n| n.line() == Some(line)).map(|n| n.id).next_back()
    }

    pub fn count(&self, kind: NodeKind) -> usize {
        self.nodes.iter().filter(|n| n.kind == kind).count()
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph cfg {\n");
        for n in &self.nodes {
            let label = match n.line() {
                Some(l) => format!("{} {} L{}", n.id.0, n.kind.label(), l),
                None => format!("{} {}", n.id.0, n.kind.label()),
            };
            let _ = writeln!(out, "  n{} [label=\"{}\"];", n.id.0, label);
        }
        for (a, b) in self.edges() {
            let _ = writeln!(out, "  n{} -> n{};", a.0, b.0);
        }
        out.push_str("}\n");
        out
    }
}

struct Builder {
    nodes: Vec<CfgNode>,
    succs: Vec<Vec<NodeId>>,
}

impl Builder {
    fn add(&mut self, kind: NodeKind, stmt: Option<&Stmt>, span: Option<SourceSpan>) -> NodeId {
        let id = NodeId(self.nodes.len());
        self.nodes.push(CfgNode { id, kind, stmt: stmt.cloned(), span });
        self.succs.push(Vec::new());
        id
    }

    fn edge(&mut self, from: NodeId, to: NodeId) {
        self.succs[from.0].push(to);
    }

    /// Appends `stmts` after `cur`; returns the node control falls out of.
    fn block(&mut self, stmts: &[Stmt], mut cur: NodeId) -> NodeId {
        for s in stmts {
            cur = self.stmt(s, cur);
        }
        cur
    }

    fn stmt(&mut self, s: &Stmt, cur: NodeId) -> NodeId {
        match &s.kind {
            StmtKind::Assign { .. } | StmtKind::Alias { .. } => {
                let kind = if matches!(s.kind, StmtKind::Assign { .. }) { NodeKind::Assign } else { NodeKind::Alias };
                let n = self.add(kind, Some(s), Some(s.span));
                self.edge(cur, n);
                n
            }
            StmtKind::If { then_block, else_block, .. } => {
                let branch = self.add(NodeKind::Branch, Some(s), Some(s.span));
                self.edge(cur, branch);
                let then_end = self.block(&then_block.stmts, branch);
                let else_end = self.block(&else_block.stmts, branch);
                let close = else_block.close.or(then_block.close);
                let join = self.add(NodeKind::Join, None, close);
                self.edge(then_end, join);
                self.edge(else_end, join);
                join
            }
            StmtKind::While { body, .. } => {
                let head = self.add(NodeKind::Join, Some(s), Some(s.span));
                self.edge(cur, head);
                let branch = self.add(NodeKind::Branch, Some(s), Some(s.span));
                self.edge(head, branch);
                let body_end = self.block(&body.stmts, branch);
                self.edge(body_end, head);
                branch
            }
        }
    }
}

pub fn build_cfg(program: &Program) -> Cfg {
    let mut b = Builder { nodes: Vec::new(), succs: Vec::new() };
    let entry = b.add(NodeKind::Entry, None, None);
    let last = b.block(&program.body, entry);
    let exit = b.add(NodeKind::Exit, None, None);
    b.edge(last, exit);

    let mut preds = vec![Vec::new(); b.nodes.len()];
    for (i, ss) in b.succs.iter().enumerate() {
        for s in ss {
            preds[s.0].push(NodeId(i));
        }
    }
    Cfg { nodes: b.nodes, entry, exit, preds, succs: b.succs }
}

/// Condition expressions, for nodes that carry one.
pub fn condition(node: &CfgNode) -> Option<&Expr> {
    match node.stmt.as_ref().map(|s| &s.kind) {
        Some(StmtKind::If { cond, .. }) | Some(StmtKind::While { cond, .. }) if node.kind == NodeKind::Branch => {
            Some(cond)
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse;

    #[test]
    fn empty_program() {
        let cfg = build_cfg(&parse("").unwrap());
        assert_eq!(cfg.len(), 2);
        assert_eq!(cfg.succs(cfg.entry), &[cfg.exit]);
    }

    #[test]
    fn loop_head_has_two_preds() {
        let cfg = build_cfg(&parse("while(input()){$a=1;}").unwrap());
        let head = cfg.nodes.iter().find(|n| n.kind == NodeKind::Join).unwrap();
        assert_eq!(cfg.preds(head.id).len(), 2);
        assert_eq!(cfg.len(), 5);
    }

    #[test]
    fn empty_arms_still_join() {
        let cfg = build_cfg(&parse("if (1) {}").unwrap());
        let join = cfg.nodes.iter().find(|n| n.kind == NodeKind::Join).unwrap();
        assert_eq!(cfg.preds(join.id).len(), 2);
    }

    #[test]
    fn every_node_reachable_and_preds_match() {
        let src = "$a = 1; if ($a) { $b = 2; while (input()) { $c = &$b; } } else { } $d = 3;";
        let cfg = build_cfg(&parse(src).unwrap());
        let mut seen = vec![false; cfg.len()];
        let mut stack = vec![cfg.entry];
        while let Some(n) = stack.pop() {
            if !std::mem::replace(&mut seen[n.0], true) {
                stack.extend(cfg.succs(n));
            }
        }
        assert!(seen.iter().all(|s| *s));
        for (a, b) in cfg.edges() {
            assert!(cfg.preds(b).contains(&a));
        }
        for n in &cfg.nodes {
            match n.kind {
                NodeKind::Join => assert!(cfg.preds(n.id).len() >= 2),
                NodeKind::Exit => {}
                _ => assert!(cfg.preds(n.id).len() <= 1),
            }
        }
        assert!(cfg.to_dot().starts_with("digraph"));
    }
}
