use std::fmt;

/// A constant appearing in source. Equality is exact on kind and payload.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Literal {
    Int(i64),
    Str(String),
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Int(n) => write!(f, "{n}"),
            Literal::Str(s) => write_quoted(f, s),
        }
    }
}

pub(crate) fn write_quoted(f: &mut fmt::Formatter<'_>, s: &str) -> fmt::Result {
    f.write_str("'")?;
    for c in s.chars() {
        match c {
            '\'' => f.write_str("\\'")?,
            '\\' => f.write_str("\\\\")?,
            c => write!(f, "{c}")?,
        }
    }
    f.write_str("'")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SourceSpan {
    pub line: u32,
    pub column: u32,
    pub length: u32,
}

impl SourceSpan {
    pub fn new(line: u32, column: u32, length: u32) -> Self {
        SourceSpan { line, column, length }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expr {
    Lit(Literal),
    /// `input()`: a statically unknown value.
    Input,
    Access(AccessExpr),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum VarName {
    Ident(String),
    /// `${e}` / `$$e`
    Dynamic(Box<Expr>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AccessExpr {
    pub base: VarName,
    pub indices: Vec<Expr>,
}

impl AccessExpr {
    pub fn var(name: &str) -> Self {
        AccessExpr { base: VarName::Ident(name.to_string()), indices: Vec::new() }
    }

    pub fn index(mut self, e: Expr) -> Self {
        self.indices.push(e);
        self
    }

    pub fn depth(&self) -> usize {
        1 + self.indices.len()
    }
}

/// Preorder position of a statement inside its program; ties the AST to
/// CFG nodes and interpreter traces.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StmtId(pub u32);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stmt {
    pub id: StmtId,
    pub span: SourceSpan,
    pub kind: StmtKind,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StmtKind {
    Assign { lhs: AccessExpr, rhs: Expr },
    Alias { lhs: AccessExpr, rhs: AccessExpr },
    If { cond: Expr, then_block: Block, else_block: Block },
    While { cond: Expr, body: Block },
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Block {
    pub stmts: Vec<Stmt>,
    /// Span of the closing brace, absent for the implicit top-level block
    /// and for a missing `else`.
    pub close: Option<SourceSpan>,
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Program {
    pub body: Vec<Stmt>,
}

impl Program {
    /// All statements in preorder.
    pub fn statements(&self) -> Vec<&Stmt> {
        fn walk<'a>(stmts: &'a [Stmt], out: &mut Vec<&'a Stmt>) {
            for s in stmts {
                out.push(s);
                match &s.kind {
                    StmtKind::If { then_block, else_block, .. } => {
                        walk(&then_block.stmts, out);
                        walk(&else_block.stmts, out);
                    }
                    StmtKind::While { body, .. } => walk(&body.stmts, out),
                    _ => {}
                }
            }
        }
        let mut out = Vec::new();
        walk(&self.body, &mut out);
        out
    }

    /// Number of syntactic `input()` sites.
    pub fn input_sites(&self) -> usize {
        fn expr(e: &Expr) -> usize {
            match e {
                Expr::Lit(_) => 0,
                Expr::Input => 1,
                Expr::Access(a) => access(a),
            }
        }
        fn access(a: &AccessExpr) -> usize {
            let base = match &a.base {
                VarName::Ident(_) => 0,
                VarName::Dynamic(e) => expr(e),
            };
            base + a.indices.iter().map(expr).sum::<usize>()
        }
        self.statements()
            .into_iter()
            .map(|s| match &s.kind {
                StmtKind::Assign { lhs, rhs } => access(lhs) + expr(rhs),
                StmtKind::Alias { lhs, rhs } => access(lhs) + access(rhs),
                StmtKind::If { cond, .. } | StmtKind::While { cond, .. } => expr(cond),
            })
            .sum()
    }

    pub fn has_loops(&self) -> bool {
        self.statements().iter().any(|s| matches!(s.kind, StmtKind::While { .. }))
    }

    /// Deepest nesting of `while` loops.
    pub fn loop_nesting(&self) -> usize {
        fn depth(stmts: &[Stmt]) -> usize {
            stmts
                .iter()
                .map(|s| match &s.kind {
                    StmtKind::If { then_block, else_block, .. } => depth(&then_block.stmts).max(depth(&else_block.stmts)),
                    StmtKind::While { body, .. } => 1 + depth(&body.stmts),
                    _ => 0,
                })
                .max()
                .unwrap_or(0)
        }
        depth(&self.body)
    }
}

// Printing produces source that parses back to the same AST (spans aside).

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Lit(l) => write!(f, "{l}"),
            Expr::Input => f.write_str("input()"),
            Expr::Access(a) => write!(f, "{a}"),
        }
    }
}

impl fmt::Display for AccessExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.base {
            VarName::Ident(name) => write!(f, "${name}")?,
            VarName::Dynamic(e) => write!(f, "${{{e}}}")?,
        }
        for i in &self.indices {
            write!(f, "[{i}]")?;
        }
        Ok(())
    }
}

impl Program {
    pub fn to_source(&self) -> String {
        let mut out = String::new();
        for s in &self.body {
            print_stmt(s, 0, &mut out);
        }
        out
    }
}

fn print_block(b: &Block, indent: usize, out: &mut String) {
    out.push_str("{\n");
    for s in &b.stmts {
        print_stmt(s, indent + 1, out);
    }
    out.push_str(&"    ".repeat(indent));
    out.push('}');
}

fn print_stmt(s: &Stmt, indent: usize, out: &mut String) {
    out.push_str(&"    ".repeat(indent));
    match &s.kind {
        StmtKind::Assign { lhs, rhs } => out.push_str(&format!("{lhs} = {rhs};")),
        StmtKind::Alias { lhs, rhs } => out.push_str(&format!("{lhs} = &{rhs};")),
        StmtKind::If { cond, then_block, else_block } => {
            out.push_str(&format!("if ({cond}) "));
            print_block(then_block, indent, out);
            if else_block.close.is_some() || !else_block.stmts.is_empty() {
                out.push_str(" else ");
                print_block(else_block, indent, out);
            }
        }
        StmtKind::While { cond, body } => {
            out.push_str(&format!("while ({cond}) "));
            print_block(body, indent, out);
        }
    }
    out.push('\n');
}
