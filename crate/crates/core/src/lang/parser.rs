use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::ParseError;

pub fn parse(source: &str) -> Result<Program, ParseError> {
    let mut p = Parser::new(tokenize(source)?);
    let mut body = Vec::new();
    while p.peek() != &Tok::Eof {
        body.push(p.stmt()?);
    }
    Ok(Program { body })
}

pub(crate) struct Parser {
    toks: Vec<Token>,
    pos: usize,
    next_stmt: u32,
}

impl Parser {
    pub(crate) fn new(toks: Vec<Token>) -> Self {
        Parser { toks, pos: 0, next_stmt: 0 }
    }

    pub(crate) fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    pub(crate) fn current(&self) -> &Token {
        &self.toks[self.pos]
    }

    pub(crate) fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    pub(crate) fn error_here(&self, msg: impl Into<String>) -> ParseError {
        let t = self.current();
        ParseError::new(t.line, t.column, msg)
    }

    pub(crate) fn expect(&mut self, tok: Tok) -> Result<Token, ParseError> {
        if *self.peek() == tok {
            Ok(self.bump())
        } else {
            Err(self.error_here(format!("expected {}, found {}", tok.describe(), self.peek().describe())))
        }
    }

    fn stmt(&mut self) -> Result<Stmt, ParseError> {
        let start = self.current().clone();
        let id = StmtId(self.next_stmt);
        self.next_stmt += 1;
        let kind = match self.peek().clone() {
            Tok::Ident(kw) if kw == "if" => {
                self.bump();
                self.expect(Tok::LParen)?;
                let cond = self.expr()?;
                self.expect(Tok::RParen)?;
                let then_block = self.block()?;
                let else_block = if matches!(self.peek(), Tok::Ident(kw) if kw == "else") {
                    self.bump();
                    self.block()?
                } else {
                    Block::default()
                };
                StmtKind::If { cond, then_block, else_block }
            }
            Tok::Ident(kw) if kw == "while" => {
                self.bump();
                self.expect(Tok::LParen)?;
                let cond = self.expr()?;
                self.expect(Tok::RParen)?;
                let body = self.block()?;
                StmtKind::While { cond, body }
            }
            Tok::Dollar => {
                let lhs = self.access()?;
                self.expect(Tok::Assign)?;
                let kind = if *self.peek() == Tok::Amp {
                    self.bump();
                    if *self.peek() != Tok::Dollar {
                        return Err(self.error_here("the target of `&` must be a variable access"));
                    }
                    let rhs = self.access()?;
                    StmtKind::Alias { lhs, rhs }
                } else {
                    StmtKind::Assign { lhs, rhs: self.expr()? }
                };
                self.expect(Tok::Semi)?;
                kind
            }
            other => return Err(self.error_here(format!("expected a statement, found {}", other.describe()))),
        };
        let prev = &self.toks[self.pos.saturating_sub(1)];
        let length = if prev.line == start.line { prev.column + prev.len - start.column } else { start.len };
        Ok(Stmt { id, span: SourceSpan::new(start.line, start.column, length), kind })
    }

    fn block(&mut self) -> Result<Block, ParseError> {
        self.expect(Tok::LBrace)?;
        let mut stmts = Vec::new();
        while *self.peek() != Tok::RBrace {
            if *self.peek() == Tok::Eof {
                return Err(self.error_here("unterminated block, expected `}`"));
            }
            stmts.push(self.stmt()?);
        }
        let close = self.bump();
        Ok(Block { stmts, close: Some(SourceSpan::new(close.line, close.column, 1)) })
    }

    pub(crate) fn expr(&mut self) -> Result<Expr, ParseError> {
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                Ok(Expr::Lit(Literal::Int(n)))
            }
            Tok::Str(s) => {
                self.bump();
                Ok(Expr::Lit(Literal::Str(s)))
            }
            Tok::Ident(kw) if kw == "input" => {
                self.bump();
                self.expect(Tok::LParen)?;
                self.expect(Tok::RParen)?;
                Ok(Expr::Input)
            }
            Tok::Dollar => {
                // `$_GET['...']` is sugar for `input()`.
                if matches!(self.peek_at(1), Tok::Ident(n) if n == "_GET")
                    && *self.peek_at(2) == Tok::LBracket
                    && matches!(self.peek_at(3), Tok::Str(_))
                    && *self.peek_at(4) == Tok::RBracket
                    && *self.peek_at(5) != Tok::LBracket
                {
                    for _ in 0..5 {
                        self.bump();
                    }
                    return Ok(Expr::Input);
                }
                Ok(Expr::Access(self.access()?))
            }
            other => Err(self.error_here(format!("expected an expression, found {}", other.describe()))),
        }
    }

    fn var_name(&mut self) -> Result<VarName, ParseError> {
        self.expect(Tok::Dollar)?;
        match self.peek().clone() {
            Tok::Ident(name) => {
                self.bump();
                Ok(VarName::Ident(name))
            }
            Tok::LBrace => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RBrace)?;
                Ok(VarName::Dynamic(Box::new(e)))
            }
            Tok::Dollar => {
                // `$$a[1]` reads as `${$a}[1]`
                let inner = self.var_name()?;
                Ok(VarName::Dynamic(Box::new(Expr::Access(AccessExpr { base: inner, indices: Vec::new() }))))
            }
            other => Err(self.error_here(format!("expected a variable name, found {}", other.describe()))),
        }
    }

    pub(crate) fn access(&mut self) -> Result<AccessExpr, ParseError> {
        let base = self.var_name()?;
        let mut indices = Vec::new();
        while *self.peek() == Tok::LBracket {
            self.bump();
            indices.push(self.expr()?);
            self.expect(Tok::RBracket)?;
        }
        Ok(AccessExpr { base, indices })
    }
}
