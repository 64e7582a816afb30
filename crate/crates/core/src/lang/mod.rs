//! The MiniDyn source language: lexer, parser, AST and access-path lowering.

pub mod ast;
mod lexer;
mod lower;
mod parser;

pub use ast::*;
pub use lower::{lower_access, lower_expr};
pub use parser::parse;

pub(crate) use lexer::{tokenize, Tok};
pub(crate) use parser::Parser;

use thiserror::Error;

#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("{line}:{column}: {message}")]
pub struct ParseError {
    pub line: u32,
    pub column: u32,
    pub message: String,
}

impl ParseError {
    pub fn new(line: u32, column: u32, message: impl Into<String>) -> Self {
        ParseError { line, column, message: message.into() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path::AccessPath;
    use crate::value::Value;

    fn only(src: &str) -> StmtKind {
        let p = parse(src).unwrap();
        assert_eq!(p.body.len(), 1);
        p.body[0].kind.clone()
    }

    #[test]
    fn minimal_assignment() {
        assert_eq!(
            only("$a = 1;"),
            StmtKind::Assign { lhs: AccessExpr::var("a"), rhs: Expr::Lit(Literal::Int(1)) }
        );
    }

    #[test]
    fn alias_with_dynamic_index() {
        let expected = StmtKind::Alias {
            lhs: AccessExpr::var("arr").index(Expr::Access(AccessExpr::var("any"))),
            rhs: AccessExpr::var("alias"),
        };
        assert_eq!(only("$arr[$any] = &$alias;"), expected);
    }

    #[test]
    fn missing_rhs_is_error_at_semicolon() {
        let err = parse("$x = ;").unwrap_err();
        assert_eq!((err.line, err.column), (1, 6));
    }

    #[test]
    fn alias_of_literal_is_error() {
        let err = parse("$x = &1;").unwrap_err();
        assert_eq!((err.line, err.column), (1, 7));
        assert!(parse("$x = &input();").is_err());
    }

    #[test]
    fn loop_nesting_depth() {
        let p = parse("while (input()) { if ($a) { while ($b) { $c = 1; } } } while ($d) { }").unwrap();
        assert_eq!(p.loop_nesting(), 2);
        assert_eq!(parse("$a = 1;").unwrap().loop_nesting(), 0);
    }

    #[test]
    fn get_sugar_is_input() {
        assert_eq!(
            only("$any = $_GET['user_input'];"),
            StmtKind::Assign { lhs: AccessExpr::var("any"), rhs: Expr::Input }
        );
    }

    #[test]
    fn spans_and_comments() {
        let p = parse("// header\n  $a = 1; // trailing\nif (input()) {\n $b = 2;\n}\n").unwrap();
        assert_eq!(p.body[0].span, SourceSpan::new(2, 3, 7));
        assert_eq!(p.body[1].span.line, 3);
        let StmtKind::If { then_block, .. } = &p.body[1].kind else { panic!() };
        assert_eq!(then_block.close.unwrap().line, 5);
        assert_eq!(then_block.stmts[0].id, StmtId(2));
    }

    #[test]
    fn errors_carry_positions() {
        let err = parse("$a = 1;\nwhile (1) { $b = 2; ").unwrap_err();
        assert_eq!(err.line, 2);
        let err = parse("$a = 'open").unwrap_err();
        assert_eq!((err.line, err.column), (1, 6));
        assert!(parse("$a = 99999999999999999999;").is_err());
        assert!(parse("$a[1 = 2;").is_err());
        assert!(parse("a = 2;").is_err());
    }

    #[test]
    fn variable_variables() {
        let k = only("$$a[1] = 2;");
        let StmtKind::Assign { lhs, .. } = k else { panic!() };
        assert_eq!(lhs.base, VarName::Dynamic(Box::new(Expr::Access(AccessExpr::var("a")))));
        assert_eq!(lhs.indices.len(), 1);
        assert_eq!(only("${$a}[1] = 2;"), only("$$a[1] = 2;"));
    }

    fn lit(s: &str) -> AccessPath {
        AccessPath::Atom(Value::str(s))
    }

    #[test]
    fn lowering_examples() {
        let lower = |src: &str| {
            let StmtKind::Assign { lhs, .. } = only(&format!("{src} = 0;")) else { panic!() };
            lower_access(&lhs)
        };
        assert_eq!(lower("$a"), AccessPath::Seq(vec![lit("a")]));
        assert_eq!(
            lower("$a[$b]"),
            AccessPath::Seq(vec![lit("a"), AccessPath::Seq(vec![lit("b")])])
        );
        assert_eq!(
            lower("$a[$b[$c]][2]"),
            AccessPath::Seq(vec![
                lit("a"),
                AccessPath::Seq(vec![lit("b"), AccessPath::Seq(vec![lit("c")])]),
                AccessPath::Atom(Value::int(2)),
            ])
        );
        assert_eq!(
            lower("$$a"),
            AccessPath::Seq(vec![AccessPath::Seq(vec![lit("a")])])
        );
        assert_eq!(
            lower("$a[input()]"),
            AccessPath::Seq(vec![lit("a"), AccessPath::Atom(Value::Star)])
        );
    }
}
