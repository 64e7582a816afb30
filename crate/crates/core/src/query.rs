//! Query paths for inspecting analysis results.
//!
//! Two spellings are accepted: source-like `$arr[1]['k']` and the raw
//! form `[][arr][1]`. Indices may also be `*` (every index), `@unknown` or
//! `•` (the unknown field), or any expression of the language.

use crate::lang::{lower_expr, tokenize, ParseError, Parser, Tok};
use crate::path::AccessPath;
use crate::state::ValueSet;
use crate::value::Value;

pub fn parse_query(src: &str) -> Result<AccessPath, ParseError> {
    let mut p = Parser::new(tokenize(src)?);
    let mut items = Vec::new();
    match p.peek().clone() {
        Tok::Dollar => {
            p.bump();
            match p.peek().clone() {
                Tok::Ident(name) => {
                    p.bump();
                    items.push(AccessPath::Atom(Value::str(&name)));
                }
                Tok::LBrace => {
                    p.bump();
                    items.push(item(&mut p)?);
                    p.expect(Tok::RBrace)?;
                }
                other => return Err(p.error_here(format!("expected a variable name, found {}", other.describe()))),
            }
        }
        Tok::LBracket => {
            p.bump();
            p.expect(Tok::RBracket)?;
        }
        other => return Err(p.error_here(format!("expected `$` or `[]`, found {}", other.describe()))),
    }
    while *p.peek() == Tok::LBracket {
        p.bump();
        items.push(item(&mut p)?);
        p.expect(Tok::RBracket)?;
    }
    if *p.peek() != Tok::Eof {
        return Err(p.error_here(format!("unexpected {}", p.peek().describe())));
    }
    Ok(AccessPath::Seq(items))
}

fn item(p: &mut Parser) -> Result<AccessPath, ParseError> {
    match p.peek().clone() {
        Tok::Star => {
            p.bump();
            Ok(AccessPath::Atom(Value::Star))
        }
        Tok::Unknown => {
            p.bump();
            Ok(AccessPath::Atom(Value::Bullet))
        }
        Tok::Ident(name) if name != "input" => {
            p.bump();
            Ok(AccessPath::Atom(Value::str(&name)))
        }
        _ => Ok(lower_expr(&p.expr()?)),
    }
}

/// Space-separated, in value order: integers, strings, `star`, `undef`.
pub fn format_values(values: &ValueSet) -> String {
    values.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ")
}
