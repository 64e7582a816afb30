//! JSON serialization of states and analysis results.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::AnalysisResult;
use crate::lang::{Literal, ParseError};
use crate::path::{render_var_path, AccessPath, VarPath};
use crate::query::parse_query;
use crate::state::{Canonical, CanonicalVar, State};
use crate::value::Value;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JsonValue {
    Int(i64),
    Str(String),
    Star,
    Undef,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct VarDump {
    pub path: String,
    pub values: Vec<JsonValue>,
    /// Stands for its whole subtree (set by the variable budget).
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub folded: bool,
    pub must_aliases: Vec<String>,
    pub may_aliases: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateDump {
    pub vars: Vec<VarDump>,
}

#[derive(Debug, Error)]
pub enum DumpError {
    #[error("bad variable path `{path}`: {source}")]
    Path { path: String, source: ParseError },
    #[error("`{0}` is not a variable path")]
    NotConcrete(String),
    #[error(transparent)]
    State(#[from] crate::error::AnalysisError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn json_value(v: &Value) -> JsonValue {
    match v {
        Value::Lit(Literal::Int(n)) => JsonValue::Int(*n),
        Value::Lit(Literal::Str(s)) => JsonValue::Str(s.clone()),
        Value::Star => JsonValue::Star,
        Value::Undef | Value::Bullet => JsonValue::Undef,
    }
}

fn from_json_value(v: &JsonValue) -> Value {
    match v {
        JsonValue::Int(n) => Value::int(*n),
        JsonValue::Str(s) => Value::str(s),
        JsonValue::Star => Value::Star,
        JsonValue::Undef => Value::Undef,
    }
}

pub fn dump_state(state: &State) -> StateDump {
    let render = |paths: &std::collections::BTreeSet<VarPath>| paths.iter().map(|p| render_var_path(p)).collect();
    let vars = state
        .canonical()
        .vars
        .iter()
        .map(|(path, cv)| VarDump {
            path: render_var_path(path),
            values: cv.values.iter().map(json_value).collect(),
            folded: cv.folded,
            must_aliases: render(&cv.must),
            may_aliases: render(&cv.may),
        })
        .collect();
    StateDump { vars }
}

/// Parses a rendered variable path such as `$arr[2][•]` or `${'a b'}`.
pub fn parse_var_path(text: &str) -> Result<VarPath, DumpError> {
    if text == "$" {
        return Ok(Vec::new());
    }
    let ap = parse_query(text).map_err(|source| DumpError::Path { path: text.into(), source })?;
    let AccessPath::Seq(items) = ap else { return Err(DumpError::NotConcrete(text.into())) };
    items
        .into_iter()
        .map(|i| match i {
            AccessPath::Atom(v @ (Value::Lit(_) | Value::Bullet)) => Ok(v),
            _ => Err(DumpError::NotConcrete(text.into())),
        })
        .collect()
}

pub fn load_state(dump: &StateDump, depth_limit: u32) -> Result<State, DumpError> {
    let mut vars = BTreeMap::new();
    for v in &dump.vars {
        let parse_all = |ps: &[String]| ps.iter().map(|p| parse_var_path(p)).collect::<Result<_, _>>();
        vars.insert(
            parse_var_path(&v.path)?,
            CanonicalVar {
                values: v.values.iter().map(from_json_value).collect(),
                folded: v.folded,
                must: parse_all(&v.must_aliases)?,
                may: parse_all(&v.may_aliases)?,
            },
        );
    }
    Ok(State::from_canonical(&Canonical { vars }, depth_limit)?)
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct WideningDump {
    pub node: usize,
    pub line: Option<u32>,
    pub var: String,
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct NodeDump {
    pub id: usize,
    pub kind: String,
    pub line: Option<u32>,
    pub out: Option<StateDump>,
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct AnalysisReport {
    pub iterations: usize,
    pub cfg_nodes: usize,
    pub widening_events: Vec<WideningDump>,
    pub exit: Option<StateDump>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub nodes: Vec<NodeDump>,
}

/// The exit state and diagnostics; with `all_nodes`, every node's OUT.
pub fn analysis_report(result: &AnalysisResult, all_nodes: bool) -> AnalysisReport {
    let nodes = if all_nodes {
        result
            .cfg
            .nodes
            .iter()
            .map(|n| NodeDump {
                id: n.id.0,
                kind: format!("{:?}", n.kind).to_lowercase(),
                line: n.line(),
                out: result.out(n.id).map(dump_state),
            })
            .collect()
    } else {
        Vec::new()
    };
    AnalysisReport {
        iterations: result.iterations,
        cfg_nodes: result.cfg.len(),
        widening_events: result
            .widenings
            .iter()
            .map(|w| WideningDump { node: w.node.0, line: w.line, var: w.var.clone() })
            .collect(),
        exit: result.exit_state().map(dump_state),
        nodes,
    }
}
