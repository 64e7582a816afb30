//! Scaling corpora: the fixture program replicated `2^n` times (CODE_n),
//! and two such blocks joined under one branch (mCODE_n).

use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::cfg::build_cfg;
use crate::engine::{analyze, EngineConfig};
use crate::error::AnalysisError;
use crate::lang::{parse, ParseError};

/// Largest supported `n`.
pub const MAX_N: u32 = 12;

/// The fixture program minus its input line. `$any` is shared by all replicas.
const TEMPLATE: &str = "\
$alias = 1; $alias2 = 1; $alias3 = 1;
if ($any) {
  $arr[$any] = &$alias;
  $t = $arr[1];
  $t[2] = 2;
  $arr[1][2] = 3;
  $arr[1][3] = 4;
  $arr[2][3] = 5;
} else {
  $arr[$any][2] = 6;
  $arr[1][$any] = 7;
}
$arr[2][1] = &$alias2;
$arr[2] = &$alias3;
$arr2 = $arr;
$arr2[2] = 8;
$arr2[3] = 9;
";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BenchSpec {
    pub n: u32,
    /// mCODE_n rather than CODE_n.
    pub merged: bool,
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("n = {0} is above the limit of {MAX_N}")]
    TooLarge(u32),
    #[error("generated program does not parse: {0}")]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

/// Prefixes every variable name except `any`.
fn rename(src: &str, prefix: &str) -> String {
    let mut out = String::with_capacity(src.len() + 64);
    let mut rest = src;
    while let Some(i) = rest.find('$') {
        out.push_str(&rest[..=i]);
        rest = &rest[i + 1..];
        let end = rest.find(|c: char| !(c.is_ascii_alphanumeric() || c == '_')).unwrap_or(rest.len());
        if end > 0 && &rest[..end] != "any" {
            out.push_str(prefix);
        }
    }
    out.push_str(rest);
    out
}

fn replicas(first: usize, count: usize, indent: &str) -> String {
    let mut out = String::new();
    for k in first..first + count {
        for line in rename(TEMPLATE, &format!("r{k}_")).lines() {
            out.push_str(indent);
            out.push_str(line);
            out.push('\n');
        }
    }
    out
}

pub fn generate(spec: BenchSpec) -> Result<String, BenchError> {
    if spec.n > MAX_N {
        return Err(BenchError::TooLarge(spec.n));
    }
    let count = 1usize << spec.n;
    if !spec.merged {
        return Ok(replicas(0, count, ""));
    }
    Ok(format!(
        "$any = input();\nif ($any) {{\n{}}} else {{\n{}}}\n",
        replicas(0, count, "  "),
        replicas(count, count, "  ")
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingRow {
    pub variant: &'static str,
    pub n: u32,
    pub cfg_nodes: usize,
    pub variables: usize,
    /// Median of three runs.
    pub wall_ms: f64,
}

pub fn measure(spec: BenchSpec, config: &EngineConfig) -> Result<ScalingRow, BenchError> {
    let program = parse(&generate(spec)?)?;
    let cfg = build_cfg(&program);
    let mut times = Vec::with_capacity(3);
    let mut variables = 0;
    for _ in 0..3 {
        let start = Instant::now();
        let result = analyze(&cfg, config)?;
        times.push(start.elapsed().as_secs_f64() * 1e3);
        variables = result.exit_state().map_or(0, |s| s.var_count());
    }
    times.sort_by(f64::total_cmp);
    Ok(ScalingRow {
        variant: if spec.merged { "mCODE" } else { "CODE" },
        n: spec.n,
        cfg_nodes: cfg.len(),
        variables,
        wall_ms: times[1],
    })
}

/// CODE_n and mCODE_n for every `n` up to `max_n`, run one after another.
pub fn run_scaling(max_n: u32, config: &EngineConfig) -> Result<Vec<ScalingRow>, BenchError> {
    if max_n > MAX_N {
        return Err(BenchError::TooLarge(max_n));
    }
    let mut rows = Vec::new();
    for n in 0..=max_n {
        for merged in [false, true] {
            rows.push(measure(BenchSpec { n, merged }, config)?);
        }
    }
    Ok(rows)
}

pub fn to_csv(rows: &[ScalingRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("rows serialize");
    }
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("csv is utf-8")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renames_all_but_any() {
        assert_eq!(rename("$arr[$any] = &$alias2;", "r3_"), "$r3_arr[$any] = &$r3_alias2;");
        assert_eq!(rename("$anything = 1;", "p_"), "$p_anything = 1;");
    }

    #[test]
    fn replica_counts() {
        let count = |spec| parse(&generate(spec).unwrap()).unwrap().statements().len();
        let c0 = count(BenchSpec { n: 0, merged: false });
        assert_eq!(count(BenchSpec { n: 1, merged: false }), 2 * c0);
        assert_eq!(count(BenchSpec { n: 1, merged: true }), 4 * c0 + 2);
        assert!(matches!(generate(BenchSpec { n: 13, merged: false }), Err(BenchError::TooLarge(13))));
    }

    #[test]
    fn merged_node_count_doubles_plus_constant() {
        let nodes = |n, merged| build_cfg(&parse(&generate(BenchSpec { n, merged }).unwrap()).unwrap()).len();
        let c: Vec<i64> = (1..=4).map(|n| nodes(n, true) as i64 - 2 * nodes(n, false) as i64).collect();
        assert!(c.windows(2).all(|w| w[0] == w[1]), "{c:?}");
    }

    #[test]
    fn csv_header() {
        let rows = [ScalingRow { variant: "CODE", n: 0, cfg_nodes: 3, variables: 4, wall_ms: 1.5 }];
        assert_eq!(to_csv(&rows), "variant,n,cfg_nodes,variables,wall_ms\nCODE,0,3,4,1.5\n");
    }
}
