//! Browser bindings: analyze a program, query a point, render its CFG.

use wasm_bindgen::prelude::*;

use minidyn::cfg::build_cfg;
use minidyn::dump::analysis_report;
use minidyn::engine::{analyze as run, AnalysisResult, EngineConfig};
use minidyn::lang::parse;
use minidyn::query::{format_values, parse_query};
use minidyn::read::eval;

fn analyzed(src: &str) -> Result<AnalysisResult, String> {
    let program = parse(src).map_err(|e| format!("parse error at {e}"))?;
    run(&build_cfg(&program), &EngineConfig::default()).map_err(|e| e.to_string())
}

/// JSON report with the exit state and every node's OUT state.
pub fn analyze_json(src: &str) -> Result<String, String> {
    let result = analyzed(src)?;
    serde_json::to_string_pretty(&analysis_report(&result, true)).map_err(|e| e.to_string())
}

/// Values of `path` at `at` (a line number or `exit`), space-separated.
pub fn query_values(src: &str, at: &str, path: &str) -> Result<String, String> {
    let query = parse_query(path).map_err(|e| format!("bad path: {e}"))?;
    let result = analyzed(src)?;
    let state = if at.trim() == "exit" {
        result.exit_state()
    } else {
        let line = at.trim().parse().map_err(|_| format!("`{at}` is not a line number or `exit`"))?;
        result.at_line(line)
    };
    let state = state.ok_or_else(|| format!("no reachable program point at `{at}`"))?;
    Ok(format_values(&eval(state, &query)))
}

pub fn cfg_dot_text(src: &str) -> Result<String, String> {
    let program = parse(src).map_err(|e| format!("parse error at {e}"))?;
    Ok(build_cfg(&program).to_dot())
}

#[wasm_bindgen]
pub fn analyze(src: &str) -> Result<String, JsError> {
    analyze_json(src).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn query(src: &str, at: &str, path: &str) -> Result<String, JsError> {
    query_values(src, at, path).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn cfg_dot(src: &str) -> Result<String, JsError> {
    cfg_dot_text(src).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    const LINE13: &str = include_str!("../../core/tests/fixtures/fig1_line13.mdy");

    #[test]
    fn query_line13() {
        assert_eq!(query_values(LINE13, "exit", "$arr[1][2]").unwrap(), "3 6 7 undef");
        assert!(query_values(LINE13, "nowhere", "$arr").is_err());
    }

    #[test]
    fn report_and_dot() {
        assert!(analyze_json("$a = 1;").unwrap().contains("\"$a\""));
        assert!(cfg_dot_text("$a = 1;").unwrap().starts_with("digraph"));
        assert!(cfg_dot_text("$a = ;").unwrap_err().starts_with("parse error at 1:"));
    }
}
