use std::collections::BTreeSet;

use minidyn::cfg::build_cfg;
use minidyn::engine::{analyze, AnalysisResult, EngineConfig};
use minidyn::lang::parse;
use minidyn::query::{format_values, parse_query};
use minidyn::read::eval;
use minidyn::State;

const FIG1: &str = include_str!("fixtures/fig1.mdy");
const FIG1_LINE13: &str = include_str!("fixtures/fig1_line13.mdy");

fn run(src: &str) -> AnalysisResult {
    let config = EngineConfig { validate: true, ..Default::default() };
    analyze(&build_cfg(&parse(src).unwrap()), &config).unwrap()
}

fn q(s: &State, path: &str) -> String {
    format_values(&eval(s, &parse_query(path).unwrap()))
}

#[test]
fn line13_join() {
    let r = run(FIG1_LINE13);
    let s = r.exit_state().unwrap();
    assert_eq!(q(s, "[][arr][1][2]"), "3 6 7 undef");
    assert_eq!(q(s, "[][arr][2][2]"), "6 undef");
    assert!(s.var_at(&[minidyn::Value::str("arr"), minidyn::Value::int(2), minidyn::Value::int(2)]).is_some());
}

#[test]
fn else_branch() {
    let r = run(FIG1);
    let s = r.at_line(12).unwrap();
    assert_eq!(q(s, "$arr[1][2]"), "6 7 undef");
    assert_eq!(q(s, "$arr[1][1]"), "7 undef");
    assert_eq!(q(s, "$arr[2][2]"), "6 undef");
    assert_eq!(q(s, "$arr[2][1]"), "undef");
}

#[test]
fn alias_lines() {
    let r = run(FIG1);
    let s18 = r.at_line(18).unwrap();
    for p in ["$arr2[2]", "$arr[2]", "$alias3"] {
        assert_eq!(q(s18, p), "8", "{p}");
    }
    let s19 = r.at_line(19).unwrap();
    let got: BTreeSet<_> = eval(s19, &parse_query("$arr[3]").unwrap());
    assert!(got.contains(&minidyn::Value::int(9)), "{got:?}");
}

fn var(s: &State, path: &str) -> minidyn::VarId {
    let minidyn::path::AccessPath::Seq(items) = parse_query(path).unwrap() else { unreachable!() };
    let names: Vec<_> = items
        .into_iter()
        .map(|i| match i {
            minidyn::path::AccessPath::Atom(v) => v,
            _ => panic!("concrete paths only"),
        })
        .collect();
    s.var_at(&names).unwrap_or_else(|| panic!("{path} missing"))
}

#[test]
fn alias_pairs() {
    let r = run(FIG1);
    let s = r.at_line(15).unwrap();
    let a2 = var(s, "$alias2");
    assert!(s.must_partners(var(s, "$arr[2][1]")).contains(&a2));
    assert!(s.may_partners(var(s, "$alias[1]")).contains(&a2));
    let s = r.at_line(17).unwrap();
    let arr2 = var(s, "$arr2[2]");
    assert!(s.must_partners(arr2).contains(&var(s, "$arr[2]")));
    assert!(s.must_partners(arr2).contains(&var(s, "$alias3")));
    assert!(r.exit_state().unwrap().validate().is_ok());
}
