#![allow(dead_code)]

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use minidyn::cfg::build_cfg;
use minidyn::engine::{analyze, EngineConfig};
use minidyn::lang::parse;
use minidyn::merge::merge_states;
use minidyn::randprog::{random_program, GenConfig};
use minidyn::{State, Value};

/// Width used when checking widening, small enough to make it fire.
pub const WIDEN_LIMIT: usize = 2;

fn small_programs() -> GenConfig {
    GenConfig { max_stmts: 10, max_depth: 3, ..Default::default() }
}

/// OUT states of random program prefixes, analyzed with validation after
/// every transfer. Validation failures are returned as errors.
pub fn random_states(count: usize, seed: u64) -> (Vec<State>, Vec<String>) {
    let mut rng = StdRng::seed_from_u64(seed);
    let config = EngineConfig { validate: true, ..Default::default() };
    let mut states = Vec::with_capacity(count);
    let mut errors = Vec::new();
    while states.len() < count {
        let src = random_program(&mut rng, &small_programs());
        let program = parse(&src).expect("generated programs parse");
        match analyze(&build_cfg(&program), &config) {
            Ok(r) => {
                let outs: Vec<&State> = r.cfg.nodes.iter().filter_map(|n| r.out(n.id)).collect();
                states.push(outs[rng.gen_range(0..outs.len())].clone());
            }
            Err(e) => {
                errors.push(format!("{e}\n{src}"));
                states.push(State::initial());
            }
        }
    }
    (states, errors)
}

/// Every variable of `small` exists in `big` with covered values.
pub fn covered_by(small: &State, big: &State) -> bool {
    small.var_ids().all(|v| {
        let Some(w) = big.var_at(&small.path(v)) else { return false };
        let wide = big.values(w);
        small.values(v).iter().all(|x| wide.contains(x) || (x.is_literal() && wide.contains(&Value::Star)))
    })
}

/// Merge commutativity and idempotence, widening extensiveness and
/// idempotence, over consecutive pairs of `states`.
pub fn algebra_failures(states: &[State]) -> Vec<String> {
    let mut out = Vec::new();
    for (i, a) in states.iter().enumerate() {
        let b = &states[(i + 1) % states.len()];
        if !merge_states(&[a, b]).isomorphic(&merge_states(&[b, a])) {
            out.push(format!("state {i}: merge is not commutative"));
        }
        if !merge_states(&[a, a]).isomorphic(a) {
            out.push(format!("state {i}: merge is not idempotent"));
        }
        let mut w = a.clone();
        w.widen(WIDEN_LIMIT);
        if !covered_by(a, &w) {
            out.push(format!("state {i}: widening lost values"));
        }
        let mut ww = w.clone();
        ww.widen(WIDEN_LIMIT);
        if !ww.isomorphic(&w) {
            out.push(format!("state {i}: widening is not idempotent"));
        }
    }
    out
}
