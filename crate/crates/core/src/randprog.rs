//! Random MiniDyn programs for property tests and the soundness oracle.

use rand::seq::SliceRandom;
use rand::Rng;

#[derive(Clone, Debug)]
pub struct GenConfig {
    pub max_stmts: usize,
    /// Most indices on one access.
    pub max_depth: usize,
    pub max_inputs: usize,
    /// How deeply `while` loops may nest; 0 disables loops.
    pub max_loop_nesting: usize,
    pub aliases: bool,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig { max_stmts: 30, max_depth: 4, max_inputs: 3, max_loop_nesting: 3, aliases: true }
    }
}

const NAMES: [&str; 4] = ["a", "b", "c", "d"];
const KEYS: [&str; 4] = ["0", "1", "2", "'k'"];

struct Gen<'r, R: Rng> {
    rng: &'r mut R,
    config: &'r GenConfig,
    stmts_left: usize,
    inputs_left: usize,
    out: String,
}

/// Source text of a random program within the limits of `config`.
pub fn random_program<R: Rng>(rng: &mut R, config: &GenConfig) -> String {
    let stmts = rng.gen_range(1..=config.max_stmts.max(1));
    let mut g = Gen { rng, config, stmts_left: stmts, inputs_left: config.max_inputs, out: String::new() };
    while g.stmts_left > 0 {
        g.stmt(0, 0);
    }
    g.out
}

impl<R: Rng> Gen<'_, R> {
    fn indent(&mut self, level: usize) {
        for _ in 0..level {
            self.out.push_str("  ");
        }
    }

    fn name(&mut self) -> &'static str {
        NAMES.choose(self.rng).unwrap()
    }

    fn key(&mut self) -> String {
        if self.rng.gen_bool(0.25) {
            return format!("${}", self.name());
        }
        if self.inputs_left > 0 && self.rng.gen_bool(0.1) {
            self.inputs_left -= 1;
            return "input()".into();
        }
        KEYS.choose(self.rng).unwrap().to_string()
    }

    fn access(&mut self) -> String {
        let mut s = if self.rng.gen_bool(0.05) { format!("$${}", self.name()) } else { format!("${}", self.name()) };
        let mut depth = 0;
        while depth < self.config.max_depth && self.rng.gen_bool(if depth == 0 { 0.6 } else { 0.4 }) {
            let k = self.key();
            s.push_str(&format!("[{k}]"));
            depth += 1;
        }
        s
    }

    fn rhs(&mut self) -> String {
        match self.rng.gen_range(0..10) {
            0..=3 => KEYS.choose(self.rng).unwrap().to_string(),
            4 if self.inputs_left > 0 => {
                self.inputs_left -= 1;
                "input()".into()
            }
            _ => self.access(),
        }
    }

    fn cond(&mut self) -> String {
        if self.inputs_left > 0 && self.rng.gen_bool(0.5) {
            self.inputs_left -= 1;
            "input()".into()
        } else {
            self.access()
        }
    }

    fn block(&mut self, level: usize, loops: usize) {
        let n = self.rng.gen_range(0..=3).min(self.stmts_left);
        for _ in 0..n {
            self.stmt(level, loops);
        }
    }

    fn stmt(&mut self, level: usize, loops: usize) {
        self.stmts_left = self.stmts_left.saturating_sub(1);
        self.indent(level);
        let roll = self.rng.gen_range(0..100);
        if roll < 12 && self.stmts_left > 0 {
            let c = self.cond();
            self.out.push_str(&format!("if ({c}) {{\n"));
            self.block(level + 1, loops);
            self.indent(level);
            if self.rng.gen_bool(0.5) {
                self.out.push_str("} else {\n");
                self.block(level + 1, loops);
                self.indent(level);
            }
            self.out.push_str("}\n");
        } else if roll < 22 && loops < self.config.max_loop_nesting && self.inputs_left > 0 && self.stmts_left > 0 {
            // loops stop once the inputs run out and `input()` yields 0
            self.inputs_left -= 1;
            self.out.push_str("while (input()) {\n");
            self.block(level + 1, loops + 1);
            self.indent(level);
            self.out.push_str("}\n");
        } else if roll < 35 && self.config.aliases {
            let (l, r) = (self.access(), self.access());
            self.out.push_str(&format!("{l} = &{r};\n"));
        } else {
            let (l, r) = (self.access(), self.rhs());
            self.out.push_str(&format!("{l} = {r};\n"));
        }
    }
}
