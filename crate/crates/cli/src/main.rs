use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use minidyn::bench::{generate, run_scaling, to_csv, BenchSpec};
use minidyn::cfg::build_cfg;
use minidyn::dump::analysis_report;
use minidyn::engine::{analyze, AnalysisResult, EngineConfig};
use minidyn::lang::{parse, Literal, Program};
use minidyn::oracle::{check_soundness, OracleConfig};
use minidyn::query::{format_values, parse_query};
use minidyn::read::eval;
use minidyn::state::DEFAULT_DEPTH_LIMIT;
use minidyn::State;

const AT_HELP: &str = "Program point: a source line or `exit`. A line denotes the OUT state of the \
last CFG node whose statement starts on that line; the join after an if or while is addressed by \
the line of its closing brace.";

#[derive(Parser)]
#[command(name = "minidyn", version, about = "Value and points-to analysis for MiniDyn programs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Limits {
    /// Maximum access-path depth before variables are collapsed.
    #[arg(long, default_value_t = DEFAULT_DEPTH_LIMIT)]
    depth_limit: u32,
    /// Value sets wider than this are widened to `star` inside loops.
    #[arg(long, default_value_t = 16)]
    value_limit: usize,
}

impl Limits {
    fn config(&self) -> EngineConfig {
        EngineConfig { depth_limit: self.depth_limit, value_width_limit: self.value_limit, ..Default::default() }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Analyze a program and print a summary.
    Analyze {
        file: PathBuf,
        /// Write the full JSON report (every node's OUT state) here.
        #[arg(long)]
        json: Option<PathBuf>,
        #[command(flatten)]
        limits: Limits,
    },
    /// Evaluate access paths at a program point.
    #[command(after_help = AT_HELP)]
    Query {
        file: PathBuf,
        #[arg(long, help = AT_HELP)]
        at: String,
        /// Access path such as `$arr[1][*]` or `[][arr][@unknown]`. Repeatable.
        #[arg(long = "path", required = true)]
        paths: Vec<String>,
        #[command(flatten)]
        limits: Limits,
    },
    /// Print the control-flow graph in DOT format.
    DumpCfg { file: PathBuf },
    /// Run the program concretely over many inputs and check the analysis
    /// covers every observed value. Exits with status 1 on violations.
    OracleCheck {
        file: PathBuf,
        /// Comma-separated input values; integers or strings.
        #[arg(long, value_delimiter = ',')]
        pool: Option<Vec<String>>,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Interpreter step budget per run.
        #[arg(long, default_value_t = 10_000)]
        budget: usize,
        /// Random input sequences when enumeration is too large.
        #[arg(long, default_value_t = 1_000)]
        samples: usize,
    },
    /// Write the CODE_n (or mCODE_n) scaling program.
    GenBench {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        merged: bool,
        #[arg(short = 'o', long = "output")]
        output: PathBuf,
    },
    /// Analyze CODE_n and mCODE_n for n = 0..=max-n and write CSV.
    RunBench {
        #[arg(long)]
        max_n: u32,
        #[arg(short = 'o', long = "output")]
        output: PathBuf,
    },
}

fn load(file: &Path) -> Result<Program> {
    let src = fs::read_to_string(file).with_context(|| format!("cannot read {}", file.display()))?;
    parse(&src).with_context(|| format!("{}: parse error", file.display()))
}

fn run_analysis(program: &Program, config: &EngineConfig) -> Result<AnalysisResult> {
    Ok(analyze(&build_cfg(program), config)?)
}

fn state_at<'a>(result: &'a AnalysisResult, at: &str) -> Result<&'a State> {
    let state = if at == "exit" {
        result.exit_state()
    } else {
        let line: u32 = at.parse().with_context(|| format!("--at expects a line number or `exit`, got `{at}`"))?;
        result.at_line(line)
    };
    match state {
        Some(s) => Ok(s),
        None => bail!("no reachable program point at `{at}`"),
    }
}

fn pool_value(text: &str) -> Literal {
    match text.trim().parse() {
        Ok(n) => Literal::Int(n),
        Err(_) => Literal::Str(text.trim().trim_matches(|c| c == '\'' || c == '"').to_string()),
    }
}

fn execute(command: Command) -> Result<ExitCode> {
    match command {
        Command::Analyze { file, json, limits } => {
            let program = load(&file)?;
            let result = run_analysis(&program, &limits.config())?;
            let vars = result.exit_state().map_or(0, State::var_count);
            println!(
                "{} CFG nodes, {} iterations, {} widenings, {} variables at exit",
                result.cfg.len(),
                result.iterations,
                result.widenings.len(),
                vars
            );
            if let Some(out) = json {
                let text = serde_json::to_string_pretty(&analysis_report(&result, true))?;
                fs::write(&out, text).with_context(|| format!("cannot write {}", out.display()))?;
            }
        }
        Command::Query { file, at, paths, limits } => {
            let program = load(&file)?;
            let queries = paths
                .iter()
                .map(|p| parse_query(p).with_context(|| format!("bad path `{p}`")))
                .collect::<Result<Vec<_>>>()?;
            let result = run_analysis(&program, &limits.config())?;
            let state = state_at(&result, &at)?;
            for q in &queries {
                println!("{}", format_values(&eval(state, q)));
            }
        }
        Command::DumpCfg { file } => print!("{}", build_cfg(&load(&file)?).to_dot()),
        Command::OracleCheck { file, pool, seed, budget, samples } => {
            let program = load(&file)?;
            let result = run_analysis(&program, &EngineConfig::default())?;
            let mut config = OracleConfig { seed, step_budget: budget, samples, ..Default::default() };
            if let Some(pool) = pool {
                config.pool = pool.iter().map(|v| pool_value(v)).collect();
            }
            let report = check_soundness(&program, &result, &config);
            println!("{}", serde_json::to_string_pretty(&report)?);
            if !report.is_sound() {
                return Ok(ExitCode::from(1));
            }
        }
        Command::GenBench { n, merged, output } => {
            let src = generate(BenchSpec { n, merged })?;
            fs::write(&output, src).with_context(|| format!("cannot write {}", output.display()))?;
        }
        Command::RunBench { max_n, output } => {
            let rows = run_scaling(max_n, &EngineConfig::default())?;
            fs::write(&output, to_csv(&rows)).with_context(|| format!("cannot write {}", output.display()))?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
