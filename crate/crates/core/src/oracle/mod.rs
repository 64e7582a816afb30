//! Executable soundness oracle: a concrete interpreter and a checker that
//! compares its observations with analysis results. It shares no code with
//! the abstract domain.

mod check;
mod interp;

pub use check::{check_soundness, default_pool, input_count, OracleConfig, OracleReport, Violation};
pub use interp::{run_concrete, CellId, ConcreteValue, Env, InterpError, Key, Scalar, TracePoint};
