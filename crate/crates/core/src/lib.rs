//! Value and points-to analysis for MiniDyn, a small dynamic language with
//! nested associative arrays, references and variable-variables.

pub mod bench;
pub mod cfg;
pub mod dump;
pub mod engine;
pub mod error;
pub mod lang;
pub mod merge;
pub mod oracle;
pub mod path;
pub mod query;
pub mod randprog;
pub mod read;
pub mod state;
pub mod value;
pub mod write;

pub use error::{AnalysisError, Result};
pub use state::{State, ValueSet, VarId};
pub use value::Value;
