use thiserror::Error;

use crate::lang::ParseError;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AnalysisError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("index {name} already exists under variable {parent}")]
    DuplicateIndex { parent: String, name: String },
    #[error("creating an index below {parent} would exceed the depth limit {limit}")]
    DepthLimitExceeded { parent: String, limit: u32 },
    #[error("fixpoint not reached after {0} node evaluations")]
    IterationLimitExceeded(usize),
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T, E = AnalysisError> = std::result::Result<T, E>;
