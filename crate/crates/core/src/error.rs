use thiserror::Error;
use vertiflow_lp::LpError;

use crate::network::Issue;

#[derive(Debug, Error)]
pub enum VfError {
    #[error("validation failed: {}", join_issues(.0))]
    Validation(Vec<Issue>),
    #[error("solver failure: {0}")]
    Solver(#[from] LpError),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("link has zero length; detour ratio undefined")]
    ZeroLengthLink,
    #[error("invalid selection: {0}")]
    Selection(String),
    #[error("brute force needs {needed} evaluations, above the cap of {cap}")]
    BruteForceCap { needed: u128, cap: u64 },
    #[error("O-D pair ({0}, {1}) has no original link")]
    PairWithoutLink(usize, usize),
    #[error("big-M validation failed after {0} doublings")]
    BigMSuspect(usize),
    #[error("internal error: {0}")]
    Internal(String),
    #[error("malformed input: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn join_issues(issues: &[Issue]) -> String {
    issues.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("; ")
}
