use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("simplex stalled after {0} iterations")]
    Stalled(usize),
    #[error("numerical trouble: {0}")]
    Numerical(String),
    #[error("node limit reached after {0} nodes without a feasible incumbent")]
    NodeLimit(usize),
    #[error("LP relaxation is unbounded")]
    UnboundedRelaxation,
}
