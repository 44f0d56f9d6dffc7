//! Linear and mixed-binary programming for throughput and design models.

mod bnb;
pub mod error;
pub mod factor;
pub mod lp_format;
pub mod model;
mod simplex;

pub use error::LpError;
pub use model::{LpModel, LpSolution, LpStatus, MipModel, MipSolution, MipStatus, Relation, Row};
pub use simplex::{Basis, SolverConfig};

pub fn solve_lp(model: &LpModel, cfg: &SolverConfig) -> Result<LpSolution, LpError> {
    simplex::solve_lp(model, cfg)
}

pub fn solve_mip(model: &MipModel, cfg: &SolverConfig) -> Result<MipSolution, LpError> {
    bnb::solve_mip(model, cfg)
}

/// Backend used by the model builders; swap in an external engine by implementing this.
pub trait Solver: Sync {
    fn solve_lp(&self, model: &LpModel) -> Result<LpSolution, LpError>;
    fn solve_mip(&self, model: &MipModel) -> Result<MipSolution, LpError>;
}

/// The in-crate simplex and branch and bound.
#[derive(Debug, Clone, Default)]
pub struct BundledSolver {
    pub config: SolverConfig,
}

impl BundledSolver {
    pub fn new(config: SolverConfig) -> Self {
        Self { config }
    }
}

impl Solver for BundledSolver {
    fn solve_lp(&self, model: &LpModel) -> Result<LpSolution, LpError> {
        solve_lp(model, &self.config)
    }

    fn solve_mip(&self, model: &MipModel) -> Result<MipSolution, LpError> {
        solve_mip(model, &self.config)
    }
}
