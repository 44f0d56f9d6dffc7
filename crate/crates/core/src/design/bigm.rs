//! Checks on the demand bound M and the product bound M_Λ of the dual formulation.

use vertiflow_lp::Solver;

use super::dual::solve_once;
use super::*;

#[derive(Debug, Clone, PartialEq)]
pub struct BigMReport {
    pub big_m: f64,
    pub big_m_lambda: f64,
    /// Entries at or within 1e-6 relative of their big-M bound; infeasibility is reported here too.
    pub flags: Vec<String>,
    pub objective: Option<f64>,
    pub doubled_objective: Option<f64>,
    /// true when doubling both bounds leaves the objective unchanged within 1e-6
    pub stable: bool,
}

impl BigMReport {
    pub fn clean(&self) -> bool {
        self.flags.is_empty() && self.stable
    }

    pub fn summary(&self) -> String {
        let status = if self.stable { "stable" } else { "unstable" };
        if self.flags.is_empty() {
            format!("{status}, no binding entries")
        } else {
            format!("{status}, {} binding entries", self.flags.len())
        }
    }
}

/// Solves the dual formulation at the bounds in `spec` and again with both doubled.
pub fn validate_big_m(spec: &DesignSpec, solver: &dyn Solver) -> Result<BigMReport, VfError> {
    let base = solve_once(spec, solver)?;
    let mut doubled = spec.clone();
    doubled.big_m *= 2.0;
    doubled.big_m_lambda *= 2.0;
    let twice = solve_once(&doubled, solver)?;
    let mut flags = Vec::new();
    let objective = match &base {
        Some(o) => {
            flags.extend(o.flags.iter().cloned());
            Some(o.objective)
        }
        None => {
            flags.push("dual MILP infeasible".to_string());
            None
        }
    };
    let doubled_objective = twice.map(|o| o.objective);
    let stable = match (objective, doubled_objective) {
        (Some(a), Some(b)) => (a - b).abs() <= 1e-6,
        _ => false,
    };
    Ok(BigMReport {
        big_m: spec.big_m,
        big_m_lambda: spec.big_m_lambda,
        flags,
        objective,
        doubled_objective,
        stable,
    })
}
