use crate::error::LpError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Row {
    pub coeffs: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

/// A maximization LP over `num_vars` variables.
#[derive(Debug, Clone, Default)]
pub struct LpModel {
    pub num_vars: usize,
    pub objective: Vec<f64>,
    pub rows: Vec<Row>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub var_names: Vec<String>,
    pub row_names: Vec<String>,
}

impl LpModel {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a variable with objective coefficient and bounds, returning its index.
    pub fn add_var(&mut self, name: impl Into<String>, obj: f64, lower: f64, upper: f64) -> usize {
        let idx = self.num_vars;
        self.num_vars += 1;
        self.objective.push(obj);
        self.lower.push(lower);
        self.upper.push(upper);
        self.var_names.push(name.into());
        idx
    }

    pub fn add_row(
        &mut self,
        name: impl Into<String>,
        coeffs: Vec<(usize, f64)>,
        relation: Relation,
        rhs: f64,
    ) -> usize {
        let idx = self.rows.len();
        self.rows.push(Row { coeffs, relation, rhs });
        self.row_names.push(name.into());
        idx
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn check(&self) -> Result<(), LpError> {
        let n = self.num_vars;
        if self.objective.len() != n || self.lower.len() != n || self.upper.len() != n {
            return Err(LpError::InvalidModel(format!(
                "vector lengths disagree with variable count {n}"
            )));
        }
        for j in 0..n {
            if !(self.lower[j] <= self.upper[j]) || self.lower[j] == f64::INFINITY || self.upper[j] == f64::NEG_INFINITY {
                return Err(LpError::InvalidModel(format!(
                    "variable {j} has bounds [{}, {}]",
                    self.lower[j], self.upper[j]
                )));
            }
            if !self.objective[j].is_finite() {
                return Err(LpError::InvalidModel(format!("objective coefficient {j} is not finite")));
            }
        }
        for (i, row) in self.rows.iter().enumerate() {
            if !row.rhs.is_finite() {
                return Err(LpError::InvalidModel(format!("row {i} has non-finite rhs")));
            }
            for &(j, a) in &row.coeffs {
                if j >= n {
                    return Err(LpError::InvalidModel(format!("row {i} references variable {j}")));
                }
                if !a.is_finite() {
                    return Err(LpError::InvalidModel(format!("row {i} has a non-finite coefficient")));
                }
            }
        }
        Ok(())
    }

    /// Objective value of a point.
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Row activities a_i·x.
    pub fn activities(&self, x: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.coeffs.iter().map(|&(j, a)| a * x[j]).sum())
            .collect()
    }

    /// Largest bound or row violation of a point.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for j in 0..self.num_vars {
            worst = worst.max(self.lower[j] - x[j]).max(x[j] - self.upper[j]);
        }
        for (row, act) in self.rows.iter().zip(self.activities(x)) {
            let v = match row.relation {
                Relation::Le => act - row.rhs,
                Relation::Ge => row.rhs - act,
                Relation::Eq => (act - row.rhs).abs(),
            };
            worst = worst.max(v);
        }
        worst
    }
}

#[derive(Debug, Clone)]
pub struct MipModel {
    pub lp: LpModel,
    pub binaries: Vec<usize>,
    /// General integer variables; their bounds must be finite. Branched on before binaries.
    pub integers: Vec<usize>,
}

impl MipModel {
    pub fn new(lp: LpModel, binaries: Vec<usize>) -> Self {
        Self { lp, binaries, integers: Vec::new() }
    }

    pub fn with_integers(mut self, integers: Vec<usize>) -> Self {
        self.integers = integers;
        self
    }

    pub fn check(&self) -> Result<(), LpError> {
        self.lp.check()?;
        for &b in &self.binaries {
            if b >= self.lp.num_vars {
                return Err(LpError::InvalidModel(format!("binary index {b} out of range")));
            }
        }
        for &g in &self.integers {
            if g >= self.lp.num_vars {
                return Err(LpError::InvalidModel(format!("integer index {g} out of range")));
            }
            if !(self.lp.lower[g].is_finite() && self.lp.upper[g].is_finite()) {
                return Err(LpError::InvalidModel(format!("integer x{g} needs finite bounds")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    pub values: Vec<f64>,
    /// Row duals for the maximization: nonnegative on binding `<=` rows,
    /// nonpositive on binding `>=` rows.
    pub duals: Vec<f64>,
    /// c_j - a_j·y per variable.
    pub reduced_costs: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

impl LpSolution {
    pub(crate) fn empty(status: LpStatus, n: usize, m: usize, iterations: usize) -> Self {
        Self {
            status,
            values: vec![0.0; n],
            duals: vec![0.0; m],
            reduced_costs: vec![0.0; n],
            objective: 0.0,
            iterations,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    /// Dual objective b·y plus the bound terms carried by reduced costs.
    pub fn dual_objective(&self, model: &LpModel) -> f64 {
        let mut obj: f64 = model.rows.iter().zip(&self.duals).map(|(r, y)| r.rhs * y).sum();
        for j in 0..model.num_vars {
            let d = self.reduced_costs[j];
            if d > 0.0 {
                obj += d * finite_or(model.upper[j], self.values[j]);
            } else if d < 0.0 {
                obj += d * finite_or(model.lower[j], self.values[j]);
            }
        }
        obj
    }
}

fn finite_or(bound: f64, fallback: f64) -> f64 {
    if bound.is_finite() {
        bound
    } else {
        fallback
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MipStatus {
    Optimal,
    Infeasible,
    /// Node limit reached; the incumbent is feasible but optimality is unproven.
    NodeLimit,
}

#[derive(Debug, Clone)]
pub struct MipSolution {
    pub status: MipStatus,
    pub values: Vec<f64>,
    pub objective: f64,
    pub best_bound: f64,
    pub nodes: usize,
    /// Duals of the final LP with binaries fixed at their incumbent values.
    pub duals: Vec<f64>,
    pub reduced_costs: Vec<f64>,
}

impl MipSolution {
    pub fn gap(&self) -> f64 {
        (self.best_bound - self.objective).max(0.0)
    }
}
