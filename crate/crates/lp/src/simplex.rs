//! Bounded-variable primal simplex over a sparse LU basis factorization.
//!
//! Rows are written as `A x - r = 0` with one logical `r_i` per row carrying
//! the row's bounds, so the slack basis is always a valid starting point.
//! Infeasible starting bases are repaired by a composite phase one that
//! minimizes the sum of bound violations.

use crate::error::LpError;
use crate::factor::Factor;
use crate::model::{LpModel, LpSolution, LpStatus, Relation};

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub feasibility_tol: f64,
    pub optimality_tol: f64,
    pub pivot_tol: f64,
    /// Reduced-cost tolerance for pricing.
    pub dual_tol: f64,
    pub integrality_tol: f64,
    pub max_iterations: Option<usize>,
    pub refactor_every: usize,
    pub node_limit: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            feasibility_tol: 1e-7,
            optimality_tol: 1e-6,
            pivot_tol: 1e-9,
            dual_tol: 1e-9,
            integrality_tol: 1e-6,
            max_iterations: None,
            refactor_every: 100,
            node_limit: 500_000,
        }
    }
}

/// Structural data shared by every solve of the same model.
pub(crate) struct Problem {
    pub m: usize,
    pub n: usize,
    pub cols: Vec<Vec<(usize, f64)>>,
    /// Minimization costs over structurals and logicals.
    pub cost: Vec<f64>,
    pub lb: Vec<f64>,
    pub ub: Vec<f64>,
}

impl Problem {
    pub fn new(model: &LpModel) -> Problem {
        let n = model.num_vars;
        let m = model.rows.len();
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (i, row) in model.rows.iter().enumerate() {
            for &(j, a) in &row.coeffs {
                if a != 0.0 {
                    cols[j].push((i, a));
                }
            }
        }
        // merge duplicate entries
        for col in cols.iter_mut() {
            col.sort_by_key(|&(i, _)| i);
            let mut merged: Vec<(usize, f64)> = Vec::with_capacity(col.len());
            for &(i, a) in col.iter() {
                match merged.last_mut() {
                    Some(last) if last.0 == i => last.1 += a,
                    _ => merged.push((i, a)),
                }
            }
            merged.retain(|&(_, a)| a != 0.0);
            *col = merged;
        }
        let mut cost: Vec<f64> = model.objective.iter().map(|c| -c).collect();
        cost.resize(n + m, 0.0);
        let mut lb = model.lower.clone();
        let mut ub = model.upper.clone();
        for row in &model.rows {
            let (l, u) = match row.relation {
                Relation::Le => (f64::NEG_INFINITY, row.rhs),
                Relation::Ge => (row.rhs, f64::INFINITY),
                Relation::Eq => (row.rhs, row.rhs),
            };
            lb.push(l);
            ub.push(u);
        }
        Problem { m, n, cols, cost, lb, ub }
    }

    fn column(&self, j: usize) -> ColumnRef<'_> {
        if j < self.n {
            ColumnRef::Structural(&self.cols[j])
        } else {
            ColumnRef::Logical(j - self.n)
        }
    }
}

enum ColumnRef<'a> {
    Structural(&'a [(usize, f64)]),
    Logical(usize),
}

impl ColumnRef<'_> {
    fn scatter(&self, out: &mut [f64]) {
        match self {
            ColumnRef::Structural(c) => {
                for &(i, a) in c.iter() {
                    out[i] = a;
                }
            }
            ColumnRef::Logical(i) => out[*i] = -1.0,
        }
    }

    fn dot(&self, y: &[f64]) -> f64 {
        match self {
            ColumnRef::Structural(c) => c.iter().map(|&(i, a)| a * y[i]).sum(),
            ColumnRef::Logical(i) => -y[*i],
        }
    }
}

/// A simplex basis: basic variables per position and the bound side of nonbasics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Basis {
    pub basic: Vec<u32>,
    pub at_upper: Vec<bool>,
}

pub(crate) struct Simplex<'a> {
    prob: &'a Problem,
    cfg: &'a SolverConfig,
    pub lb: Vec<f64>,
    pub ub: Vec<f64>,
    x: Vec<f64>,
    basic: Vec<usize>,
    pos_of: Vec<usize>,
    at_upper: Vec<bool>,
    factor: Option<Factor>,
    pub iterations: usize,
}

const NOT_BASIC: usize = usize::MAX;

impl<'a> Simplex<'a> {
    pub fn new(prob: &'a Problem, cfg: &'a SolverConfig) -> Self {
        let total = prob.n + prob.m;
        Simplex {
            prob,
            cfg,
            lb: prob.lb.clone(),
            ub: prob.ub.clone(),
            x: vec![0.0; total],
            basic: Vec::new(),
            pos_of: vec![NOT_BASIC; total],
            at_upper: vec![false; total],
            factor: None,
            iterations: 0,
        }
    }

    pub fn basis(&self) -> Basis {
        Basis {
            basic: self.basic.iter().map(|&j| j as u32).collect(),
            at_upper: self.at_upper.clone(),
        }
    }

    fn place_nonbasic(&mut self, j: usize) {
        let (l, u) = (self.lb[j], self.ub[j]);
        self.x[j] = if self.at_upper[j] && u.is_finite() {
            u
        } else if l.is_finite() {
            self.at_upper[j] = false;
            l
        } else if u.is_finite() {
            self.at_upper[j] = true;
            u
        } else {
            0.0
        };
    }

    /// Installs `basis` (or the slack basis) and factorizes it.
    pub fn load(&mut self, basis: Option<&Basis>) -> Result<(), LpError> {
        let (n, m) = (self.prob.n, self.prob.m);
        self.pos_of.iter_mut().for_each(|p| *p = NOT_BASIC);
        match basis {
            Some(b) if b.basic.len() == m && b.at_upper.len() == n + m => {
                self.basic = b.basic.iter().map(|&j| j as usize).collect();
                self.at_upper = b.at_upper.clone();
            }
            _ => {
                self.basic = (n..n + m).collect();
                self.at_upper = vec![false; n + m];
            }
        }
        for (p, &j) in self.basic.iter().enumerate() {
            self.pos_of[j] = p;
        }
        for j in 0..n + m {
            if self.pos_of[j] == NOT_BASIC {
                self.place_nonbasic(j);
            }
        }
        self.refactor()
    }

    fn refactor(&mut self) -> Result<(), LpError> {
        let m = self.prob.m;
        for attempt in 0..3 {
            let cols: Vec<Vec<(usize, f64)>> = self
                .basic
                .iter()
                .map(|&j| match self.prob.column(j) {
                    ColumnRef::Structural(c) => c.to_vec(),
                    ColumnRef::Logical(i) => vec![(i, -1.0)],
                })
                .collect();
            match Factor::new(m, &cols) {
                Ok(f) => {
                    self.factor = Some(f);
                    self.recompute_basics();
                    return Ok(());
                }
                Err(sing) => {
                    if attempt == 2 {
                        break;
                    }
                    // swap dependent columns for logicals of uncovered rows
                    for (&p, &row) in sing.cols.iter().zip(&sing.rows) {
                        let old = self.basic[p];
                        self.pos_of[old] = NOT_BASIC;
                        self.place_nonbasic(old);
                        let logical = self.prob.n + row;
                        if self.pos_of[logical] != NOT_BASIC {
                            continue;
                        }
                        self.basic[p] = logical;
                        self.pos_of[logical] = p;
                    }
                }
            }
        }
        Err(LpError::Numerical("basis could not be repaired".into()))
    }

    fn recompute_basics(&mut self) {
        let mut rhs = vec![0.0; self.prob.m];
        for j in 0..self.prob.n + self.prob.m {
            if self.pos_of[j] != NOT_BASIC || self.x[j] == 0.0 {
                continue;
            }
            let xj = self.x[j];
            match self.prob.column(j) {
                ColumnRef::Structural(c) => {
                    for &(i, a) in c {
                        rhs[i] -= a * xj;
                    }
                }
                ColumnRef::Logical(i) => rhs[i] += xj,
            }
        }
        self.factor.as_ref().unwrap().ftran(&mut rhs);
        for (p, &j) in self.basic.iter().enumerate() {
            self.x[j] = rhs[p];
        }
    }

    /// Tightens or relaxes the bounds of a variable, keeping nonbasics on a bound.
    pub fn set_bounds(&mut self, j: usize, l: f64, u: f64) {
        self.lb[j] = l;
        self.ub[j] = u;
        if self.pos_of[j] == NOT_BASIC {
            self.place_nonbasic(j);
        }
    }

    fn infeasibility_costs(&self) -> (Vec<f64>, bool) {
        let tol = self.cfg.feasibility_tol;
        let mut any = false;
        let c = self
            .basic
            .iter()
            .map(|&j| {
                if self.x[j] < self.lb[j] - tol {
                    any = true;
                    -1.0
                } else if self.x[j] > self.ub[j] + tol {
                    any = true;
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        (c, any)
    }

    pub fn run(&mut self) -> Result<LpStatus, LpError> {
        let (n, m) = (self.prob.n, self.prob.m);
        let total = n + m;
        let limit = self.cfg.max_iterations.unwrap_or(50 * total + 10_000);
        let bland_after = 2 * total;
        let mut degenerate_streak = 0usize;
        let mut bland = false;
        let mut confirmations = 0;
        let ftol = self.cfg.feasibility_tol;
        let dtol = self.cfg.dual_tol;
        let mut col_buf = vec![0.0; m];
        let start = self.iterations;

        loop {
            if self.iterations - start >= limit {
                return Err(LpError::Stalled(self.iterations - start));
            }
            if self.factor.as_ref().map_or(true, |f| f.num_etas() >= self.cfg.refactor_every) {
                self.refactor()?;
            }
            let (phase1_costs, infeasible) = self.infeasibility_costs();
            let mut pi: Vec<f64> = if infeasible {
                phase1_costs
            } else {
                self.basic.iter().map(|&j| self.prob.cost[j]).collect()
            };
            self.factor.as_ref().unwrap().btran(&mut pi);

            // pricing
            let mut entering: Option<(usize, f64, f64)> = None;
            for j in 0..total {
                if self.pos_of[j] != NOT_BASIC {
                    continue;
                }
                let (l, u) = (self.lb[j], self.ub[j]);
                if l == u {
                    continue;
                }
                let cj = if infeasible { 0.0 } else { self.prob.cost[j] };
                let d = cj - self.prob.column(j).dot(&pi);
                let dir = if d < -dtol && self.x[j] < u {
                    1.0
                } else if d > dtol && self.x[j] > l {
                    -1.0
                } else {
                    continue;
                };
                if bland {
                    entering = Some((j, dir, d.abs()));
                    break;
                }
                if entering.map_or(true, |(_, _, best)| d.abs() > best) {
                    entering = Some((j, dir, d.abs()));
                }
            }

            let (q, dir) = match entering {
                Some((q, dir, _)) => (q, dir),
                None => {
                    // confirm on a fresh factorization before concluding
                    if confirmations < 2 && self.factor.as_ref().unwrap().num_etas() > 0 {
                        confirmations += 1;
                        self.refactor()?;
                        continue;
                    }
                    let (_, still) = self.infeasibility_costs();
                    return Ok(if still { LpStatus::Infeasible } else { LpStatus::Optimal });
                }
            };
            confirmations = 0;

            col_buf.iter_mut().for_each(|v| *v = 0.0);
            self.prob.column(q).scatter(&mut col_buf);
            let mut alpha = col_buf.clone();
            self.factor.as_ref().unwrap().ftran(&mut alpha);

            // ratio test (two-pass with tolerance relaxation)
            let mut t_relaxed = f64::INFINITY;
            let mut cands: Vec<(usize, f64, bool)> = Vec::new();
            for p in 0..m {
                let a = alpha[p];
                if a.abs() <= self.cfg.pivot_tol {
                    continue;
                }
                let rate = -dir * a;
                let j = self.basic[p];
                let (xj, l, u) = (self.x[j], self.lb[j], self.ub[j]);
                let below = xj < l - ftol;
                let above = xj > u + ftol;
                let (dist, to_upper) = if rate > 0.0 {
                    if below {
                        (l - xj, false)
                    } else if above || !u.is_finite() {
                        continue;
                    } else {
                        ((u - xj).max(0.0), true)
                    }
                } else if above {
                    (xj - u, true)
                } else if below || !l.is_finite() {
                    continue;
                } else {
                    ((xj - l).max(0.0), false)
                };
                let limit = dist / rate.abs();
                let relaxed = (dist + ftol) / rate.abs();
                t_relaxed = t_relaxed.min(relaxed);
                cands.push((p, limit, to_upper));
            }
            let flip = self.ub[q] - self.lb[q];

            let mut leave: Option<(usize, f64, bool)> = None;
            if bland {
                let tmin = cands.iter().fold(f64::INFINITY, |a, c| a.min(c.1));
                for &(p, limit, up) in &cands {
                    if limit <= tmin + 1e-12 {
                        let better = match leave {
                            None => true,
                            Some((bp, _, _)) => self.basic[p] < self.basic[bp],
                        };
                        if better {
                            leave = Some((p, limit, up));
                        }
                    }
                }
            } else {
                let mut best_abs = 0.0;
                for &(p, limit, up) in &cands {
                    if limit <= t_relaxed {
                        let a = alpha[p].abs();
                        if a > best_abs {
                            best_abs = a;
                            leave = Some((p, limit, up));
                        }
                    }
                }
            }

            let step = leave.map_or(f64::INFINITY, |(_, t, _)| t);
            if flip.is_finite() && flip <= step {
                // bound flip, basis unchanged
                let t = flip;
                for p in 0..m {
                    if alpha[p] != 0.0 {
                        let j = self.basic[p];
                        self.x[j] -= dir * t * alpha[p];
                    }
                }
                self.at_upper[q] = dir > 0.0;
                self.x[q] = if dir > 0.0 { self.ub[q] } else { self.lb[q] };
                self.iterations += 1;
                degenerate_streak = 0;
                bland = false;
                continue;
            }
            let (r, t, to_upper) = match leave {
                Some(l) => l,
                None => {
                    if infeasible {
                        return Err(LpError::Numerical("phase one ray without blocking variable".into()));
                    }
                    return Ok(LpStatus::Unbounded);
                }
            };

            for p in 0..m {
                if alpha[p] != 0.0 {
                    let j = self.basic[p];
                    self.x[j] -= dir * t * alpha[p];
                }
            }
            self.x[q] += dir * t;
            let leaving = self.basic[r];
            self.x[leaving] = if to_upper { self.ub[leaving] } else { self.lb[leaving] };
            self.at_upper[leaving] = to_upper;
            self.pos_of[leaving] = NOT_BASIC;
            self.basic[r] = q;
            self.pos_of[q] = r;
            self.factor.as_mut().unwrap().update(r, &alpha);
            self.iterations += 1;

            if t <= 1e-12 {
                degenerate_streak += 1;
                if degenerate_streak > bland_after {
                    bland = true;
                }
            } else {
                degenerate_streak = 0;
                bland = false;
            }
        }
    }

    /// Extracts the maximization-convention solution at the current basis.
    pub fn solution(&mut self, model: &LpModel, status: LpStatus) -> Result<LpSolution, LpError> {
        let (n, m) = (self.prob.n, self.prob.m);
        if status != LpStatus::Optimal {
            return Ok(LpSolution::empty(status, n, m, self.iterations));
        }
        if self.factor.as_ref().map_or(true, |f| f.num_etas() > 0) {
            self.refactor()?;
        }
        let mut pi: Vec<f64> = self.basic.iter().map(|&j| self.prob.cost[j]).collect();
        self.factor.as_ref().unwrap().btran(&mut pi);
        let values: Vec<f64> = self.x[..n].to_vec();
        let duals: Vec<f64> = pi.iter().map(|v| -v).collect();
        let reduced_costs: Vec<f64> = (0..n)
            .map(|j| {
                if self.pos_of[j] != NOT_BASIC {
                    0.0
                } else {
                    -(self.prob.cost[j] - self.prob.column(j).dot(&pi))
                }
            })
            .collect();
        let objective = model.evaluate(&values);
        Ok(LpSolution { status, values, duals, reduced_costs, objective, iterations: self.iterations })
    }

    /// Maximization-sense reduced costs of `cols` at the current basis, zero for basic columns.
    pub fn reduced_costs(&self, cols: &[usize]) -> Vec<f64> {
        let mut pi: Vec<f64> = self.basic.iter().map(|&j| self.prob.cost[j]).collect();
        self.factor.as_ref().unwrap().btran(&mut pi);
        cols.iter()
            .map(|&j| {
                if self.pos_of[j] != NOT_BASIC {
                    0.0
                } else {
                    -(self.prob.cost[j] - self.prob.column(j).dot(&pi))
                }
            })
            .collect()
    }

    pub fn bounds(&self, j: usize) -> (f64, f64) {
        (self.lb[j], self.ub[j])
    }

    pub fn is_basic(&self, j: usize) -> bool {
        self.pos_of[j] != NOT_BASIC
    }

    pub fn values(&self) -> &[f64] {
        &self.x[..self.prob.n]
    }

    pub fn objective(&self) -> f64 {
        -(0..self.prob.n).map(|j| self.prob.cost[j] * self.x[j]).sum::<f64>()
    }
}

/// Solves a maximization LP from the slack basis.
pub fn solve_lp(model: &LpModel, cfg: &SolverConfig) -> Result<LpSolution, LpError> {
    model.check()?;
    let prob = Problem::new(model);
    let mut s = Simplex::new(&prob, cfg);
    s.load(None)?;
    let status = s.run()?;
    s.solution(model, status)
}
