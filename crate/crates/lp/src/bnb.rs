//! Branch and bound over binary and general integer variables: a depth-first dive to a first
//! incumbent, then best-first.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::rc::Rc;

use crate::error::LpError;
use crate::model::{LpStatus, MipModel, MipSolution, MipStatus};
use crate::simplex::{Basis, Problem, Simplex, SolverConfig};

const IMPROVE_TOL: f64 = 1e-9;

/// Bound change (variable, lower, upper) applied on top of the root bounds.
type Change = (u32, f64, f64);

struct Node {
    id: usize,
    bound: f64,
    changes: Vec<Change>,
    basis: Option<Rc<Basis>>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        // max-heap: larger bound first, then earlier creation
        self.bound
            .total_cmp(&other.bound)
            .then_with(|| other.id.cmp(&self.id))
    }
}

struct Incumbent {
    values: Vec<f64>,
    objective: f64,
    basis: Basis,
}

/// Most fractional variable of `vars`, lowest index on ties.
fn most_fractional(vars: &[usize], x: &[f64], tol: f64) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for &v in vars {
        let f = x[v] - x[v].floor();
        if f.min(1.0 - f) <= tol {
            continue;
        }
        let score = 0.5 - (f - 0.5).abs();
        if best.map_or(true, |(bv, bs)| score > bs || (score == bs && v < bv)) {
            best = Some((v, score));
        }
    }
    best.map(|b| b.0)
}

pub fn solve_mip(model: &MipModel, cfg: &SolverConfig) -> Result<MipSolution, LpError> {
    model.check()?;
    let mut lp = model.lp.clone();
    for &b in &model.binaries {
        lp.lower[b] = lp.lower[b].max(0.0);
        lp.upper[b] = lp.upper[b].min(1.0);
    }
    for &g in &model.integers {
        lp.lower[g] = lp.lower[g].ceil();
        lp.upper[g] = lp.upper[g].floor();
    }
    let discrete: Vec<usize> = model.binaries.iter().chain(&model.integers).copied().collect();
    if discrete.iter().any(|&v| lp.lower[v] > lp.upper[v]) {
        return Ok(infeasible(model, 0));
    }
    let prob = Problem::new(&lp);
    let mut s = Simplex::new(&prob, cfg);
    let root_bounds: Vec<(f64, f64)> = discrete.iter().map(|&v| (lp.lower[v], lp.upper[v])).collect();

    let mut heap = BinaryHeap::new();
    // depth-first plunge toward the nearer child until a first incumbent exists
    let mut dive: Vec<Node> = vec![Node { id: 0, bound: f64::INFINITY, changes: Vec::new(), basis: None }];
    let mut next_id = 1;
    let mut nodes = 0usize;
    let mut incumbent: Option<Incumbent> = None;
    let mut hit_limit = false;

    while let Some(node) = dive.pop().or_else(|| heap.pop()) {
        if let Some(inc) = &incumbent {
            if node.bound <= inc.objective + IMPROVE_TOL {
                continue;
            }
        }
        if nodes >= cfg.node_limit {
            heap.push(node);
            hit_limit = true;
            heap.extend(dive.drain(..));
            break;
        }
        nodes += 1;

        for (k, &v) in discrete.iter().enumerate() {
            let (l, u) = root_bounds[k];
            s.set_bounds(v, l, u);
        }
        for &(v, l, u) in &node.changes {
            s.set_bounds(v as usize, l, u);
        }
        s.load(node.basis.as_deref())?;
        match s.run()? {
            LpStatus::Infeasible => continue,
            LpStatus::Unbounded => return Err(LpError::UnboundedRelaxation),
            LpStatus::Optimal => {}
        }
        let obj = s.objective();
        if let Some(inc) = &incumbent {
            if obj <= inc.objective + IMPROVE_TOL {
                continue;
            }
        }

        // reduced-cost fixing: a binary whose move to the other bound cannot beat the incumbent stays put
        let mut changes = node.changes.clone();
        if let Some(inc) = &incumbent {
            let rc = s.reduced_costs(&model.binaries);
            let x = s.values();
            for (k, &b) in model.binaries.iter().enumerate() {
                if s.is_basic(b) || changes.iter().any(|c| c.0 as usize == b && c.1 == c.2) {
                    continue;
                }
                if x[b] < 0.5 && obj + rc[k] <= inc.objective + IMPROVE_TOL {
                    changes.push((b as u32, 0.0, 0.0));
                } else if x[b] >= 0.5 && obj - rc[k] <= inc.objective + IMPROVE_TOL {
                    changes.push((b as u32, 1.0, 1.0));
                }
            }
        }

        let x = s.values();
        let tol = cfg.integrality_tol;
        let branch = most_fractional(&model.integers, x, tol).or_else(|| most_fractional(&model.binaries, x, tol));
        match branch {
            None => {
                let mut values = x.to_vec();
                for &v in &discrete {
                    values[v] = values[v].round();
                }
                incumbent = Some(Incumbent { values, objective: obj, basis: s.basis() });
            }
            Some(v) => {
                let basis = Rc::new(s.basis());
                let (lo, hi) = s.bounds(v);
                let down = (v as u32, lo, x[v].floor());
                let up = (v as u32, x[v].ceil(), hi);
                let up_first = x[v] - x[v].floor() >= 0.5;
                let (later, first) = if up_first { (down, up) } else { (up, down) };
                for (change, preferred) in [(later, false), (first, true)] {
                    let mut c = changes.clone();
                    c.push(change);
                    let child = Node { id: next_id, bound: obj, changes: c, basis: Some(basis.clone()) };
                    next_id += 1;
                    if incumbent.is_none() && preferred {
                        dive.push(child);
                    } else {
                        heap.push(child);
                    }
                }
            }
        }
    }

    let inc = match incumbent {
        Some(i) => i,
        None if hit_limit => return Err(LpError::NodeLimit(nodes)),
        None => return Ok(infeasible(model, nodes)),
    };

    // polish: resolve the continuous part with the discrete variables fixed
    for &v in &discrete {
        let val = inc.values[v];
        s.set_bounds(v, val, val);
    }
    s.load(Some(&inc.basis))?;
    let status = s.run()?;
    let sol = s.solution(&lp, status)?;
    if status != LpStatus::Optimal {
        return Err(LpError::Numerical("incumbent lost feasibility while polishing".into()));
    }
    let mut values = sol.values;
    for &v in &discrete {
        values[v] = inc.values[v];
    }
    let objective = model.lp.evaluate(&values);
    let best_bound = if hit_limit {
        heap.iter().fold(objective, |a, n| a.max(n.bound))
    } else {
        objective
    };
    Ok(MipSolution {
        status: if hit_limit { MipStatus::NodeLimit } else { MipStatus::Optimal },
        values,
        objective,
        best_bound,
        nodes,
        duals: sol.duals,
        reduced_costs: sol.reduced_costs,
    })
}

fn infeasible(model: &MipModel, nodes: usize) -> MipSolution {
    let n = model.lp.num_vars;
    MipSolution {
        status: MipStatus::Infeasible,
        values: vec![0.0; n],
        objective: f64::NEG_INFINITY,
        best_bound: f64::NEG_INFINITY,
        nodes,
        duals: vec![0.0; model.lp.rows.len()],
        reduced_costs: vec![0.0; n],
    }
}
