//! Single-level MILP that embeds each scenario's lower-level optimality through
//! primal feasibility, dual feasibility and a linearized zero duality gap.

use vertiflow_lp::{LpModel, LpStatus, MipModel, MipStatus, Relation, Solver};

use super::*;

/// Linearized products of one group of dual multipliers with the selection.
#[derive(Debug, Clone)]
pub struct LambdaGroup {
    /// Λ'[c,m] variable at c * K_Z + m.
    pub prime: Vec<usize>,
    /// Λ[c,m] as a linear expression in the dual variables (empty when identically zero).
    pub expr: Vec<Vec<(usize, f64)>>,
}

#[derive(Debug, Clone)]
pub struct DualBlock {
    pub scenario: usize,
    pub num_nodes: usize,
    pub num_links: usize,
    pub d1: Vec<usize>,
    pub d2: Vec<usize>,
    pub h1: Vec<usize>,
    pub h2: Vec<usize>,
    pub u3: Vec<usize>,
    pub u4: Vec<usize>,
    /// link group (link scenarios only) then node group
    pub lambdas: Vec<LambdaGroup>,
    pub gap_row: usize,
    sym: SymNet,
}

#[derive(Debug, Clone)]
pub struct DualMilp {
    pub model: MipModel,
    pub z_vars: Vec<usize>,
    pub blocks: Vec<DualBlock>,
}

pub fn build_dual_milp(spec: &DesignSpec) -> DualMilp {
    let mut lp = LpModel::new();
    let z_vars = add_selection(spec, &mut lp);
    let mut blocks = Vec::new();
    for (s, sc) in spec.scenarios.iter().enumerate() {
        if sc.element.is_none() || sc.probability <= 0.0 {
            continue;
        }
        blocks.push(add_block(spec, &mut lp, &z_vars, s));
    }
    let ys = add_aggregates(spec, &mut lp, &z_vars, blocks.iter().map(|b| b.scenario));
    DualMilp { model: MipModel::new(lp, z_vars.clone()).with_integers(ys), z_vars, blocks }
}

fn add_block(spec: &DesignSpec, lp: &mut LpModel, z_vars: &[usize], s: usize) -> DualBlock {
    let sym = symbolic(spec, s);
    let p = spec.scenarios[s].probability;
    let m_big = spec.big_m;
    let (nv, nl, ns) = (sym.num_nodes, sym.links.len(), sym.demands.len());
    let inf = f64::INFINITY;
    let idx = |i: usize, l: usize| i * ns + l;

    // primal
    let mut x = Vec::with_capacity(nl * ns);
    for j in 0..nl {
        for l in 0..ns {
            x.push(lp.add_var(format!("s{s}.X[{j},{l}]"), 0.0, 0.0, inf));
        }
    }
    let mut d1 = Vec::with_capacity(nv * ns);
    let mut d2 = Vec::with_capacity(nv * ns);
    for i in 0..nv {
        for l in 0..ns {
            let up = if sym.demands[l].1 == i { m_big } else { 0.0 };
            d1.push(lp.add_var(format!("s{s}.D1[{i},{l}]"), p, 0.0, up));
        }
    }
    for i in 0..nv {
        for l in 0..ns {
            let lo = if sym.demands[l].0 == i { -m_big } else { 0.0 };
            d2.push(lp.add_var(format!("s{s}.D2[{i},{l}]"), 0.0, lo, 0.0));
        }
    }
    for i in 0..nv {
        for l in 0..ns {
            let mut row = Vec::new();
            for (j, &(t, h)) in sym.links.iter().enumerate() {
                if t == i {
                    row.push((x[idx(j, l)], -1.0));
                } else if h == i {
                    row.push((x[idx(j, l)], 1.0));
                }
            }
            row.push((d1[idx(i, l)], -1.0));
            row.push((d2[idx(i, l)], -1.0));
            lp.add_row(format!("s{s}.flow[{i},{l}]"), row, Relation::Eq, 0.0);
        }
    }
    for j in 0..nl {
        let mut row: Vec<(usize, f64)> = (0..ns).map(|l| (x[idx(j, l)], 1.0)).collect();
        row.extend(z_terms(spec, &sym.link_z[j], z_vars, -1.0));
        lp.add_row(format!("s{s}.linkcap[{j}]"), row, Relation::Le, sym.link_const[j]);
    }
    let incident = sym.incident();
    for i in 0..nv {
        let mut row: Vec<(usize, f64)> = Vec::new();
        for &j in &incident[i] {
            row.extend((0..ns).map(|l| (x[idx(j, l)], 1.0)));
        }
        row.extend(z_terms(spec, &sym.node_z[i], z_vars, -1.0));
        lp.add_row(format!("s{s}.nodecap[{i}]"), row, Relation::Le, sym.node_const[i]);
    }
    for l in 0..ns {
        let mut row: Vec<(usize, f64)> = (0..nv).map(|i| (d1[idx(i, l)], 1.0)).collect();
        row.extend((0..nv).map(|i| (d2[idx(i, l)], 1.0)));
        lp.add_row(format!("s{s}.balance[{l}]"), row, Relation::Eq, 0.0);
    }

    // dual
    let mut u1 = Vec::new();
    for i in 0..nv {
        for l in 0..ns {
            u1.push(lp.add_var(format!("s{s}.U1[{i},{l}]"), 0.0, -inf, inf));
        }
    }
    let mut u2 = Vec::new();
    for j in 0..nl {
        for l in 0..ns {
            u2.push(lp.add_var(format!("s{s}.U2[{j},{l}]"), 0.0, 0.0, inf));
        }
    }
    let nonneg = |name: &str, lp: &mut LpModel| -> Vec<usize> {
        let mut v = Vec::new();
        for i in 0..nv {
            for l in 0..ns {
                v.push(lp.add_var(format!("s{s}.{name}[{i},{l}]"), 0.0, 0.0, inf));
            }
        }
        v
    };
    let u3 = nonneg("U3", lp);
    let u4 = nonneg("U4", lp);
    let u5 = nonneg("U5", lp);
    let u6 = nonneg("U6", lp);
    let h1: Vec<usize> = (0..nl).map(|j| lp.add_var(format!("s{s}.h1[{j}]"), 0.0, 0.0, inf)).collect();
    let h2: Vec<usize> = (0..nv).map(|i| lp.add_var(format!("s{s}.h2[{i}]"), 0.0, 0.0, inf)).collect();
    let h3: Vec<usize> = (0..ns).map(|l| lp.add_var(format!("s{s}.h3[{l}]"), 0.0, -inf, inf)).collect();

    for (j, &(t, h)) in sym.links.iter().enumerate() {
        for l in 0..ns {
            let row = vec![
                (u1[idx(h, l)], 1.0),
                (u1[idx(t, l)], -1.0),
                (u2[idx(j, l)], -1.0),
                (h1[j], 1.0),
                (h2[t], 1.0),
                (h2[h], 1.0),
            ];
            lp.add_row(format!("s{s}.dx[{j},{l}]"), row, Relation::Eq, 0.0);
        }
    }
    for i in 0..nv {
        for l in 0..ns {
            let row = vec![(h3[l], 1.0), (u1[idx(i, l)], -1.0), (u3[idx(i, l)], 1.0), (u5[idx(i, l)], -1.0)];
            lp.add_row(format!("s{s}.dd1[{i},{l}]"), row, Relation::Eq, 1.0);
            let row = vec![(h3[l], 1.0), (u1[idx(i, l)], -1.0), (u4[idx(i, l)], -1.0), (u6[idx(i, l)], 1.0)];
            lp.add_row(format!("s{s}.dd2[{i},{l}]"), row, Relation::Eq, 0.0);
        }
    }

    // Λ groups
    let k = spec.num_levels();
    let nb = spec.num_candidates();
    let is_link = matches!(spec.scenarios[s].element, Some(Element::Link(_)));
    let mut lambdas = Vec::new();
    let mut groups: Vec<(&str, Vec<(usize, &Vec<(usize, f64)>)>)> = Vec::new();
    if is_link {
        groups.push(("L1", h1.iter().copied().zip(&sym.link_z).collect()));
        groups.push(("L2", h2.iter().copied().zip(&sym.node_z).collect()));
    } else {
        groups.push(("L3", h2.iter().copied().zip(&sym.node_z).collect()));
    }
    let ml = spec.big_m_lambda;
    for (name, terms) in groups {
        let mut expr = vec![Vec::new(); nb * k];
        for (hv, zt) in terms {
            for &(c, mult) in zt {
                for m in 0..k {
                    let cap = spec.candidates.capacities[(c, m)];
                    if cap != 0.0 && mult != 0.0 {
                        expr[c * k + m].push((hv, mult * cap));
                    }
                }
            }
        }
        let mut prime = Vec::with_capacity(nb * k);
        for c in 0..nb {
            for m in 0..k {
                let e = &expr[c * k + m];
                let up = if e.is_empty() { 0.0 } else { inf };
                let v = lp.add_var(format!("s{s}.{name}'[{c},{m}]"), 0.0, 0.0, up);
                prime.push(v);
                if e.is_empty() {
                    continue;
                }
                let zv = z_vars[c * k + m];
                lp.add_row(format!("s{s}.{name}a[{c},{m}]"), vec![(v, 1.0), (zv, -ml)], Relation::Le, 0.0);
                let mut row = e.clone();
                row.push((v, -1.0));
                lp.add_row(format!("s{s}.{name}b[{c},{m}]"), row.clone(), Relation::Ge, 0.0);
                row.push((zv, ml));
                lp.add_row(format!("s{s}.{name}c[{c},{m}]"), row, Relation::Le, ml);
            }
        }
        lambdas.push(LambdaGroup { prime, expr });
    }

    // zero gap
    let mut row: Vec<(usize, f64)> = d1.iter().map(|&v| (v, 1.0)).collect();
    for j in 0..nl {
        if sym.link_const[j] != 0.0 {
            row.push((h1[j], -sym.link_const[j]));
        }
    }
    for i in 0..nv {
        if sym.node_const[i] != 0.0 {
            row.push((h2[i], -sym.node_const[i]));
        }
    }
    for (l, &(o, d)) in sym.demands.iter().enumerate() {
        row.push((u3[idx(d, l)], -m_big));
        row.push((u4[idx(o, l)], -m_big));
    }
    for g in &lambdas {
        for (e, &v) in g.expr.iter().zip(&g.prime) {
            if !e.is_empty() {
                row.push((v, -1.0));
            }
        }
    }
    let gap_row = lp.num_rows();
    lp.add_row(format!("s{s}.gap"), row, Relation::Eq, 0.0);

    DualBlock { scenario: s, num_nodes: nv, num_links: nl, d1, d2, h1, h2, u3, u4, lambdas, gap_row, sym }
}

impl DualBlock {
    /// |primal objective - dual objective| with the bilinear terms evaluated exactly at `z`.
    pub fn gap_residual(&self, spec: &DesignSpec, values: &[f64], caps: &[f64]) -> f64 {
        let primal: f64 = self.d1.iter().map(|&v| values[v]).sum();
        let cap_of = |c0: f64, terms: &[(usize, f64)]| c0 + terms.iter().map(|&(c, mult)| mult * caps[c]).sum::<f64>();
        let mut dual = 0.0;
        for j in 0..self.num_links {
            dual += values[self.h1[j]] * cap_of(self.sym.link_const[j], &self.sym.link_z[j]);
        }
        for i in 0..self.num_nodes {
            dual += values[self.h2[i]] * cap_of(self.sym.node_const[i], &self.sym.node_z[i]);
        }
        let ns = self.sym.demands.len();
        for (l, &(o, d)) in self.sym.demands.iter().enumerate() {
            dual += spec.big_m * (values[self.u3[d * ns + l]] + values[self.u4[o * ns + l]]);
        }
        (primal - dual).abs()
    }

    /// Entries within 1e-6 relative of a big-M bound.
    fn binding(&self, spec: &DesignSpec, values: &[f64]) -> Vec<String> {
        let label = spec.scenarios[self.scenario].label();
        let mut out = Vec::new();
        let ns = self.sym.demands.len();
        let near = |v: f64, m: f64| v >= m * (1.0 - 1e-6);
        for (l, &(o, d)) in self.sym.demands.iter().enumerate() {
            if near(values[self.d1[d * ns + l]], spec.big_m) {
                out.push(format!("{label}: D1[{d},{l}] at M"));
            }
            if near(-values[self.d2[o * ns + l]], spec.big_m) {
                out.push(format!("{label}: -D2[{o},{l}] at M"));
            }
        }
        for (g, group) in self.lambdas.iter().enumerate() {
            for (i, e) in group.expr.iter().enumerate() {
                let val: f64 = e.iter().map(|&(v, a)| a * values[v]).sum();
                if !e.is_empty() && near(val, spec.big_m_lambda) {
                    out.push(format!("{label}: Lambda group {g} entry {i} at M_Lambda"));
                }
            }
        }
        out
    }
}

pub(crate) struct DualOutcome {
    pub levels: Vec<usize>,
    pub objective: f64,
    pub flags: Vec<String>,
    pub gaps: Vec<f64>,
    pub nodes: usize,
    pub optimal: bool,
    pub variables: usize,
    pub rows: usize,
}

/// One solve at the current big-M values of `spec`; `None` when the MILP is infeasible.
pub(crate) fn solve_once(spec: &DesignSpec, solver: &dyn Solver) -> Result<Option<DualOutcome>, VfError> {
    let milp = build_dual_milp(spec);
    let Some(out) = run_milp(&milp.model, &milp.z_vars, spec, solver)? else {
        return Ok(None);
    };
    let values = &out.solution.values;
    let z = selection_matrix(&out.levels, spec.num_levels());
    let caps = capacity_from_selection(&z, &spec.candidates)?;
    let mut gaps = Vec::new();
    for b in &milp.blocks {
        gaps.push(b.gap_residual(spec, values, &caps));
    }
    let mut flags: Vec<String> = milp.blocks.iter().flat_map(|b| b.binding(spec, values)).collect();
    if !flags.is_empty() {
        if let Some(small) = smallest_duals(&milp, values, solver)? {
            flags = milp.blocks.iter().flat_map(|b| b.binding(spec, &small)).collect();
        }
    }
    Ok(Some(DualOutcome {
        levels: out.levels,
        objective: out.solution.objective + undisturbed_constant(spec, solver)?,
        flags,
        gaps,
        nodes: out.solution.nodes,
        optimal: out.solution.status == MipStatus::Optimal,
        variables: milp.model.lp.num_vars,
        rows: milp.model.lp.num_rows(),
    }))
}

/// Capacity duals of a zero-capacity row can grow without bound at no cost, so a vertex solution
/// may park them on M_Λ. Re-solves with the selection fixed and the objective held at its optimum,
/// minimizing the capacity duals, so only bounds that every optimal dual reaches get flagged.
fn smallest_duals(milp: &DualMilp, values: &[f64], solver: &dyn Solver) -> Result<Option<Vec<f64>>, VfError> {
    let mut lp = milp.model.lp.clone();
    for &v in milp.model.binaries.iter().chain(&milp.model.integers) {
        let x = values[v].round();
        lp.lower[v] = x;
        lp.upper[v] = x;
    }
    let objective: Vec<(usize, f64)> =
        lp.objective.iter().enumerate().filter(|c| *c.1 != 0.0).map(|(j, &c)| (j, c)).collect();
    let best: f64 = objective.iter().map(|&(j, c)| c * values[j]).sum();
    lp.add_row("optimum", objective, Relation::Ge, best - 1e-9 * best.abs().max(1.0));
    lp.objective.iter_mut().for_each(|c| *c = 0.0);
    for b in &milp.blocks {
        for &h in b.h1.iter().chain(&b.h2) {
            lp.objective[h] = -1.0;
        }
    }
    let sol = solver.solve_lp(&lp)?;
    Ok((sol.status == LpStatus::Optimal).then_some(sol.values))
}

pub(crate) const MAX_DOUBLINGS: usize = 3;

pub(super) fn solve_with_retries(spec: &DesignSpec, solver: &dyn Solver) -> Result<DesignResult, VfError> {
    let mut cur = spec.clone();
    let mut doublings = 0;
    loop {
        let outcome = solve_once(&cur, solver)?;
        let clean = matches!(&outcome, Some(o) if o.flags.is_empty());
        if clean || doublings == MAX_DOUBLINGS {
            let Some(o) = outcome else {
                return Err(VfError::BigMSuspect(doublings));
            };
            let stats = SolveStats {
                nodes: o.nodes,
                variables: o.variables,
                rows: o.rows,
                binaries: cur.num_candidates() * cur.num_levels(),
                lp_evaluations: 1,
                proven_optimal: o.optimal,
                big_m: cur.big_m,
                big_m_lambda: cur.big_m_lambda,
                big_m_doublings: doublings,
                ..Default::default()
            };
            let mut res = finish(&cur, Method::DualMilp, o.levels, o.objective, stats, solver)?;
            res.big_m_suspect = !o.flags.is_empty();
            res.big_m_flags = o.flags;
            res.gap_residuals = o.gaps;
            return Ok(res);
        }
        cur.big_m *= 2.0;
        cur.big_m_lambda *= 2.0;
        doublings += 1;
    }
}
