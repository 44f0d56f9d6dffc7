//! Joint MILP over the selection and per-scenario commodity flows, without duals.

use vertiflow_lp::{LpModel, MipModel, MipStatus, Relation, Solver};

use super::*;

#[derive(Debug, Clone)]
pub struct DirectMilp {
    pub model: MipModel,
    /// Z[c,m] variable index at c * K_Z + m.
    pub z_vars: Vec<usize>,
    /// Scenario index and fulfilled-demand variables of each flow block.
    pub blocks: Vec<(usize, Vec<usize>)>,
    /// Probability-weighted throughput of disturbed scenarios left out of the model.
    pub folded: Vec<usize>,
}

/// Builds the direct formulation with a flow block for every disturbed scenario of positive probability.
pub fn build_direct_milp(spec: &DesignSpec) -> DirectMilp {
    let include: Vec<bool> = spec
        .scenarios
        .iter()
        .map(|s| s.element.is_some() && s.probability > 0.0)
        .collect();
    build(spec, &include)
}

/// Links a commodity may use on some simple path from its origin to its destination.
fn usable_links(sym: &SymNet, o: usize, d: usize) -> Vec<usize> {
    let n = sym.num_nodes;
    let allowed: Vec<bool> = sym.links.iter().map(|&(t, h)| h != o && t != d).collect();
    let reach = |start: usize, forward: bool| {
        let mut seen = vec![false; n];
        seen[start] = true;
        let mut stack = vec![start];
        while let Some(u) = stack.pop() {
            for (j, &(t, h)) in sym.links.iter().enumerate() {
                if !allowed[j] {
                    continue;
                }
                let (from, to) = if forward { (t, h) } else { (h, t) };
                if from == u && !seen[to] {
                    seen[to] = true;
                    stack.push(to);
                }
            }
        }
        seen
    };
    let from_o = reach(o, true);
    let to_d = reach(d, false);
    (0..sym.links.len())
        .filter(|&j| allowed[j] && from_o[sym.links[j].0] && to_d[sym.links[j].1])
        .collect()
}

pub(crate) fn build(spec: &DesignSpec, include: &[bool]) -> DirectMilp {
    let mut lp = LpModel::new();
    let z_vars = add_selection(spec, &mut lp);
    let mut blocks = Vec::new();
    let mut folded = Vec::new();
    for (s, sc) in spec.scenarios.iter().enumerate() {
        if sc.element.is_none() || sc.probability <= 0.0 {
            continue;
        }
        if !include[s] {
            folded.push(s);
            continue;
        }
        let sym = symbolic(spec, s);
        let p = sc.probability;
        let mut n_vars = Vec::new();
        let mut link_rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); sym.links.len()];
        let mut node_rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); sym.num_nodes];
        for (l, &(o, d)) in sym.demands.iter().enumerate() {
            let usable = usable_links(&sym, o, d);
            if usable.is_empty() {
                continue;
            }
            let n = lp.add_var(format!("s{s}.n[{l}]"), p, 0.0, spec.big_m);
            n_vars.push(n);
            let mut cons: Vec<Vec<(usize, f64)>> = vec![Vec::new(); sym.num_nodes];
            for &j in &usable {
                let x = lp.add_var(format!("s{s}.x[{j},{l}]"), 0.0, 0.0, f64::INFINITY);
                let (t, h) = sym.links[j];
                cons[t].push((x, -1.0));
                cons[h].push((x, 1.0));
                link_rows[j].push((x, 1.0));
                node_rows[t].push((x, 1.0));
                node_rows[h].push((x, 1.0));
            }
            cons[d].push((n, -1.0));
            cons[o].push((n, 1.0));
            for (i, row) in cons.into_iter().enumerate() {
                if !row.is_empty() {
                    lp.add_row(format!("s{s}.flow[{i},{l}]"), row, Relation::Eq, 0.0);
                }
            }
        }
        for (j, mut row) in link_rows.into_iter().enumerate() {
            if row.is_empty() {
                continue;
            }
            row.extend(z_terms(spec, &sym.link_z[j], &z_vars, -1.0));
            lp.add_row(format!("s{s}.linkcap[{j}]"), row, Relation::Le, sym.link_const[j]);
        }
        for (i, mut row) in node_rows.into_iter().enumerate() {
            if row.is_empty() {
                continue;
            }
            row.extend(z_terms(spec, &sym.node_z[i], &z_vars, -1.0));
            lp.add_row(format!("s{s}.nodecap[{i}]"), row, Relation::Le, sym.node_const[i]);
        }
        blocks.push((s, n_vars));
    }
    let ys = add_aggregates(spec, &mut lp, &z_vars, blocks.iter().map(|b| b.0));
    DirectMilp { model: MipModel::new(lp, z_vars.clone()).with_integers(ys), z_vars, blocks, folded }
}

pub(super) fn solve(spec: &DesignSpec, solver: &dyn Solver) -> Result<DesignResult, VfError> {
    // scenarios that no candidate can influence become constants
    let include: Vec<bool> = (0..spec.scenarios.len())
        .map(|s| spec.scenarios[s].element.is_some() && !spec.relevant_candidates(s).is_empty())
        .collect();
    let milp = build(spec, &include);
    let mut constant = undisturbed_constant(spec, solver)?;
    let fixed: Vec<f64> = milp
        .folded
        .par_iter()
        .map(|&s| {
            let net = FlowNetwork::from_scenario(&spec.network, &spec.demands, &spec.scenarios[s], spec.big_m);
            Ok(spec.scenarios[s].probability * solve_flow(&net, solver)?.throughput)
        })
        .collect::<Result<_, VfError>>()?;
    constant += fixed.iter().sum::<f64>();

    let out = run_milp(&milp.model, &milp.z_vars, spec, solver)?
        .ok_or_else(|| VfError::Internal("direct MILP reported infeasible".into()))?;
    let mut flags = Vec::new();
    for (s, n_vars) in &milp.blocks {
        for &n in n_vars {
            if out.solution.values[n] >= spec.big_m * (1.0 - 1e-6) {
                flags.push(format!("{}: fulfilled demand at M", spec.scenarios[*s].label()));
            }
        }
    }
    let stats = SolveStats {
        nodes: out.solution.nodes,
        variables: milp.model.lp.num_vars,
        rows: milp.model.lp.num_rows(),
        binaries: milp.z_vars.len(),
        lp_evaluations: milp.folded.len() + 1,
        proven_optimal: out.solution.status == MipStatus::Optimal,
        big_m: spec.big_m,
        big_m_lambda: spec.big_m_lambda,
        ..Default::default()
    };
    let mut res = finish(spec, Method::DirectMilp, out.levels, out.solution.objective + constant, stats, solver)?;
    res.big_m_flags = flags;
    Ok(res)
}
