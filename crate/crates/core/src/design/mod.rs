//! Backup vertiport selection.

mod bigm;
mod brute;
mod direct;
mod dual;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use nalgebra::DMatrix;
use rayon::prelude::*;
use vertiflow_lp::{MipModel, MipSolution, MipStatus, Solver};

use crate::error::VfError;
use crate::extension::{build_backup_topology, extend_scenario, BackupPolicy, BackupTopology, CandidateSet};
use crate::network::{enumerate_scenarios, validate_demands, validate_network, DemandSet, Element, Issue, RiskNetwork, Scenario};
use crate::throughput::{extended_throughput, solve_flow, FlowNetwork};

pub use bigm::{validate_big_m, BigMReport};
pub use brute::DEFAULT_BRUTE_FORCE_CAP;
pub use direct::{build_direct_milp, DirectMilp};
pub use dual::{build_dual_milp, DualBlock, DualMilp, LambdaGroup};

/// Everything needed to solve one design problem.
#[derive(Debug, Clone)]
pub struct DesignSpec {
    pub network: RiskNetwork,
    pub demands: DemandSet,
    pub candidates: CandidateSet,
    pub policy: BackupPolicy,
    pub topology: BackupTopology,
    pub scenarios: Vec<Scenario>,
    pub budget: f64,
    pub w: f64,
    pub big_m: f64,
    pub big_m_lambda: f64,
    pub brute_force_cap: u64,
}

impl DesignSpec {
    pub fn new(
        network: RiskNetwork,
        demands: DemandSet,
        candidates: CandidateSet,
        policy: BackupPolicy,
        budget: f64,
        w: f64,
    ) -> Result<Self, VfError> {
        let mut issues = validate_network(&network);
        issues.extend(validate_demands(&network, &demands));
        issues.extend(candidates.validate().into_iter().map(Issue::Candidate));
        issues.extend(policy.validate().into_iter().map(Issue::Policy));
        if !(budget >= 0.0 && budget.is_finite()) {
            issues.push(Issue::Candidate(format!("budget {budget} must be finite and nonnegative")));
        }
        if !(w > 0.0 && w.is_finite()) {
            issues.push(Issue::Candidate(format!("valuation w = {w} must be positive")));
        }
        if !issues.is_empty() {
            return Err(VfError::Validation(issues));
        }
        let topology = build_backup_topology(&network, &candidates, &policy)?;
        let scenarios = enumerate_scenarios(&network)?;
        let big_m = network.default_big_m();
        let big_m_lambda = (demands.len() + 1) as f64 * candidates.max_capacity().max(1.0);
        Ok(DesignSpec {
            network,
            demands,
            candidates,
            policy,
            topology,
            scenarios,
            budget,
            w,
            big_m,
            big_m_lambda,
            brute_force_cap: DEFAULT_BRUTE_FORCE_CAP,
        })
    }

    pub fn num_candidates(&self) -> usize {
        self.candidates.len()
    }

    pub fn num_levels(&self) -> usize {
        self.candidates.num_levels()
    }

    pub fn integer_costs(&self) -> bool {
        self.candidates.costs.iter().all(|f| f.fract() == 0.0)
    }

    /// Right-hand side of the budget row: floored for integer costs, 1e-9 slack otherwise.
    pub fn budget_rhs(&self) -> f64 {
        if self.integer_costs() {
            (self.budget + 1e-9).floor()
        } else {
            self.budget + 1e-9
        }
    }

    pub fn within_budget(&self, cost: f64) -> bool {
        cost <= self.budget_rhs()
    }

    /// Candidates whose capacity can change the throughput of scenario `s`.
    pub fn relevant_candidates(&self, s: usize) -> Vec<usize> {
        match self.scenarios[s].element {
            None => Vec::new(),
            Some(Element::Link(e)) => self.topology.detours[e].clone(),
            Some(Element::Node(v)) => (0..self.num_candidates())
                .filter(|&c| self.topology.adjacency[(v, c)] != 0.0)
                .collect(),
        }
    }

    /// Probability mass of the undisturbed scenario, always `scenarios[0]`.
    pub fn undisturbed_probability(&self) -> f64 {
        self.scenarios[0].probability
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    DualMilp,
    DirectMilp,
    BruteForce,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::DualMilp => "dual-milp",
            Method::DirectMilp => "direct-milp",
            Method::BruteForce => "brute-force",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dual-milp" => Ok(Method::DualMilp),
            "direct-milp" => Ok(Method::DirectMilp),
            "brute-force" => Ok(Method::BruteForce),
            _ => Err(format!("unknown method {s:?}; expected dual-milp, direct-milp or brute-force")),
        }
    }
}

/// One-hot selection matrix from per-candidate level indices.
pub fn selection_matrix(levels: &[usize], num_levels: usize) -> DMatrix<f64> {
    let mut z = DMatrix::zeros(levels.len(), num_levels);
    for (c, &m) in levels.iter().enumerate() {
        z[(c, m)] = 1.0;
    }
    z
}

pub fn levels_from_matrix(z: &DMatrix<f64>) -> Result<Vec<usize>, VfError> {
    (0..z.nrows())
        .map(|c| {
            let row = z.row(c);
            if row.iter().any(|&v| v != 0.0 && v != 1.0) {
                return Err(VfError::Selection(format!("row {c} of Z is not binary")));
            }
            let ones: Vec<usize> = (0..row.len()).filter(|&m| row[m] == 1.0).collect();
            match ones.as_slice() {
                [m] => Ok(*m),
                _ => Err(VfError::Selection(format!("row {c} of Z sums to {}, expected 1", ones.len()))),
            }
        })
        .collect()
}

fn check_shape(z: &DMatrix<f64>, candidates: &CandidateSet) -> Result<(), VfError> {
    if z.shape() != candidates.capacities.shape() {
        return Err(VfError::Selection(format!(
            "Z is {}x{}, expected {}x{}",
            z.nrows(),
            z.ncols(),
            candidates.len(),
            candidates.num_levels()
        )));
    }
    Ok(())
}

/// Built capacity per candidate: row sums of C^{b,all} (.) Z.
pub fn capacity_from_selection(z: &DMatrix<f64>, candidates: &CandidateSet) -> Result<Vec<f64>, VfError> {
    check_shape(z, candidates)?;
    let levels = levels_from_matrix(z)?;
    Ok(levels.iter().enumerate().map(|(c, &m)| candidates.capacities[(c, m)]).collect())
}

/// Total build cost 1ᵀ(Z (.) F)1.
pub fn selection_cost(z: &DMatrix<f64>, candidates: &CandidateSet) -> Result<f64, VfError> {
    check_shape(z, candidates)?;
    let levels = levels_from_matrix(z)?;
    Ok(levels.iter().enumerate().map(|(c, &m)| candidates.costs[(c, m)]).sum())
}

/// Expected throughput with its per-scenario parts, aligned with `spec.scenarios`.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub expected: f64,
    pub per_scenario: Vec<f64>,
}

pub fn expected_throughput(spec: &DesignSpec, z: &DMatrix<f64>, solver: &dyn Solver) -> Result<Evaluation, VfError> {
    let caps = capacity_from_selection(z, &spec.candidates)?;
    evaluate_capacities(spec, &caps, solver)
}

/// Expected throughput for given built backup capacities.
pub fn evaluate_capacities(spec: &DesignSpec, caps: &[f64], solver: &dyn Solver) -> Result<Evaluation, VfError> {
    let per_scenario = spec
        .scenarios
        .par_iter()
        .map(|s| {
            let ext = extend_scenario(&spec.network, &spec.demands, s, &spec.topology, caps)?;
            Ok(extended_throughput(&ext, spec.big_m, solver)?.throughput)
        })
        .collect::<Result<Vec<f64>, VfError>>()?;
    let expected = spec.scenarios.iter().zip(&per_scenario).map(|(s, v)| s.probability * v).sum();
    Ok(Evaluation { expected, per_scenario })
}

/// Throughput of each scenario without any reserve.
pub fn original_throughputs(spec: &DesignSpec, solver: &dyn Solver) -> Result<Vec<f64>, VfError> {
    spec.scenarios
        .par_iter()
        .map(|s| {
            let net = FlowNetwork::from_scenario(&spec.network, &spec.demands, s, spec.big_m);
            Ok(solve_flow(&net, solver)?.throughput)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SolveStats {
    pub nodes: usize,
    pub wall_seconds: f64,
    pub variables: usize,
    pub rows: usize,
    pub binaries: usize,
    pub lp_evaluations: usize,
    /// false when the MILP stopped at the node limit
    pub proven_optimal: bool,
    pub big_m: f64,
    pub big_m_lambda: f64,
    pub big_m_doublings: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignResult {
    pub method: Method,
    pub levels: Vec<usize>,
    pub z: DMatrix<f64>,
    pub capacities: Vec<f64>,
    pub cost: f64,
    /// E[S*] - w * cost as reported by the method.
    pub objective: f64,
    /// E[S*] of the returned design, re-evaluated scenario by scenario.
    pub expected_throughput: f64,
    pub scenario_throughputs: Vec<f64>,
    pub stats: SolveStats,
    /// Entries found at or near a big-M bound in the final solve.
    pub big_m_flags: Vec<String>,
    pub big_m_suspect: bool,
    /// Per dual block |primal - dual| evaluated with the true products h * C(Z); empty for other methods.
    pub gap_residuals: Vec<f64>,
}

pub fn solve_design(spec: &DesignSpec, method: Method, solver: &dyn Solver) -> Result<DesignResult, VfError> {
    let start = Instant::now();
    let mut result = match method {
        Method::BruteForce => brute::solve(spec, solver)?,
        Method::DirectMilp => direct::solve(spec, solver)?,
        Method::DualMilp => dual::solve_with_retries(spec, solver)?,
    };
    result.stats.wall_seconds = start.elapsed().as_secs_f64();
    Ok(result)
}

/// Solves a design MILP and reads back the selection.
pub(crate) struct MilpOutcome {
    pub solution: MipSolution,
    pub levels: Vec<usize>,
}

pub(crate) fn run_milp(
    model: &MipModel,
    z_vars: &[usize],
    spec: &DesignSpec,
    solver: &dyn Solver,
) -> Result<Option<MilpOutcome>, VfError> {
    let solution = solver.solve_mip(model)?;
    if solution.status == MipStatus::Infeasible {
        return Ok(None);
    }
    let k = spec.num_levels();
    let z = DMatrix::from_fn(spec.num_candidates(), k, |c, m| solution.values[z_vars[c * k + m]]);
    let levels = levels_from_matrix(&z)?;
    Ok(Some(MilpOutcome { solution, levels }))
}

/// Fills the common parts of a result from a chosen selection.
pub(crate) fn finish(
    spec: &DesignSpec,
    method: Method,
    levels: Vec<usize>,
    objective: f64,
    stats: SolveStats,
    solver: &dyn Solver,
) -> Result<DesignResult, VfError> {
    let z = selection_matrix(&levels, spec.num_levels());
    let capacities = capacity_from_selection(&z, &spec.candidates)?;
    let cost = selection_cost(&z, &spec.candidates)?;
    if !spec.within_budget(cost) {
        return Err(VfError::Internal(format!("selection cost {cost} exceeds budget {}", spec.budget)));
    }
    let eval = evaluate_capacities(spec, &capacities, solver)?;
    Ok(DesignResult {
        method,
        levels,
        z,
        capacities,
        cost,
        objective,
        expected_throughput: eval.expected,
        scenario_throughputs: eval.per_scenario,
        stats,
        big_m_flags: Vec::new(),
        big_m_suspect: false,
        gap_residuals: Vec::new(),
    })
}

/// A scenario network whose capacities are affine in the built backup capacities.
/// In the link case only candidates that qualify as detours are attached, each with
/// its two usable backup links.
#[derive(Debug, Clone)]
pub(crate) struct SymNet {
    pub num_nodes: usize,
    pub links: Vec<(usize, usize)>,
    pub link_const: Vec<f64>,
    /// (candidate, multiplier) terms added to the constant capacity
    pub link_z: Vec<Vec<(usize, f64)>>,
    pub node_const: Vec<f64>,
    pub node_z: Vec<Vec<(usize, f64)>>,
    pub demands: Vec<(usize, usize)>,
}

impl SymNet {
    pub fn incident(&self) -> Vec<Vec<usize>> {
        let mut inc = vec![Vec::new(); self.num_nodes];
        for (j, &(t, h)) in self.links.iter().enumerate() {
            inc[t].push(j);
            inc[h].push(j);
        }
        inc
    }
}

pub(crate) fn symbolic(spec: &DesignSpec, s: usize) -> SymNet {
    let net = &spec.network;
    let sc = &spec.scenarios[s];
    let nv = net.nodes.len();
    let mut sym = SymNet {
        num_nodes: nv,
        links: net.links.iter().map(|l| (l.tail, l.head)).collect(),
        link_const: sc.link_caps.clone(),
        link_z: vec![Vec::new(); net.links.len()],
        node_const: sc.node_caps.clone(),
        node_z: vec![Vec::new(); nv],
        demands: spec.demands.pairs.clone(),
    };
    match sc.element {
        None => {}
        Some(Element::Node(v)) => {
            for c in spec.relevant_candidates(s) {
                sym.node_z[v].push((c, spec.topology.adjacency[(v, c)]));
            }
        }
        Some(Element::Link(e)) => {
            let (t, h) = (net.links[e].tail, net.links[e].head);
            for c in spec.relevant_candidates(s) {
                let node = sym.num_nodes;
                sym.num_nodes += 1;
                sym.node_const.push(0.0);
                sym.node_z.push(vec![(c, 1.0)]);
                for link in [(t, node), (node, h)] {
                    sym.links.push(link);
                    sym.link_const.push(0.0);
                    sym.link_z.push(vec![(c, 1.0)]);
                }
            }
        }
    }
    sym
}

/// Z terms of a capacity written as sum over (c, m) of multiplier * C[c,m] * Z[c,m].
pub(crate) fn z_terms(spec: &DesignSpec, terms: &[(usize, f64)], z_vars: &[usize], scale: f64) -> Vec<(usize, f64)> {
    let k = spec.num_levels();
    let mut out = Vec::new();
    for &(c, mult) in terms {
        for m in 0..k {
            let cap = spec.candidates.capacities[(c, m)];
            if cap != 0.0 {
                out.push((z_vars[c * k + m], scale * mult * cap));
            }
        }
    }
    out
}

/// Adds Z variables, one-per-row selection rows and the budget row.
pub(crate) fn add_selection(spec: &DesignSpec, lp: &mut vertiflow_lp::LpModel) -> Vec<usize> {
    use vertiflow_lp::Relation;
    let k = spec.num_levels();
    let mut z_vars = Vec::with_capacity(spec.num_candidates() * k);
    for c in 0..spec.num_candidates() {
        for m in 0..k {
            z_vars.push(lp.add_var(format!("Z[{c},{m}]"), -spec.w * spec.candidates.costs[(c, m)], 0.0, 1.0));
        }
    }
    for c in 0..spec.num_candidates() {
        let row = (0..k).map(|m| (z_vars[c * k + m], 1.0)).collect();
        lp.add_row(format!("select[{c}]"), row, Relation::Eq, 1.0);
    }
    if spec.num_candidates() > 0 {
        let row = (0..spec.num_candidates() * k)
            .filter(|&i| spec.candidates.costs[(i / k, i % k)] != 0.0)
            .map(|i| (z_vars[i], spec.candidates.costs[(i / k, i % k)]))
            .collect();
        lp.add_row("budget", row, Relation::Le, spec.budget_rhs());
    }
    z_vars
}

/// Integer variables for the backup capacity each scenario can draw on (the detour capacity of a
/// disturbed link, or the capacity adjacent to a disturbed node) and for how many of the candidates
/// behind each such sum sit at each level. Scenario throughput depends on the selection only through
/// these sums, so branching on them first is exact and cuts through interchangeable candidates.
/// Capacity sums are added only when capacities and multipliers are integral.
pub(crate) fn add_aggregates(
    spec: &DesignSpec,
    lp: &mut vertiflow_lp::LpModel,
    z_vars: &[usize],
    scenarios: impl IntoIterator<Item = usize>,
) -> Vec<usize> {
    use std::collections::BTreeSet;
    use vertiflow_lp::Relation;
    let integral = |v: f64| v.fract() == 0.0;
    let caps_integral = spec.candidates.capacities.iter().all(|&v| integral(v));
    let k = spec.num_levels();
    let mut seen_terms: BTreeSet<Vec<(usize, i64)>> = BTreeSet::new();
    let mut sets: BTreeSet<Vec<usize>> = BTreeSet::new();
    sets.insert((0..spec.num_candidates()).collect());
    let mut vars = Vec::new();
    for s in scenarios {
        let terms: Vec<(usize, f64)> = match spec.scenarios[s].element {
            None => continue,
            Some(Element::Link(_)) => spec.relevant_candidates(s).into_iter().map(|c| (c, 1.0)).collect(),
            Some(Element::Node(v)) => {
                spec.relevant_candidates(s).into_iter().map(|c| (c, spec.topology.adjacency[(v, c)])).collect()
            }
        };
        sets.insert(terms.iter().map(|t| t.0).collect());
        if !caps_integral || terms.is_empty() || !terms.iter().all(|t| integral(t.1)) {
            continue;
        }
        if !seen_terms.insert(terms.iter().map(|&(c, m)| (c, m as i64)).collect()) {
            continue;
        }
        let top: f64 = terms.iter().map(|&(c, m)| m * spec.candidates.capacities.row(c).max()).sum();
        let y = lp.add_var(format!("y[{}]", vars.len()), 0.0, 0.0, top);
        let mut row = vec![(y, 1.0)];
        row.extend(z_terms(spec, &terms, z_vars, -1.0));
        lp.add_row(format!("aggregate[{}]", vars.len()), row, Relation::Eq, 0.0);
        vars.push(y);
    }
    for set in sets.into_iter().filter(|s| s.len() >= 2) {
        for m in 1..k {
            let q = lp.add_var(format!("q[{}]", vars.len()), 0.0, 0.0, set.len() as f64);
            let mut row = vec![(q, 1.0)];
            row.extend(set.iter().map(|&c| (z_vars[c * k + m], -1.0)));
            lp.add_row(format!("count[{}]", vars.len()), row, Relation::Eq, 0.0);
            vars.push(q);
        }
    }
    vars
}

/// Per-scenario throughput of the undisturbed network, used as the constant term.
pub(crate) fn undisturbed_constant(spec: &DesignSpec, solver: &dyn Solver) -> Result<f64, VfError> {
    let p0 = spec.undisturbed_probability();
    if p0 == 0.0 {
        return Ok(0.0);
    }
    let net = FlowNetwork::from_scenario(&spec.network, &spec.demands, &spec.scenarios[0], spec.big_m);
    Ok(p0 * solve_flow(&net, solver)?.throughput)
}
