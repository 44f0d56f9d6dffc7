//! Throughput LP for momentary and extended networks, with dual certificates.

use nalgebra::{DMatrix, DVector};
use vertiflow_lp::{LpModel, LpStatus, Relation, Solver};

use crate::error::VfError;
use crate::network::{DemandSet, IndicatorMatrices, RiskNetwork, Scenario};

/// A momentary network in matrix terms. Links given as `None` are zero incidence columns.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowNetwork {
    pub num_nodes: usize,
    pub links: Vec<Option<(usize, usize)>>,
    pub demands: Vec<(usize, usize)>,
    pub link_caps: Vec<f64>,
    pub node_caps: Vec<f64>,
    pub big_m: f64,
}

impl FlowNetwork {
    pub fn from_scenario(network: &RiskNetwork, demands: &DemandSet, scenario: &Scenario, big_m: f64) -> Self {
        FlowNetwork {
            num_nodes: network.nodes.len(),
            links: network.links.iter().map(|l| Some((l.tail, l.head))).collect(),
            demands: demands.pairs.clone(),
            link_caps: scenario.link_caps.clone(),
            node_caps: scenario.node_caps.clone(),
            big_m,
        }
    }

    pub fn from_indicators(ind: &IndicatorMatrices, link_caps: &[f64], node_caps: &[f64], big_m: f64) -> Self {
        FlowNetwork {
            num_nodes: ind.num_nodes(),
            links: ind.link_endpoints(),
            demands: ind.demand_pairs(),
            link_caps: link_caps.to_vec(),
            node_caps: node_caps.to_vec(),
            big_m,
        }
    }

    pub fn indicators(&self) -> IndicatorMatrices {
        IndicatorMatrices::from_parts(self.num_nodes, &self.links, &self.demands)
    }

    fn check(&self) -> Result<(), VfError> {
        if self.link_caps.len() != self.links.len() || self.node_caps.len() != self.num_nodes {
            return Err(VfError::Shape(format!(
                "{} link capacities for {} links, {} node capacities for {} nodes",
                self.link_caps.len(),
                self.links.len(),
                self.node_caps.len(),
                self.num_nodes
            )));
        }
        Ok(())
    }
}

/// Variable and row indexing of the throughput LP.
#[derive(Debug, Clone, Copy)]
pub struct FlowLayout {
    pub nl: usize,
    pub nv: usize,
    pub ns: usize,
}

impl FlowLayout {
    pub fn x(&self, j: usize, l: usize) -> usize {
        j * self.ns + l
    }
    pub fn d1(&self, i: usize, l: usize) -> usize {
        self.nl * self.ns + i * self.ns + l
    }
    pub fn d2(&self, i: usize, l: usize) -> usize {
        (self.nl + self.nv) * self.ns + i * self.ns + l
    }
    pub fn num_vars(&self) -> usize {
        (self.nl + 2 * self.nv) * self.ns
    }
    // row groups in order: conservation, link caps, node caps, balance, D1 bounds, D2 bounds
    pub fn row_conservation(&self, i: usize, l: usize) -> usize {
        i * self.ns + l
    }
    pub fn row_link(&self, j: usize) -> usize {
        self.nv * self.ns + j
    }
    pub fn row_node(&self, i: usize) -> usize {
        self.nv * self.ns + self.nl + i
    }
    pub fn row_balance(&self, l: usize) -> usize {
        self.nv * self.ns + self.nl + self.nv + l
    }
    pub fn row_d1(&self, i: usize, l: usize) -> usize {
        self.nv * self.ns + self.nl + self.nv + self.ns + i * self.ns + l
    }
    pub fn row_d2(&self, i: usize, l: usize) -> usize {
        2 * self.nv * self.ns + self.nl + self.nv + self.ns + i * self.ns + l
    }
    pub fn num_rows(&self) -> usize {
        3 * self.nv * self.ns + self.nl + self.nv + self.ns
    }
}

pub fn build_flow_lp(net: &FlowNetwork) -> Result<(LpModel, FlowLayout), VfError> {
    net.check()?;
    let lay = FlowLayout { nl: net.links.len(), nv: net.num_nodes, ns: net.demands.len() };
    let mut lp = LpModel::new();
    for j in 0..lay.nl {
        for l in 0..lay.ns {
            lp.add_var(format!("X[{j},{l}]"), 0.0, 0.0, f64::INFINITY);
        }
    }
    for i in 0..lay.nv {
        for l in 0..lay.ns {
            lp.add_var(format!("D1[{i},{l}]"), 1.0, 0.0, f64::INFINITY);
        }
    }
    for i in 0..lay.nv {
        for l in 0..lay.ns {
            lp.add_var(format!("D2[{i},{l}]"), 0.0, f64::NEG_INFINITY, 0.0);
        }
    }

    let mut cons: Vec<Vec<(usize, f64)>> = vec![Vec::new(); lay.nv * lay.ns];
    let mut node_rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); lay.nv];
    for (j, link) in net.links.iter().enumerate() {
        if let Some((t, h)) = *link {
            for l in 0..lay.ns {
                cons[t * lay.ns + l].push((lay.x(j, l), -1.0));
                cons[h * lay.ns + l].push((lay.x(j, l), 1.0));
                node_rows[t].push((lay.x(j, l), 1.0));
                node_rows[h].push((lay.x(j, l), 1.0));
            }
        }
    }
    for i in 0..lay.nv {
        for l in 0..lay.ns {
            let mut row = std::mem::take(&mut cons[i * lay.ns + l]);
            row.push((lay.d1(i, l), -1.0));
            row.push((lay.d2(i, l), -1.0));
            lp.add_row(format!("flow[{i},{l}]"), row, Relation::Eq, 0.0);
        }
    }
    for j in 0..lay.nl {
        let row = (0..lay.ns).map(|l| (lay.x(j, l), 1.0)).collect();
        lp.add_row(format!("linkcap[{j}]"), row, Relation::Le, net.link_caps[j]);
    }
    for (i, row) in node_rows.into_iter().enumerate() {
        lp.add_row(format!("nodecap[{i}]"), row, Relation::Le, net.node_caps[i]);
    }
    for l in 0..lay.ns {
        let mut row: Vec<(usize, f64)> = (0..lay.nv).map(|i| (lay.d1(i, l), 1.0)).collect();
        row.extend((0..lay.nv).map(|i| (lay.d2(i, l), 1.0)));
        lp.add_row(format!("balance[{l}]"), row, Relation::Eq, 0.0);
    }
    for i in 0..lay.nv {
        for l in 0..lay.ns {
            let rhs = if net.demands[l].1 == i { net.big_m } else { 0.0 };
            lp.add_row(format!("d1max[{i},{l}]"), vec![(lay.d1(i, l), 1.0)], Relation::Le, rhs);
        }
    }
    for i in 0..lay.nv {
        for l in 0..lay.ns {
            let rhs = if net.demands[l].0 == i { net.big_m } else { 0.0 };
            lp.add_row(format!("d2max[{i},{l}]"), vec![(lay.d2(i, l), -1.0)], Relation::Le, rhs);
        }
    }
    debug_assert_eq!(lp.num_rows(), lay.num_rows());
    Ok((lp, lay))
}

/// The throughput LP of a scenario given its network's indicator matrices.
pub fn build_throughput_lp(scenario: &Scenario, ind: &IndicatorMatrices, big_m: f64) -> Result<LpModel, VfError> {
    let net = FlowNetwork::from_indicators(ind, &scenario.link_caps, &scenario.node_caps, big_m);
    Ok(build_flow_lp(&net)?.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowSolution {
    pub x: DMatrix<f64>,
    pub d1: DMatrix<f64>,
    pub d2: DMatrix<f64>,
    pub fulfilled: Vec<f64>,
    pub throughput: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualCertificate {
    pub u1: DMatrix<f64>,
    pub u2: DMatrix<f64>,
    pub u3: DMatrix<f64>,
    pub u4: DMatrix<f64>,
    pub u5: DMatrix<f64>,
    pub u6: DMatrix<f64>,
    pub h1: Vec<f64>,
    pub h2: Vec<f64>,
    pub h3: Vec<f64>,
}

impl DualCertificate {
    pub fn zeros(nl: usize, nv: usize, ns: usize) -> Self {
        DualCertificate {
            u1: DMatrix::zeros(nv, ns),
            u2: DMatrix::zeros(nl, ns),
            u3: DMatrix::zeros(nv, ns),
            u4: DMatrix::zeros(nv, ns),
            u5: DMatrix::zeros(nv, ns),
            u6: DMatrix::zeros(nv, ns),
            h1: vec![0.0; nl],
            h2: vec![0.0; nv],
            h3: vec![0.0; ns],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertificateReport {
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub sign_violation: f64,
    pub gap_residual: f64,
    pub verified: bool,
}

impl CertificateReport {
    pub fn max_residual(&self) -> f64 {
        self.primal_residual
            .max(self.dual_residual)
            .max(self.sign_violation)
            .max(self.gap_residual)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThroughputResult {
    pub throughput: f64,
    pub flow: FlowSolution,
    pub certificate: DualCertificate,
    pub report: CertificateReport,
    pub verified: bool,
}

pub fn solve_flow(net: &FlowNetwork, solver: &dyn Solver) -> Result<ThroughputResult, VfError> {
    let (lp, lay) = build_flow_lp(net)?;
    let sol = solver.solve_lp(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(VfError::Internal(format!("throughput LP reported {:?}", sol.status)));
    }
    let (nl, nv, ns) = (lay.nl, lay.nv, lay.ns);
    let v = &sol.values;
    let y = &sol.duals;
    let rc = &sol.reduced_costs;
    let x = DMatrix::from_fn(nl, ns, |j, l| v[lay.x(j, l)]);
    let d1 = DMatrix::from_fn(nv, ns, |i, l| v[lay.d1(i, l)]);
    let d2 = DMatrix::from_fn(nv, ns, |i, l| v[lay.d2(i, l)]);
    let fulfilled: Vec<f64> = (0..ns).map(|l| d1.column(l).sum()).collect();
    let throughput = fulfilled.iter().sum();
    let certificate = DualCertificate {
        u1: DMatrix::from_fn(nv, ns, |i, l| y[lay.row_conservation(i, l)]),
        u2: DMatrix::from_fn(nl, ns, |j, l| -rc[lay.x(j, l)]),
        u3: DMatrix::from_fn(nv, ns, |i, l| y[lay.row_d1(i, l)]),
        u4: DMatrix::from_fn(nv, ns, |i, l| y[lay.row_d2(i, l)]),
        u5: DMatrix::from_fn(nv, ns, |i, l| -rc[lay.d1(i, l)]),
        u6: DMatrix::from_fn(nv, ns, |i, l| rc[lay.d2(i, l)]),
        h1: (0..nl).map(|j| y[lay.row_link(j)]).collect(),
        h2: (0..nv).map(|i| y[lay.row_node(i)]).collect(),
        h3: (0..ns).map(|l| y[lay.row_balance(l)]).collect(),
    };
    let flow = FlowSolution { x, d1, d2, fulfilled, throughput };
    let ind = net.indicators();
    let report = verify_certificate(&flow, &certificate, &ind, &net.link_caps, &net.node_caps, net.big_m, 1e-6)?;
    Ok(ThroughputResult { throughput, flow, certificate, verified: report.verified, report })
}

/// Optimal throughput of a scenario of the original network.
pub fn throughput(
    scenario: &Scenario,
    ind: &IndicatorMatrices,
    big_m: f64,
    solver: &dyn Solver,
) -> Result<ThroughputResult, VfError> {
    let net = FlowNetwork::from_indicators(ind, &scenario.link_caps, &scenario.node_caps, big_m);
    solve_flow(&net, solver)
}

fn shape(name: &str, m: &DMatrix<f64>, r: usize, c: usize) -> Result<(), VfError> {
    if m.nrows() != r || m.ncols() != c {
        return Err(VfError::Shape(format!("{name} is {}x{}, expected {r}x{c}", m.nrows(), m.ncols())));
    }
    Ok(())
}

fn len(name: &str, v: &[f64], n: usize) -> Result<(), VfError> {
    if v.len() != n {
        return Err(VfError::Shape(format!("{name} has length {}, expected {n}", v.len())));
    }
    Ok(())
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |a, &v| a.max(v.abs()))
}

fn max_pos(values: impl Iterator<Item = f64>) -> f64 {
    values.fold(0.0f64, |a, v| a.max(v))
}

/// Checks primal feasibility, dual feasibility and a zero duality gap.
pub fn verify_certificate(
    flow: &FlowSolution,
    cert: &DualCertificate,
    ind: &IndicatorMatrices,
    link_caps: &[f64],
    node_caps: &[f64],
    big_m: f64,
    tol: f64,
) -> Result<CertificateReport, VfError> {
    let (nv, nl, ns) = (ind.num_nodes(), ind.num_links(), ind.num_demands());
    shape("X", &flow.x, nl, ns)?;
    shape("D1", &flow.d1, nv, ns)?;
    shape("D2", &flow.d2, nv, ns)?;
    shape("U1", &cert.u1, nv, ns)?;
    shape("U2", &cert.u2, nl, ns)?;
    for (name, u) in [("U3", &cert.u3), ("U4", &cert.u4), ("U5", &cert.u5), ("U6", &cert.u6)] {
        shape(name, u, nv, ns)?;
    }
    len("h1", &cert.h1, nl)?;
    len("h2", &cert.h2, nv)?;
    len("h3", &cert.h3, ns)?;
    len("link capacities", link_caps, nl)?;
    len("node capacities", node_caps, nv)?;

    let ones_s = DVector::from_element(ns, 1.0);
    let ones_v = DVector::from_element(nv, 1.0);
    let ce = DVector::from_column_slice(link_caps);
    let cv = DVector::from_column_slice(node_caps);

    // primal
    let mut primal: f64 = max_abs(&(&ind.e * &flow.x - &flow.d1 - &flow.d2));
    let link_load = &flow.x * &ones_s;
    primal = primal.max(max_pos((&link_load - &ce).iter().copied()));
    let node_load = &ind.e_plus * &link_load;
    primal = primal.max(max_pos((&node_load - &cv).iter().copied()));
    let bal = flow.d1.transpose() * &ones_v + flow.d2.transpose() * &ones_v;
    primal = primal.max(bal.amax());
    primal = primal.max(max_pos((&flow.d1 - &ind.delta1 * big_m).iter().copied()));
    primal = primal.max(max_pos((-&flow.d2 + &ind.delta2 * big_m).iter().copied()));
    primal = primal.max(max_pos(flow.x.iter().map(|v| -v)));
    primal = primal.max(max_pos(flow.d1.iter().map(|v| -v)));
    primal = primal.max(max_pos(flow.d2.iter().copied()));

    // dual
    let h1 = DVector::from_column_slice(&cert.h1);
    let h2 = DVector::from_column_slice(&cert.h2);
    let h3 = DVector::from_column_slice(&cert.h3);
    let hlink = &h1 + ind.e_plus.transpose() * &h2;
    let eq10 = ind.e.transpose() * &cert.u1 - &cert.u2 + &hlink * ones_s.transpose();
    let h3row = &ones_v * h3.transpose();
    let ones_vs = DMatrix::from_element(nv, ns, 1.0);
    let eq11 = -&ones_vs + &h3row - &cert.u1 + &cert.u3 - &cert.u5;
    let eq12 = &h3row - &cert.u1 - &cert.u4 + &cert.u6;
    let dual = max_abs(&eq10).max(max_abs(&eq11)).max(max_abs(&eq12));
    let mut sign: f64 = 0.0;
    for u in [&cert.u2, &cert.u3, &cert.u4, &cert.u5, &cert.u6] {
        sign = sign.max(max_pos(u.iter().map(|v| -v)));
    }
    sign = sign.max(max_pos(cert.h1.iter().chain(&cert.h2).map(|v| -v)));

    // zero gap
    let objective = flow.d1.sum();
    let dual_obj = h1.dot(&ce)
        + h2.dot(&cv)
        + big_m * cert.u3.component_mul(&ind.delta1).sum()
        - big_m * cert.u4.component_mul(&ind.delta2).sum();
    let gap = (objective - dual_obj).abs();

    let verified = primal <= tol && dual <= tol && sign <= tol && gap <= tol;
    Ok(CertificateReport {
        primal_residual: primal,
        dual_residual: dual,
        sign_violation: sign,
        gap_residual: gap,
        verified,
    })
}

/// Optimal throughput of an extended momentary network.
pub fn extended_throughput(
    ext: &crate::extension::ExtendedScenario,
    big_m: f64,
    solver: &dyn Solver,
) -> Result<ThroughputResult, VfError> {
    solve_flow(&ext.flow_network(big_m), solver)
}
