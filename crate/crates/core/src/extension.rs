//! Backup candidates, backup links and extended momentary networks.

use nalgebra::DMatrix;

use crate::error::VfError;
use crate::network::{DemandSet, Element, IndicatorMatrices, Point, RiskNetwork, Scenario};
use crate::throughput::FlowNetwork;

/// Candidate backup vertiports. Candidate `c` is node `N_V + c` of an extended network.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet {
    pub positions: Vec<Point>,
    /// N_Vb x K_Z capacity levels, first column zero.
    pub capacities: DMatrix<f64>,
    /// N_Vb x K_Z build costs, first column zero.
    pub costs: DMatrix<f64>,
}

impl CandidateSet {
    /// Same levels and costs for every candidate.
    pub fn uniform(positions: Vec<Point>, levels: &[f64], costs: &[f64]) -> Self {
        let n = positions.len();
        CandidateSet {
            capacities: DMatrix::from_fn(n, levels.len(), |_, m| levels[m]),
            costs: DMatrix::from_fn(n, costs.len(), |_, m| costs[m]),
            positions,
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn num_levels(&self) -> usize {
        self.capacities.ncols()
    }

    pub fn max_capacity(&self) -> f64 {
        self.capacities.iter().fold(0.0f64, |a, &v| a.max(v))
    }

    pub fn validate(&self) -> Vec<String> {
        let mut out = Vec::new();
        let n = self.len();
        if self.capacities.nrows() != n || self.costs.nrows() != n {
            out.push(format!("level matrices must have {n} rows"));
            return out;
        }
        if self.capacities.ncols() != self.costs.ncols() {
            out.push("capacity and cost level counts differ".into());
            return out;
        }
        if n > 0 && self.num_levels() == 0 {
            out.push("no capacity levels".into());
            return out;
        }
        for c in 0..n {
            let row = self.capacities.row(c);
            if !row.iter().chain(self.costs.row(c).iter()).all(|v| v.is_finite()) {
                out.push(format!("candidate {c}: non-finite level or cost"));
                continue;
            }
            if row[0] != 0.0 || self.costs[(c, 0)] != 0.0 {
                out.push(format!("candidate {c}: first level must have zero capacity and cost"));
            }
            if row.iter().zip(row.iter().skip(1)).any(|(a, b)| b <= a) {
                out.push(format!("candidate {c}: capacity levels not strictly increasing"));
            }
            if self.costs.row(c).iter().skip(1).any(|&f| f <= 0.0) {
                out.push(format!("candidate {c}: costs beyond the first level must be positive"));
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BackupPolicy {
    pub ratio_min: f64,
    pub ratio_max: f64,
    pub rho_adj: f64,
}

impl BackupPolicy {
    pub const DEFAULT_RATIO_MIN: f64 = 1.02;
    pub const DEFAULT_RATIO_MAX: f64 = 1.5;
    pub const DEFAULT_RHO_FACTOR: f64 = 0.4;

    /// Ratio bounds [1.02, 1.5] and an adjacency radius of 40% of the mean link length.
    pub fn default_for(network: &RiskNetwork) -> Self {
        BackupPolicy {
            ratio_min: Self::DEFAULT_RATIO_MIN,
            ratio_max: Self::DEFAULT_RATIO_MAX,
            rho_adj: Self::DEFAULT_RHO_FACTOR * network.mean_link_length(),
        }
    }

    pub fn validate(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.ratio_min > 1.0 && self.ratio_min <= self.ratio_max && self.ratio_max.is_finite()) {
            out.push(format!("detour ratio bounds [{}, {}] must satisfy 1 < min <= max", self.ratio_min, self.ratio_max));
        }
        if !(self.rho_adj > 0.0 && self.rho_adj.is_finite()) {
            out.push(format!("adjacency radius {} must be positive", self.rho_adj));
        }
        out
    }
}

/// Detour ratio of a single-stop path through `candidate`, and whether it is within the policy bounds.
pub fn qualify_detour(tail: &Point, head: &Point, candidate: &Point, policy: &BackupPolicy) -> Result<(bool, f64), VfError> {
    let direct = tail.dist(head);
    if direct == 0.0 {
        return Err(VfError::ZeroLengthLink);
    }
    let r = (tail.dist(candidate) + candidate.dist(head)) / direct;
    Ok((r >= policy.ratio_min && r <= policy.ratio_max, r))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BackupLink {
    pub node: usize,
    pub candidate: usize,
    /// true for node -> candidate, false for candidate -> node
    pub inbound: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BackupTopology {
    pub num_nodes: usize,
    pub num_candidates: usize,
    pub links: Vec<BackupLink>,
    /// Qualified detour candidates per original link, ascending.
    pub detours: Vec<Vec<usize>>,
    /// N_V x N_Vb indicator of backup links between an original node and a candidate.
    pub adjacency: DMatrix<f64>,
    /// Candidates with no backup link at all.
    pub excluded: Vec<usize>,
}

impl BackupTopology {
    /// Endpoints in extended node numbering.
    pub fn endpoints(&self, b: &BackupLink) -> (usize, usize) {
        let c = self.num_nodes + b.candidate;
        if b.inbound {
            (b.node, c)
        } else {
            (c, b.node)
        }
    }

    /// Backup links usable when original link `e` = (tail, head) is disturbed.
    pub fn active_for_link(&self, network: &RiskNetwork, e: usize) -> Vec<bool> {
        let (t, h) = (network.links[e].tail, network.links[e].head);
        self.links
            .iter()
            .map(|b| {
                self.detours[e].contains(&b.candidate)
                    && ((b.inbound && b.node == t) || (!b.inbound && b.node == h))
            })
            .collect()
    }
}

/// Backup links: both directions between a candidate and every node within the adjacency radius
/// or at either end of a link the candidate qualifies as a detour for.
pub fn build_backup_topology(
    network: &RiskNetwork,
    candidates: &CandidateSet,
    policy: &BackupPolicy,
) -> Result<BackupTopology, VfError> {
    let nv = network.nodes.len();
    let nb = candidates.len();
    let mut detours = vec![Vec::new(); network.links.len()];
    let mut adjacency = DMatrix::zeros(nv, nb);
    for (c, pos) in candidates.positions.iter().enumerate() {
        for (e, link) in network.links.iter().enumerate() {
            let (ok, _) = qualify_detour(&network.nodes[link.tail].position, &network.nodes[link.head].position, pos, policy)?;
            if ok {
                detours[e].push(c);
                adjacency[(link.tail, c)] = 1.0;
                adjacency[(link.head, c)] = 1.0;
            }
        }
        for (v, node) in network.nodes.iter().enumerate() {
            if node.position.dist(pos) <= policy.rho_adj {
                adjacency[(v, c)] = 1.0;
            }
        }
    }
    let mut links = Vec::new();
    let mut excluded = Vec::new();
    for c in 0..nb {
        let before = links.len();
        for v in 0..nv {
            if adjacency[(v, c)] == 1.0 {
                links.push(BackupLink { node: v, candidate: c, inbound: true });
                links.push(BackupLink { node: v, candidate: c, inbound: false });
            }
        }
        if links.len() == before {
            excluded.push(c);
        }
    }
    Ok(BackupTopology { num_nodes: nv, num_candidates: nb, links, detours, adjacency, excluded })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtensionCase {
    Undisturbed,
    Link(usize),
    Node(usize),
}

/// A momentary network with reserve capacity attached. In the link case the node set is
/// original nodes followed by all candidates and the link set is original links followed by
/// all backup links; backup links not usable for the disturbed link are zero columns.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedScenario {
    pub scenario: Scenario,
    pub case: ExtensionCase,
    pub num_nodes: usize,
    pub links: Vec<Option<(usize, usize)>>,
    pub link_caps: Vec<f64>,
    pub node_caps: Vec<f64>,
    pub demands: Vec<(usize, usize)>,
}

impl ExtendedScenario {
    pub fn flow_network(&self, big_m: f64) -> FlowNetwork {
        FlowNetwork {
            num_nodes: self.num_nodes,
            links: self.links.clone(),
            demands: self.demands.clone(),
            link_caps: self.link_caps.clone(),
            node_caps: self.node_caps.clone(),
            big_m,
        }
    }

    pub fn indicators(&self) -> IndicatorMatrices {
        IndicatorMatrices::from_parts(self.num_nodes, &self.links, &self.demands)
    }
}

pub fn extend_scenario(
    network: &RiskNetwork,
    demands: &DemandSet,
    scenario: &Scenario,
    topology: &BackupTopology,
    backup_caps: &[f64],
) -> Result<ExtendedScenario, VfError> {
    let nv = network.nodes.len();
    if topology.num_nodes != nv || topology.detours.len() != network.links.len() {
        return Err(VfError::Shape("topology was built for a different network".into()));
    }
    if scenario.node_caps.len() != nv || scenario.link_caps.len() != network.links.len() {
        return Err(VfError::Shape("scenario was built for a different network".into()));
    }
    if backup_caps.len() != topology.num_candidates {
        return Err(VfError::Shape(format!(
            "{} backup capacities for {} candidates",
            backup_caps.len(),
            topology.num_candidates
        )));
    }
    if backup_caps.iter().any(|c| !(*c >= 0.0)) {
        return Err(VfError::Shape("backup capacities must be nonnegative".into()));
    }
    let mut ext = ExtendedScenario {
        scenario: scenario.clone(),
        case: ExtensionCase::Undisturbed,
        num_nodes: nv,
        links: network.links.iter().map(|l| Some((l.tail, l.head))).collect(),
        link_caps: scenario.link_caps.clone(),
        node_caps: scenario.node_caps.clone(),
        demands: demands.pairs.clone(),
    };
    match scenario.element {
        None => {}
        Some(Element::Node(v)) => {
            ext.case = ExtensionCase::Node(v);
            let extra: f64 = (0..topology.num_candidates)
                .map(|c| topology.adjacency[(v, c)] * backup_caps[c])
                .sum();
            ext.node_caps[v] += extra;
        }
        Some(Element::Link(e)) => {
            ext.case = ExtensionCase::Link(e);
            ext.num_nodes = nv + topology.num_candidates;
            let active = topology.active_for_link(network, e);
            for (b, on) in topology.links.iter().zip(active) {
                ext.links.push(on.then(|| topology.endpoints(b)));
                ext.link_caps.push(backup_caps[b.candidate]);
            }
            ext.node_caps.extend_from_slice(backup_caps);
        }
    }
    Ok(ext)
}
