//! Network files, generated cases and result files.

mod case;
mod report;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::design::DesignSpec;
use crate::error::VfError;
use crate::extension::{BackupPolicy, CandidateSet};
use crate::network::{
    validate_demands, validate_network, DemandSet, DisruptionModel, ElementWeights, Issue, Level, Link, Node, Point,
    RiskNetwork,
};

pub use case::{gen_case, CaseParams, CaseTopology};
pub use report::{
    design_file, fmt_num, metrics_csv, metrics_record, quartiles, read_design, run_sweep, write_sweep, DesignFile, DesignStats, ScenarioValue,
    SweepConfig, SweepRow, DESIGN_FORMAT, ENHANCEMENT_HEADER, METRICS_HEADER,
};

pub const FORMAT: &str = "vertiflow/1";

/// Parsed content of a network file.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub network: RiskNetwork,
    /// Optional display names, one per node.
    pub node_names: Vec<Option<String>>,
    pub demands: DemandSet,
    pub candidates: Option<CandidateSet>,
    pub policy: Option<BackupPolicy>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkFile {
    format: String,
    nodes: Vec<NodeRec>,
    links: Vec<LinkRec>,
    demands: Vec<[usize; 2]>,
    disruption: DisruptionRec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    candidates: Option<Vec<CandidateRec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    levels: Option<LevelsRec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    policy: Option<PolicyRec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeRec {
    id: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    x_km: f64,
    y_km: f64,
    capacity: f64,
    #[serde(default)]
    disturbed: Vec<LevelRec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LinkRec {
    id: usize,
    tail: usize,
    head: usize,
    capacity: f64,
    #[serde(default)]
    disturbed: Vec<LevelRec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LevelRec {
    capacity: f64,
    cond_prob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DisruptionRec {
    p_dis: f64,
    element_weights: WeightsRec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum WeightsRec {
    Named(String),
    Explicit(ExplicitWeights),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExplicitWeights {
    nodes: Vec<f64>,
    links: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CandidateRec {
    id: usize,
    x_km: f64,
    y_km: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LevelsRec {
    capacities: Vec<f64>,
    costs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PolicyRec {
    ratio_min: f64,
    ratio_max: f64,
    /// null means 0.4 times the mean link length
    rho_adj_km: Option<f64>,
}

fn levels(recs: Vec<LevelRec>) -> Vec<Level> {
    recs.into_iter().map(|l| Level { capacity: l.capacity, cond_prob: l.cond_prob }).collect()
}

fn level_recs(levels: &[Level]) -> Vec<LevelRec> {
    levels.iter().map(|l| LevelRec { capacity: l.capacity, cond_prob: l.cond_prob }).collect()
}

/// Parses a network file. Structural problems come back as `Format` with the JSON path and position;
/// model invariants are left to [`validate_instance`].
pub fn parse_instance(text: &str) -> Result<Instance, VfError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let file: NetworkFile = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        VfError::Format(format!("line {}, column {}: {path}: {inner}", inner.line(), inner.column()))
    })?;
    if file.format != FORMAT {
        return Err(VfError::Format(format!("format: expected {FORMAT:?}, found {:?}", file.format)));
    }

    let weights = match file.disruption.element_weights {
        WeightsRec::Named(s) if s == "uniform" => ElementWeights::Uniform,
        WeightsRec::Named(s) => {
            return Err(VfError::Format(format!(
                "disruption.element_weights: expected \"uniform\" or an object, found {s:?}"
            )))
        }
        WeightsRec::Explicit(w) => ElementWeights::Explicit { nodes: w.nodes, links: w.links },
    };
    let mut node_names = Vec::new();
    let mut nodes = Vec::new();
    let mut node_levels = Vec::new();
    for n in file.nodes {
        node_names.push(n.name);
        nodes.push(Node { id: n.id, position: Point::new(n.x_km, n.y_km), capacity: n.capacity });
        node_levels.push(levels(n.disturbed));
    }
    let mut links = Vec::new();
    let mut link_levels = Vec::new();
    for l in file.links {
        links.push(Link { id: l.id, tail: l.tail, head: l.head, capacity: l.capacity });
        link_levels.push(levels(l.disturbed));
    }
    let network = RiskNetwork {
        nodes,
        links,
        disruption: DisruptionModel { p_dis: file.disruption.p_dis, node_levels, link_levels, weights },
    };
    let demands = DemandSet::new(file.demands.iter().map(|p| (p[0], p[1])).collect());

    let candidates = match (file.candidates, file.levels) {
        (None, None) => None,
        (Some(_), None) => return Err(VfError::Format("candidates given without a levels section".into())),
        (None, Some(_)) => return Err(VfError::Format("levels given without a candidates section".into())),
        (Some(cands), Some(lv)) => {
            for (i, c) in cands.iter().enumerate() {
                if c.id != i {
                    return Err(VfError::Format(format!(
                        "candidates[{i}].id: candidate ids must be 0-based and contiguous, found {}",
                        c.id
                    )));
                }
            }
            if lv.capacities.len() != lv.costs.len() {
                return Err(VfError::Format(format!(
                    "levels: {} capacities but {} costs",
                    lv.capacities.len(),
                    lv.costs.len()
                )));
            }
            let positions = cands.iter().map(|c| Point::new(c.x_km, c.y_km)).collect();
            Some(CandidateSet::uniform(positions, &lv.capacities, &lv.costs))
        }
    };
    let policy = file.policy.map(|p| BackupPolicy {
        ratio_min: p.ratio_min,
        ratio_max: p.ratio_max,
        rho_adj: p.rho_adj_km.unwrap_or(BackupPolicy::DEFAULT_RHO_FACTOR * network.mean_link_length()),
    });
    Ok(Instance { network, node_names, demands, candidates, policy })
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_instance(inst: &Instance) -> Result<String, VfError> {
    let net = &inst.network;
    let dm = &net.disruption;
    if inst.node_names.len() != net.nodes.len() {
        return Err(VfError::Shape(format!("{} names for {} nodes", inst.node_names.len(), net.nodes.len())));
    }
    let nodes = net
        .nodes
        .iter()
        .zip(&inst.node_names)
        .zip(&dm.node_levels)
        .map(|((n, name), lv)| NodeRec {
            id: n.id,
            name: name.clone(),
            x_km: n.position.x,
            y_km: n.position.y,
            capacity: n.capacity,
            disturbed: level_recs(lv),
        })
        .collect();
    let links = net
        .links
        .iter()
        .zip(&dm.link_levels)
        .map(|(l, lv)| LinkRec { id: l.id, tail: l.tail, head: l.head, capacity: l.capacity, disturbed: level_recs(lv) })
        .collect();
    let element_weights = match &dm.weights {
        ElementWeights::Uniform => WeightsRec::Named("uniform".into()),
        ElementWeights::Explicit { nodes, links } => {
            WeightsRec::Explicit(ExplicitWeights { nodes: nodes.clone(), links: links.clone() })
        }
    };
    let (candidates, levels) = match &inst.candidates {
        None => (None, None),
        Some(cs) => {
            let uniform = (0..cs.len()).all(|c| cs.capacities.row(c) == cs.capacities.row(0) && cs.costs.row(c) == cs.costs.row(0));
            if !uniform {
                return Err(VfError::Format("candidates with differing level tables cannot be written".into()));
            }
            let recs = cs
                .positions
                .iter()
                .enumerate()
                .map(|(id, p)| CandidateRec { id, x_km: p.x, y_km: p.y })
                .collect();
            let (capacities, costs) = if cs.is_empty() {
                (Vec::new(), Vec::new())
            } else {
                (cs.capacities.row(0).iter().copied().collect(), cs.costs.row(0).iter().copied().collect())
            };
            (Some(recs), Some(LevelsRec { capacities, costs }))
        }
    };
    let file = NetworkFile {
        format: FORMAT.into(),
        nodes,
        links,
        demands: inst.demands.pairs.iter().map(|&(o, d)| [o, d]).collect(),
        disruption: DisruptionRec { p_dis: dm.p_dis, element_weights },
        candidates,
        levels,
        policy: inst.policy.map(|p| PolicyRec { ratio_min: p.ratio_min, ratio_max: p.ratio_max, rho_adj_km: Some(p.rho_adj) }),
    };
    let mut text = serde_json::to_string_pretty(&file).map_err(|e| VfError::Format(e.to_string()))?;
    text.push('\n');
    Ok(text)
}

/// Every model invariant violated by the instance.
pub fn validate_instance(inst: &Instance) -> Vec<Issue> {
    let mut issues = validate_network(&inst.network);
    issues.extend(validate_demands(&inst.network, &inst.demands));
    if let Some(c) = &inst.candidates {
        issues.extend(c.validate().into_iter().map(Issue::Candidate));
    }
    if let Some(p) = &inst.policy {
        issues.extend(p.validate().into_iter().map(Issue::Policy));
    }
    issues
}

impl Instance {
    /// Policy from the file, or the default one for this network.
    pub fn policy_or_default(&self) -> BackupPolicy {
        self.policy.unwrap_or_else(|| BackupPolicy::default_for(&self.network))
    }

    pub fn design_spec(&self, budget: f64, w: f64) -> Result<DesignSpec, VfError> {
        let candidates = self
            .candidates
            .clone()
            .ok_or_else(|| VfError::Format("network file has no candidates section".into()))?;
        DesignSpec::new(self.network.clone(), self.demands.clone(), candidates, self.policy_or_default(), budget, w)
    }
}

/// First 16 hex digits of SHA-256 over the parts joined by newlines.
pub fn config_hash(parts: &[&str]) -> String {
    let digest = Sha256::digest(parts.join("\n").as_bytes());
    hex::encode(digest)[..16].to_string()
}
