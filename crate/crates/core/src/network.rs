//! Risk-aware network model, scenario enumeration and indicator matrices.

use std::collections::HashSet;
use std::fmt;

use nalgebra::DMatrix;

use crate::error::VfError;

/// Planar position in kilometers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: usize,
    pub position: Point,
    pub capacity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    pub id: usize,
    pub tail: usize,
    pub head: usize,
    pub capacity: f64,
}

/// One disturbed capacity level with its probability given that the element is disturbed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Level {
    pub capacity: f64,
    pub cond_prob: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ElementWeights {
    /// Every node and link is equally likely to be the disturbed one.
    Uniform,
    Explicit { nodes: Vec<f64>, links: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DisruptionModel {
    pub p_dis: f64,
    pub node_levels: Vec<Vec<Level>>,
    pub link_levels: Vec<Vec<Level>>,
    pub weights: ElementWeights,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Element {
    Node(usize),
    Link(usize),
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Element::Node(i) => write!(f, "node {i}"),
            Element::Link(i) => write!(f, "link {i}"),
        }
    }
}

impl DisruptionModel {
    pub fn levels(&self, el: Element) -> &[Level] {
        match el {
            Element::Node(i) => &self.node_levels[i],
            Element::Link(i) => &self.link_levels[i],
        }
    }

    pub fn weight(&self, el: Element) -> f64 {
        match &self.weights {
            ElementWeights::Uniform => {
                1.0 / (self.node_levels.len() + self.link_levels.len()) as f64
            }
            ElementWeights::Explicit { nodes, links } => match el {
                Element::Node(i) => nodes[i],
                Element::Link(i) => links[i],
            },
        }
    }

    /// Absolute probability p_{ev,k} of level `k` (1-based).
    pub fn probability(&self, el: Element, k: usize) -> f64 {
        self.p_dis * self.weight(el) * self.levels(el)[k - 1].cond_prob
    }

    /// P^{ev}_dis: probability that `el` is the disturbed element.
    pub fn element_mass(&self, el: Element) -> f64 {
        (1..=self.levels(el).len()).map(|k| self.probability(el, k)).sum()
    }

    /// Builds the model from absolute per-level probabilities.
    pub fn from_absolute(
        p_dis: f64,
        nodes: Vec<Vec<(f64, f64)>>,
        links: Vec<Vec<(f64, f64)>>,
    ) -> Self {
        fn split(p_dis: f64, els: Vec<Vec<(f64, f64)>>) -> (Vec<Vec<Level>>, Vec<f64>) {
            let mut levels = Vec::new();
            let mut weights = Vec::new();
            for el in els {
                let mass: f64 = el.iter().map(|l| l.1).sum();
                weights.push(if p_dis > 0.0 { mass / p_dis } else { 0.0 });
                levels.push(
                    el.iter()
                        .map(|&(capacity, p)| Level {
                            capacity,
                            cond_prob: if mass > 0.0 { p / mass } else { 0.0 },
                        })
                        .collect(),
                );
            }
            (levels, weights)
        }
        let (node_levels, wn) = split(p_dis, nodes);
        let (link_levels, wl) = split(p_dis, links);
        DisruptionModel {
            p_dis,
            node_levels,
            link_levels,
            weights: ElementWeights::Explicit { nodes: wn, links: wl },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiskNetwork {
    pub nodes: Vec<Node>,
    pub links: Vec<Link>,
    pub disruption: DisruptionModel,
}

impl RiskNetwork {
    pub fn node_caps(&self) -> Vec<f64> {
        self.nodes.iter().map(|n| n.capacity).collect()
    }

    pub fn link_caps(&self) -> Vec<f64> {
        self.links.iter().map(|l| l.capacity).collect()
    }

    /// Default demand big-M: total undisturbed node capacity.
    pub fn default_big_m(&self) -> f64 {
        self.nodes.iter().map(|n| n.capacity).sum()
    }

    pub fn capacity(&self, el: Element) -> f64 {
        match el {
            Element::Node(i) => self.nodes[i].capacity,
            Element::Link(i) => self.links[i].capacity,
        }
    }

    pub fn elements(&self) -> impl Iterator<Item = Element> + '_ {
        (0..self.links.len())
            .map(Element::Link)
            .chain((0..self.nodes.len()).map(Element::Node))
    }

    pub fn link_between(&self, tail: usize, head: usize) -> Option<usize> {
        self.links.iter().position(|l| l.tail == tail && l.head == head)
    }

    pub fn mean_link_length(&self) -> f64 {
        if self.links.is_empty() {
            return 0.0;
        }
        let total: f64 = self
            .links
            .iter()
            .map(|l| self.nodes[l.tail].position.dist(&self.nodes[l.head].position))
            .sum();
        total / self.links.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DemandSet {
    pub pairs: Vec<(usize, usize)>,
}

impl DemandSet {
    pub fn new(pairs: Vec<(usize, usize)>) -> Self {
        Self { pairs }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// One momentary network: which element is disturbed and the resulting capacities.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub element: Option<Element>,
    /// 0 for the undisturbed moment, otherwise the 1-based level index.
    pub level: usize,
    pub probability: f64,
    pub link_caps: Vec<f64>,
    pub node_caps: Vec<f64>,
}

impl Scenario {
    pub fn undisturbed(network: &RiskNetwork) -> Scenario {
        Scenario {
            element: None,
            level: 0,
            probability: 1.0 - network.disruption.p_dis,
            link_caps: network.link_caps(),
            node_caps: network.node_caps(),
        }
    }

    pub fn label(&self) -> String {
        match self.element {
            None => "undisturbed".to_string(),
            Some(Element::Node(i)) => format!("v{i}@{}", self.level),
            Some(Element::Link(i)) => format!("e{i}@{}", self.level),
        }
    }
}

/// Undisturbed scenario followed by every disturbed (element, level) with positive probability.
pub fn enumerate_scenarios(network: &RiskNetwork) -> Result<Vec<Scenario>, VfError> {
    let dm = &network.disruption;
    let mut out = vec![Scenario::undisturbed(network)];
    for el in network.elements() {
        for (k, level) in dm.levels(el).iter().enumerate() {
            let p = dm.probability(el, k + 1);
            if p <= 0.0 {
                continue;
            }
            let mut s = Scenario {
                element: Some(el),
                level: k + 1,
                probability: p,
                link_caps: network.link_caps(),
                node_caps: network.node_caps(),
            };
            match el {
                Element::Node(i) => s.node_caps[i] = level.capacity,
                Element::Link(i) => s.link_caps[i] = level.capacity,
            }
            out.push(s);
        }
    }
    let total: f64 = out.iter().map(|s| s.probability).sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(VfError::Validation(vec![Issue::MassMismatch {
            total: total - out[0].probability,
            p_dis: dm.p_dis,
        }]));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorMatrices {
    pub e: DMatrix<f64>,
    pub e_plus: DMatrix<f64>,
    pub delta1: DMatrix<f64>,
    pub delta2: DMatrix<f64>,
}

impl IndicatorMatrices {
    /// Builds E, E₊, Δ₁, Δ₂; `None` links give all-zero incidence columns.
    pub fn from_parts(
        num_nodes: usize,
        links: &[Option<(usize, usize)>],
        demands: &[(usize, usize)],
    ) -> IndicatorMatrices {
        let mut e = DMatrix::zeros(num_nodes, links.len());
        for (j, l) in links.iter().enumerate() {
            if let Some((t, h)) = *l {
                e[(t, j)] = -1.0;
                e[(h, j)] = 1.0;
            }
        }
        let e_plus = e.abs();
        let mut delta1 = DMatrix::zeros(num_nodes, demands.len());
        let mut delta2 = DMatrix::zeros(num_nodes, demands.len());
        for (l, &(o, d)) in demands.iter().enumerate() {
            delta1[(d, l)] = 1.0;
            delta2[(o, l)] = -1.0;
        }
        IndicatorMatrices { e, e_plus, delta1, delta2 }
    }

    pub fn num_nodes(&self) -> usize {
        self.e.nrows()
    }

    pub fn num_links(&self) -> usize {
        self.e.ncols()
    }

    pub fn num_demands(&self) -> usize {
        self.delta1.ncols()
    }

    /// Recovers link endpoints from the incidence columns.
    pub fn link_endpoints(&self) -> Vec<Option<(usize, usize)>> {
        (0..self.num_links())
            .map(|j| {
                let col = self.e.column(j);
                let t = col.iter().position(|&v| v == -1.0);
                let h = col.iter().position(|&v| v == 1.0);
                t.zip(h)
            })
            .collect()
    }

    pub fn demand_pairs(&self) -> Vec<(usize, usize)> {
        (0..self.num_demands())
            .map(|l| {
                let d = self.delta1.column(l).iter().position(|&v| v == 1.0).unwrap_or(0);
                let o = self.delta2.column(l).iter().position(|&v| v == -1.0).unwrap_or(0);
                (o, d)
            })
            .collect()
    }
}

pub fn build_incidence(network: &RiskNetwork, demands: &DemandSet) -> Result<IndicatorMatrices, VfError> {
    let n = network.nodes.len();
    let mut issues = Vec::new();
    for (l, &(o, d)) in demands.pairs.iter().enumerate() {
        if o >= n || d >= n {
            issues.push(Issue::DemandUnknownNode { demand: l });
        }
    }
    if !issues.is_empty() {
        return Err(VfError::Validation(issues));
    }
    let links: Vec<Option<(usize, usize)>> = network.links.iter().map(|l| Some((l.tail, l.head))).collect();
    Ok(IndicatorMatrices::from_parts(n, &links, &demands.pairs))
}

/// A violated model invariant.
#[derive(Debug, Clone, PartialEq)]
pub enum Issue {
    DuplicateNodeId(usize),
    DuplicateLinkId(usize),
    NonContiguousIds { kind: &'static str, expected: usize, found: usize },
    NegativeCapacity(Element),
    NonFinite(String),
    SelfLoop(usize),
    DuplicateLink(usize),
    UnknownEndpoint { link: usize, node: usize },
    LevelsNotDecreasing(Element),
    ProbabilityOutOfRange(Element),
    PdisOutOfRange(f64),
    CoverageMismatch(String),
    WeightsMismatch(String),
    MassMismatch { total: f64, p_dis: f64 },
    DemandUnknownNode { demand: usize },
    DemandDegenerate { demand: usize },
    DemandDuplicate { demand: usize },
    Candidate(String),
    Policy(String),
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Issue::DuplicateNodeId(id) => write!(f, "duplicate node id {id}"),
            Issue::DuplicateLinkId(id) => write!(f, "duplicate link id {id}"),
            Issue::NonContiguousIds { kind, expected, found } => {
                write!(f, "{kind} ids must be 0-based and contiguous: expected {expected}, found {found}")
            }
            Issue::NegativeCapacity(el) => write!(f, "negative capacity at {el}"),
            Issue::NonFinite(what) => write!(f, "non-finite number in {what}"),
            Issue::SelfLoop(l) => write!(f, "link {l} has tail equal to head"),
            Issue::DuplicateLink(l) => write!(f, "link {l} duplicates the endpoints of an earlier link"),
            Issue::UnknownEndpoint { link, node } => write!(f, "link {link} references unknown node {node}"),
            Issue::LevelsNotDecreasing(el) => write!(f, "levels not strictly decreasing at {el}"),
            Issue::ProbabilityOutOfRange(el) => write!(f, "probability outside [0, p_dis] at {el}"),
            Issue::PdisOutOfRange(p) => write!(f, "p_dis {p} outside [0, 1]"),
            Issue::CoverageMismatch(m) => write!(f, "disruption model does not cover the network: {m}"),
            Issue::WeightsMismatch(m) => write!(f, "element weights: {m}"),
            Issue::MassMismatch { total, p_dis } => {
                write!(f, "disruption mass mismatch: levels sum to {total}, p_dis is {p_dis}")
            }
            Issue::DemandUnknownNode { demand } => write!(f, "demand {demand} references an unknown node"),
            Issue::DemandDegenerate { demand } => write!(f, "demand {demand} has origin equal to destination"),
            Issue::DemandDuplicate { demand } => write!(f, "demand {demand} repeats an earlier pair"),
            Issue::Candidate(m) => write!(f, "candidate set: {m}"),
            Issue::Policy(m) => write!(f, "backup policy: {m}"),
        }
    }
}

pub fn validate_network(network: &RiskNetwork) -> Vec<Issue> {
    let mut issues = Vec::new();
    let n = network.nodes.len();

    let mut seen = HashSet::new();
    for (i, node) in network.nodes.iter().enumerate() {
        if !seen.insert(node.id) {
            issues.push(Issue::DuplicateNodeId(node.id));
        } else if node.id != i {
            issues.push(Issue::NonContiguousIds { kind: "node", expected: i, found: node.id });
        }
        if !node.capacity.is_finite() || !node.position.x.is_finite() || !node.position.y.is_finite() {
            issues.push(Issue::NonFinite(format!("node {}", node.id)));
        } else if node.capacity < 0.0 {
            issues.push(Issue::NegativeCapacity(Element::Node(i)));
        }
    }
    let mut seen = HashSet::new();
    let mut pairs = HashSet::new();
    for (j, link) in network.links.iter().enumerate() {
        if !seen.insert(link.id) {
            issues.push(Issue::DuplicateLinkId(link.id));
        } else if link.id != j {
            issues.push(Issue::NonContiguousIds { kind: "link", expected: j, found: link.id });
        }
        for node in [link.tail, link.head] {
            if node >= n {
                issues.push(Issue::UnknownEndpoint { link: j, node });
            }
        }
        if link.tail == link.head {
            issues.push(Issue::SelfLoop(j));
        }
        if !pairs.insert((link.tail, link.head)) {
            issues.push(Issue::DuplicateLink(j));
        }
        if !link.capacity.is_finite() {
            issues.push(Issue::NonFinite(format!("link {j}")));
        } else if link.capacity < 0.0 {
            issues.push(Issue::NegativeCapacity(Element::Link(j)));
        }
    }

    let dm = &network.disruption;
    if !(0.0..=1.0).contains(&dm.p_dis) {
        issues.push(Issue::PdisOutOfRange(dm.p_dis));
    }
    if dm.node_levels.len() != n {
        issues.push(Issue::CoverageMismatch(format!(
            "{} node level lists for {} nodes",
            dm.node_levels.len(),
            n
        )));
    }
    if dm.link_levels.len() != network.links.len() {
        issues.push(Issue::CoverageMismatch(format!(
            "{} link level lists for {} links",
            dm.link_levels.len(),
            network.links.len()
        )));
    }
    if let ElementWeights::Explicit { nodes, links } = &dm.weights {
        if nodes.len() != dm.node_levels.len() || links.len() != dm.link_levels.len() {
            issues.push(Issue::WeightsMismatch("explicit weights must list every node and link".into()));
        } else if nodes.iter().chain(links).any(|w| !w.is_finite() || *w < 0.0) {
            issues.push(Issue::WeightsMismatch("weights must be finite and nonnegative".into()));
        }
    }
    if !issues.is_empty() {
        return issues;
    }

    let mut total = 0.0;
    for el in network.elements() {
        let cap = network.capacity(el);
        let levels = dm.levels(el);
        let mut prev = cap;
        for lv in levels {
            if !lv.capacity.is_finite() || !lv.cond_prob.is_finite() {
                issues.push(Issue::NonFinite(format!("levels of {el}")));
                break;
            }
            if lv.capacity >= prev || lv.capacity < 0.0 {
                issues.push(Issue::LevelsNotDecreasing(el));
                break;
            }
            prev = lv.capacity;
        }
        for k in 1..=levels.len() {
            let p = dm.probability(el, k);
            if !(0.0..=dm.p_dis + 1e-12).contains(&p) {
                issues.push(Issue::ProbabilityOutOfRange(el));
                break;
            }
            total += p;
        }
    }
    if (total - dm.p_dis).abs() > 1e-9 {
        issues.push(Issue::MassMismatch { total, p_dis: dm.p_dis });
    }
    issues
}

pub fn validate_demands(network: &RiskNetwork, demands: &DemandSet) -> Vec<Issue> {
    let mut issues = Vec::new();
    let mut seen = HashSet::new();
    for (l, &(o, d)) in demands.pairs.iter().enumerate() {
        if o >= network.nodes.len() || d >= network.nodes.len() {
            issues.push(Issue::DemandUnknownNode { demand: l });
        } else if o == d {
            issues.push(Issue::DemandDegenerate { demand: l });
        } else if !seen.insert((o, d)) {
            issues.push(Issue::DemandDuplicate { demand: l });
        }
    }
    issues
}
