//! Synthetic case-study networks.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Instance;
use crate::error::VfError;
use crate::extension::{BackupPolicy, CandidateSet};
use crate::network::{DemandSet, DisruptionModel, ElementWeights, Level, Link, Node, Point, RiskNetwork};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseTopology {
    Star,
    MeshStar,
    MultiStar,
}

impl fmt::Display for CaseTopology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CaseTopology::Star => "star",
            CaseTopology::MeshStar => "mesh-star",
            CaseTopology::MultiStar => "multi-star",
        })
    }
}

impl FromStr for CaseTopology {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "star" => Ok(CaseTopology::Star),
            "mesh-star" => Ok(CaseTopology::MeshStar),
            "multi-star" => Ok(CaseTopology::MultiStar),
            _ => Err(format!("unknown topology {s:?}; expected star, mesh-star or multi-star")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CaseParams {
    pub topology: CaseTopology,
    pub nodes: usize,
    pub hubs: usize,
    /// Directed O-D pairs; every pair is also a link.
    pub pairs: usize,
    pub candidates: usize,
}

impl CaseParams {
    /// Star 7/12/24, mesh-star 11/58/26, multi-star 15/64/45 (nodes / pairs / candidates).
    pub fn preset(topology: CaseTopology) -> Self {
        let (nodes, hubs, pairs, candidates) = match topology {
            CaseTopology::Star => (7, 1, 12, 24),
            CaseTopology::MeshStar => (11, 1, 58, 26),
            CaseTopology::MultiStar => (15, 3, 64, 45),
        };
        CaseParams { topology, nodes, hubs, pairs, candidates }
    }

    fn check(&self) -> Result<(), VfError> {
        let bad = |m: String| Err(VfError::Format(m));
        if self.hubs == 0 || self.nodes <= self.hubs || self.candidates == 0 {
            return bad(format!("need at least one hub, one spoke and one candidate: {self:?}"));
        }
        let base = (self.nodes - self.hubs) + self.hubs * (self.hubs - 1) / 2;
        let most = self.nodes * (self.nodes - 1) / 2;
        if self.pairs % 2 != 0 || self.pairs / 2 < base || self.pairs / 2 > most {
            return bad(format!("pairs must be even and within [{}, {}], found {}", 2 * base, 2 * most, self.pairs));
        }
        Ok(())
    }
}

fn round3(v: f64) -> f64 {
    (v * 1000.0).round() / 1000.0
}

fn clamp_point(x: f64, y: f64) -> Point {
    Point::new(round3(x.clamp(0.0, 10.0)), round3(y.clamp(0.0, 10.0)))
}

fn disturbed(c: f64) -> Vec<Level> {
    [(0.75, 0.7), (0.5, 0.15), (0.25, 0.1), (0.0, 0.05)]
        .iter()
        .map(|&(f, p)| Level { capacity: f * c, cond_prob: p })
        .collect()
}

/// Generates a network with hubs, spokes and backup candidates spread over its area.
/// Output depends only on `params` and `seed`.
pub fn gen_case(params: CaseParams, seed: u64) -> Result<Instance, VfError> {
    params.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = params.nodes;
    let hubs: Vec<Point> = match params.hubs {
        1 => vec![Point::new(5.0, 5.0)],
        h => (0..h)
            .map(|i| {
                let a = 2.0 * PI * i as f64 / h as f64 + PI / 2.0;
                clamp_point(5.0 + 2.5 * a.cos(), 5.0 + 2.5 * a.sin())
            })
            .collect(),
    };
    let spokes = n - params.hubs;
    let reach = if params.hubs == 1 { (2.5, 4.8) } else { (1.2, 2.4) };
    let mut positions = hubs.clone();
    let mut parent = Vec::new();
    for i in 0..spokes {
        let hub = i % params.hubs;
        let per_hub = spokes.div_ceil(params.hubs);
        let slot = i / params.hubs;
        let a = 2.0 * PI * (slot as f64 + rng.gen_range(-0.3..0.3)) / per_hub as f64 + hub as f64;
        let r = rng.gen_range(reach.0..reach.1);
        positions.push(clamp_point(hubs[hub].x + r * a.cos(), hubs[hub].y + r * a.sin()));
        parent.push(hub);
    }

    let nodes: Vec<Node> = positions
        .iter()
        .enumerate()
        .map(|(id, &position)| Node {
            id,
            position,
            capacity: if id < params.hubs { 10.0 } else { rng.gen_range(4..=8) as f64 },
        })
        .collect();

    // undirected corridors: hub-spoke, hub-hub, then the shortest remaining pairs
    let mut corridors: Vec<(usize, usize)> = (0..spokes).map(|i| (parent[i], params.hubs + i)).collect();
    for a in 0..params.hubs {
        for b in a + 1..params.hubs {
            corridors.push((a, b));
        }
    }
    let mut rest: Vec<(usize, usize)> = (0..n)
        .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
        .filter(|p| !corridors.contains(p))
        .collect();
    rest.sort_by(|p, q| positions[p.0].dist(&positions[p.1]).total_cmp(&positions[q.0].dist(&positions[q.1])));
    corridors.extend(rest.into_iter().take(params.pairs / 2 - corridors.len()));

    let mut links = Vec::new();
    for &(a, b) in &corridors {
        for (tail, head) in [(a, b), (b, a)] {
            links.push(Link { id: links.len(), tail, head, capacity: rng.gen_range(4..=8) as f64 });
        }
    }
    let demands = DemandSet::new(links.iter().map(|l| (l.tail, l.head)).collect());

    // even candidates sit beside a corridor, odd ones anywhere in the bounding box of the nodes
    let (lo_x, hi_x) = positions.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |a, p| (a.0.min(p.x), a.1.max(p.x)));
    let (lo_y, hi_y) = positions.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |a, p| (a.0.min(p.y), a.1.max(p.y)));
    let candidates: Vec<Point> = (0..params.candidates)
        .map(|i| {
            if i % 2 == 1 {
                return clamp_point(rng.gen_range(lo_x..=hi_x), rng.gen_range(lo_y..=hi_y));
            }
            let (a, b) = corridors[rng.gen_range(0..corridors.len())];
            let (p, q) = (positions[a], positions[b]);
            let along = rng.gen_range(0.3..0.7);
            let off = rng.gen_range(0.1..0.4) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            let (dx, dy) = (q.x - p.x, q.y - p.y);
            clamp_point(p.x + along * dx - off * dy, p.y + along * dy + off * dx)
        })
        .collect();

    let node_levels = nodes.iter().map(|v| disturbed(v.capacity)).collect();
    let link_levels = links.iter().map(|l| disturbed(l.capacity)).collect();
    let network = RiskNetwork {
        nodes,
        links,
        disruption: DisruptionModel { p_dis: 1.0, node_levels, link_levels, weights: ElementWeights::Uniform },
    };
    let policy = BackupPolicy::default_for(&network);
    let node_names = (0..n).map(|i| Some(if i < params.hubs { format!("hub{i}") } else { format!("spoke{}", i - params.hubs) })).collect();
    Ok(Instance {
        network,
        node_names,
        demands,
        candidates: Some(CandidateSet::uniform(candidates, &[0.0, 1.0, 2.0], &[0.0, 4.0, 6.0])),
        policy: Some(BackupPolicy { rho_adj: round3(policy.rho_adj), ..policy }),
    })
}
