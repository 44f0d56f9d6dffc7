//! Redundancy evaluations of a built reserve: throughput gains, detour counts and landing distance.

use vertiflow_lp::Solver;

use crate::design::{evaluate_capacities, original_throughputs, DesignSpec};
use crate::error::VfError;
use crate::network::Point;

#[derive(Debug, Clone, PartialEq)]
pub struct EnhancementReport {
    /// Gains weighted by the conditional level probabilities of each element.
    pub delta: f64,
    /// Gains weighted by the scenario probabilities.
    pub delta_bar: f64,
    /// (scenario label, S*_ext - S*_orig) in scenario order.
    pub per_scenario: Vec<(String, f64)>,
}

/// Computes the report from throughputs already known for every scenario.
pub fn enhancement_from_throughputs(spec: &DesignSpec, original: &[f64], extended: &[f64]) -> Result<EnhancementReport, VfError> {
    let n = spec.scenarios.len();
    if original.len() != n || extended.len() != n {
        return Err(VfError::Shape(format!(
            "throughput lists have {} and {} entries, expected {n}",
            original.len(),
            extended.len()
        )));
    }
    let mut delta = 0.0;
    let mut delta_bar = 0.0;
    let mut per_scenario = Vec::with_capacity(n);
    for (s, sc) in spec.scenarios.iter().enumerate() {
        let gain = extended[s] - original[s];
        per_scenario.push((sc.label(), gain));
        let Some(el) = sc.element else { continue };
        delta_bar += sc.probability * gain;
        let mass = spec.network.disruption.element_mass(el);
        if mass > 0.0 {
            delta += sc.probability / mass * gain;
        }
    }
    Ok(EnhancementReport { delta, delta_bar, per_scenario })
}

pub fn throughput_enhancement(spec: &DesignSpec, capacities: &[f64], solver: &dyn Solver) -> Result<EnhancementReport, VfError> {
    let original = original_throughputs(spec, solver)?;
    let extended = evaluate_capacities(spec, capacities, solver)?.per_scenario;
    enhancement_from_throughputs(spec, &original, &extended)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiversityReport {
    /// Number of single-stop alternatives plus the direct link, one entry per O-D pair.
    pub counts: Vec<usize>,
}

fn pair_link(spec: &DesignSpec, o: usize, d: usize) -> Result<usize, VfError> {
    spec.network.link_between(o, d).ok_or(VfError::PairWithoutLink(o, d))
}

/// Counts, per O-D pair, the direct link plus every built backup that qualifies as its detour.
pub fn travel_diversity(spec: &DesignSpec, capacities: &[f64]) -> Result<DiversityReport, VfError> {
    check_caps(spec, capacities)?;
    let counts = spec
        .demands
        .pairs
        .iter()
        .map(|&(o, d)| {
            let e = pair_link(spec, o, d)?;
            Ok(1 + spec.topology.detours[e].iter().filter(|&&c| capacities[c] > 0.0).count())
        })
        .collect::<Result<_, VfError>>()?;
    Ok(DiversityReport { counts })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageReport {
    /// (maximum landing distance in km, parameter t* along the link) per O-D pair.
    pub per_pair: Vec<(f64, f64)>,
}

/// max over x on segment [a, b] of the distance to the nearest point, with the smallest maximizing t.
pub fn segment_max_min(a: Point, b: Point, points: &[Point]) -> (f64, f64) {
    if points.is_empty() {
        return (f64::INFINITY, 0.0);
    }
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    // |x(t) - p|^2 = c + 2 g t + L t^2 with L shared by every point
    let coef: Vec<(f64, f64)> = points
        .iter()
        .map(|p| {
            let (ux, uy) = (a.x - p.x, a.y - p.y);
            (ux * ux + uy * uy, ux * dx + uy * dy)
        })
        .collect();
    let len2 = dx * dx + dy * dy;
    let nearest = |t: f64| {
        coef.iter()
            .map(|&(c, g)| c + 2.0 * g * t + len2 * t * t)
            .fold(f64::INFINITY, f64::min)
            .max(0.0)
            .sqrt()
    };
    if len2 == 0.0 {
        return (nearest(0.0), 0.0);
    }
    let mut ts = vec![0.0, 1.0];
    for i in 0..coef.len() {
        for j in i + 1..coef.len() {
            let dg = coef[i].1 - coef[j].1;
            if dg != 0.0 {
                let t = (coef[j].0 - coef[i].0) / (2.0 * dg);
                if (0.0..=1.0).contains(&t) {
                    ts.push(t);
                }
            }
        }
    }
    ts.sort_by(f64::total_cmp);
    let mut best = (f64::NEG_INFINITY, 0.0);
    for t in ts {
        let v = nearest(t);
        if v > best.0 + 1e-12 {
            best = (v, t);
        }
    }
    best
}

/// Landing distance along each O-D pair's link, with original nodes and built backups as landing sites.
pub fn max_landing_distance(spec: &DesignSpec, capacities: &[f64]) -> Result<CoverageReport, VfError> {
    check_caps(spec, capacities)?;
    let net = &spec.network;
    let sites: Vec<Point> = net
        .nodes
        .iter()
        .map(|v| v.position)
        .chain(
            spec.candidates
                .positions
                .iter()
                .zip(capacities)
                .filter(|(_, &c)| c > 0.0)
                .map(|(p, _)| *p),
        )
        .collect();
    let per_pair = spec
        .demands
        .pairs
        .iter()
        .map(|&(o, d)| {
            let e = pair_link(spec, o, d)?;
            let l = &net.links[e];
            Ok(segment_max_min(net.nodes[l.tail].position, net.nodes[l.head].position, &sites))
        })
        .collect::<Result<_, VfError>>()?;
    Ok(CoverageReport { per_pair })
}

fn check_caps(spec: &DesignSpec, capacities: &[f64]) -> Result<(), VfError> {
    if capacities.len() != spec.num_candidates() {
        return Err(VfError::Shape(format!(
            "{} backup capacities for {} candidates",
            capacities.len(),
            spec.num_candidates()
        )));
    }
    Ok(())
}
