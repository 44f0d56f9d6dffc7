#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use vertiflow::extension::{BackupPolicy, CandidateSet};
use vertiflow::network::{DemandSet, DisruptionModel, Link, Node, Point, RiskNetwork};
use vertiflow_lp::{solve_lp, LpModel, LpStatus, Relation, SolverConfig};

/// Four-node worked example: v1..v4 as nodes 0..3.
pub fn example1() -> (RiskNetwork, DemandSet) {
    let pos = [(0.0, 0.0), (2.0, 1.0), (2.0, -1.0), (4.0, 0.0)];
    let caps = [10.0, 15.0, 15.0, 10.0];
    let nodes = (0..4)
        .map(|i| Node { id: i, position: Point::new(pos[i].0, pos[i].1), capacity: caps[i] })
        .collect();
    let ends = [(0, 1, 8.0), (0, 2, 4.0), (1, 3, 4.0), (2, 3, 8.0)];
    let links = ends
        .iter()
        .enumerate()
        .map(|(j, &(tail, head, capacity))| Link { id: j, tail, head, capacity })
        .collect();
    let disruption = DisruptionModel::from_absolute(
        0.8,
        vec![
            vec![(5.0, 0.05), (0.0, 0.05)],
            vec![(10.0, 0.1), (5.0, 0.05)],
            vec![(10.0, 0.1), (5.0, 0.05)],
            vec![(5.0, 0.05), (0.0, 0.05)],
        ],
        vec![
            vec![(4.0, 0.05), (0.0, 0.05)],
            vec![(2.0, 0.05)],
            vec![(2.0, 0.05)],
            vec![(4.0, 0.05), (0.0, 0.05)],
        ],
    );
    let net = RiskNetwork { nodes, links, disruption };
    (net, DemandSet::new(vec![(0, 1), (0, 3), (2, 3)]))
}

/// Example 1 plus one candidate v5 that qualifies as a detour for v2 -> v4 only.
pub fn example2() -> (RiskNetwork, DemandSet, CandidateSet, BackupPolicy) {
    let (net, demands) = example1();
    let cands = CandidateSet::uniform(vec![Point::new(3.5, 1.2)], &[0.0, 1.0, 2.0], &[0.0, 4.0, 6.0]);
    let policy = BackupPolicy::default_for(&net);
    (net, demands, cands, policy)
}

/// Simple directed paths from `o` to `d`, as lists of link indices.
pub fn simple_paths(num_nodes: usize, links: &[(usize, usize)], o: usize, d: usize) -> Vec<Vec<usize>> {
    fn dfs(
        at: usize,
        d: usize,
        links: &[(usize, usize)],
        seen: &mut Vec<bool>,
        path: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if at == d {
            out.push(path.clone());
            return;
        }
        for (j, &(t, h)) in links.iter().enumerate() {
            if t == at && !seen[h] {
                seen[h] = true;
                path.push(j);
                dfs(h, d, links, seen, path, out);
                path.pop();
                seen[h] = false;
            }
        }
    }
    let mut seen = vec![false; num_nodes];
    seen[o] = true;
    let mut out = Vec::new();
    dfs(o, d, links, &mut seen, &mut Vec::new(), &mut out);
    out
}

/// Path formulation: rows of `a` are link caps then node caps; one column per path.
pub struct PathLp {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub paths: Vec<(usize, Vec<usize>)>,
}

pub fn path_lp(
    num_nodes: usize,
    links: &[(usize, usize)],
    link_caps: &[f64],
    node_caps: &[f64],
    demands: &[(usize, usize)],
) -> PathLp {
    let mut paths = Vec::new();
    for (l, &(o, d)) in demands.iter().enumerate() {
        for p in simple_paths(num_nodes, links, o, d) {
            paths.push((l, p));
        }
    }
    let ne = links.len();
    let mut a = DMatrix::zeros(ne + num_nodes, paths.len());
    for (k, (_, p)) in paths.iter().enumerate() {
        for &j in p {
            a[(j, k)] += 1.0;
            // a node is charged once per incident link used
            a[(ne + links[j].0, k)] += 1.0;
            a[(ne + links[j].1, k)] += 1.0;
        }
    }
    let b = DVector::from_iterator(ne + num_nodes, link_caps.iter().chain(node_caps).copied());
    PathLp { a, b, paths }
}

/// Maximum total path flow by enumerating every vertex of {f >= 0, A f <= b}.
pub fn vertex_enumeration_max(a: &DMatrix<f64>, b: &DVector<f64>) -> f64 {
    let (m, n) = a.shape();
    if n == 0 {
        return 0.0;
    }
    // constraint k < m is row k of A, k >= m is -f_{k-m} <= 0
    let total = m + n;
    let row = |k: usize| -> (Vec<f64>, f64) {
        if k < m {
            ((0..n).map(|j| a[(k, j)]).collect(), b[k])
        } else {
            let mut r = vec![0.0; n];
            r[k - m] = -1.0;
            (r, 0.0)
        }
    };
    let mut best = f64::NEG_INFINITY;
    let mut idx: Vec<usize> = (0..n).collect();
    loop {
        let mut sys = DMatrix::zeros(n, n);
        let mut rhs = DVector::zeros(n);
        for (r, &k) in idx.iter().enumerate() {
            let (coef, v) = row(k);
            for j in 0..n {
                sys[(r, j)] = coef[j];
            }
            rhs[r] = v;
        }
        if let Some(f) = sys.clone().lu().solve(&rhs) {
            let ok = (sys * &f - &rhs).amax() < 1e-9
                && f.iter().all(|&v| v >= -1e-9)
                && (a * &f - b).iter().all(|&v| v <= 1e-9);
            if ok {
                best = best.max(f.sum());
            }
        }
        // next combination
        let mut i = n;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if idx[i] < total - n + i {
                idx[i] += 1;
                for t in i + 1..n {
                    idx[t] = idx[t - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Path LP optimum through the bundled simplex; independent of the matrix formulation.
pub fn path_lp_max(p: &PathLp) -> f64 {
    let (m, n) = p.a.shape();
    let mut lp = LpModel::new();
    for k in 0..n {
        lp.add_var(format!("f{k}"), 1.0, 0.0, f64::INFINITY);
    }
    for i in 0..m {
        let coeffs: Vec<(usize, f64)> = (0..n).filter(|&k| p.a[(i, k)] != 0.0).map(|k| (k, p.a[(i, k)])).collect();
        lp.add_row(format!("r{i}"), coeffs, Relation::Le, p.b[i]);
    }
    let s = solve_lp(&lp, &SolverConfig::default()).unwrap();
    assert_eq!(s.status, LpStatus::Optimal);
    s.objective
}

/// Oracle throughput of an original-style network.
pub fn oracle_throughput(
    num_nodes: usize,
    links: &[(usize, usize)],
    link_caps: &[f64],
    node_caps: &[f64],
    demands: &[(usize, usize)],
) -> f64 {
    path_lp_max(&path_lp(num_nodes, links, link_caps, node_caps, demands))
}

pub fn endpoints(net: &RiskNetwork) -> Vec<(usize, usize)> {
    net.links.iter().map(|l| (l.tail, l.head)).collect()
}

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vertiflow::design::DesignSpec;
use vertiflow::network::{ElementWeights, Level};

/// Example 2 as a design problem with the given budget and valuation.
pub fn example2_spec(budget: f64, w: f64) -> DesignSpec {
    let (net, demands, cands, policy) = example2();
    DesignSpec::new(net, demands, cands, policy, budget, w).unwrap()
}

/// Small random design problem whose candidates sit beside random links.
pub fn random_spec(seed: u64) -> DesignSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(4..=5);
    let nodes: Vec<Node> = (0..n)
        .map(|i| Node {
            id: i,
            position: Point::new(rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0)),
            capacity: rng.gen_range(3..=10) as f64,
        })
        .collect();
    let mut ends: Vec<(usize, usize)> = Vec::new();
    let want = rng.gen_range(4..=6);
    while ends.len() < want {
        let (t, h) = (rng.gen_range(0..n), rng.gen_range(0..n));
        if t != h && !ends.contains(&(t, h)) {
            ends.push((t, h));
        }
    }
    let links: Vec<Link> = ends
        .iter()
        .enumerate()
        .map(|(j, &(tail, head))| Link { id: j, tail, head, capacity: rng.gen_range(2..=8) as f64 })
        .collect();
    let mut pairs = Vec::new();
    let nd = rng.gen_range(2..=3);
    while pairs.len() < nd {
        let (o, d) = if rng.gen_bool(0.6) {
            ends[rng.gen_range(0..ends.len())]
        } else {
            (rng.gen_range(0..n), rng.gen_range(0..n))
        };
        if o != d && !pairs.contains(&(o, d)) {
            pairs.push((o, d));
        }
    }
    let lv = |cap: f64, rng: &mut ChaCha8Rng| {
        if rng.gen_bool(0.5) {
            vec![Level { capacity: (cap / 2.0).floor(), cond_prob: 0.7 }, Level { capacity: 0.0, cond_prob: 0.3 }]
        } else {
            vec![Level { capacity: 0.0, cond_prob: 1.0 }]
        }
    };
    let node_levels = nodes.iter().map(|v| lv(v.capacity, &mut rng)).collect();
    let link_levels = links.iter().map(|l| lv(l.capacity, &mut rng)).collect();
    let p_dis = rng.gen_range(3..=9) as f64 / 10.0;
    let net = RiskNetwork {
        nodes,
        links,
        disruption: DisruptionModel { p_dis, node_levels, link_levels, weights: ElementWeights::Uniform },
    };
    let nc = rng.gen_range(1..=4);
    let positions: Vec<Point> = (0..nc)
        .map(|_| {
            let l = &net.links[rng.gen_range(0..net.links.len())];
            let (a, b) = (net.nodes[l.tail].position, net.nodes[l.head].position);
            let off = rng.gen_range(0.15..0.45) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            let (dx, dy) = (b.x - a.x, b.y - a.y);
            Point::new((a.x + b.x) / 2.0 - dy * off, (a.y + b.y) / 2.0 + dx * off)
        })
        .collect();
    let levels = [0.0, rng.gen_range(1..=2) as f64, rng.gen_range(3..=4) as f64];
    let cands = CandidateSet::uniform(positions, &levels, &[0.0, 4.0, 6.0]);
    let policy = BackupPolicy::default_for(&net);
    let budget = rng.gen_range(0..=14) as f64;
    let w = [0.01, 0.05, 0.2][rng.gen_range(0..3)];
    DesignSpec::new(net, DemandSet::new(pairs), cands, policy, budget, w).unwrap()
}
