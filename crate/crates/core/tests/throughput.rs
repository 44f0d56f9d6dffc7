mod common;

use nalgebra::DMatrix;
use proptest::prelude::*;
use vertiflow::extension::{build_backup_topology, extend_scenario};
use vertiflow::network::*;
use vertiflow::throughput::*;
use vertiflow::VfError;
use vertiflow_lp::BundledSolver;

fn solver() -> BundledSolver {
    BundledSolver::default()
}

fn scenario(net: &RiskNetwork, el: Option<Element>, level: usize) -> Scenario {
    enumerate_scenarios(net).unwrap().into_iter().find(|s| s.element == el && s.level == level).unwrap()
}

#[test]
fn example1_lp_shape() {
    let (net, demands) = common::example1();
    let ind = build_incidence(&net, &demands).unwrap();
    let lp = build_throughput_lp(&Scenario::undisturbed(&net), &ind, net.default_big_m()).unwrap();
    assert_eq!(lp.num_vars, 36);
    assert_eq!(lp.num_rows(), 12 + 4 + 4 + 3 + 24);
    assert_eq!(net.default_big_m(), 50.0);
    assert!(lp.upper[24..].iter().all(|&u| u == 0.0));
}

#[test]
fn example1_throughputs() {
    let (net, demands) = common::example1();
    let ind = build_incidence(&net, &demands).unwrap();
    let m = net.default_big_m();
    for (el, level, expected) in [
        (None, 0, 16.0),
        (Some(Element::Node(3)), 1, 13.0),
        (Some(Element::Link(2)), 1, 16.0),
    ] {
        let s = scenario(&net, el, level);
        let r = throughput(&s, &ind, m, &solver()).unwrap();
        assert!((r.throughput - expected).abs() < 1e-9, "{}: {}", s.label(), r.throughput);
        assert!(r.verified);
        assert!(r.report.max_residual() <= 1e-6);
        let oracle = common::oracle_throughput(4, &common::endpoints(&net), &s.link_caps, &s.node_caps, &demands.pairs);
        assert!((r.throughput - oracle).abs() < 1e-6);
    }
}

#[test]
fn zeroed_duals_leave_the_full_gap() {
    let (net, demands) = common::example1();
    let ind = build_incidence(&net, &demands).unwrap();
    let s = Scenario::undisturbed(&net);
    let r = throughput(&s, &ind, 50.0, &solver()).unwrap();
    let zero = DualCertificate::zeros(4, 4, 3);
    let rep = verify_certificate(&r.flow, &zero, &ind, &s.link_caps, &s.node_caps, 50.0, 1e-6).unwrap();
    assert!(!rep.verified);
    assert!((rep.gap_residual - 16.0).abs() < 1e-9);
}

#[test]
fn shape_mismatch_is_an_error() {
    let (net, demands) = common::example1();
    let ind = build_incidence(&net, &demands).unwrap();
    let s = Scenario::undisturbed(&net);
    let r = throughput(&s, &ind, 50.0, &solver()).unwrap();
    let bad = DualCertificate::zeros(3, 4, 3);
    let err = verify_certificate(&r.flow, &bad, &ind, &s.link_caps, &s.node_caps, 50.0, 1e-6).unwrap_err();
    assert!(matches!(err, VfError::Shape(_)));
}

#[test]
fn empty_demand_set() {
    let (net, _) = common::example1();
    let ind = build_incidence(&net, &DemandSet::default()).unwrap();
    let r = throughput(&Scenario::undisturbed(&net), &ind, 50.0, &solver()).unwrap();
    assert_eq!(r.throughput, 0.0);
    assert!(r.verified);
}

#[test]
fn zero_capacity_network() {
    let (net, demands) = common::example1();
    let ind = build_incidence(&net, &demands).unwrap();
    let mut s = Scenario::undisturbed(&net);
    s.link_caps = vec![0.0; 4];
    s.node_caps = vec![0.0; 4];
    let r = throughput(&s, &ind, 50.0, &solver()).unwrap();
    assert_eq!(r.throughput, 0.0);
    assert!(r.flow.x.iter().all(|&v| v == 0.0));
    assert!(r.verified);
    assert!(r.report.gap_residual <= 1e-12);
}

#[test]
fn example2_extended_throughputs() {
    let (net, demands, cands, policy) = common::example2();
    let topo = build_backup_topology(&net, &cands, &policy).unwrap();
    let m = net.default_big_m();

    let v4 = scenario(&net, Some(Element::Node(3)), 1);
    let ext = extend_scenario(&net, &demands, &v4, &topo, &[2.0]).unwrap();
    assert_eq!(ext.node_caps, vec![10.0, 15.0, 15.0, 7.0]);
    let r = extended_throughput(&ext, m, &solver()).unwrap();
    assert!((r.throughput - 15.0).abs() < 1e-9);
    assert!(r.verified);
    let oracle = common::oracle_throughput(4, &common::endpoints(&net), &ext.link_caps, &ext.node_caps, &demands.pairs);
    assert!((r.throughput - oracle).abs() < 1e-6);

    let e3 = scenario(&net, Some(Element::Link(2)), 1);
    let ext = extend_scenario(&net, &demands, &e3, &topo, &[2.0]).unwrap();
    assert_eq!(ext.link_caps, vec![8.0, 4.0, 2.0, 8.0, 2.0, 2.0, 2.0, 2.0]);
    assert_eq!(ext.node_caps, vec![10.0, 15.0, 15.0, 10.0, 2.0]);
    let ind = ext.indicators();
    // only v2 -> v5 and v5 -> v4 are live backup columns
    let live: Vec<usize> = (4..8).filter(|&j| ind.e.column(j).iter().any(|&v| v != 0.0)).collect();
    assert_eq!(ind.link_endpoints()[live[0]], Some((1, 4)));
    assert_eq!(ind.link_endpoints()[live[1]], Some((4, 3)));
    assert_eq!(live.len(), 2);
    let r = extended_throughput(&ext, m, &solver()).unwrap();
    assert!(r.verified);
    assert!(r.throughput >= 16.0 - 1e-9);
}

#[test]
fn zero_reserve_changes_nothing() {
    let (net, demands, cands, policy) = common::example2();
    let topo = build_backup_topology(&net, &cands, &policy).unwrap();
    let ind = build_incidence(&net, &demands).unwrap();
    for s in enumerate_scenarios(&net).unwrap() {
        let ext = extend_scenario(&net, &demands, &s, &topo, &[0.0]).unwrap();
        let a = extended_throughput(&ext, 50.0, &solver()).unwrap().throughput;
        let b = throughput(&s, &ind, 50.0, &solver()).unwrap().throughput;
        assert!((a - b).abs() < 1e-9, "{}", s.label());
    }
}

/// Small random network given as endpoints, capacities and demands.
#[derive(Debug, Clone)]
pub struct Small {
    pub n: usize,
    pub links: Vec<(usize, usize)>,
    pub link_caps: Vec<f64>,
    pub node_caps: Vec<f64>,
    pub demands: Vec<(usize, usize)>,
}

fn small() -> impl Strategy<Value = Small> {
    (2usize..=5).prop_flat_map(|n| {
        (
            proptest::collection::vec((0..n, 0..n), 1..=8),
            proptest::collection::vec(0u32..12, 8),
            proptest::collection::vec(0u32..20, n),
            proptest::collection::vec((0..n, 0..n), 0..=5),
        )
            .prop_map(move |(lp, lc, nc, dp)| {
                let mut links = Vec::new();
                for (t, h) in lp {
                    if t != h && !links.contains(&(t, h)) {
                        links.push((t, h));
                    }
                }
                let mut demands = Vec::new();
                for (o, d) in dp {
                    if o != d && !demands.contains(&(o, d)) {
                        demands.push((o, d));
                    }
                }
                let link_caps = (0..links.len()).map(|j| lc[j] as f64 / 2.0).collect();
                Small { n, links, link_caps, node_caps: nc.iter().map(|&c| c as f64).collect(), demands }
            })
    })
}

fn flow_net(s: &Small, m: f64) -> FlowNetwork {
    FlowNetwork {
        num_nodes: s.n,
        links: s.links.iter().map(|&l| Some(l)).collect(),
        demands: s.demands.clone(),
        link_caps: s.link_caps.clone(),
        node_caps: s.node_caps.clone(),
        big_m: m,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(120))]

    #[test]
    fn matrix_lp_matches_path_oracle(s in small()) {
        let m: f64 = s.node_caps.iter().sum::<f64>().max(1.0);
        let r = solve_flow(&flow_net(&s, m), &solver()).unwrap();
        let oracle = common::oracle_throughput(s.n, &s.links, &s.link_caps, &s.node_caps, &s.demands);
        prop_assert!((r.throughput - oracle).abs() <= 1e-6, "lp {} oracle {}", r.throughput, oracle);
        prop_assert!(r.verified, "{:?}", r.report);
        let f = &r.flow;
        prop_assert!(f.x.iter().all(|&v| v >= -1e-9));
        prop_assert!(f.d1.iter().all(|&v| v >= -1e-9));
        prop_assert!(f.d2.iter().all(|&v| v <= 1e-9));
        for l in 0..s.demands.len() {
            prop_assert!((f.d1.column(l).sum() + f.d2.column(l).sum()).abs() <= 1e-7);
        }
    }

    #[test]
    fn throughput_shrinks_with_capacity(s in small(), which in 0usize..13, frac in 0.0f64..1.0) {
        let m: f64 = s.node_caps.iter().sum::<f64>().max(1.0);
        let full = solve_flow(&flow_net(&s, m), &solver()).unwrap().throughput;
        let mut cut = s.clone();
        if which < cut.links.len() {
            cut.link_caps[which] *= frac;
        } else {
            let i = which % cut.n;
            cut.node_caps[i] *= frac;
        }
        let lower = solve_flow(&flow_net(&cut, m), &solver()).unwrap().throughput;
        prop_assert!(lower <= full + 1e-9);
    }
}

#[test]
fn tampered_flow_fails_primal_check() {
    let (net, demands) = common::example1();
    let ind = build_incidence(&net, &demands).unwrap();
    let s = Scenario::undisturbed(&net);
    let r = throughput(&s, &ind, 50.0, &solver()).unwrap();
    let mut flow = r.flow.clone();
    flow.x += DMatrix::from_element(4, 3, 1.0);
    let rep = verify_certificate(&flow, &r.certificate, &ind, &s.link_caps, &s.node_caps, 50.0, 1e-6).unwrap();
    assert!(!rep.verified);
    assert!(rep.primal_residual >= 1.0 - 1e-9);
}
