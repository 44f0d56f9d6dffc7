mod common;

use proptest::prelude::*;
use vertiflow::design::*;
use vertiflow::extension::qualify_detour;
use vertiflow::metrics::*;
use vertiflow::network::*;
use vertiflow::VfError;
use vertiflow_lp::BundledSolver;

fn sampled(a: Point, b: Point, sites: &[Point], n: usize) -> f64 {
    (0..=n)
        .map(|i| {
            let t = i as f64 / n as f64;
            let x = Point::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y));
            sites.iter().map(|p| x.dist(p)).fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

/// Example 2 with O-D pairs equal to the links.
fn link_pair_spec() -> DesignSpec {
    let (net, _, cands, policy) = common::example2();
    let pairs = net.links.iter().map(|l| (l.tail, l.head)).collect();
    DesignSpec::new(net, DemandSet::new(pairs), cands, policy, 10.0, 0.01).unwrap()
}

#[test]
fn single_scenario_gain() {
    let (mut net, demands, cands, policy) = common::example2();
    net.disruption = DisruptionModel::from_absolute(
        0.2,
        vec![vec![], vec![], vec![], vec![(5.0, 0.2)]],
        vec![vec![]; 4],
    );
    let spec = DesignSpec::new(net, demands, cands, policy, 10.0, 0.01).unwrap();
    let rep = throughput_enhancement(&spec, &[2.0], &BundledSolver::default()).unwrap();
    assert!((rep.delta - 2.0).abs() < 1e-9);
    assert!((rep.delta_bar - 0.4).abs() < 1e-9);
    assert_eq!(rep.per_scenario[1].0, "v3@1");
}

#[test]
fn zero_reserve_has_no_gain() {
    let spec = common::example2_spec(10.0, 0.01);
    let rep = throughput_enhancement(&spec, &[0.0], &BundledSolver::default()).unwrap();
    assert_eq!(rep.delta, 0.0);
    assert_eq!(rep.delta_bar, 0.0);
    assert!(rep.per_scenario.iter().all(|g| g.1 == 0.0));
}

#[test]
fn equal_gains_relate_the_two_weightings() {
    let spec = common::example2_spec(10.0, 0.01);
    let n = spec.scenarios.len();
    let orig = vec![1.0; n];
    let ext: Vec<f64> = spec.scenarios.iter().map(|s| if s.element.is_some() { 4.0 } else { 1.0 }).collect();
    let rep = enhancement_from_throughputs(&spec, &orig, &ext).unwrap();
    let p_dis = spec.network.disruption.p_dis;
    let elements = (spec.network.nodes.len() + spec.network.links.len()) as f64;
    // every element of Example 1 carries disruption mass, so uniform weights apply
    assert!((rep.delta_bar - rep.delta * p_dis / elements).abs() < 1e-9, "{rep:?}");
}

#[test]
fn diversity_counts() {
    let spec = link_pair_spec();
    assert_eq!(travel_diversity(&spec, &[0.0]).unwrap().counts, vec![1, 1, 1, 1]);
    assert_eq!(travel_diversity(&spec, &[2.0]).unwrap().counts, vec![1, 1, 2, 1]);
    let bad = common::example2_spec(10.0, 0.01);
    assert!(matches!(travel_diversity(&bad, &[2.0]), Err(VfError::PairWithoutLink(0, 3))));
}

#[test]
fn two_detours_count_three() {
    let (net, _, _, policy) = common::example2();
    let cands = vertiflow::extension::CandidateSet::uniform(
        vec![Point::new(3.5, 1.2), Point::new(3.3, 0.8)],
        &[0.0, 1.0, 2.0],
        &[0.0, 4.0, 6.0],
    );
    let pairs = net.links.iter().map(|l| (l.tail, l.head)).collect();
    let spec = DesignSpec::new(net, DemandSet::new(pairs), cands, policy, 10.0, 0.01).unwrap();
    assert_eq!(travel_diversity(&spec, &[1.0, 2.0]).unwrap().counts[2], 3);
    assert_eq!(travel_diversity(&spec, &[0.0, 2.0]).unwrap().counts[2], 2);
}

#[test]
fn landing_distance_examples() {
    let (a, b) = (Point::new(0.0, 0.0), Point::new(4.0, 0.0));
    let (v, t) = segment_max_min(a, b, &[a, b]);
    assert!((v - 2.0).abs() < 1e-12 && (t - 0.5).abs() < 1e-12);
    let sites = [a, b, Point::new(2.0, 1.0)];
    let (v, t) = segment_max_min(a, b, &sites);
    assert!((v - 1.25).abs() < 1e-12 && (t - 5.0 / 16.0).abs() < 1e-12, "{v} {t}");
    assert!((sampled(a, b, &sites, 1_000_000) - v).abs() < 1e-6);
    let (v, t) = segment_max_min(a, a, &[Point::new(3.0, 4.0)]);
    assert_eq!((v, t), (5.0, 0.0));
}

#[test]
fn landing_distance_on_example2() {
    let spec = link_pair_spec();
    let none = max_landing_distance(&spec, &[0.0]).unwrap();
    let built = max_landing_distance(&spec, &[2.0]).unwrap();
    for (i, l) in spec.network.links.iter().enumerate() {
        let len = spec.network.nodes[l.tail].position.dist(&spec.network.nodes[l.head].position);
        assert!((none.per_pair[i].0 - len / 2.0).abs() < 1e-12);
        assert!(built.per_pair[i].0 <= none.per_pair[i].0 + 1e-12);
    }
    assert!(built.per_pair[2].0 < none.per_pair[2].0);
}

#[test]
fn diversity_matches_recount_after_design() {
    let spec = link_pair_spec();
    let r = solve_design(&spec, Method::BruteForce, &BundledSolver::default()).unwrap();
    let counts = travel_diversity(&spec, &r.capacities).unwrap().counts;
    for (i, &(o, d)) in spec.demands.pairs.iter().enumerate() {
        let e = spec.network.link_between(o, d).unwrap();
        let l = &spec.network.links[e];
        let (a, b) = (spec.network.nodes[l.tail].position, spec.network.nodes[l.head].position);
        let extra = (0..spec.num_candidates())
            .filter(|&c| r.capacities[c] > 0.0)
            .filter(|&c| qualify_detour(&a, &b, &spec.candidates.positions[c], &spec.policy).unwrap().0)
            .count();
        assert_eq!(counts[i], 1 + extra);
    }
}

fn arb_point() -> impl Strategy<Value = Point> {
    (-10.0..10.0f64, -10.0..10.0f64).prop_map(|(x, y)| Point::new(x, y))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn envelope_matches_sampling(a in arb_point(), b in arb_point(), sites in prop::collection::vec(arb_point(), 1..=10)) {
        let (v, t) = segment_max_min(a, b, &sites);
        prop_assert!((0.0..=1.0).contains(&t));
        prop_assert!((sampled(a, b, &sites, 100_000) - v).abs() < 1e-4);
    }

    #[test]
    fn more_sites_never_farther(a in arb_point(), b in arb_point(), sites in prop::collection::vec(arb_point(), 1..=6), extra in arb_point()) {
        let before = segment_max_min(a, b, &sites).0;
        let mut more = sites.clone();
        more.push(extra);
        prop_assert!(segment_max_min(a, b, &more).0 <= before + 1e-12);
    }
}
