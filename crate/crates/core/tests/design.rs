mod common;

use std::time::Instant;

use nalgebra::DMatrix;
use vertiflow::design::*;
use vertiflow::network::*;
use vertiflow::VfError;
use vertiflow_lp::BundledSolver;

fn solver() -> BundledSolver {
    BundledSolver::default()
}

#[test]
fn selection_capacity_and_cost() {
    let (_, _, cands, _) = common::example2();
    let z = DMatrix::from_row_slice(1, 3, &[0.0, 0.0, 1.0]);
    assert_eq!(capacity_from_selection(&z, &cands).unwrap(), vec![2.0]);
    let z = DMatrix::from_row_slice(1, 3, &[1.0, 0.0, 0.0]);
    assert_eq!(capacity_from_selection(&z, &cands).unwrap(), vec![0.0]);
    let two = vertiflow::extension::CandidateSet::uniform(
        vec![Point::new(0.0, 0.0), Point::new(1.0, 1.0)],
        &[0.0, 1.0, 2.0],
        &[0.0, 4.0, 6.0],
    );
    let z = DMatrix::from_row_slice(2, 3, &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
    assert_eq!(capacity_from_selection(&z, &two).unwrap(), vec![1.0, 2.0]);
    assert_eq!(selection_cost(&z, &two).unwrap(), 10.0);
    let bad = DMatrix::from_row_slice(1, 3, &[0.0, 1.0, 1.0]);
    assert!(matches!(capacity_from_selection(&bad, &cands), Err(VfError::Selection(_))));
}

#[test]
fn expected_throughput_two_scenarios() {
    let (mut net, demands, cands, policy) = common::example2();
    net.disruption = DisruptionModel::from_absolute(
        0.2,
        vec![vec![], vec![], vec![], vec![(5.0, 0.2)]],
        vec![vec![]; 4],
    );
    let spec = DesignSpec::new(net, demands, cands, policy, 10.0, 0.01).unwrap();
    assert_eq!(spec.scenarios.len(), 2);
    let e = expected_throughput(&spec, &selection_matrix(&[2], 3), &solver()).unwrap();
    assert!((e.expected - 15.8).abs() < 1e-9);
    let none = expected_throughput(&spec, &selection_matrix(&[0], 3), &solver()).unwrap();
    assert!((none.expected - (0.2 * 13.0 + 0.8 * 16.0)).abs() < 1e-9);
}

#[test]
fn no_disruption_ignores_selection() {
    let (mut net, demands, cands, policy) = common::example2();
    net.disruption = DisruptionModel::from_absolute(0.0, vec![vec![]; 4], vec![vec![]; 4]);
    let spec = DesignSpec::new(net, demands, cands, policy, 10.0, 0.01).unwrap();
    for m in 0..3 {
        let e = expected_throughput(&spec, &selection_matrix(&[m], 3), &solver()).unwrap();
        assert!((e.expected - 16.0).abs() < 1e-9);
    }
}

#[test]
fn example2_methods_agree() {
    let spec = common::example2_spec(10.0, 0.01);
    let dual = build_dual_milp(&spec);
    let direct = build_direct_milp(&spec);
    assert_eq!(dual.model.binaries.len(), 3);
    assert_eq!(direct.model.binaries.len(), 3);
    assert!(direct.model.lp.num_vars < dual.model.lp.num_vars);
    let link_blocks = spec.scenarios.iter().filter(|s| matches!(s.element, Some(Element::Link(_)))).count();
    let node_blocks = spec.scenarios.iter().filter(|s| matches!(s.element, Some(Element::Node(_)))).count();
    assert_eq!(dual.blocks.iter().filter(|b| b.lambdas.len() == 2).count(), link_blocks);
    assert_eq!(dual.blocks.iter().filter(|b| b.lambdas.len() == 1).count(), node_blocks);

    let results: Vec<DesignResult> = [Method::BruteForce, Method::DirectMilp, Method::DualMilp]
        .iter()
        .map(|&m| solve_design(&spec, m, &solver()).unwrap())
        .collect();
    for r in &results {
        assert!((r.objective - results[0].objective).abs() < 1e-6, "{} {}", r.method, r.objective);
        assert!((r.objective - (r.expected_throughput - spec.w * r.cost)).abs() < 1e-6);
        assert!(r.cost <= 10.0);
        assert!(r.big_m_flags.is_empty(), "{:?}", r.big_m_flags);
    }
    assert!(results[2].gap_residuals.iter().all(|&g| g <= 1e-6));
}

#[test]
fn zero_budget_builds_nothing() {
    let spec = common::example2_spec(0.0, 0.01);
    let solver = solver();
    let base = original_throughputs(&spec, &solver).unwrap();
    let expected: f64 = spec.scenarios.iter().zip(&base).map(|(s, v)| s.probability * v).sum();
    for m in [Method::BruteForce, Method::DirectMilp, Method::DualMilp] {
        let r = solve_design(&spec, m, &solver).unwrap();
        assert_eq!(r.levels, vec![0]);
        assert!((r.objective - expected).abs() < 1e-6);
    }
}

#[test]
fn expensive_reserve_is_not_built() {
    // w at total capacity over the cheapest positive cost
    let spec = common::example2_spec(100.0, 50.0 / 4.0);
    for m in [Method::BruteForce, Method::DirectMilp, Method::DualMilp] {
        assert_eq!(solve_design(&spec, m, &solver()).unwrap().levels, vec![0]);
    }
}

#[test]
fn brute_force_cap_is_enforced() {
    let mut spec = common::example2_spec(10.0, 0.01);
    spec.brute_force_cap = 2;
    assert!(matches!(
        solve_design(&spec, Method::BruteForce, &solver()),
        Err(VfError::BruteForceCap { needed: 3, cap: 2 })
    ));
}

#[test]
fn big_m_defaults_are_clean_on_example2() {
    let spec = common::example2_spec(10.0, 0.01);
    let rep = validate_big_m(&spec, &solver()).unwrap();
    assert!(rep.flags.is_empty(), "{:?}", rep.flags);
    assert!(rep.stable);
    assert_eq!(rep.summary(), "stable, no binding entries");
}

#[test]
fn tiny_lambda_bound_is_flagged() {
    let mut spec = common::example2_spec(10.0, 0.01);
    spec.big_m_lambda = 1e-3;
    let rep = validate_big_m(&spec, &solver()).unwrap();
    assert!(!rep.flags.is_empty());
    let r = solve_design(&spec, Method::DualMilp, &solver());
    match r {
        Ok(r) => {
            assert!(r.big_m_suspect);
            assert_eq!(r.stats.big_m_doublings, 3);
        }
        Err(e) => assert!(matches!(e, VfError::BigMSuspect(3))),
    }
}

#[test]
fn random_specs_agree() {
    let solver = solver();
    for seed in 0..6 {
        let spec = common::random_spec(seed);
        let t = Instant::now();
        let b = solve_design(&spec, Method::BruteForce, &solver).unwrap();
        let d = solve_design(&spec, Method::DirectMilp, &solver).unwrap();
        let q = solve_design(&spec, Method::DualMilp, &solver).unwrap();
        eprintln!("seed {seed}: {:?} {:?} {:?} in {:?}, dual vars {}", b.levels, d.levels, q.levels, t.elapsed(), q.stats.variables);
        assert!((b.objective - d.objective).abs() < 1e-6, "seed {seed}: {} vs {}", b.objective, d.objective);
        assert!((b.objective - q.objective).abs() < 1e-6, "seed {seed}: {} vs {}", b.objective, q.objective);
        assert!(q.gap_residuals.iter().all(|&g| g <= 1e-6));
        // both MILP designs re-evaluate to the same objective
        assert!((d.expected_throughput - spec.w * d.cost - b.objective).abs() < 1e-6);
        assert!((q.expected_throughput - spec.w * q.cost - b.objective).abs() < 1e-6);
    }
}
