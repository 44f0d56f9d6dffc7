//! Exhaustive enumeration of level selections.

use vertiflow_lp::Solver;

use super::*;

pub const DEFAULT_BRUTE_FORCE_CAP: u64 = 59_049;

/// Mixed-radix index of the levels of `cands` within a selection.
fn sub_index(levels: &[usize], cands: &[usize], k: usize) -> usize {
    cands.iter().fold(0, |acc, &c| acc * k + levels[c])
}

fn decode(mut idx: u64, n: usize, k: usize) -> Vec<usize> {
    let mut out = vec![0; n];
    for slot in out.iter_mut().rev() {
        *slot = (idx % k as u64) as usize;
        idx /= k as u64;
    }
    out
}

pub(super) fn solve(spec: &DesignSpec, solver: &dyn Solver) -> Result<DesignResult, VfError> {
    let n = spec.num_candidates();
    let k = spec.num_levels();
    let total = (k as u128).pow(n as u32);
    if total > spec.brute_force_cap as u128 {
        return Err(VfError::BruteForceCap { needed: total, cap: spec.brute_force_cap });
    }
    let total = total as u64;

    // throughput tables indexed by the levels of the candidates each scenario depends on
    let relevant: Vec<Vec<usize>> = (0..spec.scenarios.len()).map(|s| spec.relevant_candidates(s)).collect();
    let jobs: Vec<(usize, usize)> = relevant
        .iter()
        .enumerate()
        .filter(|(s, _)| spec.scenarios[*s].probability > 0.0)
        .flat_map(|(s, r)| (0..k.pow(r.len() as u32)).map(move |i| (s, i)))
        .collect();
    let values: Vec<f64> = jobs
        .par_iter()
        .map(|&(s, i)| {
            let sub = decode(i as u64, relevant[s].len(), k);
            let mut caps = vec![0.0; n];
            for (&c, &m) in relevant[s].iter().zip(&sub) {
                caps[c] = spec.candidates.capacities[(c, m)];
            }
            let ext = extend_scenario(&spec.network, &spec.demands, &spec.scenarios[s], &spec.topology, &caps)?;
            Ok(extended_throughput(&ext, spec.big_m, solver)?.throughput)
        })
        .collect::<Result<_, VfError>>()?;
    let mut tables: Vec<Vec<f64>> = vec![Vec::new(); spec.scenarios.len()];
    for (&(s, _), v) in jobs.iter().zip(values) {
        tables[s].push(v);
    }

    let scored: Vec<(u64, f64)> = (0..total)
        .into_par_iter()
        .filter_map(|idx| {
            let levels = decode(idx, n, k);
            let cost: f64 = levels.iter().enumerate().map(|(c, &m)| spec.candidates.costs[(c, m)]).sum();
            if !spec.within_budget(cost) {
                return None;
            }
            let mut expected = 0.0;
            for (s, sc) in spec.scenarios.iter().enumerate() {
                if sc.probability > 0.0 {
                    expected += sc.probability * tables[s][sub_index(&levels, &relevant[s], k)];
                }
            }
            Some((idx, expected - spec.w * cost))
        })
        .collect();
    let top = scored
        .iter()
        .map(|s| s.1)
        .fold(f64::NEG_INFINITY, f64::max);
    // ties within 1e-9 go to the lexicographically smallest Z, which is the largest level vector
    let &(idx, objective) = scored
        .iter()
        .filter(|s| s.1 >= top - 1e-9)
        .max_by_key(|s| s.0)
        .ok_or_else(|| VfError::Internal("no selection fits the budget".into()))?;
    let levels = decode(idx, n, k);
    let stats = SolveStats {
        lp_evaluations: jobs.len(),
        proven_optimal: true,
        big_m: spec.big_m,
        big_m_lambda: spec.big_m_lambda,
        ..Default::default()
    };
    finish(spec, Method::BruteForce, levels, objective, stats, solver)
}
