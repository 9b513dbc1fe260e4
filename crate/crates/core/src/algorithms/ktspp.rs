use std::collections::BTreeSet;

use super::{baseline_factor, branching_to_path, Algorithm, AlgorithmError, Prepared, Run, RunArtifacts};
use crate::forest::{double_forest_to_cycles, min_rooted_forest, RootedForest};
use crate::instance::{KtsppInstance, NodeId, SolutionPaths};
use crate::io::Solution;
use crate::parity::splice_cycles;
use crate::rational::Rational;

/// Final paths from per-pair walks: path `i` keeps `s_i`, then every
/// non-endpoint node of its walk not already used by an earlier path, then
/// `t_i`. Each result is a subsequence of its walk, so no cost is added.
pub fn finalize_paths(walks: &[Vec<NodeId>], pairs: &[(NodeId, NodeId)], n: usize) -> Vec<Vec<NodeId>> {
    let mut endpoint = vec![false; n];
    for &(s, t) in pairs {
        endpoint[s] = true;
        endpoint[t] = true;
    }
    let mut seen = vec![false; n];
    walks
        .iter()
        .zip(pairs)
        .map(|(w, &(s, t))| {
            let mut p = vec![s];
            for &v in w.iter().skip(1) {
                if !endpoint[v] && !seen[v] {
                    seen[v] = true;
                    p.push(v);
                }
            }
            p.push(t);
            p
        })
        .collect()
}

pub(super) fn run_rounding(
    prep: &Prepared,
    inst: &KtsppInstance,
    alg: Algorithm,
    seed: u64,
) -> Result<Run, AlgorithmError> {
    let m = &inst.metric;
    let mut art = RunArtifacts::new(alg, seed, prep.paired.origin.clone());
    art.tau_gamma = Some(prep.tau_gamma.clone());
    let mut t_prime = BTreeSet::new();

    for (i, &(s, t)) in prep.paired.pairs.iter().enumerate() {
        let heads = alg == Algorithm::Warmup || prep.coin(i, seed);
        art.coins.push(heads);
        let path = if heads {
            let b = prep.sample_branching(i, seed);
            let p = branching_to_path(&b, t).ok_or(AlgorithmError::TerminalNotInBranching(i))?;
            let c_b = b.cost(&prep.paired.metric);
            let c_p = prep.paired.metric.walk_cost(&p);
            art.ledger.check(
                format!("c(P_{i}) <= 2 c(B_{i}) - c(s_{i}, t_{i})"),
                c_p,
                Rational::from(2) * &c_b - prep.paired.metric.cost(s, t),
            );
            art.branching_costs.push(c_b);
            art.branchings.push(Some(b));
            prep.paired.to_original(&p)
        } else {
            art.branching_costs.push(Rational::zero());
            art.branchings.push(None);
            vec![prep.paired.origin[s], prep.paired.origin[t]]
        };
        t_prime.extend(path.iter().copied());
        art.path_costs.push(m.walk_cost(&path));
        art.paths.push(path);
    }
    art.t_prime = t_prime.into_iter().collect();

    let forest = min_rooted_forest(m, &art.t_prime)?;
    let walks = splice_cycles(&art.paths, &double_forest_to_cycles(&forest))?;
    art.forest_cost = forest.total_cost.clone();
    art.forest = forest.edges;

    let sol = SolutionPaths::new(m, finalize_paths(&walks, &inst.pairs, m.n()));
    art.total_cost = sol.total_cost.clone();
    let paths: Rational = art.path_costs.iter().sum();
    art.ledger.check(
        "cost <= sum c(P_i) + 2 c(F)",
        sol.total_cost.clone(),
        paths + Rational::from(2) * &art.forest_cost,
    );
    Ok(Run { solution: Solution::Paths(sol), artifacts: art })
}

/// Doubled minimum forest rooted at all endpoints, joined by the direct
/// edges: each pair walks around its `s` component, crosses to `t`, walks
/// around the `t` component, and the walks are shortcut.
pub fn baseline3_paths(inst: &KtsppInstance) -> Result<(SolutionPaths, RootedForest), AlgorithmError> {
    let m = &inst.metric;
    let mut ends: Vec<NodeId> = inst.pairs.iter().flat_map(|&(s, t)| [s, t]).collect();
    ends.sort_unstable();
    ends.dedup();
    let forest = min_rooted_forest(m, &ends)?;
    let cycles = double_forest_to_cycles(&forest);
    let around = |x: NodeId| -> Vec<NodeId> {
        cycles.iter().find(|(r, _)| *r == x).map(|(_, c)| c.clone()).unwrap_or_else(|| vec![x])
    };
    let walks: Vec<Vec<NodeId>> = inst
        .pairs
        .iter()
        .map(|&(s, t)| around(s).into_iter().chain(around(t)).collect())
        .collect();
    let sol = SolutionPaths::new(m, finalize_paths(&walks, &inst.pairs, m.n()));
    Ok((sol, forest))
}

pub(super) fn run_baseline(prep: &Prepared, inst: &KtsppInstance, seed: u64) -> Result<Run, AlgorithmError> {
    let (sol, forest) = baseline3_paths(inst)?;
    let mut art = RunArtifacts::new(Algorithm::Baseline3, seed, prep.paired.origin.clone());
    art.tau_gamma = Some(prep.tau_gamma.clone());
    art.t_prime = forest.terminals.clone();
    art.paths = inst.pairs.iter().map(|&(s, t)| vec![s, t]).collect();
    art.path_costs = art.paths.iter().map(|p| inst.metric.walk_cost(p)).collect();
    art.forest_cost = forest.total_cost.clone();
    art.forest = forest.edges;
    art.total_cost = sol.total_cost.clone();
    let delta: Rational = art.path_costs.iter().sum();
    art.ledger.check(
        "cost <= 2 c(F_T) + Delta",
        sol.total_cost.clone(),
        Rational::from(2) * &art.forest_cost + delta,
    );
    art.ledger.check(
        "cost <= (3 - tau) OPT_LP",
        sol.total_cost.clone(),
        baseline_factor(&prep.tau_gamma.tau) * prep.opt_lp(),
    );
    Ok(Run { solution: Solution::Paths(sol), artifacts: art })
}
