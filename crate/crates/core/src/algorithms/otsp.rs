use std::collections::BTreeSet;

use super::{AlgorithmError, Algorithm, Prepared, Run, RunArtifacts};
use crate::forest::min_rooted_forest;
use crate::instance::{NodeId, OtspInstance, WeightedMultigraph};
use crate::io::Solution;
use crate::parity::{assemble_otsp_tour, odd_degree_nodes, perfect_matching};
use crate::rational::Rational;

pub(super) fn run(prep: &Prepared, inst: &OtspInstance, seed: u64) -> Result<Run, AlgorithmError> {
    let m = &inst.metric;
    let origin = &prep.paired.origin;
    let mut art = RunArtifacts::new(Algorithm::Otsp, seed, origin.clone());
    let mut extra = WeightedMultigraph::new(m.n());
    let mut t_prime = BTreeSet::new();

    for (i, &(_, t)) in prep.paired.pairs.iter().enumerate() {
        let b = prep.sample_branching(i, seed);
        let spine = b.path_to(t).ok_or(AlgorithmError::TerminalNotInBranching(i))?;
        let on_spine: BTreeSet<(NodeId, NodeId)> = spine.windows(2).map(|w| (w[0], w[1])).collect();
        for &(u, v) in &b.arcs {
            t_prime.insert(origin[v]);
            let (ou, ov) = (origin[u], origin[v]);
            if ou != ov && !on_spine.contains(&(u, v)) {
                extra.add_edge(ou, ov, m.cost(ou, ov).clone());
            }
        }
        t_prime.insert(origin[b.root]);
        let segment = prep.paired.to_original(&spine);
        art.path_costs.push(m.walk_cost(&segment));
        art.paths.push(segment);
        art.branching_costs.push(b.cost(&prep.paired.metric));
        art.branchings.push(Some(b));
        art.coins.push(true);
    }
    art.t_prime = t_prime.into_iter().collect();

    let forest = min_rooted_forest(m, &art.t_prime)?;
    for e in &forest.edges {
        extra.add_edge(e.u, e.v, e.cost.clone());
    }
    art.forest_cost = forest.total_cost.clone();
    art.forest = forest.edges;

    let odd = odd_degree_nodes(&extra);
    let join = perfect_matching(m, &odd, prep.matching)?;
    art.join_cost = join.cost;
    art.join = join.pairs;

    let tour = assemble_otsp_tour(&art.paths, &extra, &art.join, m)?;
    art.total_cost = tour.total_cost.clone();

    let branchings: Rational = art.branching_costs.iter().sum();
    art.ledger.check(
        "cost <= sum c(B_i) + c(F) + c(J)",
        tour.total_cost.clone(),
        branchings + &art.forest_cost + &art.join_cost,
    );
    art.ledger.check("c(J) <= OPT_LP / 2", art.join_cost.clone(), prep.opt_lp() / Rational::from(2));
    Ok(Run { solution: Solution::Tour(tour), artifacts: art })
}
