use super::*;
use crate::generate::{generate_instance, GeneratorKind, ProblemKind};
use crate::instance::fixtures::{path4, q, tri3};
use crate::instance::{verify_ktspp_solution, verify_otsp_solution};

fn prep(inst: Instance) -> Prepared {
    Prepared::new(&inst, &SolverOptions::default()).unwrap()
}

fn paths_of(run: &Run) -> &crate::instance::SolutionPaths {
    match &run.solution {
        Solution::Paths(p) => p,
        Solution::Tour(_) => panic!("expected paths"),
    }
}

#[test]
fn tau_gamma_examples() {
    let p = prep(Instance::Ktspp(KtsppInstance::new(path4(), vec![(0, 3)]).unwrap()));
    let tg = &p.tau_gamma;
    assert_eq!(tg.opt_lp, q("3"));
    assert_eq!(tg.delta, q("3"));
    assert_eq!(tg.tau, q("0"));
    assert_eq!(tg.gamma, 1.0);
    assert!(!tg.degenerate);

    let tg = TauGamma::from_values(&q("3"), &q("0"));
    assert_eq!(tg.tau, q("1"));
    assert_eq!(tg.gamma_units, 0);

    let g = gamma_units_for((-0.5f64).exp()) as f64 / GAMMA_SCALE as f64;
    assert!(g <= 0.5 && 0.5 - g < 1e-14, "{g}");

    let tg = TauGamma::from_values(&q("0"), &q("0"));
    assert!(tg.degenerate);
    assert_eq!(tg.gamma_units, GAMMA_SCALE);
}

#[test]
fn coin_is_exact_at_the_ends() {
    let mut rng = stream_rng(3, 0);
    let never = TauGamma::from_values(&q("2"), &q("0"));
    let always = TauGamma::from_values(&q("2"), &q("2"));
    for _ in 0..1000 {
        assert!(!never.flip(&mut rng));
        assert!(always.flip(&mut rng));
    }
}

#[test]
fn branching_to_path_examples() {
    let m = path4();
    let line = Branching::new(0, vec![(0, 1), (1, 2), (2, 3)]);
    let p = branching_to_path(&line, 3).unwrap();
    assert_eq!(p, vec![0, 1, 2, 3]);
    assert_eq!(m.walk_cost(&p), q("3"));

    let star = Branching::new(0, vec![(0, 1), (0, 3)]);
    let p = branching_to_path(&star, 3).unwrap();
    assert_eq!(p, vec![0, 1, 3]);
    assert_eq!(m.walk_cost(&p), q("3"));
    assert!(m.walk_cost(&p) <= q("2") * star.cost(&m) - m.cost(0, 3));

    assert_eq!(branching_to_path(&Branching::new(0, vec![(0, 3)]), 3).unwrap(), vec![0, 3]);
    assert_eq!(branching_to_path(&star, 2), None);

    // subtree hanging below t is visited before t
    let below = Branching::new(0, vec![(0, 1), (1, 2)]);
    assert_eq!(branching_to_path(&below, 1).unwrap(), vec![0, 2, 1]);
}

#[test]
fn otsp_on_tri3() {
    let inst = OtspInstance::new(tri3(), vec![0, 1]).unwrap();
    let p = prep(Instance::Otsp(inst.clone()));
    for seed in 0..20 {
        let run = p.run(Algorithm::Otsp, seed).unwrap();
        let Solution::Tour(t) = &run.solution else { panic!() };
        assert!(verify_otsp_solution(&inst, t).is_feasible());
        // every Hamiltonian cycle on three unit-distance nodes costs 3
        assert_eq!(t.total_cost, q("3"));
        assert!(run.artifacts.ledger.holds(), "{:?}", run.artifacts.ledger);
        assert!(run.artifacts.audit(&inst.metric).is_empty());
    }
}

#[test]
fn otsp_without_free_nodes_needs_no_forest() {
    let inst = OtspInstance::new(path4(), vec![0, 2, 1, 3]).unwrap();
    let p = prep(Instance::Otsp(inst.clone()));
    for seed in 0..10 {
        let run = p.run(Algorithm::Otsp, seed).unwrap();
        assert!(run.artifacts.forest.is_empty());
        assert_eq!(run.artifacts.t_prime, vec![0, 1, 2, 3]);
        let Solution::Tour(t) = &run.solution else { panic!() };
        assert!(verify_otsp_solution(&inst, t).is_feasible());
        assert!(run.artifacts.ledger.holds());
    }
}

#[test]
fn warmup_examples() {
    let inst = KtsppInstance::new(path4(), vec![(0, 3)]).unwrap();
    let p = prep(Instance::Ktspp(inst.clone()));
    for seed in 0..10 {
        let run = p.run(Algorithm::Warmup, seed).unwrap();
        let sol = paths_of(&run);
        assert!(verify_ktspp_solution(&inst, sol).is_feasible());
        assert!(sol.total_cost >= q("3"));
        assert!(run.artifacts.ledger.holds());
        assert!(run.artifacts.audit(&inst.metric).is_empty());
    }

    let inst = KtsppInstance::new(path4(), vec![(0, 1), (2, 3)]).unwrap();
    let p = prep(Instance::Ktspp(inst.clone()));
    let run = p.run(Algorithm::Warmup, 1).unwrap();
    assert_eq!(paths_of(&run).paths, vec![vec![0, 1], vec![2, 3]]);
    assert_eq!(paths_of(&run).total_cost, q("2"));
    assert!(run.artifacts.forest.is_empty());
}

#[test]
fn final_matches_warmup_when_tau_is_zero() {
    let inst = KtsppInstance::new(path4(), vec![(0, 3)]).unwrap();
    let p = prep(Instance::Ktspp(inst));
    for seed in 0..10 {
        let a = p.run(Algorithm::Warmup, seed).unwrap();
        let b = p.run(Algorithm::Final, seed).unwrap();
        assert_eq!(paths_of(&a), paths_of(&b));
        assert!(b.artifacts.coins.iter().all(|&c| c));
    }
}

#[test]
fn final_with_colocated_pair_uses_direct_edges() {
    let inst = KtsppInstance::new(path4(), vec![(0, 0)]).unwrap();
    let p = prep(Instance::Ktspp(inst.clone()));
    assert_eq!(p.tau_gamma.tau, q("1"));
    assert_eq!(p.tau_gamma.gamma_units, 0);
    for seed in 0..5 {
        let run = p.run(Algorithm::Final, seed).unwrap();
        assert_eq!(run.artifacts.coins, vec![false]);
        assert_eq!(run.artifacts.t_prime, vec![0]);
        let sol = paths_of(&run);
        assert_eq!(sol.paths, vec![vec![0, 1, 2, 3, 0]]);
        assert_eq!(sol.total_cost, q("6"));
        assert!(verify_ktspp_solution(&inst, sol).is_feasible());
    }
}

#[test]
fn baseline_examples() {
    let inst = KtsppInstance::new(path4(), vec![(0, 3)]).unwrap();
    let sol = solve_ktspp_baseline3(&inst).unwrap();
    assert_eq!(sol.paths, vec![vec![0, 1, 2, 3]]);
    assert_eq!(sol.total_cost, q("3"));
    let run = prep(Instance::Ktspp(inst)).run(Algorithm::Baseline3, 0).unwrap();
    assert!(run.artifacts.ledger.holds());
}

#[test]
fn best_of_picks_the_cheapest() {
    let Instance::Ktspp(inst) = generate_instance(GeneratorKind::UniformMatrix, ProblemKind::Ktspp, 7, 2, 11).unwrap() else {
        unreachable!()
    };
    let p = prep(Instance::Ktspp(inst));
    let algs = [Algorithm::Warmup, Algorithm::Final, Algorithm::Baseline3];
    let seeds = [1, 2, 3];
    let best = best_of(&p, &algs, &seeds).unwrap();
    for alg in algs {
        for s in seeds {
            assert!(best.cost() <= p.run(alg, s).unwrap().cost());
        }
    }
    let single = best_of(&p, &[Algorithm::Baseline3], &seeds).unwrap();
    assert_eq!(single.cost(), p.run(Algorithm::Baseline3, 0).unwrap().cost());
    assert!(matches!(best_of(&p, &[], &seeds), Err(AlgorithmError::NothingToRun)));
    assert!(matches!(p.run(Algorithm::Otsp, 0), Err(AlgorithmError::Unsupported(Algorithm::Otsp))));
}

#[test]
fn expected_branching_cost_within_lp_cost() {
    let inst = generate_instance(GeneratorKind::Euclidean2d, ProblemKind::Otsp, 7, 3, 5).unwrap();
    let p = prep(inst);
    for i in 0..p.paired.k() {
        assert!(p.expected_branching_cost(i) <= p.lp.pair_cost(i, &p.paired));
    }
}

proptest::proptest! {
    #![proptest_config(proptest::test_runner::Config::with_cases(24))]
    #[test]
    fn random_runs_are_feasible_with_sound_ledgers(
        seed in 0u64..10_000,
        n in 4usize..8,
        gen in 0usize..3,
        otsp in proptest::bool::ANY,
    ) {
        let kind = [GeneratorKind::Euclidean2d, GeneratorKind::GraphClosure, GeneratorKind::UniformMatrix][gen];
        let (problem, k) = if otsp { (ProblemKind::Otsp, 1 + seed as usize % 3) } else { (ProblemKind::Ktspp, 1 + seed as usize % 2) };
        let inst = generate_instance(kind, problem, n, k, seed).unwrap();
        let p = prep(inst.clone());
        for alg in p.algorithms() {
            for run_seed in 0..3 {
                let run = p.run(alg, run_seed).unwrap();
                let ok = match (&inst, &run.solution) {
                    (Instance::Otsp(i), Solution::Tour(t)) => verify_otsp_solution(i, t).is_feasible(),
                    (Instance::Ktspp(i), Solution::Paths(s)) => verify_ktspp_solution(i, s).is_feasible(),
                    _ => false,
                };
                proptest::prop_assert!(ok);
                proptest::prop_assert!(run.artifacts.ledger.holds(), "{:?}", run.artifacts.ledger.failures());
                proptest::prop_assert!(run.artifacts.audit(inst.metric()).is_empty());
                proptest::prop_assert!(run.cost() >= p.opt_lp());
            }
        }
    }
}
