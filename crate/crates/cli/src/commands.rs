use std::path::Path;

use bridgeroute::algorithms::{Prepared, Run, SolverOptions};
use bridgeroute::flow::{decompose_preflow, verify_branching_family, DecomposeOptions};
use bridgeroute::forest::{bridge_expectation, bridge_montecarlo, non_terminals, min_rooted_forest, SubsetSampler};
use bridgeroute::instance::{verify_ktspp_solution, verify_otsp_solution};
use bridgeroute::io::{read_instance, read_solution, solution_json, write_instance, Solution};
use bridgeroute::lp::{solve_ktspp_lp, LpOptions, LpSolution};
use bridgeroute::oracle::{brute_ktspp, brute_min_ojoin, brute_otsp, brute_rooted_forest, OracleBudget};
use bridgeroute::parity::MatchingMode;
use bridgeroute::rng::trial_seed;
use bridgeroute::{generate_instance, GeneratorKind, Instance, ProblemKind, Rational, Verdict};
use serde_json::{json, Value};

use crate::bench::{run_experiment, summarize, to_csv, Choice, ExperimentConfig};

/// Failure with the process exit code it maps to.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Exit code 1: a solution or check did not pass.
    #[error("{0}")]
    Failed(String),
    /// Exit code 2: unreadable or invalid input.
    #[error("{0}")]
    Input(String),
    /// Exit code 3: an internal guarantee was broken.
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Failed(_) => 1,
            CliError::Input(_) => 2,
            CliError::Internal(_) => 3,
        }
    }
}

/// Command output plus an optional failure that still carries a report.
pub struct Outcome {
    pub output: Vec<u8>,
    pub failure: Option<CliError>,
}

impl Outcome {
    fn json(v: Value) -> Self {
        Outcome { output: pretty(&v), failure: None }
    }

    fn failing(v: Value, e: CliError) -> Self {
        Outcome { output: pretty(&v), failure: Some(e) }
    }
}

fn pretty(v: &Value) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(v).expect("JSON value serializes");
    out.push(b'\n');
    out
}

fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub fn load_instance(path: &Path) -> Result<Instance, CliError> {
    read_instance(&read(path)?).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn expect_problem(inst: &Instance, problem: ProblemKind) -> Result<(), CliError> {
    let matches = matches!((inst, problem), (Instance::Otsp(_), ProblemKind::Otsp) | (Instance::Ktspp(_), ProblemKind::Ktspp));
    if matches {
        Ok(())
    } else {
        Err(CliError::Input(format!("instance is not of type {problem:?}")))
    }
}

pub fn gen(kind: GeneratorKind, problem: ProblemKind, n: usize, k: usize, seed: u64) -> Result<Outcome, CliError> {
    let inst = generate_instance(kind, problem, n, k, seed).map_err(|e| CliError::Input(e.to_string()))?;
    Ok(Outcome { output: write_instance(&inst), failure: None })
}

pub struct SolveArgs {
    pub algorithm: String,
    pub seed: u64,
    pub trials: usize,
    pub dump_intermediate: bool,
    pub matching: MatchingMode,
}

fn verify(inst: &Instance, sol: &Solution) -> Result<Verdict, CliError> {
    match (inst, sol) {
        (Instance::Otsp(i), Solution::Tour(t)) => Ok(verify_otsp_solution(i, t)),
        (Instance::Ktspp(i), Solution::Paths(p)) => Ok(verify_ktspp_solution(i, p)),
        _ => Err(CliError::Input("solution type does not match the instance".into())),
    }
}

/// Runs `trials` seeded trials (trial `j` uses `trial_seed(seed, j)`, trial
/// 0 with `trials = 1` uses `seed` itself) and reports the cheapest.
pub fn solve(problem: ProblemKind, path: &Path, args: &SolveArgs) -> Result<Outcome, CliError> {
    let inst = load_instance(path)?;
    expect_problem(&inst, problem)?;
    if args.trials == 0 {
        return Err(CliError::Input("--trials must be at least 1".into()));
    }
    let choice = Choice::parse(&args.algorithm, problem).map_err(CliError::Input)?;
    let opts = SolverOptions { matching: args.matching, ..SolverOptions::default() };
    let prep = Prepared::new(&inst, &opts).map_err(|e| CliError::Internal(e.to_string()))?;
    let seeds: Vec<u64> =
        if args.trials == 1 { vec![args.seed] } else { (0..args.trials as u64).map(|j| trial_seed(args.seed, j)).collect() };
    let mut runs: Vec<Run> = Vec::new();
    for &s in &seeds {
        runs.push(choice.run(&prep, s).map_err(CliError::Internal)?);
    }
    let mut failure = None;
    for run in &runs {
        if let Verdict::Infeasible(r) = verify(&inst, &run.solution)? {
            failure = Some(CliError::Failed(format!("seed {}: infeasible output: {r}", run.artifacts.seed)));
            break;
        }
        if let Some(c) = run.artifacts.ledger.failures().first() {
            failure = Some(CliError::Internal(format!("seed {}: ledger check failed: {}", run.artifacts.seed, c.name)));
            break;
        }
    }
    let total: Rational = runs.iter().map(|r| r.cost()).sum();
    let best = runs.iter().min_by(|a, b| a.cost().cmp(b.cost())).expect("at least one run");
    let tg = &prep.tau_gamma;
    let mut out = json!({
        "algorithm": choice.name(),
        "seed": best.artifacts.seed,
        "trials": args.trials,
        "solution": solution_json(&best.solution),
        "meanCost": (total / Rational::from(runs.len())).to_string(),
        "minCost": best.cost().to_string(),
        "optLp": tg.opt_lp.to_string(),
        "delta": tg.delta.to_string(),
        "tau": tg.tau.to_string(),
        "gamma": tg.gamma,
        "ledger": best.artifacts.ledger,
    });
    if args.dump_intermediate {
        out["intermediate"] = serde_json::to_value(&best.artifacts).expect("artifacts serialize");
        out["lp"] = serde_json::to_value(&prep.lp).expect("LP serializes");
        out["families"] = serde_json::to_value(&prep.families).expect("families serialize");
    }
    Ok(Outcome { output: pretty(&out), failure })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleKind {
    Otsp,
    Ktspp,
    Forest,
    Ojoin,
}

/// `forest` roots at the instance's terminals; `ojoin` uses them as the
/// odd set.
pub fn oracle(kind: OracleKind, path: &Path) -> Result<Outcome, CliError> {
    let inst = load_instance(path)?;
    let budget = OracleBudget::default();
    let over = |e: bridgeroute::oracle::OracleError| CliError::Input(e.to_string());
    let out = match kind {
        OracleKind::Otsp => {
            let Instance::Otsp(i) = &inst else { return Err(CliError::Input("not an otsp instance".into())) };
            let s = brute_otsp(i, &budget).map_err(over)?;
            json!({ "optimum": s.total_cost.to_string(), "solution": solution_json(&Solution::Tour(s)) })
        }
        OracleKind::Ktspp => {
            let Instance::Ktspp(i) = &inst else { return Err(CliError::Input("not a ktspp instance".into())) };
            let s = brute_ktspp(i, &budget).map_err(over)?;
            json!({ "optimum": s.total_cost.to_string(), "solution": solution_json(&Solution::Paths(s)) })
        }
        OracleKind::Forest => {
            let f = brute_rooted_forest(inst.metric(), &inst.terminals(), &budget).map_err(over)?;
            json!({ "optimum": f.total_cost.to_string(), "forest": f })
        }
        OracleKind::Ojoin => {
            let o = inst.terminals();
            let c = brute_min_ojoin(inst.metric(), &o, &budget).map_err(over)?;
            json!({ "oddSet": o, "optimum": c.map(|c| c.to_string()) })
        }
    };
    Ok(Outcome::json(out))
}

/// LP relaxation of the instance's paired form, with the map from paired
/// ids back to instance ids.
pub fn lp_solve(path: &Path) -> Result<Outcome, CliError> {
    let inst = load_instance(path)?;
    let paired = match &inst {
        Instance::Otsp(i) => i.to_pairs(),
        Instance::Ktspp(i) => i.normalize(),
    };
    let sol = solve_ktspp_lp(&paired, &LpOptions::default()).map_err(|e| CliError::Internal(e.to_string()))?;
    let violations = sol.violations(&paired);
    let mut out = serde_json::to_value(&sol).expect("LP serializes");
    out["origin"] = json!(paired.origin);
    if !violations.is_empty() {
        return Ok(Outcome::failing(out, CliError::Internal(format!("LP solution violates: {}", violations.join("; ")))));
    }
    Ok(Outcome::json(out))
}

pub fn decompose(path: &Path, pair: usize) -> Result<Outcome, CliError> {
    let sol: LpSolution =
        serde_json::from_slice(&read(path)?).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    if pair >= sol.k() {
        return Err(CliError::Input(format!("pair {pair} out of range (k = {})", sol.k())));
    }
    let g = sol.pair_digraph(pair);
    let z = sol.requirements(pair);
    let fam = decompose_preflow(&g, &z, &DecomposeOptions::default()).map_err(|e| CliError::Failed(e.to_string()))?;
    let violations: Vec<String> = verify_branching_family(&g, &z, &fam).iter().map(|v| format!("{v:?}")).collect();
    let out = json!({ "pair": pair, "family": fam, "violations": violations });
    if violations.is_empty() {
        Ok(Outcome::json(out))
    } else {
        Ok(Outcome::failing(out, CliError::Internal("decomposition failed verification".into())))
    }
}

/// Exact expectation is added when there are at most this many
/// non-terminals.
pub const EXACT_BRIDGE_LIMIT: usize = 10;

/// Random-terminal forest bound with each non-terminal missed
/// independently with probability `gamma` (rounded down to a multiple of
/// `1e-6`).
pub fn bridge_check(path: &Path, gamma: f64, trials: usize, seed: u64) -> Result<Outcome, CliError> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(CliError::Input("--gamma must lie in [0, 1]".into()));
    }
    if trials == 0 {
        return Err(CliError::Input("--trials must be at least 1".into()));
    }
    let inst = load_instance(path)?;
    let m = inst.metric();
    let t = inst.terminals();
    let miss = Rational::floor_f64(gamma, 1_000_000);
    let sampler = SubsetSampler::Independent { miss: miss.clone() };
    let internal = |e: bridgeroute::forest::ForestError| CliError::Internal(e.to_string());
    let report = bridge_montecarlo(m, &t, &sampler, miss.to_f64(), trials, seed).map_err(internal)?;
    let mut out = json!({ "terminals": t, "miss": miss.to_string(), "montecarlo": report });
    let mut pass = report.pass;
    if non_terminals(m.n(), &t).len() <= EXACT_BRIDGE_LIMIT {
        let exact = bridge_expectation(m, &t, &sampler).map_err(internal)?;
        let c_t = min_rooted_forest(m, &t).map_err(internal)?.total_cost;
        let bound = &miss * &c_t;
        pass &= exact <= bound;
        out["exact"] = json!({ "expectation": exact.to_string(), "bound": bound.to_string(), "holds": exact <= bound });
    }
    out["pass"] = json!(pass);
    if pass {
        Ok(Outcome::json(out))
    } else {
        Ok(Outcome::failing(out, CliError::Failed("bridge bound not met".into())))
    }
}

/// CSV report on stdout unless the config names an output file; the
/// per-algorithm summary goes into `summary`.
pub fn bench(path: &Path, threads: Option<usize>) -> Result<(Outcome, Vec<u8>), CliError> {
    let mut cfg = ExperimentConfig::from_json(&read(path)?).map_err(|e| CliError::Input(e.to_string()))?;
    if threads.is_some() {
        cfg.parallelism = threads;
    }
    let rows = run_experiment(&cfg).map_err(|e| CliError::Input(e.to_string()))?;
    let summary = summarize(&rows).map_err(|e| CliError::Input(e.to_string()))?;
    let summary = pretty(&serde_json::to_value(summary).expect("summary serializes"));
    let output = if cfg.output_csv.is_some() { Vec::new() } else { to_csv(&rows) };
    let failing = rows.iter().filter(|r| !r.pass).count();
    let failure = (failing > 0).then(|| CliError::Failed(format!("{failing} of {} rows failed", rows.len())));
    Ok((Outcome { output, failure }, summary))
}

pub fn verify_files(instance: &Path, solution: &Path) -> Result<Outcome, CliError> {
    let inst = load_instance(instance)?;
    let sol = read_solution(&read(solution)?).map_err(|e| CliError::Input(format!("{}: {e}", solution.display())))?;
    match verify(&inst, &sol)? {
        Verdict::Feasible => Ok(Outcome::json(json!({ "feasible": true }))),
        Verdict::Infeasible(r) => {
            Ok(Outcome::failing(json!({ "feasible": false, "reason": r }), CliError::Failed(r)))
        }
    }
}
