//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Each export takes and returns JSON strings. The plain functions in this
//! module do the work so they can be tested natively.

use bridgeroute::algorithms::{best_of, Algorithm, Prepared, SolverOptions};
use bridgeroute::forest::{bridge_expectation, bridge_montecarlo, non_terminals, SubsetSampler};
use bridgeroute::generate::{euclidean_points_for_seed, GRID};
use bridgeroute::io::{read_instance, solution_json, write_instance, Solution};
use bridgeroute::instance::{verify_ktspp_solution, verify_otsp_solution};
use bridgeroute::{generate_instance, GeneratorKind, Instance, ProblemKind, Rational};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

/// Largest instance the page will solve (the LP is exact and dense).
pub const MAX_NODES: usize = 12;

/// Euclidean instance plus the points it came from, in the unit square.
pub fn generate_json(problem: &str, n: usize, k: usize, seed: u64) -> Result<String, String> {
    if n > MAX_NODES {
        return Err(format!("at most {MAX_NODES} nodes"));
    }
    let problem: ProblemKind = problem.parse()?;
    let inst = generate_instance(GeneratorKind::Euclidean2d, problem, n, k, seed).map_err(|e| e.to_string())?;
    let points: Vec<[f64; 2]> = euclidean_points_for_seed(n, seed)
        .iter()
        .map(|p| [p.x as f64 / GRID as f64, p.y as f64 / GRID as f64])
        .collect();
    let instance: Value = serde_json::from_slice(&write_instance(&inst)).map_err(|e| e.to_string())?;
    Ok(json!({ "instance": instance, "points": points }).to_string())
}

/// Runs one algorithm (`otsp`, `warmup`, `final`, `baseline3` or `best`).
pub fn solve_json(instance: &str, algorithm: &str, seed: u64) -> Result<String, String> {
    let inst = read_instance(instance.as_bytes()).map_err(|e| e.to_string())?;
    if inst.metric().n() > MAX_NODES {
        return Err(format!("at most {MAX_NODES} nodes"));
    }
    let prep = Prepared::new(&inst, &SolverOptions::default()).map_err(|e| e.to_string())?;
    let run = if algorithm == "best" {
        best_of(&prep, &prep.algorithms(), &[seed])
    } else {
        prep.run(algorithm.parse::<Algorithm>()?, seed)
    }
    .map_err(|e| e.to_string())?;
    let feasible = match (&inst, &run.solution) {
        (Instance::Otsp(i), Solution::Tour(t)) => verify_otsp_solution(i, t).is_feasible(),
        (Instance::Ktspp(i), Solution::Paths(p)) => verify_ktspp_solution(i, p).is_feasible(),
        _ => false,
    };
    let tg = &prep.tau_gamma;
    let lp = tg.opt_lp.to_f64();
    Ok(json!({
        "solution": solution_json(&run.solution),
        "cost": run.cost().to_f64(),
        "optLp": lp,
        "ratio": if lp > 0.0 { Some(run.cost().to_f64() / lp) } else { None },
        "tau": tg.tau.to_f64(),
        "gamma": tg.gamma,
        "feasible": feasible,
        "tPrime": run.artifacts.t_prime,
        "forest": run.artifacts.forest.iter().map(|e| [e.u, e.v]).collect::<Vec<_>>(),
        "ledger": run.artifacts.ledger,
    })
    .to_string())
}

/// Random-terminal forest check with the instance's terminals as `T`.
pub fn bridge_json(instance: &str, gamma: f64, trials: usize, seed: u64) -> Result<String, String> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err("gamma must lie in [0, 1]".into());
    }
    let inst = read_instance(instance.as_bytes()).map_err(|e| e.to_string())?;
    let m = inst.metric();
    let t = inst.terminals();
    let miss = Rational::floor_f64(gamma, 1_000_000);
    let sampler = SubsetSampler::Independent { miss: miss.clone() };
    let report = bridge_montecarlo(m, &t, &sampler, miss.to_f64(), trials.clamp(1, 100_000), seed).map_err(|e| e.to_string())?;
    let exact = if non_terminals(m.n(), &t).len() <= 10 {
        Some(bridge_expectation(m, &t, &sampler).map_err(|e| e.to_string())?.to_f64())
    } else {
        None
    };
    Ok(json!({ "montecarlo": report, "exact": exact }).to_string())
}

#[wasm_bindgen]
pub fn generate(problem: &str, n: usize, k: usize, seed: u64) -> Result<String, JsValue> {
    generate_json(problem, n, k, seed).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn solve(instance: &str, algorithm: &str, seed: u64) -> Result<String, JsValue> {
    solve_json(instance, algorithm, seed).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn bridge(instance: &str, gamma: f64, trials: usize, seed: u64) -> Result<String, JsValue> {
    bridge_json(instance, gamma, trials, seed).map_err(|e| JsValue::from_str(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn instance_of(generated: &str) -> String {
        let v: Value = serde_json::from_str(generated).unwrap();
        v["instance"].to_string()
    }

    #[test]
    fn generate_solve_bridge() {
        let g = generate_json("ktspp", 7, 2, 3).unwrap();
        let v: Value = serde_json::from_str(&g).unwrap();
        assert_eq!(v["points"].as_array().unwrap().len(), 7);
        let inst = instance_of(&g);
        for alg in ["warmup", "final", "baseline3", "best"] {
            let s: Value = serde_json::from_str(&solve_json(&inst, alg, 1).unwrap()).unwrap();
            assert_eq!(s["feasible"], true, "{alg}");
        }
        let b: Value = serde_json::from_str(&bridge_json(&inst, 0.5, 500, 2).unwrap()).unwrap();
        assert_eq!(b["montecarlo"]["pass"], true);
        assert!(b["exact"].as_f64().unwrap() <= 0.5 * b["montecarlo"]["forest_cost"].as_f64().unwrap() + 1e-9);
    }

    #[test]
    fn otsp_and_errors() {
        let inst = instance_of(&generate_json("otsp", 6, 3, 8).unwrap());
        let s: Value = serde_json::from_str(&solve_json(&inst, "otsp", 4).unwrap()).unwrap();
        assert_eq!(s["feasible"], true);
        assert!(solve_json(&inst, "warmup", 4).is_err());
        assert!(generate_json("otsp", 40, 3, 1).is_err());
        assert!(generate_json("tsp", 6, 3, 1).is_err());
        assert!(bridge_json(&inst, 2.0, 10, 1).is_err());
        assert!(solve_json("{", "otsp", 1).is_err());
    }
}
