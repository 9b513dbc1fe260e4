//! LP-rounding approximations for Ordered TSP and k-TSPP, the forest-doubling
//! 3-approximation, and the per-run cost ledgers that certify each output.
//!
//! All solvers share one preparation step per instance (LP solve plus one
//! branching decomposition per pair), so repeated seeded runs only pay for
//! sampling, forests and parity correction.

mod ktspp;
mod otsp;

use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::flow::{decompose_preflow, sample_branching, Branching, BranchingFamily, DecomposeError, DecomposeOptions};
use crate::forest::ForestError;
use crate::generate::Instance;
use crate::instance::{
    shortcut_walk, Edge, KtsppInstance, MetricInstance, NodeId, OtspInstance, PairedInstance,
};
use crate::io::Solution;
use crate::lp::{solve_ktspp_lp, LpOptions, LpSolution, SolveLpError};
use crate::parity::{MatchingMode, ParityError};
use crate::rational::Rational;
use crate::rng::stream_rng;

pub use ktspp::{baseline3_paths, finalize_paths};

#[derive(Debug, thiserror::Error)]
pub enum AlgorithmError {
    #[error("LP: {0}")]
    Lp(#[from] SolveLpError),
    #[error("decomposing pair {pair}: {source}")]
    Decompose {
        pair: usize,
        #[source]
        source: Box<DecomposeError>,
    },
    #[error(transparent)]
    Forest(#[from] ForestError),
    #[error(transparent)]
    Parity(#[from] ParityError),
    #[error("branching for pair {0} does not contain its terminal")]
    TerminalNotInBranching(usize),
    #[error("algorithm {0} does not apply to this problem")]
    Unsupported(Algorithm),
    #[error("no algorithm or seed to choose from")]
    NothingToRun,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    /// Branching sampling, forest on the sampled terminals, matching on odd
    /// nodes (Ordered TSP).
    Otsp,
    /// Paths from sampled branchings plus a doubled forest (k-TSPP).
    Warmup,
    /// Warmup with each path replaced by the direct edge unless a
    /// `γ`-biased coin comes up heads (k-TSPP).
    Final,
    /// Doubled forest rooted at all endpoints plus direct edges (k-TSPP).
    Baseline3,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Otsp => "otsp",
            Algorithm::Warmup => "warmup",
            Algorithm::Final => "final",
            Algorithm::Baseline3 => "baseline3",
        }
    }

    pub fn is_randomized(self) -> bool {
        self != Algorithm::Baseline3
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Algorithm {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "otsp" => Ok(Algorithm::Otsp),
            "warmup" => Ok(Algorithm::Warmup),
            "final" => Ok(Algorithm::Final),
            "baseline3" => Ok(Algorithm::Baseline3),
            _ => Err(format!("unknown algorithm {s:?}")),
        }
    }
}

/// Coin resolution: `γ` is stored as an integer number of `1e-15` units.
pub const GAMMA_SCALE: u64 = 1_000_000_000_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauGamma {
    pub opt_lp: Rational,
    pub delta: Rational,
    /// `(1 - τ) · OPT_LP = Δ`.
    pub tau: Rational,
    pub gamma: f64,
    pub gamma_units: u64,
    /// `OPT_LP = 0`; `τ` and `γ` are then fixed to 0 and 1.
    pub degenerate: bool,
}

impl TauGamma {
    pub fn from_values(opt_lp: &Rational, delta: &Rational) -> TauGamma {
        if opt_lp.is_zero() {
            return TauGamma {
                opt_lp: opt_lp.clone(),
                delta: delta.clone(),
                tau: Rational::zero(),
                gamma: 1.0,
                gamma_units: GAMMA_SCALE,
                degenerate: true,
            };
        }
        let tau = Rational::one() - delta / opt_lp;
        let gamma_units = gamma_units_for(tau.to_f64());
        TauGamma {
            opt_lp: opt_lp.clone(),
            delta: delta.clone(),
            tau,
            gamma: gamma_units as f64 / GAMMA_SCALE as f64,
            gamma_units,
            degenerate: false,
        }
    }

    /// Exact coin: heads with probability `gamma_units / GAMMA_SCALE`.
    pub fn flip(&self, rng: &mut impl Rng) -> bool {
        rng.random_range(0..GAMMA_SCALE) < self.gamma_units
    }
}

/// `min(1, ln 1/τ)` in units of `1e-15`, rounded down with one unit of
/// margin so the coin never exceeds the real value.
pub fn gamma_units_for(tau: f64) -> u64 {
    if tau <= 0.0 {
        return GAMMA_SCALE;
    }
    let g = (-tau.ln()).clamp(0.0, 1.0);
    if g >= 1.0 {
        return GAMMA_SCALE;
    }
    ((g * GAMMA_SCALE as f64).floor() as u64).saturating_sub(1)
}

pub fn compute_tau_gamma(lp: &LpSolution, inst: &PairedInstance) -> TauGamma {
    TauGamma::from_values(&lp.objective, &inst.direct_cost())
}

/// Rounds a float bound up by a few ulps.
fn outward(x: f64) -> f64 {
    x * (1.0 + 8.0 * f64::EPSILON) + f64::MIN_POSITIVE
}

/// Expected-cost guarantee as a multiple of `OPT_LP`.
pub fn otsp_factor() -> f64 {
    outward(1.5 + (-1.0f64).exp())
}

pub fn warmup_factor(tau: f64) -> f64 {
    outward(1.0 + tau + 2.0 * (-1.0f64).exp())
}

pub fn final_factor(tau: f64, gamma: f64) -> f64 {
    outward(1.0 - tau + 2.0 * gamma * tau + 2.0 * (-gamma).exp())
}

/// Guarantee for both k-TSPP rounding algorithms at every `τ`.
pub fn global_ktspp_factor() -> f64 {
    outward(1.0 + 2.0 * (-0.5f64).exp())
}

/// `3 - τ`, exact.
pub fn baseline_factor(tau: &Rational) -> Rational {
    Rational::from(3) - tau
}

/// Analytic factor for a run of `alg` given `τ, γ`.
pub fn analytic_factor(alg: Algorithm, tg: &TauGamma) -> f64 {
    match alg {
        Algorithm::Otsp => otsp_factor(),
        Algorithm::Warmup => warmup_factor(tg.tau.to_f64()),
        Algorithm::Final => final_factor(tg.tau.to_f64(), tg.gamma),
        Algorithm::Baseline3 => outward(baseline_factor(&tg.tau).to_f64()),
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SolverOptions {
    pub lp: LpOptions,
    pub decompose: DecomposeOptions,
    pub matching: MatchingMode,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerCheck {
    pub name: String,
    pub lhs: Rational,
    pub rhs: Rational,
    pub holds: bool,
}

/// Deterministic inequalities every run must satisfy, checked exactly.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Ledger {
    pub checks: Vec<LedgerCheck>,
}

impl Ledger {
    fn check(&mut self, name: impl Into<String>, lhs: Rational, rhs: Rational) {
        let holds = lhs <= rhs;
        self.checks.push(LedgerCheck { name: name.into(), lhs, rhs, holds });
    }

    pub fn holds(&self) -> bool {
        self.checks.iter().all(|c| c.holds)
    }

    pub fn failures(&self) -> Vec<&LedgerCheck> {
        self.checks.iter().filter(|c| !c.holds).collect()
    }
}

/// Everything a run sampled and built. Branchings use the paired node ids
/// (`origin` maps them back); everything else uses the caller's ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunArtifacts {
    pub algorithm: Algorithm,
    pub seed: u64,
    pub origin: Vec<NodeId>,
    pub tau_gamma: Option<TauGamma>,
    /// `None` where a pair took the direct edge.
    pub branchings: Vec<Option<Branching>>,
    pub branching_costs: Vec<Rational>,
    pub coins: Vec<bool>,
    /// Per-pair paths (segments `o_i .. o_{i+1}` for Ordered TSP) before
    /// grafting.
    pub paths: Vec<Vec<NodeId>>,
    pub path_costs: Vec<Rational>,
    pub t_prime: Vec<NodeId>,
    pub forest: Vec<Edge>,
    pub forest_cost: Rational,
    pub join: Vec<(NodeId, NodeId)>,
    pub join_cost: Rational,
    pub total_cost: Rational,
    pub ledger: Ledger,
}

impl RunArtifacts {
    fn new(algorithm: Algorithm, seed: u64, origin: Vec<NodeId>) -> Self {
        RunArtifacts {
            algorithm,
            seed,
            origin,
            tau_gamma: None,
            branchings: vec![],
            branching_costs: vec![],
            coins: vec![],
            paths: vec![],
            path_costs: vec![],
            t_prime: vec![],
            forest: vec![],
            forest_cost: Rational::zero(),
            join: vec![],
            join_cost: Rational::zero(),
            total_cost: Rational::zero(),
            ledger: Ledger::default(),
        }
    }

    /// Recomputes every recorded cost from the recorded structures; empty
    /// when they all agree.
    pub fn audit(&self, m: &MetricInstance) -> Vec<String> {
        let mut out = Vec::new();
        let orig = |v: NodeId| self.origin.get(v).copied().unwrap_or(v);
        for (i, (b, c)) in self.branchings.iter().zip(&self.branching_costs).enumerate() {
            let got: Rational = b
                .as_ref()
                .map(|b| b.arcs.iter().map(|&(u, v)| m.cost(orig(u), orig(v))).sum())
                .unwrap_or_default();
            if &got != c {
                out.push(format!("branching {i}: recorded {c}, recomputed {got}"));
            }
        }
        for (i, (p, c)) in self.paths.iter().zip(&self.path_costs).enumerate() {
            let got = m.walk_cost(p);
            if &got != c {
                out.push(format!("path {i}: recorded {c}, recomputed {got}"));
            }
        }
        let f: Rational = self.forest.iter().map(|e| m.cost(e.u, e.v)).sum();
        if f != self.forest_cost {
            out.push(format!("forest: recorded {}, recomputed {f}", self.forest_cost));
        }
        let j: Rational = self.join.iter().map(|&(a, b)| m.cost(a, b)).sum();
        if j != self.join_cost {
            out.push(format!("join: recorded {}, recomputed {j}", self.join_cost));
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct Run {
    pub solution: Solution,
    pub artifacts: RunArtifacts,
}

impl Run {
    pub fn cost(&self) -> &Rational {
        match &self.solution {
            Solution::Tour(t) => &t.total_cost,
            Solution::Paths(p) => &p.total_cost,
        }
    }
}

/// Per-instance state shared by all runs.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub instance: Instance,
    pub paired: PairedInstance,
    pub lp: LpSolution,
    /// One decomposition per pair; empty for degenerate (`OPT_LP = 0`)
    /// instances, which use the direct arcs instead.
    pub families: Vec<BranchingFamily>,
    pub tau_gamma: TauGamma,
    pub matching: MatchingMode,
}

impl Prepared {
    pub fn new(instance: &Instance, opts: &SolverOptions) -> Result<Self, AlgorithmError> {
        let paired = match instance {
            Instance::Otsp(i) => i.to_pairs(),
            Instance::Ktspp(i) => i.normalize(),
        };
        let lp = solve_ktspp_lp(&paired, &opts.lp)?;
        let tau_gamma = compute_tau_gamma(&lp, &paired);
        let families = if tau_gamma.degenerate {
            vec![]
        } else {
            (0..paired.k())
                .map(|i| {
                    decompose_preflow(&lp.pair_digraph(i), &lp.requirements(i), &opts.decompose)
                        .map_err(|source| AlgorithmError::Decompose { pair: i, source: Box::new(source) })
                })
                .collect::<Result<_, _>>()?
        };
        Ok(Prepared { instance: instance.clone(), paired, lp, families, tau_gamma, matching: opts.matching })
    }

    pub fn opt_lp(&self) -> &Rational {
        &self.lp.objective
    }

    /// Original metric.
    pub fn metric(&self) -> &MetricInstance {
        self.instance.metric()
    }

    /// Algorithms that apply to this instance's problem.
    pub fn algorithms(&self) -> Vec<Algorithm> {
        match self.instance {
            Instance::Otsp(_) => vec![Algorithm::Otsp],
            Instance::Ktspp(_) => vec![Algorithm::Warmup, Algorithm::Final, Algorithm::Baseline3],
        }
    }

    /// `B_i` for pair `i` under `seed`; each pair draws from its own stream.
    pub fn sample_branching(&self, i: usize, seed: u64) -> Branching {
        let (s, t) = self.paired.pairs[i];
        match self.families.get(i) {
            Some(fam) => sample_branching(fam, &mut stream_rng(seed, 2 * i as u64)).clone(),
            None => Branching::new(s, vec![(s, t)]),
        }
    }

    /// Coin of pair `i` for the final algorithm.
    pub fn coin(&self, i: usize, seed: u64) -> bool {
        self.tau_gamma.flip(&mut stream_rng(seed, 2 * i as u64 + 1))
    }

    /// `E[c(B_i)]` computed exactly from the decomposition.
    pub fn expected_branching_cost(&self, i: usize) -> Rational {
        let m = &self.paired.metric;
        match self.families.get(i) {
            Some(fam) => fam.members.iter().map(|mb| mb.branching.cost(m) * &mb.weight).sum(),
            None => m.cost(self.paired.pairs[i].0, self.paired.pairs[i].1).clone(),
        }
    }

    /// The sampled terminal set `T'` of a run, in original ids.
    pub fn sample_t_prime(&self, alg: Algorithm, seed: u64) -> Vec<NodeId> {
        let mut t = BTreeSet::new();
        for (i, &(s, tt)) in self.paired.pairs.iter().enumerate() {
            let heads = alg != Algorithm::Final || self.coin(i, seed);
            if heads {
                t.extend(self.sample_branching(i, seed).nodes().into_iter().map(|v| self.paired.origin[v]));
            } else {
                t.insert(self.paired.origin[s]);
                t.insert(self.paired.origin[tt]);
            }
        }
        t.into_iter().collect()
    }

    pub fn run(&self, alg: Algorithm, seed: u64) -> Result<Run, AlgorithmError> {
        match (&self.instance, alg) {
            (Instance::Otsp(inst), Algorithm::Otsp) => otsp::run(self, inst, seed),
            (Instance::Ktspp(inst), Algorithm::Warmup | Algorithm::Final) => ktspp::run_rounding(self, inst, alg, seed),
            (Instance::Ktspp(inst), Algorithm::Baseline3) => ktspp::run_baseline(self, inst, seed),
            _ => Err(AlgorithmError::Unsupported(alg)),
        }
    }
}

/// Cheapest output over every (algorithm, seed) combination; the earliest
/// wins ties.
pub fn best_of(prep: &Prepared, algorithms: &[Algorithm], seeds: &[u64]) -> Result<Run, AlgorithmError> {
    let mut best: Option<Run> = None;
    for &alg in algorithms {
        let seeds: &[u64] = if alg.is_randomized() { seeds } else { &seeds[..seeds.len().min(1)] };
        for &seed in seeds {
            let run = prep.run(alg, seed)?;
            if best.as_ref().is_none_or(|b| run.cost() < b.cost()) {
                best = Some(run);
            }
        }
    }
    best.ok_or(AlgorithmError::NothingToRun)
}

/// Doubles the off-path part of `b` and shortcuts, giving an `s`-`t` path
/// through exactly the nodes of `b`.
pub fn branching_to_path(b: &Branching, t: NodeId) -> Option<Vec<NodeId>> {
    let spine = b.path_to(t)?;
    fn doubled(b: &Branching, c: NodeId, parent: NodeId, walk: &mut Vec<NodeId>) {
        walk.push(c);
        for ch in b.children(c) {
            doubled(b, ch, c, walk);
        }
        walk.push(parent);
    }
    let mut walk = vec![spine[0]];
    for (j, &p) in spine.iter().enumerate() {
        let next = spine.get(j + 1).copied();
        for ch in b.children(p) {
            if Some(ch) != next {
                doubled(b, ch, p, &mut walk);
            }
        }
        if let Some(nx) = next {
            walk.push(nx);
        }
    }
    Some(shortcut_walk(&walk, Some(t)))
}

pub fn solve_otsp(inst: &OtspInstance, seed: u64, opts: &SolverOptions) -> Result<Run, AlgorithmError> {
    Prepared::new(&Instance::Otsp(inst.clone()), opts)?.run(Algorithm::Otsp, seed)
}

pub fn solve_ktspp_warmup(inst: &KtsppInstance, seed: u64, opts: &SolverOptions) -> Result<Run, AlgorithmError> {
    Prepared::new(&Instance::Ktspp(inst.clone()), opts)?.run(Algorithm::Warmup, seed)
}

pub fn solve_ktspp_final(inst: &KtsppInstance, seed: u64, opts: &SolverOptions) -> Result<Run, AlgorithmError> {
    Prepared::new(&Instance::Ktspp(inst.clone()), opts)?.run(Algorithm::Final, seed)
}

/// The forest-doubling algorithm alone; needs no LP.
pub fn solve_ktspp_baseline3(inst: &KtsppInstance) -> Result<crate::instance::SolutionPaths, AlgorithmError> {
    Ok(baseline3_paths(inst)?.0)
}

#[cfg(test)]
mod tests;
