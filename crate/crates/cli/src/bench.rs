//! Experiment runner: seeded instances × algorithms × trials, aggregated
//! into one report row per (instance, algorithm).

use std::path::PathBuf;

use bridgeroute::algorithms::{
    analytic_factor, best_of, Algorithm, Prepared, SolverOptions,
};
use bridgeroute::forest::mean_stddev;
use bridgeroute::instance::{verify_ktspp_solution, verify_otsp_solution};
use bridgeroute::io::Solution;
use bridgeroute::oracle::{brute_ktspp, brute_otsp, OracleBudget};
use bridgeroute::parity::MatchingMode;
use bridgeroute::rng::trial_seed;
use bridgeroute::{generate_instance, GeneratorKind, Instance, ProblemKind, Rational};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Environment variable holding the default worker count.
pub const THREADS_ENV: &str = "BRIDGEROUTE_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Choice {
    Otsp,
    Warmup,
    Final,
    Baseline3,
    /// Cheapest of every algorithm that applies.
    Best,
}

impl Choice {
    pub fn parse(s: &str, problem: ProblemKind) -> Result<Choice, String> {
        match (s, problem) {
            ("best", _) => Ok(Choice::Best),
            ("otsp" | "final", ProblemKind::Otsp) => Ok(Choice::Otsp),
            ("warmup", ProblemKind::Ktspp) => Ok(Choice::Warmup),
            ("final", ProblemKind::Ktspp) => Ok(Choice::Final),
            ("baseline3", ProblemKind::Ktspp) => Ok(Choice::Baseline3),
            _ => Err(format!("algorithm {s:?} does not apply to {problem:?}")),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Choice::Otsp => "otsp",
            Choice::Warmup => "warmup",
            Choice::Final => "final",
            Choice::Baseline3 => "baseline3",
            Choice::Best => "best",
        }
    }

    fn algorithm(self) -> Option<Algorithm> {
        match self {
            Choice::Otsp => Some(Algorithm::Otsp),
            Choice::Warmup => Some(Algorithm::Warmup),
            Choice::Final => Some(Algorithm::Final),
            Choice::Baseline3 => Some(Algorithm::Baseline3),
            Choice::Best => None,
        }
    }

    pub fn run(self, prep: &Prepared, seed: u64) -> Result<bridgeroute::algorithms::Run, String> {
        match self.algorithm() {
            Some(a) => prep.run(a, seed),
            None => best_of(prep, &prep.algorithms(), &[seed]),
        }
        .map_err(|e| e.to_string())
    }

    /// Expected-cost factor of `OPT_LP`; `best` gets the smallest member's.
    pub fn factor(self, prep: &Prepared) -> f64 {
        match self.algorithm() {
            Some(a) => analytic_factor(a, &prep.tau_gamma),
            None => prep
                .algorithms()
                .into_iter()
                .map(|a| analytic_factor(a, &prep.tau_gamma))
                .fold(f64::INFINITY, f64::min),
        }
    }
}

fn default_generators() -> Vec<GeneratorKind> {
    vec![GeneratorKind::Euclidean2d]
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemKind,
    /// Cycled over instance indices.
    #[serde(default = "default_generators")]
    pub generators: Vec<GeneratorKind>,
    pub n: usize,
    pub k: usize,
    pub instances: usize,
    /// Instance `j` uses seed `base_seed + j`.
    #[serde(default)]
    pub base_seed: u64,
    pub algorithms: Vec<String>,
    pub trials: usize,
    #[serde(default)]
    pub output_csv: Option<PathBuf>,
    #[serde(default)]
    pub output_json: Option<PathBuf>,
    #[serde(default)]
    pub parallelism: Option<usize>,
    #[serde(default)]
    pub matching: MatchingMode,
    /// Compute the exact optimum when the instance is within oracle budget.
    #[serde(default = "default_true")]
    pub oracle: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("config JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl ExperimentConfig {
    pub fn from_json(bytes: &[u8]) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig = serde_json::from_slice(bytes)?;
        cfg.choices()?;
        Ok(cfg)
    }

    pub fn choices(&self) -> Result<Vec<Choice>, ConfigError> {
        if self.trials == 0 {
            return Err(ConfigError::Invalid("trials must be at least 1".into()));
        }
        if self.instances == 0 || self.generators.is_empty() || self.algorithms.is_empty() {
            return Err(ConfigError::Invalid("need at least one instance, generator and algorithm".into()));
        }
        if self.parallelism == Some(0) {
            return Err(ConfigError::Invalid("parallelism must be positive".into()));
        }
        self.algorithms.iter().map(|a| Choice::parse(a, self.problem).map_err(ConfigError::Invalid)).collect()
    }

    pub fn instance_seed(&self, j: usize) -> u64 {
        self.base_seed.wrapping_add(j as u64)
    }

    pub fn instance(&self, j: usize) -> Result<Instance, ConfigError> {
        let kind = self.generators[j % self.generators.len()];
        generate_instance(kind, self.problem, self.n, self.k, self.instance_seed(j))
            .map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn instance_id(&self, j: usize) -> String {
        let kind = self.generators[j % self.generators.len()];
        let kind = serde_json::to_value(kind).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default();
        let problem = match self.problem {
            ProblemKind::Otsp => "otsp",
            ProblemKind::Ktspp => "ktspp",
        };
        format!("{problem}-{kind}-n{}-k{}-s{}", self.n, self.k, self.instance_seed(j))
    }
}

/// Worker count from the environment, else the machine's parallelism.
pub fn default_parallelism() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|s| s.parse().ok())
        .filter(|&t: &usize| t > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub instance_id: String,
    pub algorithm: String,
    pub opt_lp: Option<Rational>,
    pub delta: Option<Rational>,
    pub tau: Option<Rational>,
    pub gamma: Option<f64>,
    pub mean_cost: Option<f64>,
    pub stddev: Option<f64>,
    pub min_cost: Option<Rational>,
    pub oracle_opt: Option<Rational>,
    pub ratio: Option<f64>,
    pub bound: Option<f64>,
    pub pass: bool,
    /// Why the row failed, if it did.
    pub note: String,
}

pub const CSV_HEADER: [&str; 14] = [
    "instance_id",
    "algorithm",
    "opt_lp",
    "delta",
    "tau",
    "gamma",
    "mean_cost",
    "stddev",
    "min_cost",
    "oracle_opt",
    "ratio",
    "bound",
    "pass",
    "note",
];

#[derive(Debug)]
struct Trial {
    cost: Option<Rational>,
    problem: Option<String>,
}

fn check_run(inst: &Instance, run: &bridgeroute::algorithms::Run) -> Option<String> {
    let verdict = match (inst, &run.solution) {
        (Instance::Otsp(i), Solution::Tour(t)) => verify_otsp_solution(i, t),
        (Instance::Ktspp(i), Solution::Paths(p)) => verify_ktspp_solution(i, p),
        _ => return Some("solution kind does not match the problem".into()),
    };
    if let bridgeroute::Verdict::Infeasible(r) = verdict {
        return Some(format!("infeasible: {r}"));
    }
    if let Some(c) = run.artifacts.ledger.failures().first() {
        return Some(format!("ledger: {} ({} > {})", c.name, c.lhs, c.rhs));
    }
    None
}

fn pool(threads: usize) -> Result<rayon::ThreadPool, ConfigError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| ConfigError::Invalid(e.to_string()))
}

/// Runs the experiment and writes the configured output files. Output is
/// identical for every parallelism degree: each trial draws from its own
/// stream keyed by (instance seed, trial index) and rows are emitted in
/// (instance, algorithm) order.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ReportRow>, ConfigError> {
    let choices = cfg.choices()?;
    let threads = cfg.parallelism.unwrap_or_else(default_parallelism);
    let instances: Vec<Instance> = (0..cfg.instances).map(|j| cfg.instance(j)).collect::<Result<_, _>>()?;
    let opts = SolverOptions { matching: cfg.matching, ..SolverOptions::default() };
    let budget = OracleBudget::default();

    let rows = pool(threads)?.install(|| {
        let prepared: Vec<Result<Prepared, String>> = instances
            .par_iter()
            .map(|inst| Prepared::new(inst, &opts).map_err(|e| e.to_string()))
            .collect();
        let oracles: Vec<Option<Rational>> = instances
            .par_iter()
            .map(|inst| {
                if !cfg.oracle {
                    return None;
                }
                match inst {
                    Instance::Otsp(i) => brute_otsp(i, &budget).ok().map(|s| s.total_cost),
                    Instance::Ktspp(i) => brute_ktspp(i, &budget).ok().map(|s| s.total_cost),
                }
            })
            .collect();
        let units: Vec<(usize, usize, usize)> = (0..instances.len())
            .flat_map(|j| (0..choices.len()).flat_map(move |a| (0..cfg.trials).map(move |t| (j, a, t))))
            .collect();
        let trials: Vec<Trial> = units
            .par_iter()
            .map(|&(j, a, t)| {
                let Ok(prep) = &prepared[j] else {
                    return Trial { cost: None, problem: None };
                };
                match choices[a].run(prep, trial_seed(cfg.instance_seed(j), t as u64)) {
                    Ok(run) => Trial { cost: Some(run.cost().clone()), problem: check_run(&instances[j], &run) },
                    Err(e) => Trial { cost: None, problem: Some(e) },
                }
            })
            .collect();

        let mut rows = Vec::new();
        for (j, prep) in prepared.iter().enumerate() {
            for (a, choice) in choices.iter().enumerate() {
                let start = (j * choices.len() + a) * cfg.trials;
                let block = &trials[start..start + cfg.trials];
                rows.push(make_row(cfg, j, *choice, prep, oracles[j].clone(), block));
            }
        }
        rows
    });

    if let Some(p) = &cfg.output_csv {
        std::fs::write(p, to_csv(&rows))?;
    }
    if let Some(p) = &cfg.output_json {
        std::fs::write(p, to_json(&rows))?;
    }
    Ok(rows)
}

fn make_row(
    cfg: &ExperimentConfig,
    j: usize,
    choice: Choice,
    prep: &Result<Prepared, String>,
    oracle_opt: Option<Rational>,
    block: &[Trial],
) -> ReportRow {
    let mut row = ReportRow {
        instance_id: cfg.instance_id(j),
        algorithm: choice.name().to_string(),
        opt_lp: None,
        delta: None,
        tau: None,
        gamma: None,
        mean_cost: None,
        stddev: None,
        min_cost: None,
        oracle_opt,
        ratio: None,
        bound: None,
        pass: false,
        note: String::new(),
    };
    let prep = match prep {
        Ok(p) => p,
        Err(e) => {
            row.note = format!("preparation failed: {e}");
            return row;
        }
    };
    let tg = &prep.tau_gamma;
    row.opt_lp = Some(tg.opt_lp.clone());
    row.delta = Some(tg.delta.clone());
    row.tau = Some(tg.tau.clone());
    row.gamma = Some(tg.gamma);
    let bound = choice.factor(prep) * tg.opt_lp.to_f64();
    row.bound = Some(bound);

    let mut notes: Vec<String> = block.iter().filter_map(|t| t.problem.clone()).collect();
    let costs: Vec<Rational> = block.iter().filter_map(|t| t.cost.clone()).collect();
    if costs.len() == block.len() {
        let exact_mean = costs.iter().sum::<Rational>() / Rational::from(costs.len());
        let floats: Vec<f64> = costs.iter().map(Rational::to_f64).collect();
        let (_, sd) = mean_stddev(&floats);
        let mean = exact_mean.to_f64();
        row.mean_cost = Some(mean);
        row.stddev = Some(sd);
        let min = costs.iter().min().cloned().expect("at least one trial");
        if tg.opt_lp.is_positive() {
            row.ratio = Some(mean / tg.opt_lp.to_f64());
        }
        if cfg.trials > 1 && mean > bound + 3.0 * sd / (cfg.trials as f64).sqrt() {
            notes.push(format!("mean {mean:.6} above bound {bound:.6}"));
        }
        if let Some(opt) = &row.oracle_opt {
            if opt < &tg.opt_lp {
                notes.push("oracle optimum below OPT_LP".into());
            }
            if &min < opt {
                notes.push("cost below oracle optimum".into());
            }
        }
        row.min_cost = Some(min);
    }
    notes.dedup();
    row.pass = notes.is_empty();
    row.note = notes.join("; ");
    row
}

fn fmt_f(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.9}")).unwrap_or_default()
}

fn fmt_q(x: &Option<Rational>) -> String {
    x.as_ref().map(|v| v.to_string()).unwrap_or_default()
}

/// Canonical CSV: fixed column order, exact rationals as `p/q`, floats with
/// nine decimals.
pub fn to_csv(rows: &[ReportRow]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for r in rows {
        w.write_record([
            r.instance_id.clone(),
            r.algorithm.clone(),
            fmt_q(&r.opt_lp),
            fmt_q(&r.delta),
            fmt_q(&r.tau),
            fmt_f(r.gamma),
            fmt_f(r.mean_cost),
            fmt_f(r.stddev),
            fmt_q(&r.min_cost),
            fmt_q(&r.oracle_opt),
            fmt_f(r.ratio),
            fmt_f(r.bound),
            r.pass.to_string(),
            r.note.clone(),
        ])
        .expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

pub fn to_json(rows: &[ReportRow]) -> Vec<u8> {
    serde_json::to_vec_pretty(rows).expect("rows serialize")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub algorithm: String,
    pub rows: usize,
    pub worst_ratio: Option<f64>,
    pub mean_ratio: Option<f64>,
    pub pass_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SummaryError {
    #[error("no rows to summarize")]
    EmptyInput,
}

/// Per algorithm, in first-appearance order: worst and mean ratio over rows
/// that have one, and the fraction of passing rows.
pub fn summarize(rows: &[ReportRow]) -> Result<Vec<SummaryRow>, SummaryError> {
    if rows.is_empty() {
        return Err(SummaryError::EmptyInput);
    }
    let mut names: Vec<&str> = Vec::new();
    for r in rows {
        if !names.contains(&r.algorithm.as_str()) {
            names.push(&r.algorithm);
        }
    }
    Ok(names
        .into_iter()
        .map(|name| {
            let mine: Vec<&ReportRow> = rows.iter().filter(|r| r.algorithm == name).collect();
            let ratios: Vec<f64> = mine.iter().filter_map(|r| r.ratio).collect();
            SummaryRow {
                algorithm: name.to_string(),
                rows: mine.len(),
                worst_ratio: ratios.iter().copied().reduce(f64::max),
                mean_ratio: (!ratios.is_empty()).then(|| ratios.iter().sum::<f64>() / ratios.len() as f64),
                pass_rate: mine.iter().filter(|r| r.pass).count() as f64 / mine.len() as f64,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(alg: &str, ratio: f64, pass: bool) -> ReportRow {
        ReportRow {
            instance_id: "x".into(),
            algorithm: alg.into(),
            opt_lp: None,
            delta: None,
            tau: None,
            gamma: None,
            mean_cost: None,
            stddev: None,
            min_cost: None,
            oracle_opt: None,
            ratio: Some(ratio),
            bound: None,
            pass,
            note: String::new(),
        }
    }

    #[test]
    fn summarize_examples() {
        let s = summarize(&[row("final", 1.9, true)]).unwrap();
        assert_eq!(s[0].worst_ratio, Some(1.9));
        assert_eq!(s[0].mean_ratio, Some(1.9));

        let s = summarize(&[row("final", 1.5, true), row("final", 2.1, true)]).unwrap();
        assert_eq!(s[0].worst_ratio, Some(2.1));
        assert!((s[0].mean_ratio.unwrap() - 1.8).abs() < 1e-12);

        let rows: Vec<ReportRow> = (0..20).map(|_| row("otsp", 1.2, true)).collect();
        assert_eq!(summarize(&rows).unwrap()[0].pass_rate, 1.0);

        assert_eq!(summarize(&[]), Err(SummaryError::EmptyInput));
    }

    #[test]
    fn config_validation() {
        let ok = br#"{"problem":"ktspp","n":6,"k":2,"instances":2,"algorithms":["final","best"],"trials":3}"#;
        let cfg = ExperimentConfig::from_json(ok).unwrap();
        assert_eq!(cfg.generators, vec![GeneratorKind::Euclidean2d]);
        assert!(cfg.oracle);
        let zero = br#"{"problem":"ktspp","n":6,"k":2,"instances":2,"algorithms":["final"],"trials":0}"#;
        assert!(matches!(ExperimentConfig::from_json(zero), Err(ConfigError::Invalid(_))));
        let wrong = br#"{"problem":"otsp","n":6,"k":2,"instances":2,"algorithms":["warmup"],"trials":1}"#;
        assert!(matches!(ExperimentConfig::from_json(wrong), Err(ConfigError::Invalid(_))));
        let unknown = br#"{"problem":"otsp","n":6,"k":2,"instances":2,"algorithms":["otsp"],"trials":1,"extra":1}"#;
        assert!(matches!(ExperimentConfig::from_json(unknown), Err(ConfigError::Json(_))));
    }

    #[test]
    fn single_trial_rows_have_zero_spread() {
        let cfg = ExperimentConfig {
            problem: ProblemKind::Ktspp,
            generators: default_generators(),
            n: 6,
            k: 2,
            instances: 2,
            base_seed: 4,
            algorithms: vec!["final".into(), "baseline3".into()],
            trials: 1,
            output_csv: None,
            output_json: None,
            parallelism: Some(2),
            matching: MatchingMode::Exact,
            oracle: true,
        };
        let rows = run_experiment(&cfg).unwrap();
        assert_eq!(rows.len(), 4);
        for r in &rows {
            assert_eq!(r.stddev, Some(0.0));
            assert!(r.pass, "{r:?}");
            assert!(r.oracle_opt.is_some());
        }
    }
}
