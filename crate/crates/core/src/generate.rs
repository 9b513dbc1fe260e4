//! Deterministic random instance generators.

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::instance::{
    metric_closure, KtsppInstance, MetricInstance, NodeId, OtspInstance, WeightedMultigraph,
};
use crate::rational::Rational;

/// Coordinates and distances live on a `1/GRID` grid.
pub const GRID: i64 = 1_000_000;
/// Side of the square Euclidean points are drawn from.
pub const SQUARE_SIDE: i64 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum GeneratorKind {
    Euclidean2d,
    GraphClosure,
    UniformMatrix,
}

impl std::str::FromStr for GeneratorKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "euclidean2d" => Ok(Self::Euclidean2d),
            "graphClosure" | "graph-closure" => Ok(Self::GraphClosure),
            "uniformMatrix" | "uniform-matrix" => Ok(Self::UniformMatrix),
            _ => Err(format!("unknown generator {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemKind {
    Otsp,
    Ktspp,
}

impl std::str::FromStr for ProblemKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "otsp" => Ok(Self::Otsp),
            "ktspp" => Ok(Self::Ktspp),
            _ => Err(format!("unknown problem {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Instance {
    Otsp(OtspInstance),
    Ktspp(KtsppInstance),
}

impl Instance {
    pub fn metric(&self) -> &MetricInstance {
        match self {
            Instance::Otsp(i) => &i.metric,
            Instance::Ktspp(i) => &i.metric,
        }
    }

    /// Order nodes or pair endpoints, sorted and deduplicated.
    pub fn terminals(&self) -> Vec<NodeId> {
        let mut t: Vec<NodeId> = match self {
            Instance::Otsp(i) => i.order.clone(),
            Instance::Ktspp(i) => i.pairs.iter().flat_map(|&(s, t)| [s, t]).collect(),
        };
        t.sort_unstable();
        t.dedup();
        t
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid generator parameters: {0}")]
pub struct InvalidParams(pub String);

/// Exact snapped point, in units of `1/GRID`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridPoint {
    pub x: i64,
    pub y: i64,
}

fn isqrt_ceil(v: u128) -> u128 {
    if v == 0 {
        return 0;
    }
    let mut r = (v as f64).sqrt() as u128;
    while r * r > v {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= v {
        r += 1;
    }
    if r * r == v {
        r
    } else {
        r + 1
    }
}

/// Random points on the grid with distances rounded up to the grid and then
/// metric-closed.
pub fn euclidean_points(n: usize, rng: &mut impl Rng) -> (Vec<GridPoint>, MetricInstance) {
    let pts: Vec<GridPoint> = (0..n)
        .map(|_| GridPoint {
            x: rng.random_range(0..=SQUARE_SIDE * GRID),
            y: rng.random_range(0..=SQUARE_SIDE * GRID),
        })
        .collect();
    let mut g = WeightedMultigraph::new(n);
    for u in 0..n {
        for v in u + 1..n {
            let dx = (pts[u].x - pts[v].x).unsigned_abs() as u128;
            let dy = (pts[u].y - pts[v].y).unsigned_abs() as u128;
            let d = isqrt_ceil(dx * dx + dy * dy) as i64;
            g.add_edge(u, v, Rational::new(d, GRID));
        }
    }
    let m = metric_closure(&g).expect("complete graph is connected");
    (pts, m)
}

fn random_graph_metric(n: usize, rng: &mut impl Rng) -> MetricInstance {
    let mut g = WeightedMultigraph::new(n);
    for v in 1..n {
        let u = rng.random_range(0..v);
        g.add_edge(u, v, Rational::from(rng.random_range(1..=10i64)));
    }
    for u in 0..n {
        for v in u + 1..n {
            if rng.random_bool(0.3) {
                g.add_edge(u, v, Rational::from(rng.random_range(1..=10i64)));
            }
        }
    }
    metric_closure(&g).expect("spanning tree keeps the graph connected")
}

fn uniform_matrix_metric(n: usize, rng: &mut impl Rng) -> MetricInstance {
    let mut g = WeightedMultigraph::new(n);
    for u in 0..n {
        for v in u + 1..n {
            g.add_edge(u, v, Rational::from(rng.random_range(1..=100i64)));
        }
    }
    metric_closure(&g).expect("complete graph is connected")
}

/// Points behind `generate_metric(Euclidean2d, n, seed)`.
pub fn euclidean_points_for_seed(n: usize, seed: u64) -> Vec<GridPoint> {
    euclidean_points(n, &mut ChaCha8Rng::seed_from_u64(seed)).0
}

pub fn generate_metric(kind: GeneratorKind, n: usize, seed: u64) -> MetricInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match kind {
        GeneratorKind::Euclidean2d => euclidean_points(n, &mut rng).1,
        GeneratorKind::GraphClosure => random_graph_metric(n, &mut rng),
        GeneratorKind::UniformMatrix => uniform_matrix_metric(n, &mut rng),
    }
}

/// `k` is the number of order nodes for OTSP and of pairs for k-TSPP.
pub fn generate_instance(
    kind: GeneratorKind,
    problem: ProblemKind,
    n: usize,
    k: usize,
    seed: u64,
) -> Result<Instance, InvalidParams> {
    let needed = match problem {
        ProblemKind::Otsp => k,
        ProblemKind::Ktspp => 2 * k,
    };
    if k == 0 {
        return Err(InvalidParams("k must be at least 1".into()));
    }
    if n < needed.max(2) {
        return Err(InvalidParams(format!("n = {n} is below the {} nodes required", needed.max(2))));
    }
    let metric = generate_metric(kind, n, seed);
    // Endpoint choice uses its own stream so it does not shift the metric.
    let mut rng = crate::rng::stream_rng(seed, 1);
    let mut ids: Vec<NodeId> = (0..n).collect();
    ids.shuffle(&mut rng);
    Ok(match problem {
        ProblemKind::Otsp => {
            Instance::Otsp(OtspInstance::new(metric, ids[..k].to_vec()).expect("distinct ids"))
        }
        ProblemKind::Ktspp => {
            let pairs = ids[..2 * k].chunks(2).map(|c| (c[0], c[1])).collect();
            Instance::Ktspp(KtsppInstance::new(metric, pairs).expect("ids in range"))
        }
    })
}
