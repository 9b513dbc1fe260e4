//! Terminal-rooted spanning forests, drop values, fractional covers, and
//! the random-terminal (bridge) bound.

use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::instance::{Edge, MetricInstance, NodeId, WeightedMultigraph};
use crate::rational::Rational;
use crate::rng::{stream_rng, trial_seed};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ForestError {
    #[error("terminal set is empty")]
    EmptyTerminalSet,
    #[error("graph is disconnected")]
    Disconnected,
    #[error("node {0} out of range")]
    NodeOutOfRange(NodeId),
    #[error("invalid cover: {0}")]
    InvalidCover(String),
}

/// Spanning forest with exactly one terminal per component.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RootedForest {
    pub n: usize,
    pub terminals: Vec<NodeId>,
    pub edges: Vec<Edge>,
    /// Terminal of each node's component.
    pub root_of: Vec<NodeId>,
    pub total_cost: Rational,
}

impl RootedForest {
    /// Builds the component map; `None` if some component has no terminal
    /// or two of them, or `edges` has a cycle.
    pub fn from_edges(n: usize, terminals: &[NodeId], edges: Vec<Edge>) -> Option<Self> {
        let mut adj = vec![Vec::new(); n];
        for e in &edges {
            adj[e.u].push(e.v);
            adj[e.v].push(e.u);
        }
        let mut root_of = vec![usize::MAX; n];
        let mut terminals: Vec<NodeId> = terminals.to_vec();
        terminals.sort_unstable();
        terminals.dedup();
        for &t in &terminals {
            if root_of[t] != usize::MAX {
                return None;
            }
            root_of[t] = t;
            let mut stack = vec![t];
            while let Some(u) = stack.pop() {
                for &w in &adj[u] {
                    if root_of[w] == usize::MAX {
                        root_of[w] = t;
                        stack.push(w);
                    } else if root_of[w] != t {
                        return None;
                    }
                }
            }
        }
        // A forest on n nodes with |T| components has n - |T| edges.
        if root_of.contains(&usize::MAX) || edges.len() + terminals.len() != n {
            return None;
        }
        let total_cost = edges.iter().map(|e| &e.cost).sum();
        Some(RootedForest { n, terminals, edges, root_of, total_cost })
    }

    /// Nodes of the component rooted at `t`, sorted.
    pub fn component(&self, t: NodeId) -> Vec<NodeId> {
        (0..self.n).filter(|&v| self.root_of[v] == t).collect()
    }

    pub fn as_multigraph(&self) -> WeightedMultigraph {
        WeightedMultigraph { n: self.n, edges: self.edges.clone() }
    }
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind((0..n).collect())
    }
    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut y = x;
        while self.0[y] != r {
            let next = self.0[y];
            self.0[y] = r;
            y = next;
        }
        r
    }
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.0[ra.max(rb)] = ra.min(rb);
        true
    }
}

fn check_terminals(n: usize, t: &[NodeId]) -> Result<(), ForestError> {
    if t.is_empty() {
        return Err(ForestError::EmptyTerminalSet);
    }
    match t.iter().find(|&&v| v >= n) {
        Some(&v) => Err(ForestError::NodeOutOfRange(v)),
        None => Ok(()),
    }
}

/// Kruskal on `g` with all of `t` merged into one node. Ties break by edge
/// position in `g`.
pub fn min_rooted_forest_in(g: &WeightedMultigraph, t: &[NodeId]) -> Result<RootedForest, ForestError> {
    check_terminals(g.n, t)?;
    let mut uf = UnionFind::new(g.n);
    for &x in t {
        uf.union(t[0], x);
    }
    let mut order: Vec<usize> = (0..g.edges.len()).collect();
    order.sort_by(|&a, &b| g.edges[a].cost.cmp(&g.edges[b].cost).then(a.cmp(&b)));
    let mut edges = Vec::new();
    for i in order {
        let e = &g.edges[i];
        if uf.union(e.u, e.v) {
            edges.push(e.clone());
        }
    }
    RootedForest::from_edges(g.n, t, edges).ok_or(ForestError::Disconnected)
}

pub fn min_rooted_forest(m: &MetricInstance, t: &[NodeId]) -> Result<RootedForest, ForestError> {
    min_rooted_forest_in(&m.complete_graph(), t)
}

/// `c_T`.
pub fn rooted_forest_cost(m: &MetricInstance, t: &[NodeId]) -> Result<Rational, ForestError> {
    Ok(min_rooted_forest(m, t)?.total_cost)
}

/// Edges of `f` on the path between `a` and `b`, if connected.
fn forest_path(f: &RootedForest, a: NodeId, b: NodeId) -> Option<Vec<&Edge>> {
    let mut prev: Vec<Option<(NodeId, usize)>> = vec![None; f.n];
    let mut seen = vec![false; f.n];
    seen[a] = true;
    let mut stack = vec![a];
    while let Some(u) = stack.pop() {
        for (i, e) in f.edges.iter().enumerate() {
            let w = if e.u == u { e.v } else if e.v == u { e.u } else { continue };
            if !seen[w] {
                seen[w] = true;
                prev[w] = Some((u, i));
                stack.push(w);
            }
        }
    }
    if !seen[b] {
        return None;
    }
    let mut out = Vec::new();
    let mut v = b;
    while v != a {
        let (u, i) = prev[v]?;
        out.push(&f.edges[i]);
        v = u;
    }
    Some(out)
}

/// Non-forest edges of `g` that break the exchange conditions certifying
/// optimality of `f`. Empty iff `f` is a minimum-cost rooted forest.
pub fn exchange_violations(g: &WeightedMultigraph, f: &RootedForest) -> Vec<Edge> {
    let mut in_f: Vec<Edge> = f.edges.clone();
    let mut out = Vec::new();
    for e in &g.edges {
        if let Some(pos) = in_f.iter().position(|x| x == e) {
            in_f.swap_remove(pos);
            continue;
        }
        let path: Vec<&Edge> = if f.root_of[e.u] == f.root_of[e.v] {
            forest_path(f, e.u, e.v).unwrap_or_default()
        } else {
            let mut p = forest_path(f, f.root_of[e.u], e.u).unwrap_or_default();
            p.extend(forest_path(f, e.v, f.root_of[e.v]).unwrap_or_default());
            p
        };
        if path.iter().any(|x| x.cost > e.cost) {
            out.push(e.clone());
        }
    }
    out
}

/// `drop_T(S) = c_T - c_{T ∪ S}`.
pub fn drop_value(m: &MetricInstance, t: &[NodeId], s: &[NodeId]) -> Result<Rational, ForestError> {
    let mut ts: Vec<NodeId> = t.iter().chain(s).copied().collect();
    ts.sort_unstable();
    ts.dedup();
    Ok(rooted_forest_cost(m, t)? - rooted_forest_cost(m, &ts)?)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FractionalCover {
    pub sets: Vec<(Vec<NodeId>, Rational)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverCheck {
    pub holds: bool,
    pub forest_cost: Rational,
    pub weighted_drop: Rational,
    pub slack: Rational,
}

/// Compares `c_T` with `sum_S drop_T(S) z_S`.
pub fn check_cover_inequality(m: &MetricInstance, t: &[NodeId], cover: &FractionalCover) -> Result<CoverCheck, ForestError> {
    check_terminals(m.n(), t)?;
    let tset: BTreeSet<NodeId> = t.iter().copied().collect();
    let mut covered = vec![Rational::zero(); m.n()];
    for (s, w) in &cover.sets {
        if w.is_negative() {
            return Err(ForestError::InvalidCover("negative weight".into()));
        }
        for &v in s {
            if v >= m.n() {
                return Err(ForestError::NodeOutOfRange(v));
            }
            if tset.contains(&v) {
                return Err(ForestError::InvalidCover(format!("set contains terminal {v}")));
            }
            covered[v] += w;
        }
    }
    if let Some(v) = (0..m.n()).find(|v| !tset.contains(v) && covered[*v] < Rational::one()) {
        return Err(ForestError::InvalidCover(format!("node {v} covered below one")));
    }
    let forest_cost = rooted_forest_cost(m, t)?;
    let mut weighted_drop = Rational::zero();
    for (s, w) in &cover.sets {
        weighted_drop += drop_value(m, t, s)? * w;
    }
    let slack = &weighted_drop - &forest_cost;
    Ok(CoverCheck { holds: !slack.is_negative(), forest_cost, weighted_drop, slack })
}

/// Distribution over subsets of the non-terminals.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum SubsetSampler {
    /// Each node is left out independently with probability `miss`.
    Independent { miss: Rational },
    /// Explicit list of (set, probability); probabilities sum to one.
    Explicit(Vec<(Vec<NodeId>, Rational)>),
}

impl SubsetSampler {
    pub fn sample(&self, free: &[NodeId], rng: &mut impl Rng) -> Vec<NodeId> {
        match self {
            SubsetSampler::Independent { miss } => {
                let den = miss.denom_u64().expect("64-bit denominator");
                let num = miss.scaled_integer(den).expect("miss in [0, 1]") as u64;
                free.iter().copied().filter(|_| rng.random_range(0..den) >= num).collect()
            }
            SubsetSampler::Explicit(list) => {
                let weights: Vec<&Rational> = list.iter().map(|(_, p)| p).collect();
                let den = crate::rational::common_denominator(weights.iter().copied(), u64::MAX).expect("64-bit denominators");
                let draw = rng.random_range(0..den);
                let mut acc = 0u64;
                for (s, p) in list {
                    acc += p.scaled_integer(den).expect("probability scales") as u64;
                    if draw < acc {
                        return s.clone();
                    }
                }
                list.last().map(|(s, _)| s.clone()).unwrap_or_default()
            }
        }
    }

    /// Largest probability that a node of `free` is missed.
    pub fn miss_bound(&self, free: &[NodeId]) -> Rational {
        match self {
            SubsetSampler::Independent { miss } => miss.clone(),
            SubsetSampler::Explicit(list) => free
                .iter()
                .map(|v| list.iter().filter(|(s, _)| !s.contains(v)).map(|(_, p)| p).sum::<Rational>())
                .max()
                .unwrap_or_default(),
        }
    }

    /// Every outcome with its exact probability. Independent sampling is
    /// enumerated over all `2^|free|` subsets.
    pub fn outcomes(&self, free: &[NodeId]) -> Vec<(Vec<NodeId>, Rational)> {
        match self {
            SubsetSampler::Independent { miss } => {
                let hit = Rational::one() - miss;
                (0u64..1 << free.len())
                    .map(|mask| {
                        let mut p = Rational::one();
                        let mut s = Vec::new();
                        for (i, &v) in free.iter().enumerate() {
                            if mask >> i & 1 == 1 {
                                p *= &hit;
                                s.push(v);
                            } else {
                                p *= miss;
                            }
                        }
                        (s, p)
                    })
                    .collect()
            }
            SubsetSampler::Explicit(list) => list.clone(),
        }
    }
}

pub fn non_terminals(n: usize, t: &[NodeId]) -> Vec<NodeId> {
    (0..n).filter(|v| !t.contains(v)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BridgeReport {
    pub trials: usize,
    pub forest_cost: f64,
    pub gamma: f64,
    pub bound: f64,
    pub empirical_mean: f64,
    pub stddev: f64,
    pub pass: bool,
    /// Samples where `c_{T ∪ S} > c_T` (must be zero).
    pub increases: usize,
}

/// Empirical mean of `c_{T ∪ S}` against `gamma * c_T`, passing within
/// three standard errors. Trial `j` draws from its own stream.
pub fn bridge_montecarlo(
    m: &MetricInstance,
    t: &[NodeId],
    sampler: &SubsetSampler,
    gamma: f64,
    trials: usize,
    seed: u64,
) -> Result<BridgeReport, ForestError> {
    let c_t = rooted_forest_cost(m, t)?;
    let free = non_terminals(m.n(), t);
    let mut samples = Vec::with_capacity(trials);
    let mut increases = 0;
    for j in 0..trials {
        let mut rng = stream_rng(trial_seed(seed, j as u64), 0);
        let s = sampler.sample(&free, &mut rng);
        let ts: Vec<NodeId> = t.iter().chain(&s).copied().collect();
        let c = rooted_forest_cost(m, &ts)?;
        if c > c_t {
            increases += 1;
        }
        samples.push(c.to_f64());
    }
    let (mean, sd) = mean_stddev(&samples);
    let bound = gamma * c_t.to_f64();
    let pass = increases == 0 && mean <= bound + 3.0 * sd / (trials.max(1) as f64).sqrt();
    Ok(BridgeReport { trials, forest_cost: c_t.to_f64(), gamma, bound, empirical_mean: mean, stddev: sd, pass, increases })
}

/// Exact `E[c_{T ∪ S}]` over the sampler's outcomes.
pub fn bridge_expectation(m: &MetricInstance, t: &[NodeId], sampler: &SubsetSampler) -> Result<Rational, ForestError> {
    let free = non_terminals(m.n(), t);
    let mut e = Rational::zero();
    for (s, p) in sampler.outcomes(&free) {
        let ts: Vec<NodeId> = t.iter().chain(&s).copied().collect();
        e += rooted_forest_cost(m, &ts)? * p;
    }
    Ok(e)
}

/// Sample mean and sample standard deviation (zero for fewer than two
/// samples).
pub fn mean_stddev(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// One closed walk `root, .., root` per component with at least two nodes:
/// the preorder of the doubled tree, i.e. its Euler tour shortcut.
pub fn double_forest_to_cycles(f: &RootedForest) -> Vec<(NodeId, Vec<NodeId>)> {
    let mut adj: Vec<Vec<NodeId>> = vec![Vec::new(); f.n];
    for e in &f.edges {
        adj[e.u].push(e.v);
        adj[e.v].push(e.u);
    }
    adj.iter_mut().for_each(|a| a.sort_unstable());
    let mut out = Vec::new();
    for &t in &f.terminals {
        if adj[t].is_empty() {
            continue;
        }
        let mut seen = vec![false; f.n];
        let mut order = Vec::new();
        let mut stack = vec![t];
        while let Some(u) = stack.pop() {
            if seen[u] {
                continue;
            }
            seen[u] = true;
            order.push(u);
            for &w in adj[u].iter().rev() {
                if !seen[w] {
                    stack.push(w);
                }
            }
        }
        order.push(t);
        out.push((t, order));
    }
    out
}
