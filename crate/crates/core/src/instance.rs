//! Instances, metrics, walks and feasibility checks for both problems.

use std::collections::BTreeSet;
use std::fmt;

use crate::rational::Rational;

pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum InstanceError {
    #[error("cost matrix is not {n}x{n}")]
    Shape { n: usize },
    #[error("graph is disconnected: no path between {0} and {1}")]
    DisconnectedGraph(NodeId, NodeId),
    #[error("negative edge cost on ({0}, {1})")]
    NegativeCost(NodeId, NodeId),
    #[error("node id {0} out of range")]
    NodeOutOfRange(NodeId),
    #[error("order node {0} repeated")]
    RepeatedOrderNode(NodeId),
    #[error("instance needs at least one order node or pair")]
    Empty,
    #[error("metric invalid: {0}")]
    InvalidMetric(MetricViolation),
}

/// Symmetric pseudometric on `n` named nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetricInstance {
    names: Vec<String>,
    cost: Vec<Vec<Rational>>,
}

impl MetricInstance {
    /// Checks only the shape; use [`validate_metric`] for the metric axioms.
    pub fn new(names: Vec<String>, cost: Vec<Vec<Rational>>) -> Result<Self, InstanceError> {
        let n = names.len();
        if cost.len() != n || cost.iter().any(|r| r.len() != n) {
            return Err(InstanceError::Shape { n });
        }
        Ok(MetricInstance { names, cost })
    }

    pub fn from_matrix(cost: Vec<Vec<Rational>>) -> Result<Self, InstanceError> {
        let names = default_names(cost.len());
        Self::new(names, cost)
    }

    /// Shape check plus metric axioms.
    pub fn validated(names: Vec<String>, cost: Vec<Vec<Rational>>) -> Result<Self, InstanceError> {
        let m = Self::new(names, cost)?;
        if let Some(v) = validate_metric(&m).into_iter().next() {
            return Err(InstanceError::InvalidMetric(v));
        }
        Ok(m)
    }

    pub fn n(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn cost(&self, u: NodeId, v: NodeId) -> &Rational {
        &self.cost[u][v]
    }

    pub fn matrix(&self) -> &[Vec<Rational>] {
        &self.cost
    }

    /// Node ids `0..n` sorted by name lookup.
    pub fn id_of(&self, name: &str) -> Option<NodeId> {
        self.names.iter().position(|x| x == name)
    }

    /// Open walk cost.
    pub fn walk_cost(&self, walk: &[NodeId]) -> Rational {
        walk.windows(2).map(|w| &self.cost[w[0]][w[1]]).sum()
    }

    /// Closed tour cost, including the edge back to the start.
    pub fn tour_cost(&self, tour: &[NodeId]) -> Rational {
        match (tour.first(), tour.last()) {
            (Some(&f), Some(&l)) if tour.len() > 1 => self.walk_cost(tour) + &self.cost[l][f],
            _ => Rational::zero(),
        }
    }

    /// Expanded metric where node `i` of the result is a colocated copy of
    /// `origin[i]`.
    pub fn with_copies(&self, origin: &[NodeId], names: Vec<String>) -> MetricInstance {
        let cost = origin
            .iter()
            .map(|&a| origin.iter().map(|&b| self.cost[a][b].clone()).collect())
            .collect();
        MetricInstance { names, cost }
    }

    /// Complete graph of the metric as a multigraph, edges in `(u, v)`, `u < v`
    /// lexicographic order.
    pub fn complete_graph(&self) -> WeightedMultigraph {
        let n = self.n();
        let mut g = WeightedMultigraph::new(n);
        for u in 0..n {
            for v in u + 1..n {
                g.add_edge(u, v, self.cost[u][v].clone());
            }
        }
        g
    }
}

pub fn default_names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("v{i}")).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MetricViolation {
    NonzeroDiagonal(NodeId),
    Negative(NodeId, NodeId),
    Asymmetric(NodeId, NodeId),
    /// `cost(u, w) > cost(u, v) + cost(v, w)`, reported as `(u, v, w)`.
    Triangle(NodeId, NodeId, NodeId),
}

impl fmt::Display for MetricViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricViolation::NonzeroDiagonal(v) => write!(f, "cost({v},{v}) != 0"),
            MetricViolation::Negative(u, v) => write!(f, "cost({u},{v}) < 0"),
            MetricViolation::Asymmetric(u, v) => write!(f, "cost({u},{v}) != cost({v},{u})"),
            MetricViolation::Triangle(u, v, w) => {
                write!(f, "cost({u},{w}) > cost({u},{v}) + cost({v},{w})")
            }
        }
    }
}

/// Every violated diagonal, sign, symmetry and triangle constraint.
pub fn validate_metric(m: &MetricInstance) -> Vec<MetricViolation> {
    let n = m.n();
    let mut out = Vec::new();
    for u in 0..n {
        if !m.cost[u][u].is_zero() {
            out.push(MetricViolation::NonzeroDiagonal(u));
        }
        for v in 0..n {
            if m.cost[u][v].is_negative() {
                out.push(MetricViolation::Negative(u, v));
            }
            if u < v && m.cost[u][v] != m.cost[v][u] {
                out.push(MetricViolation::Asymmetric(u, v));
            }
        }
    }
    for u in 0..n {
        for v in 0..n {
            for w in 0..n {
                if u == v || v == w || u == w {
                    continue;
                }
                if m.cost[u][w] > &m.cost[u][v] + &m.cost[v][w] {
                    out.push(MetricViolation::Triangle(u, v, w));
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Edge {
    pub u: NodeId,
    pub v: NodeId,
    pub cost: Rational,
}

/// Undirected multigraph; parallel edges and loops are kept.
#[derive(Debug, Clone, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
pub struct WeightedMultigraph {
    pub n: usize,
    pub edges: Vec<Edge>,
}

impl WeightedMultigraph {
    pub fn new(n: usize) -> Self {
        WeightedMultigraph { n, edges: Vec::new() }
    }

    pub fn add_edge(&mut self, u: NodeId, v: NodeId, cost: Rational) {
        self.edges.push(Edge { u, v, cost });
    }

    pub fn total_cost(&self) -> Rational {
        self.edges.iter().map(|e| &e.cost).sum()
    }

    pub fn degree(&self) -> Vec<usize> {
        let mut d = vec![0; self.n];
        for e in &self.edges {
            d[e.u] += 1;
            d[e.v] += 1;
        }
        d
    }

    pub fn extend(&mut self, other: &WeightedMultigraph) {
        assert_eq!(self.n, other.n);
        self.edges.extend(other.edges.iter().cloned());
    }
}

/// All-pairs shortest paths of a connected graph with nonnegative costs.
pub fn metric_closure(g: &WeightedMultigraph) -> Result<MetricInstance, InstanceError> {
    let n = g.n;
    let mut d: Vec<Vec<Option<Rational>>> = vec![vec![None; n]; n];
    for (v, row) in d.iter_mut().enumerate() {
        row[v] = Some(Rational::zero());
    }
    for e in &g.edges {
        if e.u >= n || e.v >= n {
            return Err(InstanceError::NodeOutOfRange(e.u.max(e.v)));
        }
        if e.cost.is_negative() {
            return Err(InstanceError::NegativeCost(e.u, e.v));
        }
        if e.u == e.v {
            continue;
        }
        let better = d[e.u][e.v].as_ref().is_none_or(|c| e.cost < *c);
        if better {
            d[e.u][e.v] = Some(e.cost.clone());
            d[e.v][e.u] = Some(e.cost.clone());
        }
    }
    for k in 0..n {
        for i in 0..n {
            let Some(ik) = d[i][k].clone() else { continue };
            for j in 0..n {
                if let Some(kj) = &d[k][j] {
                    let via = &ik + kj;
                    if d[i][j].as_ref().is_none_or(|c| via < *c) {
                        d[i][j] = Some(via);
                    }
                }
            }
        }
    }
    let mut cost = vec![vec![Rational::zero(); n]; n];
    for i in 0..n {
        for j in 0..n {
            cost[i][j] = d[i][j].clone().ok_or(InstanceError::DisconnectedGraph(i, j))?;
        }
    }
    MetricInstance::from_matrix(cost)
}

/// Drops repeated visits, keeping first occurrences. When `keep_last_of` is
/// given, that node keeps its last occurrence instead so an s-t walk still
/// ends at t.
pub fn shortcut_walk(walk: &[NodeId], keep_last_of: Option<NodeId>) -> Vec<NodeId> {
    let last_t = keep_last_of.and_then(|t| walk.iter().rposition(|&x| x == t));
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(walk.len());
    for (i, &v) in walk.iter().enumerate() {
        if Some(v) == keep_last_of {
            if Some(i) == last_t {
                out.push(v);
            }
        } else if seen.insert(v) {
            out.push(v);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OtspInstance {
    pub metric: MetricInstance,
    pub order: Vec<NodeId>,
}

impl OtspInstance {
    pub fn new(metric: MetricInstance, order: Vec<NodeId>) -> Result<Self, InstanceError> {
        if order.is_empty() {
            return Err(InstanceError::Empty);
        }
        let mut seen = BTreeSet::new();
        for &o in &order {
            if o >= metric.n() {
                return Err(InstanceError::NodeOutOfRange(o));
            }
            if !seen.insert(o) {
                return Err(InstanceError::RepeatedOrderNode(o));
            }
        }
        Ok(OtspInstance { metric, order })
    }

    /// Pairs `(o_i, o_{i+1})` with wrap-around, each `t_i` a fresh colocated
    /// copy of `o_{i+1}` so all endpoints are distinct.
    pub fn to_pairs(&self) -> PairedInstance {
        let n = self.metric.n();
        let k = self.order.len();
        let mut origin: Vec<NodeId> = (0..n).collect();
        let mut names = self.metric.names().to_vec();
        let mut pairs = Vec::with_capacity(k);
        for i in 0..k {
            let next = self.order[(i + 1) % k];
            let copy = origin.len();
            origin.push(next);
            names.push(format!("{}#{}", self.metric.names()[next], i + 1));
            pairs.push((self.order[i], copy));
        }
        PairedInstance {
            metric: self.metric.with_copies(&origin, names),
            pairs,
            origin,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KtsppInstance {
    pub metric: MetricInstance,
    pub pairs: Vec<(NodeId, NodeId)>,
}

impl KtsppInstance {
    pub fn new(metric: MetricInstance, pairs: Vec<(NodeId, NodeId)>) -> Result<Self, InstanceError> {
        if pairs.is_empty() {
            return Err(InstanceError::Empty);
        }
        for &(s, t) in &pairs {
            for x in [s, t] {
                if x >= metric.n() {
                    return Err(InstanceError::NodeOutOfRange(x));
                }
            }
        }
        Ok(KtsppInstance { metric, pairs })
    }

    pub fn k(&self) -> usize {
        self.pairs.len()
    }

    /// Splits repeated endpoints into colocated copies.
    pub fn normalize(&self) -> PairedInstance {
        let n = self.metric.n();
        let mut origin: Vec<NodeId> = (0..n).collect();
        let mut names = self.metric.names().to_vec();
        let mut used = vec![false; n];
        let mut fresh = |x: NodeId, origin: &mut Vec<NodeId>, names: &mut Vec<String>| {
            if !used[x] {
                used[x] = true;
                x
            } else {
                let id = origin.len();
                origin.push(x);
                names.push(format!("{}#{}", self.metric.names()[x], id - n + 1));
                id
            }
        };
        let mut pairs = Vec::with_capacity(self.k());
        for &(s, t) in &self.pairs {
            let s2 = fresh(s, &mut origin, &mut names);
            let t2 = fresh(t, &mut origin, &mut names);
            pairs.push((s2, t2));
        }
        let metric = if origin.len() == n {
            self.metric.clone()
        } else {
            self.metric.with_copies(&origin, names)
        };
        PairedInstance { metric, pairs, origin }
    }
}

/// Pair-endpoint problem with all `2k` endpoints distinct. `origin[v]` maps a
/// node back to the caller's instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairedInstance {
    pub metric: MetricInstance,
    pub pairs: Vec<(NodeId, NodeId)>,
    pub origin: Vec<NodeId>,
}

impl PairedInstance {
    pub fn n(&self) -> usize {
        self.metric.n()
    }

    pub fn k(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_terminal(&self, v: NodeId) -> bool {
        self.pairs.iter().any(|&(s, t)| s == v || t == v)
    }

    /// Sorted endpoint set.
    pub fn terminals(&self) -> Vec<NodeId> {
        let mut t: Vec<NodeId> = self.pairs.iter().flat_map(|&(s, t)| [s, t]).collect();
        t.sort_unstable();
        t.dedup();
        t
    }

    pub fn free_nodes(&self) -> Vec<NodeId> {
        (0..self.n()).filter(|&v| !self.is_terminal(v)).collect()
    }

    /// `Δ`: total cost of the direct endpoint edges.
    pub fn direct_cost(&self) -> Rational {
        self.pairs.iter().map(|&(s, t)| self.metric.cost(s, t)).sum()
    }

    pub fn to_original(&self, walk: &[NodeId]) -> Vec<NodeId> {
        walk.iter().map(|&v| self.origin[v]).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolutionTour {
    pub tour: Vec<NodeId>,
    pub total_cost: Rational,
}

impl SolutionTour {
    pub fn new(metric: &MetricInstance, tour: Vec<NodeId>) -> Self {
        let total_cost = metric.tour_cost(&tour);
        SolutionTour { tour, total_cost }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolutionPaths {
    pub paths: Vec<Vec<NodeId>>,
    pub total_cost: Rational,
}

impl SolutionPaths {
    pub fn new(metric: &MetricInstance, paths: Vec<Vec<NodeId>>) -> Self {
        let total_cost = paths.iter().map(|p| metric.walk_cost(p)).sum();
        SolutionPaths { paths, total_cost }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Feasible,
    Infeasible(String),
}

impl Verdict {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Verdict::Feasible)
    }
}

fn hamiltonian_reason(n: usize, seq: &[NodeId]) -> Option<String> {
    let mut seen = vec![false; n];
    for &v in seq {
        if v >= n {
            return Some(format!("not Hamiltonian: node {v} out of range"));
        }
        if seen[v] {
            return Some(format!("not Hamiltonian: node {v} visited twice"));
        }
        seen[v] = true;
    }
    seen.iter()
        .position(|&s| !s)
        .map(|v| format!("not Hamiltonian: node {v} missing"))
}

/// Feasible iff the tour is Hamiltonian, its recorded cost is right, and one
/// traversal direction meets `o_1, ..., o_k` in order.
pub fn verify_otsp_solution(inst: &OtspInstance, sol: &SolutionTour) -> Verdict {
    let n = inst.metric.n();
    if let Some(r) = hamiltonian_reason(n, &sol.tour) {
        return Verdict::Infeasible(r);
    }
    if inst.metric.tour_cost(&sol.tour) != sol.total_cost {
        return Verdict::Infeasible("recorded cost does not match tour".into());
    }
    let mut pos = vec![0usize; n];
    for (i, &v) in sol.tour.iter().enumerate() {
        pos[v] = i;
    }
    let start = pos[inst.order[0]];
    let offsets: Vec<usize> = inst.order.iter().map(|&o| (pos[o] + n - start) % n).collect();
    let forward = offsets.windows(2).all(|w| w[0] < w[1]);
    let backward = offsets
        .iter()
        .map(|&d| (n - d) % n)
        .collect::<Vec<_>>()
        .windows(2)
        .all(|w| w[0] < w[1]);
    if forward || backward {
        Verdict::Feasible
    } else {
        Verdict::Infeasible("order violated in both directions".into())
    }
}

/// Feasible iff path `i` runs `s_i` to `t_i`, interior nodes are distinct
/// non-endpoints used once overall, the node sets cover `V`, and the recorded
/// cost is right.
pub fn verify_ktspp_solution(inst: &KtsppInstance, sol: &SolutionPaths) -> Verdict {
    let n = inst.metric.n();
    if sol.paths.len() != inst.k() {
        return Verdict::Infeasible(format!("expected {} paths, got {}", inst.k(), sol.paths.len()));
    }
    let mut endpoint = vec![false; n];
    for &(s, t) in &inst.pairs {
        endpoint[s] = true;
        endpoint[t] = true;
    }
    let mut covered = endpoint.clone();
    let mut interior_seen = vec![false; n];
    for (i, (p, &(s, t))) in sol.paths.iter().zip(&inst.pairs).enumerate() {
        if p.len() < 2 || p[0] != s || p[p.len() - 1] != t {
            return Verdict::Infeasible(format!("path {i} does not run from {s} to {t}"));
        }
        for &v in &p[1..p.len() - 1] {
            if v >= n {
                return Verdict::Infeasible(format!("path {i}: node {v} out of range"));
            }
            if endpoint[v] {
                return Verdict::Infeasible(format!("path {i}: endpoint {v} used as interior node"));
            }
            if interior_seen[v] {
                return Verdict::Infeasible(format!("path {i}: node {v} repeated"));
            }
            interior_seen[v] = true;
            covered[v] = true;
        }
    }
    if let Some(v) = covered.iter().position(|&c| !c) {
        return Verdict::Infeasible(format!("coverage: node {v} on no path"));
    }
    let cost: Rational = sol.paths.iter().map(|p| inst.metric.walk_cost(p)).sum();
    if cost != sol.total_cost {
        return Verdict::Infeasible("recorded cost does not match paths".into());
    }
    Verdict::Feasible
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn closure_of_unit_path() {
        let m = path4();
        assert_eq!(*m.cost(0, 3), Rational::from(3));
        assert!(validate_metric(&m).is_empty());
    }

    #[test]
    fn closure_shortens_triangle() {
        let mut g = WeightedMultigraph::new(3);
        g.add_edge(0, 1, Rational::from(1));
        g.add_edge(1, 2, Rational::from(1));
        g.add_edge(0, 2, Rational::from(3));
        let m = metric_closure(&g).unwrap();
        assert_eq!(*m.cost(0, 1), Rational::from(1));
        assert_eq!(*m.cost(1, 2), Rational::from(1));
        assert_eq!(*m.cost(0, 2), Rational::from(2));
    }

    #[test]
    fn closure_of_metric_is_identity() {
        let m = path4();
        let closed = metric_closure(&m.complete_graph()).unwrap();
        assert_eq!(closed.matrix(), m.matrix());
    }

    #[test]
    fn closure_rejects_disconnected() {
        let mut g = WeightedMultigraph::new(3);
        g.add_edge(0, 1, Rational::one());
        assert!(matches!(metric_closure(&g), Err(InstanceError::DisconnectedGraph(..))));
    }

    #[test]
    fn reports_triangle_and_symmetry() {
        let z = Rational::zero();
        let m = MetricInstance::from_matrix(vec![
            vec![z.clone(), Rational::from(5), Rational::from(1)],
            vec![Rational::from(5), z.clone(), Rational::from(1)],
            vec![Rational::from(1), Rational::from(1), z.clone()],
        ])
        .unwrap();
        let r = validate_metric(&m);
        assert!(r.contains(&MetricViolation::Triangle(0, 2, 1)));

        let mut asym = path4().matrix().to_vec();
        asym[0][1] = Rational::from(2);
        let r = validate_metric(&MetricInstance::from_matrix(asym).unwrap());
        assert!(r.contains(&MetricViolation::Asymmetric(0, 1)));
    }

    #[test]
    fn shortcut_examples() {
        let m = path4();
        let walk = [0, 1, 0, 3, 2, 3];
        assert_eq!(m.walk_cost(&walk), Rational::from(7));
        let s = shortcut_walk(&walk, Some(3));
        assert_eq!(s, vec![0, 1, 2, 3]);
        assert_eq!(m.walk_cost(&s), Rational::from(3));
        assert_eq!(shortcut_walk(&[0, 1, 2], None), vec![0, 1, 2]);
        assert_eq!(shortcut_walk(&[0, 0, 0], None), vec![0]);
    }

    #[test]
    fn shortcut_walk_is_cheapest_feasible_subsequence_here() {
        // Oracle: every subsequence that starts at a, ends at d and visits
        // each node once; the shortcut must not exceed the walk cost.
        let m = path4();
        let walk = [0usize, 1, 0, 3, 2, 3];
        let mut best: Option<Rational> = None;
        for mask in 0u32..(1 << walk.len()) {
            let sub: Vec<usize> = (0..walk.len()).filter(|i| mask >> i & 1 == 1).map(|i| walk[i]).collect();
            let mut sorted = sub.clone();
            sorted.sort();
            if sorted != vec![0, 1, 2, 3] || sub[0] != 0 || sub[3] != 3 {
                continue;
            }
            let c = m.walk_cost(&sub);
            best = Some(best.map_or(c.clone(), |b| b.min(c)));
        }
        let got = m.walk_cost(&shortcut_walk(&walk, Some(3)));
        assert_eq!(Some(got.clone()), best);
        assert!(got <= m.walk_cost(&walk));
    }

    #[test]
    fn otsp_verifier() {
        let inst = OtspInstance::new(tri3(), vec![0, 1]).unwrap();
        let sol = SolutionTour::new(&inst.metric, vec![0, 2, 1]);
        assert_eq!(verify_otsp_solution(&inst, &sol), Verdict::Feasible);

        let m4 = path4();
        // With three order nodes every cycle is ordered in one direction:
        // (o1, o3, o2, u) read backwards is (o1, u, o2, o3).
        let inst = OtspInstance::new(m4.clone(), vec![0, 1, 2]).unwrap();
        let sol = SolutionTour::new(&m4, vec![0, 2, 1, 3]);
        assert!(verify_otsp_solution(&inst, &sol).is_feasible());

        let inst = OtspInstance::new(m4.clone(), vec![0, 1, 2, 3]).unwrap();
        let sol = SolutionTour::new(&m4, vec![0, 2, 1, 3]);
        match verify_otsp_solution(&inst, &sol) {
            Verdict::Infeasible(r) => assert!(r.contains("order")),
            v => panic!("{v:?}"),
        }
        let sol = SolutionTour::new(&m4, vec![0, 3, 2, 1]);
        assert!(verify_otsp_solution(&inst, &sol).is_feasible());

        let sol = SolutionTour::new(&m4, vec![0, 1, 2]);
        match verify_otsp_solution(&inst, &sol) {
            Verdict::Infeasible(r) => assert!(r.contains("Hamiltonian")),
            v => panic!("{v:?}"),
        }
    }

    #[test]
    fn ktspp_verifier() {
        let m = path4();
        let inst = KtsppInstance::new(m.clone(), vec![(0, 3)]).unwrap();
        assert!(verify_ktspp_solution(&inst, &SolutionPaths::new(&m, vec![vec![0, 1, 2, 3]])).is_feasible());
        let inst2 = KtsppInstance::new(m.clone(), vec![(0, 1), (2, 3)]).unwrap();
        assert!(verify_ktspp_solution(&inst2, &SolutionPaths::new(&m, vec![vec![0, 1], vec![2, 3]])).is_feasible());
        match verify_ktspp_solution(&inst, &SolutionPaths::new(&m, vec![vec![0, 1, 3]])) {
            Verdict::Infeasible(r) => assert!(r.contains("coverage")),
            v => panic!("{v:?}"),
        }
    }

    #[test]
    fn normalization_splits_shared_endpoints() {
        let m = path4();
        let inst = KtsppInstance::new(m, vec![(0, 3), (3, 0), (1, 1)]).unwrap();
        let p = inst.normalize();
        assert_eq!(p.n(), 4 + 3);
        let t = p.terminals();
        assert_eq!(t.len(), 6);
        for (i, &(s, tt)) in p.pairs.iter().enumerate() {
            assert_eq!(p.origin[s], inst.pairs[i].0);
            assert_eq!(p.origin[tt], inst.pairs[i].1);
        }
        assert!(p.metric.cost(3, 4).is_zero() || p.origin[4] != 3);
        assert!(validate_metric(&p.metric).is_empty());
    }

    #[test]
    fn otsp_pairs_wrap_around() {
        let inst = OtspInstance::new(path4(), vec![0, 2]).unwrap();
        let p = inst.to_pairs();
        assert_eq!(p.pairs, vec![(0, 4), (2, 5)]);
        assert_eq!(p.origin[4], 2);
        assert_eq!(p.origin[5], 0);
        let single = OtspInstance::new(path4(), vec![1]).unwrap().to_pairs();
        assert_eq!(single.pairs, vec![(1, 4)]);
        assert!(single.metric.cost(1, 4).is_zero());
    }
}
