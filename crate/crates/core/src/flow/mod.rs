//! Max-flow/min-cut, root connectivity, and preflow decomposition into
//! weighted branchings.

mod decompose;
pub mod maxflow;

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::instance::{MetricInstance, NodeId};
use crate::rational::Rational;

pub use decompose::{decompose_preflow, DecomposeError, DecomposeOptions};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Arc {
    pub tail: NodeId,
    pub head: NodeId,
    pub capacity: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GraphError {
    #[error("arc ({0}, {1}) has negative capacity")]
    NegativeCapacity(NodeId, NodeId),
    #[error("node {0} out of range")]
    NodeOutOfRange(NodeId),
    #[error("loop at node {0}")]
    Loop(NodeId),
}

/// Digraph on nodes `0..n` with a designated root. Arcs are kept sorted by
/// `(tail, head)`; parallel arcs are merged and zero arcs dropped.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CapacitatedDigraph {
    pub n: usize,
    pub root: NodeId,
    pub arcs: Vec<Arc>,
}

impl CapacitatedDigraph {
    pub fn new(n: usize, root: NodeId, arcs: impl IntoIterator<Item = (NodeId, NodeId, Rational)>) -> Result<Self, GraphError> {
        if root >= n {
            return Err(GraphError::NodeOutOfRange(root));
        }
        let mut merged: BTreeMap<(NodeId, NodeId), Rational> = BTreeMap::new();
        for (u, v, c) in arcs {
            if u >= n || v >= n {
                return Err(GraphError::NodeOutOfRange(u.max(v)));
            }
            if u == v {
                return Err(GraphError::Loop(u));
            }
            if c.is_negative() {
                return Err(GraphError::NegativeCapacity(u, v));
            }
            *merged.entry((u, v)).or_insert_with(Rational::zero) += c;
        }
        let arcs = merged
            .into_iter()
            .filter(|(_, c)| !c.is_zero())
            .map(|((tail, head), capacity)| Arc { tail, head, capacity })
            .collect();
        Ok(CapacitatedDigraph { n, root, arcs })
    }

    pub fn capacity_matrix(&self) -> Vec<Vec<Rational>> {
        let mut m = vec![vec![Rational::zero(); self.n]; self.n];
        for a in &self.arcs {
            m[a.tail][a.head] = a.capacity.clone();
        }
        m
    }

    pub fn capacity(&self, u: NodeId, v: NodeId) -> Rational {
        self.arcs
            .binary_search_by(|a| (a.tail, a.head).cmp(&(u, v)))
            .map(|i| self.arcs[i].capacity.clone())
            .unwrap_or_default()
    }

    /// First non-root node whose outflow exceeds its inflow.
    pub fn preflow_violation(&self) -> Option<NodeId> {
        let mut balance = vec![Rational::zero(); self.n];
        for a in &self.arcs {
            balance[a.head] += &a.capacity;
            balance[a.tail] -= &a.capacity;
        }
        (0..self.n).find(|&v| v != self.root && balance[v].is_negative())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinCut {
    pub value: Rational,
    /// Source side `U` of a minimum cut (the smallest one).
    pub source_side: Vec<NodeId>,
}

pub fn max_flow_min_cut(g: &CapacitatedDigraph, s: NodeId, t: NodeId) -> MinCut {
    let r = maxflow::max_flow(&g.capacity_matrix(), s, t);
    MinCut {
        value: r.value,
        source_side: (0..g.n).filter(|&v| r.source_side[v]).collect(),
    }
}

/// Root-to-node connectivity for every non-root node.
pub fn connectivity_vector(g: &CapacitatedDigraph) -> BTreeMap<NodeId, Rational> {
    let cap = g.capacity_matrix();
    (0..g.n)
        .filter(|&v| v != g.root)
        .map(|v| (v, maxflow::max_flow(&cap, g.root, v).value))
        .collect()
}

/// Directed tree oriented away from `root`, stored as sorted arcs.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Branching {
    pub root: NodeId,
    pub arcs: Vec<(NodeId, NodeId)>,
}

impl Branching {
    pub fn trivial(root: NodeId) -> Self {
        Branching { root, arcs: vec![] }
    }

    pub fn new(root: NodeId, mut arcs: Vec<(NodeId, NodeId)>) -> Self {
        arcs.sort_unstable();
        Branching { root, arcs }
    }

    /// Sorted node set, root included.
    pub fn nodes(&self) -> Vec<NodeId> {
        let mut s: BTreeSet<NodeId> = self.arcs.iter().map(|&(_, v)| v).collect();
        s.insert(self.root);
        s.into_iter().collect()
    }

    pub fn contains(&self, v: NodeId) -> bool {
        v == self.root || self.arcs.iter().any(|&(_, h)| h == v)
    }

    pub fn parent(&self, v: NodeId) -> Option<NodeId> {
        self.arcs.iter().find(|&&(_, h)| h == v).map(|&(u, _)| u)
    }

    pub fn children(&self, u: NodeId) -> Vec<NodeId> {
        self.arcs.iter().filter(|&&(t, _)| t == u).map(|&(_, h)| h).collect()
    }

    /// Root-to-`t` node sequence.
    pub fn path_to(&self, t: NodeId) -> Option<Vec<NodeId>> {
        let mut path = vec![t];
        let mut v = t;
        while v != self.root {
            v = self.parent(v)?;
            path.push(v);
            if path.len() > self.arcs.len() + 1 {
                return None;
            }
        }
        path.reverse();
        Some(path)
    }

    pub fn cost(&self, m: &MetricInstance) -> Rational {
        self.arcs.iter().map(|&(u, v)| m.cost(u, v)).sum()
    }

    /// Structural problems: repeated heads, arcs into the root, nodes not
    /// reachable from the root.
    pub fn structural_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut heads = BTreeSet::new();
        for &(u, v) in &self.arcs {
            if v == self.root {
                out.push(format!("arc ({u}, {v}) enters the root"));
            }
            if !heads.insert(v) {
                out.push(format!("node {v} has in-degree above 1"));
            }
        }
        for &v in &heads {
            if v != self.root && self.path_to(v).is_none() {
                out.push(format!("node {v} not reachable from the root"));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilyMember {
    pub branching: Branching,
    pub weight: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BranchingFamily {
    pub members: Vec<FamilyMember>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FamilyViolation {
    WeightSum(Rational),
    NonPositiveWeight(usize),
    WrongRoot(usize),
    Structure(usize, String),
    /// Arc used beyond its capacity by the given excess.
    ArcOveruse { tail: NodeId, head: NodeId, excess: Rational },
    /// Node covered below its requirement by the given shortfall.
    Coverage { node: NodeId, shortfall: Rational },
}

/// Exact check of the family contract against capacities `g` and
/// requirements `z`. Empty result means valid.
pub fn verify_branching_family(
    g: &CapacitatedDigraph,
    z: &BTreeMap<NodeId, Rational>,
    fam: &BranchingFamily,
) -> Vec<FamilyViolation> {
    let mut out = Vec::new();
    let total: Rational = fam.members.iter().map(|m| &m.weight).sum();
    if total != Rational::one() {
        out.push(FamilyViolation::WeightSum(total));
    }
    let mut usage: BTreeMap<(NodeId, NodeId), Rational> = BTreeMap::new();
    let mut cover = vec![Rational::zero(); g.n];
    for (j, m) in fam.members.iter().enumerate() {
        if !m.weight.is_positive() {
            out.push(FamilyViolation::NonPositiveWeight(j));
        }
        if m.branching.root != g.root {
            out.push(FamilyViolation::WrongRoot(j));
        }
        for s in m.branching.structural_violations() {
            out.push(FamilyViolation::Structure(j, s));
        }
        for &a in &m.branching.arcs {
            *usage.entry(a).or_insert_with(Rational::zero) += &m.weight;
        }
        for v in m.branching.nodes() {
            if v < g.n {
                cover[v] += &m.weight;
            }
        }
    }
    for ((u, v), used) in usage {
        let cap = if u < g.n && v < g.n { g.capacity(u, v) } else { Rational::zero() };
        if used > cap {
            out.push(FamilyViolation::ArcOveruse { tail: u, head: v, excess: used - cap });
        }
    }
    for (&v, req) in z {
        let have = cover.get(v).cloned().unwrap_or_default();
        if &have < req {
            out.push(FamilyViolation::Coverage { node: v, shortfall: req - &have });
        }
    }
    out
}

/// Draws member `j` with probability exactly `weight_j` (weights must sum
/// to one and share a denominator that fits in 64 bits).
pub fn sample_branching<'a>(fam: &'a BranchingFamily, rng: &mut impl Rng) -> &'a Branching {
    let den = crate::rational::common_denominator(fam.members.iter().map(|m| &m.weight), u64::MAX)
        .expect("family weights have a 64-bit common denominator");
    let draw = rng.random_range(0..den);
    let mut acc: u64 = 0;
    for m in &fam.members {
        acc += m.weight.scaled_integer(den).expect("weight scales") as u64;
        if draw < acc {
            return &m.branching;
        }
    }
    &fam.members.last().expect("nonempty family").branching
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    fn q(s: &str) -> Rational {
        s.parse().unwrap()
    }

    fn g(n: usize, arcs: &[(usize, usize, &str)]) -> CapacitatedDigraph {
        CapacitatedDigraph::new(n, 0, arcs.iter().map(|&(u, v, c)| (u, v, q(c)))).unwrap()
    }

    #[test]
    fn unit_path_flow_and_smallest_cut() {
        let d = g(3, &[(0, 1, "1"), (1, 2, "1")]);
        let c = max_flow_min_cut(&d, 0, 2);
        assert_eq!(c.value, q("1"));
        assert_eq!(c.source_side, vec![0]);
    }

    #[test]
    fn parallel_capacities_add() {
        let d = CapacitatedDigraph::new(2, 0, vec![(0, 1, q("1/2")), (0, 1, q("1/3"))]).unwrap();
        assert_eq!(max_flow_min_cut(&d, 0, 1).value, q("5/6"));
    }

    #[test]
    fn connectivity_examples() {
        let d = g(4, &[(0, 1, "1"), (1, 2, "1"), (2, 3, "1")]);
        assert!(connectivity_vector(&d).values().all(|z| *z == q("1")));
        let empty = g(3, &[]);
        assert!(connectivity_vector(&empty).values().all(|z| z.is_zero()));
        // two arc-disjoint half paths into node 3
        let d = g(4, &[(0, 1, "1/2"), (1, 3, "1/2"), (0, 2, "1/2"), (2, 3, "1/2")]);
        assert_eq!(connectivity_vector(&d)[&3], q("1"));
    }

    #[test]
    fn connectivity_matches_cut_enumeration() {
        // min over all U with v in U, root outside, of capacity entering U
        let d = g(5, &[(0, 1, "1/2"), (1, 3, "1/2"), (0, 2, "1/2"), (2, 3, "1/3"), (3, 4, "2/3"), (2, 4, "1/6"), (4, 1, "1/4")]);
        let cap = d.capacity_matrix();
        let conn = connectivity_vector(&d);
        for v in 1..5 {
            let mut best: Option<Rational> = None;
            for mask in 0u32..32 {
                if mask & 1 == 1 || mask >> v & 1 == 0 {
                    continue;
                }
                let inside: Vec<bool> = (0..5).map(|u| mask >> u & 1 == 1).collect();
                let c = maxflow::cut_in(&cap, &inside);
                best = Some(best.map_or(c.clone(), |b| b.min(c)));
            }
            assert_eq!(conn[&v], best.unwrap(), "node {v}");
        }
    }

    #[test]
    fn family_violations_reported_exactly() {
        let d = g(3, &[(0, 1, "1"), (1, 2, "1")]);
        let b = Branching::new(0, vec![(0, 1), (1, 2)]);
        let z: BTreeMap<_, _> = [(2, q("1"))].into();
        let half = BranchingFamily { members: vec![FamilyMember { branching: b.clone(), weight: q("1/2") }] };
        let v = verify_branching_family(&d, &z, &half);
        assert!(v.contains(&FamilyViolation::WeightSum(q("1/2"))));
        let d2 = g(3, &[(0, 1, "5/6"), (1, 2, "1")]);
        let full = BranchingFamily { members: vec![FamilyMember { branching: b, weight: q("1") }] };
        let v = verify_branching_family(&d2, &z, &full);
        assert_eq!(v, vec![FamilyViolation::ArcOveruse { tail: 0, head: 1, excess: q("1/6") }]);
    }

    #[test]
    fn sampling_frequencies() {
        let one = BranchingFamily {
            members: vec![FamilyMember { branching: Branching::trivial(0), weight: q("1") }],
        };
        let mut rng = stream_rng(1, 0);
        assert_eq!(sample_branching(&one, &mut rng), &Branching::trivial(0));

        let a = Branching::new(0, vec![(0, 1)]);
        let b = Branching::new(0, vec![(0, 2)]);
        let fam = BranchingFamily {
            members: vec![
                FamilyMember { branching: a.clone(), weight: q("1/2") },
                FamilyMember { branching: b, weight: q("1/2") },
            ],
        };
        let draws = 10_000;
        let hits = (0..draws).filter(|_| sample_branching(&fam, &mut rng) == &a).count();
        let freq = hits as f64 / draws as f64;
        assert!((freq - 0.5).abs() <= 0.03, "{freq}");
    }
}
