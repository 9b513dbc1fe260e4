//! Parity correction: odd-degree sets, perfect matchings as joins, Euler
//! circuits, and splicing cycles into paths.

use std::collections::BTreeSet;

use crate::instance::{shortcut_walk, MetricInstance, NodeId, SolutionTour, WeightedMultigraph};
use crate::rational::{common_denominator, Rational};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParityError {
    #[error("odd set has {0} nodes, above the exact matching cap (use the greedy mode)")]
    OddSetTooLarge(usize),
    #[error("node set has odd cardinality {0}")]
    OddCardinality(usize),
    #[error("node {0} has odd degree")]
    OddDegreePresent(NodeId),
    #[error("edges span more than one component")]
    Disconnected,
    #[error("anchor {0} is not on any path")]
    AnchorNotOnAnyPath(NodeId),
    #[error("component containing node {0} touches no path")]
    ComponentNotAnchored(NodeId),
}

/// Nodes of odd degree, counting multiplicities (a loop adds two).
pub fn odd_degree_nodes(mg: &WeightedMultigraph) -> Vec<NodeId> {
    let deg = mg.degree();
    (0..mg.n).filter(|&v| deg[v] % 2 == 1).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchingMode {
    #[default]
    Exact,
    /// Repeatedly pairs the closest remaining nodes; no optimality claim.
    Greedy,
}

pub const EXACT_MATCHING_CAP: usize = 22;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matching {
    pub pairs: Vec<(NodeId, NodeId)>,
    pub cost: Rational,
}

pub fn perfect_matching(m: &MetricInstance, o: &[NodeId], mode: MatchingMode) -> Result<Matching, ParityError> {
    match mode {
        MatchingMode::Exact => min_weight_perfect_matching(m, o, EXACT_MATCHING_CAP),
        MatchingMode::Greedy => greedy_matching(m, o),
    }
}

/// Exact minimum-cost perfect matching on `o` by dynamic programming over
/// subsets. Among optimal matchings the lexicographically smallest (lowest
/// node paired with its smallest feasible partner) is returned.
pub fn min_weight_perfect_matching(m: &MetricInstance, o: &[NodeId], cap: usize) -> Result<Matching, ParityError> {
    let mut o: Vec<NodeId> = o.to_vec();
    o.sort_unstable();
    o.dedup();
    let r = o.len();
    if r % 2 == 1 {
        return Err(ParityError::OddCardinality(r));
    }
    if r > cap {
        return Err(ParityError::OddSetTooLarge(r));
    }
    let cost = |i: usize, j: usize| m.cost(o[i], o[j]);
    // Integer DP when the costs share a modest denominator, rational otherwise.
    let den = common_denominator(
        (0..r).flat_map(|i| (0..r).map(move |j| (i, j))).map(|(i, j)| cost(i, j)),
        1 << 40,
    );
    let pairs = match den.and_then(|d| {
        let c: Option<Vec<Vec<i64>>> =
            (0..r).map(|i| (0..r).map(|j| cost(i, j).scaled_integer(d).filter(|x| *x < 1 << 40)).collect()).collect();
        c
    }) {
        Some(c) => match_dp(r, |i, j| c[i][j], 0i64, |a, b| a + b),
        None => match_dp(r, |i, j| cost(i, j).clone(), Rational::zero(), |a, b| a + b),
    };
    let pairs: Vec<(NodeId, NodeId)> = pairs.into_iter().map(|(i, j)| (o[i], o[j])).collect();
    let total = pairs.iter().map(|&(a, b)| m.cost(a, b)).sum();
    Ok(Matching { pairs, cost: total })
}

fn match_dp<C: Clone + Ord>(r: usize, cost: impl Fn(usize, usize) -> C, zero: C, add: impl Fn(&C, &C) -> C) -> Vec<(usize, usize)> {
    let full = (1usize << r) - 1;
    let mut dp: Vec<Option<C>> = vec![None; 1 << r];
    dp[0] = Some(zero);
    for mask in 1..=full {
        if mask.count_ones() % 2 == 1 {
            continue;
        }
        let i = mask.trailing_zeros() as usize;
        let mut best: Option<C> = None;
        for j in i + 1..r {
            if mask >> j & 1 == 0 {
                continue;
            }
            let rest = mask ^ (1 << i) ^ (1 << j);
            if let Some(d) = &dp[rest] {
                let c = add(&cost(i, j), d);
                if best.as_ref().is_none_or(|b| c < *b) {
                    best = Some(c);
                }
            }
        }
        dp[mask] = best;
    }
    let mut out = Vec::new();
    let mut mask = full;
    while mask != 0 {
        let i = mask.trailing_zeros() as usize;
        let target = dp[mask].clone().expect("even masks are matchable");
        let j = (i + 1..r)
            .find(|&j| {
                mask >> j & 1 == 1
                    && dp[mask ^ (1 << i) ^ (1 << j)].as_ref().is_some_and(|d| add(&cost(i, j), d) == target)
            })
            .expect("optimal partner exists");
        out.push((i, j));
        mask ^= (1 << i) | (1 << j);
    }
    out
}

/// Closest-pair-first matching for odd sets beyond the exact cap.
pub fn greedy_matching(m: &MetricInstance, o: &[NodeId]) -> Result<Matching, ParityError> {
    let mut left: Vec<NodeId> = o.to_vec();
    left.sort_unstable();
    left.dedup();
    if left.len() % 2 == 1 {
        return Err(ParityError::OddCardinality(left.len()));
    }
    let mut pairs = Vec::new();
    while !left.is_empty() {
        let mut best = (0, 1);
        for i in 0..left.len() {
            for j in i + 1..left.len() {
                if m.cost(left[i], left[j]) < m.cost(left[best.0], left[best.1]) {
                    best = (i, j);
                }
            }
        }
        pairs.push((left[best.0], left[best.1]));
        left.remove(best.1);
        left.remove(best.0);
    }
    let cost = pairs.iter().map(|&(a, b)| m.cost(a, b)).sum();
    Ok(Matching { pairs, cost })
}

/// Hierholzer's closed walk through every edge once, starting at `start`
/// (default: lowest node with an edge). Edges at a node are tried in order
/// of (other endpoint, edge position).
pub fn eulerian_circuit(mg: &WeightedMultigraph, start: Option<NodeId>) -> Result<Vec<NodeId>, ParityError> {
    if let Some(&v) = odd_degree_nodes(mg).first() {
        return Err(ParityError::OddDegreePresent(v));
    }
    let mut adj: Vec<Vec<(NodeId, usize)>> = vec![Vec::new(); mg.n];
    for (i, e) in mg.edges.iter().enumerate() {
        adj[e.u].push((e.v, i));
        if e.u != e.v {
            adj[e.v].push((e.u, i));
        }
    }
    adj.iter_mut().for_each(|a| a.sort_unstable());
    let Some(start) = start.or_else(|| (0..mg.n).find(|&v| !adj[v].is_empty())) else {
        return Ok(vec![]);
    };
    let mut used = vec![false; mg.edges.len()];
    let mut ptr = vec![0usize; mg.n];
    let mut stack = vec![start];
    let mut circuit = Vec::new();
    while let Some(&u) = stack.last() {
        while ptr[u] < adj[u].len() && used[adj[u][ptr[u]].1] {
            ptr[u] += 1;
        }
        if ptr[u] == adj[u].len() {
            circuit.push(u);
            stack.pop();
        } else {
            let (w, i) = adj[u][ptr[u]];
            used[i] = true;
            stack.push(w);
        }
    }
    if used.iter().any(|u| !u) {
        return Err(ParityError::Disconnected);
    }
    circuit.reverse();
    Ok(circuit)
}

/// Splices each closed walk into the lowest-index path containing its
/// anchor, right after the anchor's first occurrence, then shortcuts every
/// path keeping its final endpoint last.
pub fn graft_cycles_into_paths(
    paths: &[Vec<NodeId>],
    cycles: &[(NodeId, Vec<NodeId>)],
) -> Result<Vec<Vec<NodeId>>, ParityError> {
    let out = splice_cycles(paths, cycles)?;
    Ok(out.iter().map(|p| shortcut_walk(p, p.last().copied())).collect())
}

/// The splicing step of [`graft_cycles_into_paths`] without the shortcut.
pub fn splice_cycles(
    paths: &[Vec<NodeId>],
    cycles: &[(NodeId, Vec<NodeId>)],
) -> Result<Vec<Vec<NodeId>>, ParityError> {
    let mut out: Vec<Vec<NodeId>> = paths.to_vec();
    for (anchor, cycle) in cycles {
        let (pi, pos) = out
            .iter()
            .enumerate()
            .find_map(|(i, p)| p.iter().position(|v| v == anchor).map(|pos| (i, pos)))
            .ok_or(ParityError::AnchorNotOnAnyPath(*anchor))?;
        let detour = rotate_to(cycle, *anchor);
        out[pi].splice(pos + 1..pos + 1, detour.into_iter().skip(1));
    }
    Ok(out)
}

/// Closed walk `anchor, .., anchor` from a closed walk through `anchor`.
fn rotate_to(cycle: &[NodeId], anchor: NodeId) -> Vec<NodeId> {
    let body: &[NodeId] = if cycle.len() > 1 && cycle.first() == cycle.last() { &cycle[..cycle.len() - 1] } else { cycle };
    let k = body.iter().position(|&v| v == anchor).unwrap_or(0);
    let mut out: Vec<NodeId> = body[k..].iter().chain(&body[..k]).copied().collect();
    out.push(anchor);
    out
}

/// Connected components (by edges) of `mg`, each as a sorted node list.
pub fn edge_components(mg: &WeightedMultigraph) -> Vec<Vec<NodeId>> {
    let mut adj: Vec<Vec<NodeId>> = vec![Vec::new(); mg.n];
    for e in &mg.edges {
        adj[e.u].push(e.v);
        adj[e.v].push(e.u);
    }
    let mut seen = vec![false; mg.n];
    let mut out = Vec::new();
    for s in 0..mg.n {
        if seen[s] || adj[s].is_empty() {
            continue;
        }
        let mut comp = vec![s];
        seen[s] = true;
        let mut stack = vec![s];
        while let Some(u) = stack.pop() {
            for &w in &adj[u] {
                if !seen[w] {
                    seen[w] = true;
                    comp.push(w);
                    stack.push(w);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// Turns order segments `P'_i` (from `o_i` to `o_{i+1}`, cyclically) plus an
/// even-degree edge multiset into an ordered tour.
///
/// Each component of `extra ⊎ join` becomes an Euler circuit, shortcut to a
/// cycle, and is spliced in at its first node met along the segments. The
/// closed walk is then shortcut keeping first occurrences, except that each
/// order node survives only at the start of its own segment.
pub fn assemble_otsp_tour(
    segments: &[Vec<NodeId>],
    extra: &WeightedMultigraph,
    join: &[(NodeId, NodeId)],
    m: &MetricInstance,
) -> Result<SolutionTour, ParityError> {
    let mut h = WeightedMultigraph::new(m.n());
    for e in &extra.edges {
        if e.u != e.v {
            h.add_edge(e.u, e.v, e.cost.clone());
        }
    }
    for &(a, b) in join {
        if a != b {
            h.add_edge(a, b, m.cost(a, b).clone());
        }
    }
    if let Some(&v) = odd_degree_nodes(&h).first() {
        return Err(ParityError::OddDegreePresent(v));
    }

    // (node, designated marker visit)
    let mut walk: Vec<(NodeId, bool)> = Vec::new();
    for seg in segments {
        if let Some((&first, rest)) = seg.split_first() {
            walk.push((first, true));
            let interior = &rest[..rest.len().saturating_sub(1)];
            walk.extend(interior.iter().map(|&v| (v, false)));
        }
    }

    for comp in edge_components(&h) {
        let inside: BTreeSet<NodeId> = comp.iter().copied().collect();
        let pos = walk
            .iter()
            .position(|(v, _)| inside.contains(v))
            .ok_or(ParityError::ComponentNotAnchored(comp[0]))?;
        let anchor = walk[pos].0;
        let sub = WeightedMultigraph {
            n: h.n,
            edges: h.edges.iter().filter(|e| inside.contains(&e.u)).cloned().collect(),
        };
        let circuit = eulerian_circuit(&sub, Some(anchor))?;
        let cycle = shortcut_walk(&circuit, None);
        walk.splice(pos + 1..pos + 1, cycle.into_iter().skip(1).map(|v| (v, false)));
    }

    let markers: BTreeSet<NodeId> = segments.iter().filter_map(|s| s.first().copied()).collect();
    let mut seen = BTreeSet::new();
    let mut tour = Vec::new();
    for (v, designated) in walk {
        if designated || (!markers.contains(&v) && seen.insert(v)) {
            tour.push(v);
        }
    }
    Ok(SolutionTour::new(m, tour))
}
