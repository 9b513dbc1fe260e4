//! Brute-force exact solvers for small instances.

use std::collections::BTreeMap;

use crate::forest::RootedForest;
use crate::instance::{Edge, KtsppInstance, MetricInstance, NodeId, OtspInstance, SolutionPaths, SolutionTour};
use crate::rational::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleBudget {
    pub max_nodes_tour: usize,
    pub max_nodes_partition: usize,
    /// Cap on enumerated candidates (forest subsets).
    pub max_states: usize,
}

impl Default for OracleBudget {
    fn default() -> Self {
        OracleBudget { max_nodes_tour: 10, max_nodes_partition: 8, max_states: 20_000_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error("{what}: {size} is above the oracle budget of {limit}")]
    BudgetExceeded { what: &'static str, size: usize, limit: usize },
}

fn within(what: &'static str, size: usize, limit: usize) -> Result<(), OracleError> {
    if size > limit {
        Err(OracleError::BudgetExceeded { what, size, limit })
    } else {
        Ok(())
    }
}

/// Held–Karp from `o_1`: the order nodes visited so far are always a prefix
/// of the order, so the next order node allowed is fixed by the mask.
pub fn brute_otsp(inst: &OtspInstance, budget: &OracleBudget) -> Result<SolutionTour, OracleError> {
    let m = &inst.metric;
    let n = m.n();
    within("nodes", n, budget.max_nodes_tour)?;
    let mut order_pos = vec![usize::MAX; n];
    for (j, &o) in inst.order.iter().enumerate() {
        order_pos[o] = j;
    }
    let order_mask: usize = inst.order.iter().map(|&o| 1 << o).sum();
    let start = inst.order[0];
    let full = (1usize << n) - 1;
    let mut dp: Vec<Vec<Option<Rational>>> = vec![vec![None; n]; 1 << n];
    dp[1 << start][start] = Some(Rational::zero());
    for mask in 1..=full {
        if mask >> start & 1 == 0 {
            continue;
        }
        let next_order = (mask & order_mask).count_ones() as usize;
        for last in 0..n {
            let Some(c) = dp[mask][last].clone() else { continue };
            for v in 0..n {
                if mask >> v & 1 == 1 || (order_pos[v] != usize::MAX && order_pos[v] != next_order) {
                    continue;
                }
                let cand = &c + m.cost(last, v);
                let slot = &mut dp[mask | 1 << v][v];
                if slot.as_ref().is_none_or(|s| cand < *s) {
                    *slot = Some(cand);
                }
            }
        }
    }
    let (last, _) = (0..n)
        .filter_map(|v| dp[full][v].as_ref().map(|c| (v, c + m.cost(v, start))))
        .min_by(|a, b| a.1.cmp(&b.1))
        .expect("some tour exists");
    let mut tour = vec![last];
    let (mut mask, mut v) = (full, last);
    while v != start || mask != 1 << start {
        let here = dp[mask][v].clone().expect("reachable");
        let prev_mask = mask ^ (1 << v);
        let u = (0..n)
            .find(|&u| dp[prev_mask][u].as_ref().is_some_and(|c| c + m.cost(u, v) == here))
            .expect("predecessor exists");
        tour.push(u);
        mask = prev_mask;
        v = u;
    }
    tour.reverse();
    Ok(SolutionTour::new(m, tour))
}

/// Cheapest `s`-`t` path through exactly the nodes of each subset of
/// `free` (indexed by bitmask), with the paths themselves.
fn subset_paths(m: &MetricInstance, s: NodeId, t: NodeId, free: &[NodeId]) -> Vec<(Rational, Vec<NodeId>)> {
    let f = free.len();
    let mut g: Vec<Vec<Option<Rational>>> = vec![vec![None; f]; 1 << f];
    for i in 0..f {
        g[1 << i][i] = Some(m.cost(s, free[i]).clone());
    }
    for mask in 1usize..1 << f {
        for last in 0..f {
            let Some(c) = g[mask][last].clone() else { continue };
            for v in 0..f {
                if mask >> v & 1 == 0 {
                    let cand = &c + m.cost(free[last], free[v]);
                    let slot = &mut g[mask | 1 << v][v];
                    if slot.as_ref().is_none_or(|x| cand < *x) {
                        *slot = Some(cand);
                    }
                }
            }
        }
    }
    (0usize..1 << f)
        .map(|mask| {
            if mask == 0 {
                return (m.cost(s, t).clone(), vec![s, t]);
            }
            let (last, cost) = (0..f)
                .filter_map(|v| g[mask][v].as_ref().map(|c| (v, c + m.cost(free[v], t))))
                .min_by(|a, b| a.1.cmp(&b.1))
                .expect("nonempty subset has a path");
            let mut rev = vec![t, free[last]];
            let (mut mk, mut v) = (mask, last);
            while mk != 1 << v {
                let here = g[mk][v].clone().expect("reachable");
                let pm = mk ^ (1 << v);
                let u = (0..f)
                    .find(|&u| g[pm][u].as_ref().is_some_and(|c| c + m.cost(free[u], free[v]) == here))
                    .expect("predecessor exists");
                rev.push(free[u]);
                mk = pm;
                v = u;
            }
            rev.push(s);
            rev.reverse();
            (cost, rev)
        })
        .collect()
}

/// Exact k-TSPP: best Hamiltonian path per (pair, free-node subset), then
/// the best split of the free nodes among the pairs.
pub fn brute_ktspp(inst: &KtsppInstance, budget: &OracleBudget) -> Result<SolutionPaths, OracleError> {
    let m = &inst.metric;
    within("nodes", m.n(), budget.max_nodes_partition)?;
    let mut endpoint = vec![false; m.n()];
    for &(s, t) in &inst.pairs {
        endpoint[s] = true;
        endpoint[t] = true;
    }
    let free: Vec<NodeId> = (0..m.n()).filter(|&v| !endpoint[v]).collect();
    let f = free.len();
    let full = (1usize << f) - 1;
    let per_pair: Vec<Vec<(Rational, Vec<NodeId>)>> =
        inst.pairs.iter().map(|&(s, t)| subset_paths(m, s, t, &free)).collect();
    // best[i][mask]: pairs 0..=i cover exactly mask; choice[i][mask] is pair i's share
    let mut best: Vec<Vec<Rational>> = Vec::new();
    let mut choice: Vec<Vec<usize>> = Vec::new();
    for (i, paths) in per_pair.iter().enumerate() {
        let mut b = vec![Rational::zero(); 1 << f];
        let mut ch = vec![0usize; 1 << f];
        for mask in 0..=full {
            if i == 0 {
                b[mask] = paths[mask].0.clone();
                ch[mask] = mask;
                continue;
            }
            let mut sub = mask;
            let mut cur: Option<Rational> = None;
            loop {
                let c = &best[i - 1][mask ^ sub] + &paths[sub].0;
                if cur.as_ref().is_none_or(|x| c < *x) {
                    cur = Some(c);
                    ch[mask] = sub;
                }
                if sub == 0 {
                    break;
                }
                sub = (sub - 1) & mask;
            }
            b[mask] = cur.expect("at least the empty share");
        }
        best.push(b);
        choice.push(ch);
    }
    let mut mask = full;
    let mut paths = vec![Vec::new(); inst.k()];
    for i in (0..inst.k()).rev() {
        let sub = choice[i][mask];
        paths[i] = per_pair[i][sub].1.clone();
        mask ^= sub;
    }
    Ok(SolutionPaths::new(m, paths))
}

fn find(p: &mut [usize], x: usize) -> usize {
    let mut r = x;
    while p[r] != r {
        r = p[r];
    }
    r
}

/// Exact minimum `T`-rooted spanning forest by enumerating every set of
/// `n - |T|` edges that is a spanning tree of the graph with `T` merged.
pub fn brute_rooted_forest(m: &MetricInstance, t: &[NodeId], budget: &OracleBudget) -> Result<RootedForest, OracleError> {
    let n = m.n();
    within("nodes", n, budget.max_nodes_partition)?;
    let mut t: Vec<NodeId> = t.to_vec();
    t.sort_unstable();
    t.dedup();
    let edges: Vec<(NodeId, NodeId)> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
    let need = n - t.len();
    let mut best: Option<(Rational, Vec<usize>)> = None;
    let mut steps = 0usize;

    struct Search<'a> {
        m: &'a MetricInstance,
        edges: &'a [(NodeId, NodeId)],
        need: usize,
        best: &'a mut Option<(Rational, Vec<usize>)>,
        steps: &'a mut usize,
        limit: usize,
    }
    fn go(s: &mut Search, from: usize, chosen: &mut Vec<usize>, parent: &[usize], cost: Rational) -> bool {
        *s.steps += 1;
        if *s.steps > s.limit {
            return false;
        }
        if chosen.len() == s.need {
            if s.best.as_ref().is_none_or(|(b, _)| cost < *b) {
                *s.best = Some((cost, chosen.clone()));
            }
            return true;
        }
        for j in from..s.edges.len() {
            if s.edges.len() - j < s.need - chosen.len() {
                break;
            }
            let (u, v) = s.edges[j];
            let mut p = parent.to_vec();
            let (a, b) = (find(&mut p, u), find(&mut p, v));
            if a == b {
                continue;
            }
            p[a.max(b)] = a.min(b);
            chosen.push(j);
            let ok = go(s, j + 1, chosen, &p, &cost + s.m.cost(u, v));
            chosen.pop();
            if !ok {
                return false;
            }
        }
        true
    }

    let mut parent: Vec<usize> = (0..n).collect();
    if let Some(&r) = t.first() {
        for &x in &t {
            parent[x] = r;
        }
    }
    let mut search = Search { m, edges: &edges, need, best: &mut best, steps: &mut steps, limit: budget.max_states };
    if !go(&mut search, 0, &mut Vec::new(), &parent, Rational::zero()) {
        return Err(OracleError::BudgetExceeded { what: "forest candidates", size: steps, limit: budget.max_states });
    }
    let (_, chosen) = best.expect("complete graph has a spanning forest");
    let es = chosen.into_iter().map(|j| Edge { u: edges[j].0, v: edges[j].1, cost: m.cost(edges[j].0, edges[j].1).clone() }).collect();
    Ok(RootedForest::from_edges(n, &t, es).expect("enumerated set is a rooted forest"))
}

/// Exact minimum cost of an edge set of the complete graph whose odd-degree
/// nodes are exactly `o`, by meet-in-the-middle over the two halves of the
/// edge list keyed by parity vector.
pub fn brute_min_ojoin(m: &MetricInstance, o: &[NodeId], budget: &OracleBudget) -> Result<Option<Rational>, OracleError> {
    let n = m.n();
    within("nodes", n, budget.max_nodes_partition)?;
    within("odd set", o.len(), budget.max_nodes_partition)?;
    let target: u32 = o.iter().fold(0, |acc, &v| acc ^ (1 << v));
    let edges: Vec<(NodeId, NodeId)> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
    let (left, right) = edges.split_at(edges.len() / 2);
    let table = |half: &[(NodeId, NodeId)]| -> BTreeMap<u32, Rational> {
        let mut out: BTreeMap<u32, Rational> = BTreeMap::new();
        for mask in 0u64..1 << half.len() {
            let mut parity = 0u32;
            let mut cost = Rational::zero();
            for (i, &(u, v)) in half.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    parity ^= (1 << u) | (1 << v);
                    cost += m.cost(u, v);
                }
            }
            let e = out.entry(parity).or_insert_with(|| cost.clone());
            if cost < *e {
                *e = cost;
            }
        }
        out
    };
    let (a, b) = (table(left), table(right));
    Ok(a.iter().filter_map(|(p, ca)| b.get(&(p ^ target)).map(|cb| ca + cb)).min())
}
