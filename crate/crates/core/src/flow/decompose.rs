//! Preflow decomposition by integer peeling with backtracking.
//!
//! Capacities and requirements are scaled by their common denominator `D`,
//! then `D` unit branchings are peeled off one at a time. A candidate
//! branching is accepted when the residual state still passes the necessary
//! conditions (every requirement at most the number of branchings left and
//! at most its root connectivity). If the residual can additionally be
//! trimmed to a preflow, completion is guaranteed by the existence theorem
//! for integer preflows and the search commits; otherwise it may backtrack.

use std::collections::{BTreeMap, HashSet};

use super::maxflow::max_flow;
use super::{connectivity_vector, Branching, BranchingFamily, CapacitatedDigraph, FamilyMember};
use crate::instance::NodeId;
use crate::rational::{common_denominator, Rational};

#[derive(Debug, Clone, Copy)]
pub struct DecomposeOptions {
    pub denominator_cap: u64,
    pub family_cap: usize,
    /// Search steps (partial branchings examined) before giving up.
    pub search_budget: usize,
}

impl Default for DecomposeOptions {
    fn default() -> Self {
        DecomposeOptions { denominator_cap: 1_000_000, family_cap: 10_000, search_budget: 2_000_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DecomposeError {
    #[error("not a preflow: node {0} sends more than it receives")]
    NotAPreflow(NodeId),
    #[error("requirement {requirement} at node {node} exceeds connectivity {connectivity}")]
    RequirementExceedsConnectivity { node: NodeId, requirement: Rational, connectivity: Rational },
    #[error("requirement at node {0} is above one")]
    RequirementAboveOne(NodeId),
    #[error("common denominator exceeds {0}")]
    DenominatorOverflow(u64),
    #[error("family would have {0} members, above the cap")]
    FamilyTooLarge(usize),
    #[error("branching search exhausted without a decomposition")]
    SearchExhausted,
}

pub fn decompose_preflow(
    g: &CapacitatedDigraph,
    z: &BTreeMap<NodeId, Rational>,
    opts: &DecomposeOptions,
) -> Result<BranchingFamily, DecomposeError> {
    if let Some(v) = g.preflow_violation() {
        return Err(DecomposeError::NotAPreflow(v));
    }
    let z: BTreeMap<NodeId, Rational> = z
        .iter()
        .filter(|(&v, r)| v != g.root && r.is_positive())
        .map(|(&v, r)| (v, r.clone()))
        .collect();
    if let Some((&v, _)) = z.iter().find(|(_, r)| **r > Rational::one()) {
        return Err(DecomposeError::RequirementAboveOne(v));
    }
    let conn = connectivity_vector(g);
    for (&v, r) in &z {
        let c = conn.get(&v).cloned().unwrap_or_default();
        if r > &c {
            return Err(DecomposeError::RequirementExceedsConnectivity { node: v, requirement: r.clone(), connectivity: c });
        }
    }
    let d = common_denominator(g.arcs.iter().map(|a| &a.capacity).chain(z.values()), opts.denominator_cap)
        .ok_or(DecomposeError::DenominatorOverflow(opts.denominator_cap))?;
    let scale = |r: &Rational| r.scaled_integer(d).ok_or(DecomposeError::DenominatorOverflow(opts.denominator_cap));

    let n = g.n;
    let mut x = vec![vec![0i64; n]; n];
    for a in &g.arcs {
        x[a.tail][a.head] = scale(&a.capacity)?;
    }
    let mut req = vec![0i64; n];
    for (&v, r) in &z {
        req[v] = scale(r)?;
    }
    let d_i = i64::try_from(d).map_err(|_| DecomposeError::DenominatorOverflow(opts.denominator_cap))?;

    let mut search = Search { n, root: g.root, budget: opts.search_budget };
    let mut out = Vec::new();
    let start = State { x, z: req, m: d_i };
    match search.run(start, true, &mut out) {
        Ok(true) => {}
        Ok(false) | Err(Abort) => return Err(DecomposeError::SearchExhausted),
    }

    let mut counts: BTreeMap<Branching, i64> = BTreeMap::new();
    for b in out {
        *counts.entry(b).or_default() += 1;
    }
    if counts.len() > opts.family_cap {
        return Err(DecomposeError::FamilyTooLarge(counts.len()));
    }
    let members = counts
        .into_iter()
        .map(|(branching, c)| FamilyMember { branching, weight: Rational::new(c, d_i) })
        .collect();
    Ok(BranchingFamily { members })
}

#[derive(Debug, Clone)]
struct State {
    x: Vec<Vec<i64>>,
    z: Vec<i64>,
    /// Branchings still to peel.
    m: i64,
}

struct Abort;

enum Flow {
    Continue,
    Stop,
}

type Visit<'a> = dyn FnMut(&mut Search, Branching) -> Result<Flow, Abort> + 'a;

struct Search {
    n: usize,
    root: NodeId,
    budget: usize,
}

enum Outcome {
    Solved,
    Commit(Branching, State),
}

impl Search {
    fn tick(&mut self) -> Result<(), Abort> {
        if self.budget == 0 {
            return Err(Abort);
        }
        self.budget -= 1;
        Ok(())
    }

    /// Peels the remaining branchings of `st` into `out`. From a state known
    /// to be completable (`strong`) a failure is reported as `Abort`;
    /// otherwise `Ok(false)` asks the caller to backtrack and leaves `out`
    /// as it was.
    fn run(&mut self, mut st: State, mut strong: bool, out: &mut Vec<Branching>) -> Result<bool, Abort> {
        loop {
            if st.m == 0 {
                return Ok(true);
            }
            if st.z.iter().all(|&r| r <= 0) {
                out.extend((0..st.m).map(|_| Branching::trivial(self.root)));
                return Ok(true);
            }
            if let Some(prev) = out.last().cloned() {
                if let Some((next, true)) = self.evaluate(&st, &prev) {
                    out.push(prev);
                    st = next;
                    strong = true;
                    continue;
                }
            }

            let mut outcome = None;
            {
                let cur = &st;
                let mut visit = |s: &mut Search, b: Branching| -> Result<Flow, Abort> {
                    match s.evaluate(cur, &b) {
                        None => Ok(Flow::Continue),
                        Some((next, true)) => {
                            outcome = Some(Outcome::Commit(b, next));
                            Ok(Flow::Stop)
                        }
                        Some((next, false)) => {
                            out.push(b);
                            if s.run(next, false, out)? {
                                outcome = Some(Outcome::Solved);
                                Ok(Flow::Stop)
                            } else {
                                out.pop();
                                Ok(Flow::Continue)
                            }
                        }
                    }
                };
                self.enumerate(cur, &mut visit)?;
            }
            match outcome {
                Some(Outcome::Solved) => return Ok(true),
                Some(Outcome::Commit(b, next)) => {
                    out.push(b);
                    st = next;
                    strong = true;
                }
                None if strong => return Err(Abort),
                None => return Ok(false),
            }
        }
    }

    fn lambda(&self, x: &[Vec<i64>], v: NodeId) -> i64 {
        max_flow(x, self.root, v).value
    }

    fn supports(&self, x: &[Vec<i64>], z: &[i64], m: i64) -> bool {
        (0..self.n)
            .filter(|&v| v != self.root && z[v] > 0)
            .all(|v| z[v] <= m && self.lambda(x, v) >= z[v])
    }

    /// Residual state after peeling `b`, flagged `true` when it is a preflow
    /// (after trimming) and hence completable.
    fn evaluate(&self, st: &State, b: &Branching) -> Option<(State, bool)> {
        let mut x = st.x.clone();
        for &(u, v) in &b.arcs {
            x[u][v] -= 1;
            if x[u][v] < 0 {
                return None;
            }
        }
        let mut z = st.z.clone();
        for v in b.nodes() {
            if v != self.root {
                z[v] -= 1;
            }
        }
        let m = st.m - 1;
        let trimmed = self.trim(&x);
        if self.supports(&trimmed, &z, m) {
            return Some((State { x: trimmed, z, m }, true));
        }
        if self.supports(&x, &z, m) {
            return Some((State { x, z, m }, false));
        }
        None
    }

    /// Lowers outgoing capacities until every non-root node has inflow at
    /// least its outflow.
    fn trim(&self, x: &[Vec<i64>]) -> Vec<Vec<i64>> {
        let mut x = x.to_vec();
        loop {
            let mut changed = false;
            for v in 0..self.n {
                if v == self.root {
                    continue;
                }
                let inflow: i64 = (0..self.n).map(|u| x[u][v]).sum();
                let mut excess: i64 = x[v].iter().sum::<i64>() - inflow;
                for w in 0..self.n {
                    if excess <= 0 {
                        break;
                    }
                    let cut = excess.min(x[v][w]);
                    if cut > 0 {
                        x[v][w] -= cut;
                        excess -= cut;
                        changed = true;
                    }
                }
            }
            if !changed {
                return x;
            }
        }
    }

    /// Visits candidate branchings for one peel step: every branching on arcs
    /// with residual capacity that contains all nodes whose requirement
    /// equals the number of branchings left, with zero-requirement leaves
    /// removed. Larger branchings come first.
    fn enumerate(&mut self, st: &State, visit: &mut Visit<'_>) -> Result<Flow, Abort> {
        let n = self.n;
        let mut g = Grow {
            in_b: vec![false; n],
            arcs: Vec::new(),
            resid: st.x.clone(),
            excluded: vec![vec![false; n]; n],
            seen: HashSet::new(),
        };
        g.in_b[self.root] = true;
        self.grow(st, &mut g, visit)
    }

    fn grow(&mut self, st: &State, g: &mut Grow, visit: &mut Visit<'_>) -> Result<Flow, Abort> {
        self.tick()?;
        let n = self.n;
        let mut frontier: Vec<(NodeId, NodeId)> = Vec::new();
        for u in (0..n).filter(|&u| g.in_b[u]) {
            for w in (0..n).filter(|&w| !g.in_b[w]) {
                if g.resid[u][w] >= 1 && !g.excluded[u][w] {
                    frontier.push((u, w));
                }
            }
        }
        frontier.sort_by_key(|&(u, w)| (st.z[w] < st.m, -st.z[w], u, w));

        let mut newly_excluded = Vec::new();
        let mut flow = Flow::Continue;
        for &(u, w) in &frontier {
            if self.required_reachable(st, g) && self.can_include(st, g, u, w) {
                g.in_b[w] = true;
                g.arcs.push((u, w));
                g.resid[u][w] -= 1;
                let f = self.grow(st, g, visit);
                g.resid[u][w] += 1;
                g.arcs.pop();
                g.in_b[w] = false;
                if let Flow::Stop = f? {
                    flow = Flow::Stop;
                    break;
                }
            }
            g.excluded[u][w] = true;
            newly_excluded.push((u, w));
        }
        if let Flow::Continue = flow {
            // Stop growing here.
            let complete = (0..n).all(|v| g.in_b[v] || st.z[v] < st.m);
            if complete {
                let b = self.prune(st, &g.arcs);
                if g.seen.insert(b.arcs.clone()) {
                    flow = visit(self, b)?;
                }
            }
        }
        for (u, w) in newly_excluded {
            g.excluded[u][w] = false;
        }
        Ok(flow)
    }

    /// Necessary condition after adding `(u, w)`: removing the partial
    /// branching leaves each node connectivity at least its requirement
    /// minus one.
    fn can_include(&self, st: &State, g: &mut Grow, u: NodeId, w: NodeId) -> bool {
        g.resid[u][w] -= 1;
        let ok = (0..self.n)
            .filter(|&v| v != self.root && st.z[v] > 1)
            .all(|v| self.lambda(&g.resid, v) >= st.z[v] - 1);
        g.resid[u][w] += 1;
        ok
    }

    /// Nodes that must join the branching are still reachable through arcs
    /// that are not excluded.
    fn required_reachable(&self, st: &State, g: &Grow) -> bool {
        let n = self.n;
        let mut seen = g.in_b.clone();
        let mut stack: Vec<NodeId> = (0..n).filter(|&v| seen[v]).collect();
        while let Some(u) = stack.pop() {
            for w in 0..n {
                if !seen[w] && g.resid[u][w] >= 1 && !(g.in_b[u] && g.excluded[u][w]) {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        (0..n).all(|v| seen[v] || st.z[v] < st.m)
    }

    /// Repeatedly drops leaves that nothing requires.
    fn prune(&self, st: &State, arcs: &[(NodeId, NodeId)]) -> Branching {
        let mut arcs = arcs.to_vec();
        loop {
            let before = arcs.len();
            let tails: HashSet<NodeId> = arcs.iter().map(|&(u, _)| u).collect();
            arcs.retain(|&(_, v)| tails.contains(&v) || st.z[v] > 0);
            if arcs.len() == before {
                return Branching::new(self.root, arcs);
            }
        }
    }
}

struct Grow {
    in_b: Vec<bool>,
    arcs: Vec<(NodeId, NodeId)>,
    resid: Vec<Vec<i64>>,
    excluded: Vec<Vec<bool>>,
    seen: HashSet<Vec<(NodeId, NodeId)>>,
}
