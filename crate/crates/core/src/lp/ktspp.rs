//! The path-cover relaxation: one unit `s_i`-`t_i` flow per pair, coverage
//! variables on free nodes, and cut rows added lazily by separation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::simplex::{simplex_solve, LpError, LpProblem, LpStatus, Sense, SimplexOptions};
use crate::flow::maxflow::max_flow;
use crate::flow::CapacitatedDigraph;
use crate::instance::{NodeId, PairedInstance};
use crate::rational::Rational;

/// Variable indices of the base LP.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LpLayout {
    pub n: usize,
    /// `x[i][u][v]` for `u != v`.
    pub x: Vec<Vec<Vec<Option<usize>>>>,
    /// `z[i][v]` for free nodes `v`.
    pub z: Vec<Vec<Option<usize>>>,
    /// Row indices of the coverage rows `sum_i z_{i,v} = 1`.
    pub coverage_rows: Vec<usize>,
}

/// Flow, degree, and coverage rows; no cut rows. Arcs entering `s_i` or
/// leaving `t_i` are fixed to zero through their bounds.
pub fn build_ktspp_base_lp(inst: &PairedInstance) -> (LpProblem, LpLayout) {
    let n = inst.n();
    let k = inst.k();
    let free = inst.free_nodes();
    let mut p = LpProblem::new();
    let mut x = vec![vec![vec![None; n]; n]; k];
    let mut z = vec![vec![None; n]; k];
    for (i, &(s, t)) in inst.pairs.iter().enumerate() {
        for u in 0..n {
            for v in 0..n {
                if u == v {
                    continue;
                }
                let upper = (v == s || u == t).then(Rational::zero);
                x[i][u][v] = Some(p.add_var(Some(Rational::zero()), upper, inst.metric.cost(u, v).clone()));
            }
        }
        for &v in &free {
            z[i][v] = Some(p.add_nonneg(Rational::zero()));
        }
    }
    let one = Rational::one;
    for (i, &(s, t)) in inst.pairs.iter().enumerate() {
        let xi = &x[i];
        let out_of = |v: NodeId| (0..n).filter_map(move |w| xi[v][w]).map(|j| (j, one()));
        let into = |v: NodeId| (0..n).filter_map(move |w| xi[w][v]).map(|j| (j, one()));
        p.add_row(out_of(s).collect(), Sense::Eq, one());
        p.add_row(into(t).collect(), Sense::Eq, one());
        for v in 0..n {
            if v == s || v == t {
                continue;
            }
            match z[i][v] {
                Some(zv) => {
                    let mut r: Vec<_> = into(v).collect();
                    r.push((zv, -one()));
                    p.add_row(r, Sense::Eq, Rational::zero());
                    let mut r: Vec<_> = out_of(v).collect();
                    r.push((zv, -one()));
                    p.add_row(r, Sense::Eq, Rational::zero());
                }
                None => {
                    // Another pair's endpoint: flow may pass through but not
                    // start or end there.
                    let mut r: Vec<_> = into(v).collect();
                    r.extend(out_of(v).map(|(j, _)| (j, -one())));
                    p.add_row(r, Sense::Eq, Rational::zero());
                }
            }
        }
    }
    let mut coverage_rows = Vec::new();
    for &v in &free {
        let r = (0..k).map(|i| (z[i][v].expect("free node has z"), one())).collect();
        coverage_rows.push(p.add_row(r, Sense::Eq, one()));
    }
    (p, LpLayout { n, x, z, coverage_rows })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArcValue {
    pub tail: NodeId,
    pub head: NodeId,
    pub value: Rational,
}

/// Flows `x_i` (nonzero arcs only) and coverage `z_i` for every pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LpSolution {
    pub n: usize,
    pub pairs: Vec<(NodeId, NodeId)>,
    pub objective: Rational,
    pub x: Vec<Vec<ArcValue>>,
    pub z: Vec<BTreeMap<NodeId, Rational>>,
    #[serde(default)]
    pub rounds: usize,
    #[serde(default)]
    pub cuts: usize,
    /// Objective after each round of the cutting-plane loop.
    #[serde(default)]
    pub history: Vec<Rational>,
}

impl LpSolution {
    fn from_point(inst: &PairedInstance, layout: &LpLayout, values: &[Rational], objective: Rational) -> Self {
        let n = inst.n();
        let mut x = Vec::new();
        let mut z = Vec::new();
        for i in 0..inst.k() {
            let mut arcs = Vec::new();
            for u in 0..n {
                for v in 0..n {
                    if let Some(j) = layout.x[i][u][v] {
                        if !values[j].is_zero() {
                            arcs.push(ArcValue { tail: u, head: v, value: values[j].clone() });
                        }
                    }
                }
            }
            x.push(arcs);
            z.push(
                (0..n)
                    .filter_map(|v| layout.z[i][v].map(|j| (v, values[j].clone())))
                    .collect(),
            );
        }
        LpSolution { n, pairs: inst.pairs.clone(), objective, x, z, rounds: 0, cuts: 0, history: vec![] }
    }

    pub fn k(&self) -> usize {
        self.pairs.len()
    }

    pub fn flow_matrix(&self, i: usize) -> Vec<Vec<Rational>> {
        let mut m = vec![vec![Rational::zero(); self.n]; self.n];
        for a in &self.x[i] {
            m[a.tail][a.head] = a.value.clone();
        }
        m
    }

    /// `x_i` as a digraph rooted at `s_i`.
    pub fn pair_digraph(&self, i: usize) -> CapacitatedDigraph {
        let arcs = self.x[i].iter().map(|a| (a.tail, a.head, a.value.clone()));
        CapacitatedDigraph::new(self.n, self.pairs[i].0, arcs).expect("LP flows are valid arcs")
    }

    /// Coverage requirements for decomposing `x_i`: `z_{i,v}` on free
    /// nodes and one at `t_i`.
    pub fn requirements(&self, i: usize) -> BTreeMap<NodeId, Rational> {
        let mut r: BTreeMap<NodeId, Rational> =
            self.z[i].iter().filter(|(_, z)| z.is_positive()).map(|(&v, z)| (v, z.clone())).collect();
        r.insert(self.pairs[i].1, Rational::one());
        r
    }

    /// `c(x_i)`.
    pub fn pair_cost(&self, i: usize, inst: &PairedInstance) -> Rational {
        self.x[i].iter().map(|a| inst.metric.cost(a.tail, a.head) * &a.value).sum()
    }

    /// Exact check of every row of the full relaxation, cut rows via
    /// max-flow. Empty result means feasible.
    pub fn violations(&self, inst: &PairedInstance) -> Vec<String> {
        let mut out = Vec::new();
        let n = self.n;
        let free = inst.free_nodes();
        for (i, &(s, t)) in self.pairs.iter().enumerate() {
            let m = self.flow_matrix(i);
            let inflow = |v: NodeId| -> Rational { (0..n).map(|u| &m[u][v]).sum() };
            let outflow = |v: NodeId| -> Rational { (0..n).map(|w| &m[v][w]).sum() };
            if self.x[i].iter().any(|a| a.value.is_negative()) {
                out.push(format!("pair {i}: negative flow"));
            }
            if outflow(s) != Rational::one() || inflow(t) != Rational::one() {
                out.push(format!("pair {i}: endpoint flow is not one"));
            }
            if !inflow(s).is_zero() || !outflow(t).is_zero() {
                out.push(format!("pair {i}: flow enters s or leaves t"));
            }
            for v in 0..n {
                if v == s || v == t {
                    continue;
                }
                let zv = self.z[i].get(&v).cloned().unwrap_or_default();
                if zv.is_negative() {
                    out.push(format!("pair {i}: negative z at {v}"));
                }
                if inflow(v) != outflow(v) || (!inst.is_terminal(v) && inflow(v) != zv) {
                    out.push(format!("pair {i}: degree row at node {v}"));
                }
            }
            for &v in &free {
                let zv = self.z[i].get(&v).cloned().unwrap_or_default();
                if max_flow(&m, s, v).value < zv {
                    out.push(format!("pair {i}: cut row violated for node {v}"));
                }
            }
        }
        for &v in &free {
            let total: Rational = self.z.iter().filter_map(|zi| zi.get(&v)).sum();
            if total != Rational::one() {
                out.push(format!("coverage of node {v} is {total}"));
            }
        }
        let cost: Rational = (0..self.k()).map(|i| self.pair_cost(i, inst)).sum();
        if cost != self.objective {
            out.push(format!("objective {} differs from flow cost {cost}", self.objective));
        }
        out
    }
}

/// Witness of a violated cut row `x_i(in(U)) >= z_{i,v}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CutCertificate {
    pub pair: usize,
    pub node: NodeId,
    pub set: Vec<NodeId>,
    pub violation: Rational,
}

/// Most violated cut per (pair, free node): a minimum `s_i`-`v` cut whose
/// sink side is smallest. Empty iff every cut row holds.
pub fn separate(inst: &PairedInstance, sol: &LpSolution) -> Vec<CutCertificate> {
    let mut out = Vec::new();
    let free = inst.free_nodes();
    for (i, &(s, _)) in sol.pairs.iter().enumerate() {
        let m = sol.flow_matrix(i);
        for &v in &free {
            let zv = sol.z[i].get(&v).cloned().unwrap_or_default();
            if !zv.is_positive() {
                continue;
            }
            let r = max_flow(&m, s, v);
            if r.value < zv {
                out.push(CutCertificate {
                    pair: i,
                    node: v,
                    set: (0..sol.n).filter(|&u| r.sink_side[u]).collect(),
                    violation: zv - r.value,
                });
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy)]
pub struct LpOptions {
    pub max_rounds: usize,
    pub simplex: SimplexOptions,
}

impl Default for LpOptions {
    fn default() -> Self {
        LpOptions { max_rounds: 200, simplex: SimplexOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SolveLpError {
    #[error("no cut-feasible solution after {0} rounds")]
    CutRoundLimit(usize),
    #[error(transparent)]
    Simplex(#[from] LpError),
    #[error("relaxation is infeasible")]
    Infeasible,
    #[error("relaxation is unbounded")]
    Unbounded,
}

/// Cutting-plane loop: solve, add the violated cuts, repeat until the
/// separation oracle finds nothing.
pub fn solve_ktspp_lp(inst: &PairedInstance, opts: &LpOptions) -> Result<LpSolution, SolveLpError> {
    let (mut p, layout) = build_ktspp_base_lp(inst);
    let mut history: Vec<Rational> = Vec::new();
    let mut cuts = 0;
    for round in 1..=opts.max_rounds {
        let point = match simplex_solve(&p, &opts.simplex)? {
            LpStatus::Optimal(pt) => pt,
            LpStatus::Infeasible => return Err(SolveLpError::Infeasible),
            LpStatus::Unbounded => return Err(SolveLpError::Unbounded),
        };
        debug_assert!(history.last().is_none_or(|h| h <= &point.objective));
        history.push(point.objective.clone());
        let mut sol = LpSolution::from_point(inst, &layout, &point.values, point.objective);
        let found = separate(inst, &sol);
        if found.is_empty() {
            sol.rounds = round;
            sol.cuts = cuts;
            sol.history = history;
            return Ok(sol);
        }
        for c in found {
            let xi = &layout.x[c.pair];
            let inside: Vec<bool> = (0..layout.n).map(|v| c.set.contains(&v)).collect();
            let mut row = Vec::new();
            for u in (0..layout.n).filter(|&u| !inside[u]) {
                for v in (0..layout.n).filter(|&v| inside[v]) {
                    if let Some(j) = xi[u][v] {
                        row.push((j, Rational::one()));
                    }
                }
            }
            row.push((layout.z[c.pair][c.node].expect("cut node is free"), -Rational::one()));
            p.add_row(row, Sense::Ge, Rational::zero());
            cuts += 1;
        }
    }
    Err(SolveLpError::CutRoundLimit(opts.max_rounds))
}
