//! Edmonds–Karp max-flow on dense capacity matrices.

use std::collections::VecDeque;

use crate::rational::Rational;

/// Capacity arithmetic needed by [`max_flow`].
pub trait FlowValue: Clone + Ord {
    fn zero() -> Self;
    fn plus(&self, other: &Self) -> Self;
    fn minus(&self, other: &Self) -> Self;
}

impl FlowValue for i64 {
    fn zero() -> Self {
        0
    }
    fn plus(&self, other: &Self) -> Self {
        self + other
    }
    fn minus(&self, other: &Self) -> Self {
        self - other
    }
}

impl FlowValue for Rational {
    fn zero() -> Self {
        Rational::zero()
    }
    fn plus(&self, other: &Self) -> Self {
        self + other
    }
    fn minus(&self, other: &Self) -> Self {
        self - other
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowResult<C> {
    pub value: C,
    /// Nodes reachable from the source in the final residual graph: the
    /// inclusion-minimal source side of a minimum cut.
    pub source_side: Vec<bool>,
    /// Nodes that reach the sink in the final residual graph: the
    /// inclusion-minimal sink side of a minimum cut.
    pub sink_side: Vec<bool>,
}

/// Maximum `s`-`t` flow. `cap[u][v]` is the capacity of arc `(u, v)`.
pub fn max_flow<C: FlowValue>(cap: &[Vec<C>], s: usize, t: usize) -> FlowResult<C> {
    assert_ne!(s, t, "source equals sink");
    let n = cap.len();
    let zero = C::zero();
    let mut res: Vec<Vec<C>> = cap.to_vec();
    let mut value = C::zero();
    let mut parent = vec![usize::MAX; n];
    loop {
        parent.iter_mut().for_each(|p| *p = usize::MAX);
        parent[s] = s;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            if u == t {
                break;
            }
            for v in 0..n {
                if parent[v] == usize::MAX && res[u][v] > zero {
                    parent[v] = u;
                    queue.push_back(v);
                }
            }
        }
        if parent[t] == usize::MAX {
            break;
        }
        let mut bottleneck: Option<C> = None;
        let mut v = t;
        while v != s {
            let u = parent[v];
            let r = &res[u][v];
            if bottleneck.as_ref().is_none_or(|b| r < b) {
                bottleneck = Some(r.clone());
            }
            v = u;
        }
        let b = bottleneck.expect("path has an arc");
        let mut v = t;
        while v != s {
            let u = parent[v];
            res[u][v] = res[u][v].minus(&b);
            res[v][u] = res[v][u].plus(&b);
            v = u;
        }
        value = value.plus(&b);
    }

    let source_side = reach(&res, s, false);
    let sink_side = reach(&res, t, true);
    FlowResult { value, source_side, sink_side }
}

fn reach<C: FlowValue>(res: &[Vec<C>], start: usize, backwards: bool) -> Vec<bool> {
    let n = res.len();
    let zero = C::zero();
    let mut seen = vec![false; n];
    seen[start] = true;
    let mut stack = vec![start];
    while let Some(u) = stack.pop() {
        for v in 0..n {
            let r = if backwards { &res[v][u] } else { &res[u][v] };
            if !seen[v] && *r > zero {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    seen
}

/// Total capacity of arcs entering the node set `inside`.
pub fn cut_in<C: FlowValue>(cap: &[Vec<C>], inside: &[bool]) -> C {
    let mut total = C::zero();
    for (u, row) in cap.iter().enumerate() {
        if inside[u] {
            continue;
        }
        for (v, c) in row.iter().enumerate() {
            if inside[v] {
                total = total.plus(c);
            }
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integer_and_rational_agree_on_grid() {
        let caps = [[0, 3, 2, 0], [0, 0, 1, 2], [0, 0, 0, 3], [0, 0, 0, 0]];
        let ci: Vec<Vec<i64>> = caps.iter().map(|r| r.to_vec()).collect();
        let cr: Vec<Vec<Rational>> = caps.iter().map(|r| r.iter().map(|&c| Rational::from(c)).collect()).collect();
        let a = max_flow(&ci, 0, 3);
        let b = max_flow(&cr, 0, 3);
        assert_eq!(a.value, 5);
        assert_eq!(b.value, Rational::from(5));
        assert_eq!(a.source_side, b.source_side);
        let outside: Vec<bool> = a.source_side.iter().map(|x| !x).collect();
        assert_eq!(cut_in(&ci, &outside), 5);
    }

    proptest::proptest! {
        // Max-flow value equals the brute-force minimum cut on small graphs,
        // and both returned cuts achieve it.
        #[test]
        fn value_is_min_cut(caps in proptest::collection::vec(0i64..4, 36)) {
            let n = 6;
            let cap: Vec<Vec<i64>> = (0..n).map(|u| (0..n).map(|v| if u == v { 0 } else { caps[u * n + v] }).collect()).collect();
            let r = max_flow(&cap, 0, n - 1);
            let mut best = i64::MAX;
            for mask in 0u32..(1 << n) {
                if mask & 1 == 1 || mask & (1 << (n - 1)) == 0 { continue; }
                let inside: Vec<bool> = (0..n).map(|v| mask >> v & 1 == 1).collect();
                best = best.min(cut_in(&cap, &inside));
            }
            proptest::prop_assert_eq!(r.value, best);
            proptest::prop_assert_eq!(cut_in(&cap, &r.sink_side), best);
            let outside: Vec<bool> = r.source_side.iter().map(|x| !x).collect();
            proptest::prop_assert_eq!(cut_in(&cap, &outside), best);
        }
    }
}
