//! Dense two-phase tableau simplex over exact rationals with Bland's rule.

use crate::rational::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Variable {
    pub lower: Option<Rational>,
    pub upper: Option<Rational>,
    pub cost: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub coeffs: Vec<(usize, Rational)>,
    pub sense: Sense,
    pub rhs: Rational,
}

/// Minimize `cost . x` subject to bounds and sparse rows.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LpProblem {
    pub vars: Vec<Variable>,
    pub rows: Vec<Constraint>,
}

impl LpProblem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, lower: Option<Rational>, upper: Option<Rational>, cost: Rational) -> usize {
        self.vars.push(Variable { lower, upper, cost });
        self.vars.len() - 1
    }

    /// Nonnegative variable without an upper bound.
    pub fn add_nonneg(&mut self, cost: Rational) -> usize {
        self.add_var(Some(Rational::zero()), None, cost)
    }

    pub fn add_row(&mut self, coeffs: Vec<(usize, Rational)>, sense: Sense, rhs: Rational) -> usize {
        self.rows.push(Constraint { coeffs, sense, rhs });
        self.rows.len() - 1
    }

    pub fn check(&self) -> Result<(), LpError> {
        for (j, v) in self.vars.iter().enumerate() {
            if let (Some(l), Some(u)) = (&v.lower, &v.upper) {
                if l > u {
                    return Err(LpError::InvalidProblem(format!("variable {j}: lower > upper")));
                }
            }
        }
        for (i, r) in self.rows.iter().enumerate() {
            if let Some((j, _)) = r.coeffs.iter().find(|(j, _)| *j >= self.vars.len()) {
                return Err(LpError::InvalidProblem(format!("row {i} references variable {j}")));
            }
        }
        Ok(())
    }

    pub fn objective_at(&self, x: &[Rational]) -> Rational {
        self.vars.iter().zip(x).map(|(v, xv)| &v.cost * xv).sum()
    }

    /// Whether `x` satisfies every bound and row exactly.
    pub fn is_feasible(&self, x: &[Rational]) -> bool {
        let bounds = self.vars.iter().zip(x).all(|(v, xv)| {
            v.lower.as_ref().is_none_or(|l| xv >= l) && v.upper.as_ref().is_none_or(|u| xv <= u)
        });
        bounds
            && self.rows.iter().all(|r| {
                let lhs: Rational = r.coeffs.iter().map(|(j, a)| a * &x[*j]).sum();
                match r.sense {
                    Sense::Le => lhs <= r.rhs,
                    Sense::Ge => lhs >= r.rhs,
                    Sense::Eq => lhs == r.rhs,
                }
            })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LpPoint {
    pub values: Vec<Rational>,
    pub objective: Rational,
    pub pivots: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LpStatus {
    Optimal(LpPoint),
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LpError {
    #[error("simplex stopped after {0} pivots")]
    IterationLimit(usize),
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
}

#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    pub iteration_limit: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions { iteration_limit: 200_000 }
    }
}

/// `x_j = offset + sum(sign * y_col)` over nonnegative tableau columns.
struct VarMap {
    offset: Rational,
    cols: Vec<(usize, bool)>,
}

struct Tableau {
    rows: Vec<Vec<Rational>>,
    /// Reduced costs, last entry is minus the objective value.
    obj: Vec<Rational>,
    basis: Vec<usize>,
    width: usize,
    pivots: usize,
    limit: usize,
}

enum Step {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn rhs(&self) -> usize {
        self.width
    }

    fn pivot(&mut self, r: usize, c: usize) -> Result<(), LpError> {
        self.pivots += 1;
        if self.pivots > self.limit {
            return Err(LpError::IterationLimit(self.pivots - 1));
        }
        let p = self.rows[r][c].clone();
        let nz: Vec<usize> = (0..=self.width).filter(|&j| !self.rows[r][j].is_zero()).collect();
        if p != Rational::one() {
            for &j in &nz {
                let v = &self.rows[r][j] / &p;
                self.rows[r][j] = v;
            }
        }
        let prow: Vec<(usize, Rational)> = nz.iter().map(|&j| (j, self.rows[r][j].clone())).collect();
        for i in 0..self.rows.len() {
            if i == r || self.rows[i][c].is_zero() {
                continue;
            }
            let f = self.rows[i][c].clone();
            let row = &mut self.rows[i];
            for (j, a) in &prow {
                let v = &row[*j] - &f * a;
                row[*j] = v;
            }
        }
        if !self.obj[c].is_zero() {
            let f = self.obj[c].clone();
            for (j, a) in &prow {
                let v = &self.obj[*j] - &f * a;
                self.obj[*j] = v;
            }
        }
        self.basis[r] = c;
        Ok(())
    }

    /// Bland's rule: lowest-index improving column, lowest basic index among
    /// tied ratios.
    fn run(&mut self, allowed: usize) -> Result<Step, LpError> {
        let rhs = self.rhs();
        loop {
            let Some(c) = (0..allowed).find(|&j| self.obj[j].is_negative()) else {
                return Ok(Step::Optimal);
            };
            let mut best: Option<(usize, Rational)> = None;
            for i in 0..self.rows.len() {
                let a = &self.rows[i][c];
                if !a.is_positive() {
                    continue;
                }
                let ratio = &self.rows[i][rhs] / a;
                let better = match &best {
                    None => true,
                    Some((bi, br)) => ratio < *br || (ratio == *br && self.basis[i] < self.basis[*bi]),
                };
                if better {
                    best = Some((i, ratio));
                }
            }
            match best {
                None => return Ok(Step::Unbounded),
                Some((r, _)) => self.pivot(r, c)?,
            }
        }
    }
}

pub fn simplex_solve(p: &LpProblem, opts: &SimplexOptions) -> Result<LpStatus, LpError> {
    p.check()?;

    // Substitute bounds so every tableau column is a plain y >= 0.
    let mut maps = Vec::with_capacity(p.vars.len());
    let mut ncols = 0usize;
    let mut bound_rows: Vec<(usize, Rational)> = Vec::new();
    for v in &p.vars {
        let m = match (&v.lower, &v.upper) {
            (Some(l), Some(u)) if l == u => VarMap { offset: l.clone(), cols: vec![] },
            (Some(l), u) => {
                let c = ncols;
                ncols += 1;
                if let Some(u) = u {
                    bound_rows.push((c, u - l));
                }
                VarMap { offset: l.clone(), cols: vec![(c, true)] }
            }
            (None, Some(u)) => {
                let c = ncols;
                ncols += 1;
                VarMap { offset: u.clone(), cols: vec![(c, false)] }
            }
            (None, None) => {
                let c = ncols;
                ncols += 2;
                VarMap { offset: Rational::zero(), cols: vec![(c, true), (c + 1, false)] }
            }
        };
        maps.push(m);
    }

    // Rows over y-columns with nonnegative right-hand sides.
    let mut rows: Vec<(Vec<(usize, Rational)>, Sense, Rational)> = Vec::new();
    for r in &p.rows {
        let mut rhs = r.rhs.clone();
        let mut dense: std::collections::BTreeMap<usize, Rational> = Default::default();
        for (j, a) in &r.coeffs {
            let m = &maps[*j];
            rhs -= a * &m.offset;
            for &(c, pos) in &m.cols {
                let e = dense.entry(c).or_insert_with(Rational::zero);
                if pos {
                    *e += a;
                } else {
                    *e -= a;
                }
            }
        }
        let coeffs: Vec<(usize, Rational)> = dense.into_iter().filter(|(_, a)| !a.is_zero()).collect();
        if coeffs.is_empty() {
            let ok = match r.sense {
                Sense::Le => !rhs.is_negative(),
                Sense::Ge => !rhs.is_positive(),
                Sense::Eq => rhs.is_zero(),
            };
            if !ok {
                return Ok(LpStatus::Infeasible);
            }
            continue;
        }
        rows.push((coeffs, r.sense, rhs));
    }
    for (c, ub) in bound_rows {
        rows.push((vec![(c, Rational::one())], Sense::Le, ub));
    }
    for row in rows.iter_mut() {
        if row.2.is_negative() {
            for (_, a) in row.0.iter_mut() {
                *a = -&*a;
            }
            row.2 = -&row.2;
            row.1 = match row.1 {
                Sense::Le => Sense::Ge,
                Sense::Ge => Sense::Le,
                Sense::Eq => Sense::Eq,
            };
        }
    }

    let m = rows.len();
    let nslack = rows.iter().filter(|r| r.1 != Sense::Eq).count();
    let nart = rows.iter().filter(|r| r.1 != Sense::Le).count();
    let artificial_from = ncols + nslack;
    let width = artificial_from + nart;
    let mut t = Tableau {
        rows: vec![vec![Rational::zero(); width + 1]; m],
        obj: vec![Rational::zero(); width + 1],
        basis: vec![0; m],
        width,
        pivots: 0,
        limit: opts.iteration_limit,
    };
    let (mut slack, mut art) = (ncols, artificial_from);
    for (i, (coeffs, sense, rhs)) in rows.into_iter().enumerate() {
        for (c, a) in coeffs {
            t.rows[i][c] = a;
        }
        t.rows[i][width] = rhs;
        match sense {
            Sense::Le => {
                t.rows[i][slack] = Rational::one();
                t.basis[i] = slack;
                slack += 1;
            }
            Sense::Ge => {
                t.rows[i][slack] = -Rational::one();
                slack += 1;
                t.rows[i][art] = Rational::one();
                t.basis[i] = art;
                art += 1;
            }
            Sense::Eq => {
                t.rows[i][art] = Rational::one();
                t.basis[i] = art;
                art += 1;
            }
        }
    }

    // Phase I: minimize the sum of artificials.
    if nart > 0 {
        for i in 0..m {
            if t.basis[i] >= artificial_from {
                for j in 0..=width {
                    if j < artificial_from || j == width {
                        let v = &t.obj[j] - &t.rows[i][j];
                        t.obj[j] = v;
                    }
                }
            }
        }
        t.run(width)?;
        if t.obj[width].is_negative() {
            return Ok(LpStatus::Infeasible);
        }
        // Drive zero-valued artificials out of the basis; drop redundant rows.
        let mut i = 0;
        while i < t.rows.len() {
            if t.basis[i] >= artificial_from {
                match (0..artificial_from).find(|&j| !t.rows[i][j].is_zero()) {
                    Some(c) => {
                        t.pivot(i, c)?;
                        i += 1;
                    }
                    None => {
                        t.rows.remove(i);
                        t.basis.remove(i);
                    }
                }
            } else {
                i += 1;
            }
        }
    }

    // Phase II objective in y-columns.
    let mut cost = vec![Rational::zero(); width];
    let mut constant = Rational::zero();
    for (v, mp) in p.vars.iter().zip(&maps) {
        constant += &v.cost * &mp.offset;
        for &(c, pos) in &mp.cols {
            cost[c] = if pos { v.cost.clone() } else { -&v.cost };
        }
    }
    t.obj = cost.iter().cloned().chain(std::iter::once(Rational::zero())).collect();
    for i in 0..t.rows.len() {
        let cb = cost[t.basis[i]].clone();
        if cb.is_zero() {
            continue;
        }
        for j in 0..=width {
            if !t.rows[i][j].is_zero() {
                let v = &t.obj[j] - &cb * &t.rows[i][j];
                t.obj[j] = v;
            }
        }
    }
    if let Step::Unbounded = t.run(artificial_from)? {
        return Ok(LpStatus::Unbounded);
    }

    let mut y = vec![Rational::zero(); width];
    for (i, &b) in t.basis.iter().enumerate() {
        y[b] = t.rows[i][width].clone();
    }
    let values: Vec<Rational> = maps
        .iter()
        .map(|mp| {
            let mut x = mp.offset.clone();
            for &(c, pos) in &mp.cols {
                if pos {
                    x += &y[c];
                } else {
                    x -= &y[c];
                }
            }
            x
        })
        .collect();
    let objective = -&t.obj[width] + constant;
    debug_assert_eq!(objective, p.objective_at(&values));
    Ok(LpStatus::Optimal(LpPoint { values, objective, pivots: t.pivots }))
}
