//! Dense two-phase primal simplex with Bland's rule.
//!
//! Solves `min c·x` subject to equality rows, `≤` rows and `x ≥ 0`. Every
//! row carries an artificial column for the whole solve, so the final
//! tableau also yields the row duals.

use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-12;
const COST_TOL: f64 = 1e-11;
const RATIO_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-9;
const ZERO_TOL: f64 = 1e-11;

/// A linear program in inequality/equality form over nonnegative variables.
#[derive(Debug, Clone, Default)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    /// Rows `a·x = b`.
    pub eq: Vec<(Vec<f64>, f64)>,
    /// Rows `a·x ≤ b`.
    pub le: Vec<(Vec<f64>, f64)>,
}

impl LinearProgram {
    pub fn new(objective: Vec<f64>) -> Self {
        LinearProgram { objective, eq: Vec::new(), le: Vec::new() }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }
}

/// An optimal basic feasible solution.
#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// Original variables in the final basis (a certificate of the vertex).
    pub basic_vars: Vec<usize>,
    /// `≤` rows whose slack is nonbasic, i.e. active at the vertex.
    pub active_le: Vec<usize>,
    /// Row duals, equality rows first then `≤` rows; `b·y` equals the
    /// objective at optimality.
    pub duals: Vec<f64>,
    pub pivots: usize,
}

impl LpSolution {
    /// `b·y` from the duals.
    pub fn dual_objective(&self, lp: &LinearProgram) -> f64 {
        lp.eq.iter().chain(&lp.le).zip(&self.duals).map(|((_, b), y)| b * y).sum()
    }
}

struct Tableau {
    /// `rows x cols`, right-hand side in the last column.
    t: Vec<Vec<f64>>,
    obj: Vec<f64>,
    basis: Vec<usize>,
    cols: usize,
    pivots: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) -> Result<()> {
        let p = self.t[r][c];
        if p.abs() < PIVOT_TOL {
            return Err(Error::Numerical(format!("pivot {p:e} too small")));
        }
        let inv = 1.0 / p;
        for v in self.t[r].iter_mut() {
            *v *= inv;
        }
        self.t[r][c] = 1.0;
        let prow = self.t[r].clone();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&prow) {
                    *v -= f * pv;
                }
                row[c] = 0.0;
            }
        }
        // basic values are nonnegative; anything below is rounding
        let rhs = self.cols;
        for row in self.t.iter_mut() {
            if row[rhs] < 0.0 && row[rhs] > -ZERO_TOL {
                row[rhs] = 0.0;
            }
        }
        let f = self.obj[c];
        if f != 0.0 {
            for (v, pv) in self.obj.iter_mut().zip(&prow) {
                *v -= f * pv;
            }
            self.obj[c] = 0.0;
        }
        self.basis[r] = c;
        self.pivots += 1;
        Ok(())
    }

    /// Runs simplex iterations with Bland's rule over columns `< allowed`.
    fn optimize(&mut self, allowed: usize) -> Result<()> {
        let rhs = self.cols;
        let cap = self.pivots + 50 * (self.t.len() + self.cols) + 1000;
        loop {
            if self.pivots > cap {
                return Err(Error::Numerical("simplex pivot limit reached".into()));
            }
            let entering = (0..allowed).find(|&j| self.obj[j] < -COST_TOL);
            let Some(c) = entering else { return Ok(()) };
            let mut best: Option<(usize, f64)> = None;
            for (i, row) in self.t.iter().enumerate() {
                let a = row[c];
                if a > RATIO_TOL {
                    // rounding can leave a basic value slightly negative
                    let ratio = row[rhs].max(0.0) / a;
                    best = match best {
                        None => Some((i, ratio)),
                        Some((bi, br)) => {
                            if ratio < br - 1e-15 || (ratio <= br + 1e-15 && self.basis[i] < self.basis[bi]) {
                                Some((i, ratio))
                            } else {
                                Some((bi, br))
                            }
                        }
                    }
                }
            }
            match best {
                None => return Err(Error::Unbounded),
                Some((r, _)) => self.pivot(r, c)?,
            }
        }
    }
}

/// Solves `lp`, returning an optimal basic feasible solution.
pub fn lp_solve(lp: &LinearProgram) -> Result<LpSolution> {
    let n = lp.num_vars();
    let rows: Vec<(&Vec<f64>, f64, bool)> = lp
        .eq
        .iter()
        .map(|(a, b)| (a, *b, false))
        .chain(lp.le.iter().map(|(a, b)| (a, *b, true)))
        .collect();
    let m = rows.len();
    let n_slack = lp.le.len();
    for (a, b, _) in &rows {
        if a.len() != n || !b.is_finite() || a.iter().any(|v| !v.is_finite()) {
            return Err(Error::Spec("malformed linear program row".into()));
        }
    }
    if lp.objective.iter().any(|v| !v.is_finite()) {
        return Err(Error::Spec("malformed linear program objective".into()));
    }
    // columns: originals, slacks, artificials, rhs
    let art0 = n + n_slack;
    let cols = art0 + m;
    let mut signs = Vec::with_capacity(m);
    let mut t = Vec::with_capacity(m);
    let mut slack = 0;
    for (i, (a, b, is_le)) in rows.iter().enumerate() {
        let s = if *b < 0.0 { -1.0 } else { 1.0 };
        signs.push(s);
        let mut row = vec![0.0; cols + 1];
        for (j, v) in a.iter().enumerate() {
            row[j] = s * v;
        }
        if *is_le {
            row[n + slack] = s;
            slack += 1;
        }
        row[art0 + i] = 1.0;
        row[cols] = s * b;
        t.push(row);
    }
    // phase one: minimize the sum of artificials
    let mut obj = vec![0.0; cols + 1];
    for row in &t {
        for j in 0..art0 {
            obj[j] -= row[j];
        }
        obj[cols] -= row[cols];
    }
    let mut tab = Tableau { t, obj, basis: (art0..cols).collect(), cols, pivots: 0 };
    tab.optimize(art0)?;
    let scale = 1.0 + rows.iter().map(|(_, b, _)| b.abs()).fold(0.0, f64::max);
    if -tab.obj[cols] > FEAS_TOL * scale {
        return Err(Error::Infeasible);
    }
    // drive remaining artificials out of the basis where possible
    for r in 0..m {
        if tab.basis[r] >= art0 {
            if let Some(c) = (0..art0).find(|&j| tab.t[r][j].abs() > 1e-9) {
                tab.pivot(r, c)?;
            }
        }
    }
    // phase two
    let mut obj = vec![0.0; cols + 1];
    obj[..n].copy_from_slice(&lp.objective);
    for (r, &b) in tab.basis.iter().enumerate() {
        let f = obj[b];
        if f != 0.0 {
            for (v, tv) in obj.iter_mut().zip(&tab.t[r]) {
                *v -= f * tv;
            }
        }
    }
    tab.obj = obj;
    tab.optimize(art0)?;

    // Recompute the basic values from the original rows: the tableau
    // accumulates rounding over many pivots.
    let n_eq = lp.eq.len();
    let basis_matrix: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            tab.basis
                .iter()
                .map(|&b| {
                    if b < n {
                        signs[i] * rows[i].0[b]
                    } else if b < art0 {
                        if i == n_eq + (b - n) { signs[i] } else { 0.0 }
                    } else if i == b - art0 {
                        1.0
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    let rhs: Vec<f64> = (0..m).map(|i| signs[i] * rows[i].1).collect();
    let values = match solve_dense(basis_matrix, rhs) {
        Some(v) if v.iter().all(|x| *x >= -FEAS_TOL) => v,
        _ => tab.t.iter().map(|row| row[cols]).collect(),
    };

    let mut x = vec![0.0; n];
    let mut basic_vars = Vec::new();
    let mut basic_slacks = vec![false; n_slack];
    for (r, &b) in tab.basis.iter().enumerate() {
        if b < n {
            x[b] = values[r].max(0.0);
            basic_vars.push(b);
        } else if b < art0 {
            basic_slacks[b - n] = true;
        }
    }
    basic_vars.sort_unstable();
    let objective = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    let duals = (0..m).map(|i| -signs[i] * tab.obj[art0 + i]).collect();
    let active_le = (0..n_slack).filter(|&i| !basic_slacks[i]).collect();
    Ok(LpSolution { x, objective, basic_vars, active_le, duals, pivots: tab.pivots })
}

/// Solves a square system by Gaussian elimination with partial pivoting;
/// `None` when it is numerically singular.
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let m = b.len();
    for col in 0..m {
        let p = (col..m).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[p][col].abs() < PIVOT_TOL {
            return None;
        }
        a.swap(col, p);
        b.swap(col, p);
        for r in col + 1..m {
            let f = a[r][col] / a[col][col];
            if f != 0.0 {
                for c in col..m {
                    a[r][c] -= f * a[col][c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; m];
    for r in (0..m).rev() {
        let tail: f64 = (r + 1..m).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - tail) / a[r][r];
    }
    Some(x)
}
