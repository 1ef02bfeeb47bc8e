//! Dense linear programming for low-dimensional problems with many
//! constraints.
//!
//! Solves `minimize c·x subject to A x <= b` with `x` free. The problem is
//! handed to a two-phase tableau simplex in dual standard form
//! (`minimize b·w, A^T w = -c, w >= 0`), whose tableau has one row per primal
//! variable. The primal optimum is recovered from the optimal dual basis by
//! complementary slackness.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("primal problem is infeasible")]
    Infeasible,
    #[error("primal problem is unbounded (or infeasible)")]
    Unbounded,
    #[error("iteration limit reached")]
    IterationLimit,
    #[error("malformed problem: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: DVector<f64>,
    pub objective: f64,
}

const PIVOT_EPS: f64 = 1e-11;
const COST_EPS: f64 = 1e-12;

/// One linear constraint `a·x <= b`.
#[derive(Debug, Clone)]
pub struct Constraint {
    pub a: Vec<f64>,
    pub b: f64,
}

impl Constraint {
    pub fn new(a: Vec<f64>, b: f64) -> Self {
        Self { a, b }
    }
}

struct Tableau {
    rows: usize,
    cols: usize,
    // rows x (cols + 1); last column is the right-hand side.
    t: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * (self.cols + 1) + j]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.t[i * (self.cols + 1) + self.cols]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.cols + 1;
        let p = self.t[r * w + c];
        for j in 0..w {
            self.t[r * w + j] /= p;
        }
        let pivot_row: Vec<f64> = self.t[r * w..(r + 1) * w].to_vec();
        for i in 0..self.rows {
            if i == r {
                continue;
            }
            let f = self.t[i * w + c];
            if f != 0.0 {
                let row = &mut self.t[i * w..(i + 1) * w];
                for (x, pr) in row.iter_mut().zip(&pivot_row) {
                    *x -= f * pr;
                }
                row[c] = 0.0;
            }
        }
        self.basis[r] = c;
    }

    /// Minimizes `cost·w` over the current tableau, considering only the
    /// columns for which `allowed` holds.
    fn optimize(&mut self, cost: &[f64], allowed: &dyn Fn(usize) -> bool) -> Result<(), LpError> {
        let max_iter = 50_000 + 50 * (self.rows + self.cols);
        let mut last_obj = f64::INFINITY;
        let mut stall = 0usize;
        for _ in 0..max_iter {
            // Simplex multipliers from the basis costs.
            let mut reduced = cost.to_vec();
            for i in 0..self.rows {
                let cb = cost[self.basis[i]];
                if cb != 0.0 {
                    for (j, rj) in reduced.iter_mut().enumerate() {
                        *rj -= cb * self.at(i, j);
                    }
                }
            }
            let obj: f64 = (0..self.rows).map(|i| cost[self.basis[i]] * self.rhs(i)).sum();
            if obj < last_obj - 1e-14 * (1.0 + obj.abs()) {
                stall = 0;
            } else {
                stall += 1;
            }
            last_obj = obj;
            let bland = stall > 50;

            let mut enter = None;
            let mut best = -COST_EPS;
            for (j, &rj) in reduced.iter().enumerate() {
                if !allowed(j) || self.basis.contains(&j) {
                    continue;
                }
                if bland {
                    if rj < -COST_EPS {
                        enter = Some(j);
                        break;
                    }
                } else if rj < best {
                    best = rj;
                    enter = Some(j);
                }
            }
            let Some(c) = enter else {
                return Ok(());
            };

            let mut leave: Option<usize> = None;
            let mut best_ratio = f64::INFINITY;
            for i in 0..self.rows {
                let a = self.at(i, c);
                if a > PIVOT_EPS {
                    let ratio = self.rhs(i).max(0.0) / a;
                    let better = match leave {
                        None => true,
                        Some(l) => {
                            ratio < best_ratio - 1e-15 || (ratio <= best_ratio + 1e-15 && self.basis[i] < self.basis[l])
                        }
                    };
                    if better {
                        best_ratio = ratio;
                        leave = Some(i);
                    }
                }
            }
            let Some(r) = leave else {
                return Err(LpError::Unbounded);
            };
            self.pivot(r, c);
        }
        Err(LpError::IterationLimit)
    }
}

/// Minimizes `c·x` subject to `constraints` (each `a·x <= b`), `x` free.
pub fn minimize(c: &[f64], constraints: &[Constraint]) -> Result<LpSolution, LpError> {
    let k = c.len();
    let m = constraints.len();
    if k == 0 {
        return Err(LpError::Malformed("no variables".into()));
    }
    if let Some(bad) = constraints.iter().find(|con| con.a.len() != k) {
        return Err(LpError::Malformed(format!("constraint has {} coefficients, expected {k}", bad.a.len())));
    }
    if m == 0 {
        return if c.iter().all(|&ci| ci == 0.0) {
            Ok(LpSolution { x: DVector::zeros(k), objective: 0.0 })
        } else {
            Err(LpError::Unbounded)
        };
    }

    // Dual standard form: rows = primal variables, columns = w (m) + artificials (k).
    let cols = m + k;
    let w = cols + 1;
    let mut t = vec![0.0; k * w];
    for i in 0..k {
        let rhs = -c[i];
        let sign = if rhs < 0.0 { -1.0 } else { 1.0 };
        for (j, con) in constraints.iter().enumerate() {
            t[i * w + j] = sign * con.a[i];
        }
        t[i * w + m + i] = 1.0;
        t[i * w + cols] = sign * rhs;
    }
    let mut tab = Tableau { rows: k, cols, t, basis: (m..m + k).collect() };

    // Phase 1: drive artificials to zero.
    let mut phase1 = vec![0.0; cols];
    for a in phase1.iter_mut().skip(m) {
        *a = 1.0;
    }
    tab.optimize(&phase1, &|_| true).map_err(|e| match e {
        LpError::Unbounded => LpError::Malformed("phase one unbounded".into()),
        other => other,
    })?;
    let infeas: f64 = (0..k).filter(|&i| tab.basis[i] >= m).map(|i| tab.rhs(i)).sum();
    let scale = 1.0 + c.iter().map(|x| x.abs()).fold(0.0, f64::max);
    if infeas > 1e-9 * scale {
        // The dual is infeasible: the primal has no finite optimum.
        return Err(LpError::Unbounded);
    }

    // Pivot remaining (zero-level) artificials out of the basis.
    let mut redundant = vec![false; k];
    for i in 0..k {
        if tab.basis[i] >= m {
            let mut best = None;
            let mut best_abs = 1e-9;
            for j in 0..m {
                let a = tab.at(i, j).abs();
                if a > best_abs && !tab.basis.contains(&j) {
                    best_abs = a;
                    best = Some(j);
                }
            }
            match best {
                Some(j) => tab.pivot(i, j),
                None => redundant[i] = true,
            }
        }
    }

    // Phase 2 on the dual objective b·w.
    let mut phase2 = vec![0.0; cols];
    for (j, con) in constraints.iter().enumerate() {
        phase2[j] = con.b;
    }
    tab.optimize(&phase2, &|j| j < m).map_err(|e| match e {
        LpError::Unbounded => LpError::Infeasible,
        other => other,
    })?;

    // Complementary slackness: basic dual columns are tight primal constraints.
    let active: Vec<usize> = (0..k).filter(|&i| !redundant[i] && tab.basis[i] < m).map(|i| tab.basis[i]).collect();
    let a_b = DMatrix::from_fn(active.len(), k, |r, col| constraints[active[r]].a[col]);
    let b_b = DVector::from_iterator(active.len(), active.iter().map(|&j| constraints[j].b));
    let x = if active.len() == k { a_b.clone().lu().solve(&b_b) } else { None };
    let x = match x {
        Some(x) => x,
        None => a_b.svd(true, true).solve(&b_b, 1e-12).map_err(|e| LpError::Malformed(e.to_string()))?,
    };
    let objective = c.iter().zip(x.iter()).map(|(ci, xi)| ci * xi).sum();
    Ok(LpSolution { x, objective })
}

/// Maximizes `c·x` subject to `constraints`.
pub fn maximize(c: &[f64], constraints: &[Constraint]) -> Result<LpSolution, LpError> {
    let neg: Vec<f64> = c.iter().map(|x| -x).collect();
    let mut sol = minimize(&neg, constraints)?;
    sol.objective = -sol.objective;
    Ok(sol)
}

/// Largest violation `max_i (a_i·x - b_i)` of a candidate point.
pub fn max_violation(x: &DVector<f64>, constraints: &[Constraint]) -> f64 {
    constraints
        .iter()
        .map(|con| con.a.iter().zip(x.iter()).map(|(a, xi)| a * xi).sum::<f64>() - con.b)
        .fold(f64::NEG_INFINITY, f64::max)
}
