//! Dense two-phase primal simplex.
//!
//! Columns that are identical in every row and in the objective are merged
//! before the tableau is built: the full-joint programs have one such group
//! per (observed cell, objective coefficient), so this shrinks millions of
//! profile columns to a few hundred.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::program::LinearProgram;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Min,
    Max,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    /// Phase-one objective above this means the rows are inconsistent.
    pub feasibility_tol: f64,
    /// Reduced costs above `-optimality_tol` count as nonnegative.
    pub optimality_tol: f64,
    /// Smallest magnitude accepted as a pivot element.
    pub pivot_tol: f64,
    /// Largest row violation tolerated in the returned point.
    pub residual_tol: f64,
    /// Merge duplicate columns before solving.
    pub presolve: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            feasibility_tol: 1e-9,
            optimality_tol: 1e-9,
            pivot_tol: 1e-11,
            residual_tol: 1e-7,
            presolve: true,
        }
    }
}

impl SolverOptions {
    /// Tolerances loosened to the precision of `T`.
    pub fn for_scalar<T: Scalar>() -> Self {
        let eps = T::epsilon().to_f64_lossy();
        let d = Self::default();
        SolverOptions {
            feasibility_tol: d.feasibility_tol.max(eps * 64.0),
            optimality_tol: d.optimality_tol.max(eps * 64.0),
            pivot_tol: d.pivot_tol.max(eps * 8.0),
            residual_tol: d.residual_tol.max(eps * 1024.0),
            presolve: true,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, serde::Serialize)]
pub struct LpDiagnostics {
    pub rows: usize,
    pub columns: usize,
    /// Columns left after merging duplicates.
    pub unique_columns: usize,
    /// Rows dropped as linearly dependent after phase one.
    pub redundant_rows: usize,
    pub phase1_iterations: usize,
    pub phase2_iterations: usize,
    /// Largest row violation of the returned point.
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution<T> {
    pub status: LpStatus,
    /// Optimal objective value; zero unless `status` is optimal.
    pub value: T,
    /// Optimal point over the original columns; empty unless optimal.
    pub witness: Vec<T>,
    pub diagnostics: LpDiagnostics,
}

/// Solves `min/max c.x s.t. A x = b, x >= 0`.
pub fn solve_lp<T: Scalar>(lp: &LinearProgram<T>, sense: Sense, options: &SolverOptions) -> Result<LpSolution<T>> {
    let n = lp.num_vars();
    let m = lp.num_rows();
    for row in &lp.rows {
        if row.coeffs.iter().any(|&(j, a)| j >= n || !a.is_finite()) || !row.rhs.is_finite() {
            return Err(Error::Numerical("constraint row has an out-of-range or non-finite entry".into()));
        }
    }
    if lp.objective.iter().any(|c| !c.is_finite()) {
        return Err(Error::Numerical("objective has a non-finite entry".into()));
    }

    // Column-major view, merging duplicates.
    let mut columns: Vec<Vec<(usize, T)>> = vec![Vec::new(); n];
    for (i, row) in lp.rows.iter().enumerate() {
        for &(j, a) in &row.coeffs {
            if a != T::zero() {
                columns[j].push((i, a));
            }
        }
    }
    let mut representative: Vec<usize> = Vec::new();
    if options.presolve {
        let mut seen: HashMap<(Vec<(usize, u64)>, u64), usize> = HashMap::new();
        for j in 0..n {
            let mut col = columns[j].clone();
            col.sort_by_key(|e| e.0);
            let key = (
                col.iter().map(|&(i, a)| (i, a.to_f64_lossy().to_bits())).collect(),
                lp.objective[j].to_f64_lossy().to_bits(),
            );
            let next = representative.len();
            if *seen.entry(key).or_insert(next) == next {
                representative.push(j);
            }
        }
    } else {
        representative = (0..n).collect();
    }
    let k = representative.len();

    let sign = match sense {
        Sense::Min => T::one(),
        Sense::Max => -T::one(),
    };
    let cost: Vec<T> = representative.iter().map(|&j| sign * lp.objective[j]).collect();
    let mut tableau = Tableau::new(m, k, options);
    for (c, &j) in representative.iter().enumerate() {
        for &(i, a) in &columns[j] {
            tableau.set(i, c, a);
        }
    }
    for (i, row) in lp.rows.iter().enumerate() {
        tableau.set_rhs(i, row.rhs);
    }
    let mut diagnostics = LpDiagnostics {
        rows: m,
        columns: n,
        unique_columns: k,
        ..LpDiagnostics::default()
    };

    let status = tableau.solve(&cost, &mut diagnostics)?;
    if status != LpStatus::Optimal {
        return Ok(LpSolution {
            status,
            value: T::zero(),
            witness: Vec::new(),
            diagnostics,
        });
    }
    let reduced = tableau.primal();
    let mut x = vec![T::zero(); n];
    for (c, &j) in representative.iter().enumerate() {
        x[j] = reduced[c];
    }
    let residual = lp.residual(&x);
    diagnostics.residual = residual.to_f64_lossy();
    if residual.to_f64_lossy() > options.residual_tol {
        return Err(Error::Numerical(format!(
            "simplex solution violates the constraints by {:.3e}",
            residual.to_f64_lossy()
        )));
    }
    Ok(LpSolution {
        status,
        value: lp.value(&x),
        witness: x,
        diagnostics,
    })
}

/// Row-major tableau `[A | I | b]` with one artificial column per row.
struct Tableau<T> {
    m: usize,
    n: usize,
    width: usize,
    data: Vec<T>,
    basis: Vec<usize>,
    live: Vec<bool>,
    feasibility_tol: T,
    optimality_tol: T,
    pivot_tol: T,
}

impl<T: Scalar> Tableau<T> {
    fn new(m: usize, n: usize, options: &SolverOptions) -> Self {
        let width = n + m + 1;
        let mut data = vec![T::zero(); m * width];
        for i in 0..m {
            data[i * width + n + i] = T::one();
        }
        Tableau {
            m,
            n,
            width,
            data,
            basis: (0..m).map(|i| n + i).collect(),
            live: vec![true; m],
            feasibility_tol: T::lit(options.feasibility_tol),
            optimality_tol: T::lit(options.optimality_tol),
            pivot_tol: T::lit(options.pivot_tol),
        }
    }

    fn at(&self, i: usize, j: usize) -> T {
        self.data[i * self.width + j]
    }

    fn set(&mut self, i: usize, j: usize, a: T) {
        self.data[i * self.width + j] = a;
    }

    fn rhs(&self, i: usize) -> T {
        self.at(i, self.width - 1)
    }

    fn set_rhs(&mut self, i: usize, b: T) {
        let w = self.width;
        self.data[i * w + w - 1] = b;
    }

    fn solve(&mut self, cost: &[T], diag: &mut LpDiagnostics) -> Result<LpStatus> {
        // Nonnegative right-hand sides keep the artificial basis feasible.
        for i in 0..self.m {
            if self.rhs(i) < T::zero() {
                let w = self.width;
                for j in 0..w {
                    if j == self.n + i {
                        continue;
                    }
                    self.data[i * w + j] = -self.data[i * w + j];
                }
            }
        }

        // Phase one: minimize the sum of artificials.
        let mut phase1 = vec![T::zero(); self.n + self.m];
        for c in phase1.iter_mut().skip(self.n) {
            *c = T::one();
        }
        let mut z = self.reduced_costs(&phase1);
        let (status, iters) = self.iterate(&mut z, self.n + self.m)?;
        diag.phase1_iterations = iters;
        debug_assert_eq!(status, LpStatus::Optimal);
        let infeasibility = -z[self.width - 1];
        if infeasibility > self.feasibility_tol * T::from_usize(self.m.max(1)).unwrap() {
            return Ok(LpStatus::Infeasible);
        }

        // Drive remaining artificials out of the basis or drop their rows.
        for i in 0..self.m {
            if self.basis[i] < self.n {
                continue;
            }
            let pivot = (0..self.n)
                .filter(|&j| self.at(i, j).abs() > self.pivot_tol)
                .max_by(|&a, &b| {
                    self.at(i, a)
                        .abs()
                        .partial_cmp(&self.at(i, b).abs())
                        .unwrap_or(std::cmp::Ordering::Equal)
                        .then(b.cmp(&a))
                });
            match pivot {
                Some(j) => self.pivot(i, j, None),
                None => {
                    self.live[i] = false;
                    diag.redundant_rows += 1;
                }
            }
        }

        // Phase two over the original columns only.
        let mut full_cost = vec![T::zero(); self.n + self.m];
        full_cost[..self.n].copy_from_slice(cost);
        let mut z = self.reduced_costs(&full_cost);
        let (status, iters) = self.iterate(&mut z, self.n)?;
        diag.phase2_iterations = iters;
        Ok(status)
    }

    /// `z_j = c_j - c_B B^-1 A_j`, with `-c_B x_B` in the last slot.
    fn reduced_costs(&self, cost: &[T]) -> Vec<T> {
        let mut z = vec![T::zero(); self.width];
        z[..cost.len()].copy_from_slice(cost);
        for i in 0..self.m {
            if !self.live[i] {
                continue;
            }
            let cb = cost[self.basis[i]];
            if cb == T::zero() {
                continue;
            }
            let row = &self.data[i * self.width..(i + 1) * self.width];
            for (zj, &a) in z.iter_mut().zip(row) {
                *zj -= cb * a;
            }
        }
        z
    }

    /// Pivots until optimal or unbounded; only columns below `limit` may
    /// enter.
    fn iterate(&mut self, z: &mut [T], limit: usize) -> Result<(LpStatus, usize)> {
        let bland_after = 10 * (self.m + limit).max(1);
        let max_iters = 50 * (self.m + limit).max(1) + 10_000;
        let mut iters = 0;
        loop {
            let bland = iters >= bland_after;
            let entering = if bland {
                (0..limit).find(|&j| z[j] < -self.optimality_tol)
            } else {
                let mut best: Option<usize> = None;
                for j in 0..limit {
                    if z[j] < -self.optimality_tol && best.is_none_or(|b| z[j] < z[b]) {
                        best = Some(j);
                    }
                }
                best
            };
            let Some(j) = entering else {
                return Ok((LpStatus::Optimal, iters));
            };
            let mut leave: Option<(usize, T)> = None;
            for i in 0..self.m {
                if !self.live[i] {
                    continue;
                }
                let a = self.at(i, j);
                if a <= self.pivot_tol {
                    continue;
                }
                let ratio = self.rhs(i).max(T::zero()) / a;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((r, best)) => {
                        let tie = (ratio - best).abs() <= self.pivot_tol * (T::one() + best.abs());
                        if ratio < best && !tie || tie && self.basis[i] < self.basis[r] {
                            Some((i, ratio))
                        } else {
                            Some((r, best))
                        }
                    }
                };
            }
            let Some((i, _)) = leave else {
                return Ok((LpStatus::Unbounded, iters));
            };
            self.pivot(i, j, Some(z));
            iters += 1;
            if iters > max_iters {
                return Err(Error::Numerical(format!("simplex did not converge in {max_iters} pivots")));
            }
        }
    }

    fn pivot(&mut self, r: usize, j: usize, z: Option<&mut [T]>) {
        let w = self.width;
        let p = self.at(r, j);
        for v in &mut self.data[r * w..(r + 1) * w] {
            *v /= p;
        }
        let (before, rest) = self.data.split_at_mut(r * w);
        let (prow, after) = rest.split_at_mut(w);
        let eliminate = |row: &mut [T]| {
            let f = row[j];
            if f != T::zero() {
                for (x, &y) in row.iter_mut().zip(prow.iter()) {
                    *x -= f * y;
                }
                row[j] = T::zero();
            }
        };
        for row in before.chunks_mut(w).chain(after.chunks_mut(w)) {
            eliminate(row);
        }
        if let Some(z) = z {
            eliminate(z);
        }
        self.basis[r] = j;
    }

    fn primal(&self) -> Vec<T> {
        let mut x = vec![T::zero(); self.n];
        for i in 0..self.m {
            if self.live[i] && self.basis[i] < self.n {
                x[self.basis[i]] = self.rhs(i).max(T::zero());
            }
        }
        x
    }
}
