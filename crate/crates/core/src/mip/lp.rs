//! LP relaxation solver: bounded-variable revised simplex with an explicit
//! basis inverse.
//!
//! Rows are `A x + s = b` with slack `s >= 0`. Rows whose slack would start
//! negative get an artificial column, and phase 1 drives the artificials to
//! zero. Pricing uses Devex reference weights. After a run of degenerate
//! pivots the bounds of the basic variables are widened by tiny random
//! amounts, restored when the phase ends; if pivots stay degenerate the
//! solver switches to Bland's rule (lowest index entering, lowest index
//! leaving among ties) until the objective moves again, which rules out
//! cycling.

use serde::{Deserialize, Serialize};

use super::instance::MipInstance;
use crate::rng::SplitMix64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpResult {
    pub status: LpStatus,
    /// Primal solution over the structural variables; present iff optimal.
    pub x: Option<Vec<f64>>,
    pub objective: Option<f64>,
    pub iterations: usize,
    /// Abstract work units spent (dense inner-loop operations), used by the
    /// deterministic solve clock.
    pub work: f64,
}

impl LpResult {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    fn terminal(status: LpStatus, iterations: usize, work: f64) -> Self {
        Self { status, x: None, objective: None, iterations, work }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpOptions {
    pub feas_tol: f64,
    pub opt_tol: f64,
    pub pivot_tol: f64,
    /// Defaults to `50 * (n + m)` when `None`.
    pub max_iterations: Option<usize>,
    pub refactor_every: usize,
    /// Consecutive degenerate pivots before the bounds are perturbed, and
    /// again before Bland's rule takes over.
    pub degenerate_switch: usize,
}

impl Default for LpOptions {
    fn default() -> Self {
        Self {
            feas_tol: 1e-7,
            opt_tol: 1e-7,
            pivot_tol: 1e-9,
            max_iterations: None,
            refactor_every: 100,
            degenerate_switch: 25,
        }
    }
}

pub fn solve_lp(inst: &MipInstance) -> LpResult {
    solve_lp_with(inst, &LpOptions::default())
}

pub fn solve_lp_with(inst: &MipInstance, opts: &LpOptions) -> LpResult {
    let mut lp = Simplex::new(inst, inst.lower(), inst.upper(), *opts);
    lp.run()
}

/// Solves the relaxation of `inst` with its variable bounds replaced by
/// `lower`/`upper` (used by branch-and-bound nodes).
pub fn solve_lp_with_bounds(inst: &MipInstance, lower: &[f64], upper: &[f64], opts: &LpOptions) -> LpResult {
    let mut lp = Simplex::new(inst, lower, upper, *opts);
    lp.run()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum NonBasic {
    Lower,
    Upper,
    Free,
}

enum Step {
    Optimal,
    Unbounded,
    Moved,
}

struct Simplex<'a> {
    inst: &'a MipInstance,
    opts: LpOptions,
    m: usize,
    n: usize,
    // structural columns in CSC form
    col_start: Vec<usize>,
    col_row: Vec<usize>,
    col_val: Vec<f64>,
    // artificial k sits on row art_row[k] with coefficient -1
    art_row: Vec<usize>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    cost: Vec<f64>,
    x: Vec<f64>,
    state: Vec<NonBasic>,
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    binv: Vec<f64>,
    // Devex reference weights
    weights: Vec<f64>,
    // bounds before perturbation, if perturbed in this phase
    saved_bounds: Option<(Vec<f64>, Vec<f64>)>,
    iterations: usize,
    since_refactor: usize,
    degenerate_run: usize,
    work: f64,
}

impl<'a> Simplex<'a> {
    fn new(inst: &'a MipInstance, lower: &[f64], upper: &[f64], opts: LpOptions) -> Self {
        let n = inst.num_vars();
        let m = inst.num_cons();
        let mut col_start = vec![0usize; n + 1];
        for &(_, col, _) in inst.triplets() {
            col_start[col + 1] += 1;
        }
        for j in 0..n {
            col_start[j + 1] += col_start[j];
        }
        let mut fill = col_start.clone();
        let mut col_row = vec![0usize; inst.nnz()];
        let mut col_val = vec![0.0; inst.nnz()];
        for &(row, col, val) in inst.triplets() {
            col_row[fill[col]] = row;
            col_val[fill[col]] = val;
            fill[col] += 1;
        }

        let mut lower: Vec<f64> = lower.to_vec();
        let mut upper: Vec<f64> = upper.to_vec();
        lower.extend(std::iter::repeat_n(0.0, m));
        upper.extend(std::iter::repeat_n(f64::INFINITY, m));

        let mut x = vec![0.0; n + m];
        let mut state = vec![NonBasic::Lower; n + m];
        for j in 0..n {
            let (lo, up) = (lower[j], upper[j]);
            if lo.is_finite() {
                x[j] = lo;
            } else if up.is_finite() {
                x[j] = up;
                state[j] = NonBasic::Upper;
            } else {
                state[j] = NonBasic::Free;
            }
        }
        let act = inst.activities(&x[..n]);

        let mut basis = Vec::with_capacity(m);
        let mut art_row = Vec::new();
        let mut is_basic = vec![false; n + m];
        let mut binv = vec![0.0; m * m];
        for i in 0..m {
            let residual = inst.rhs()[i] - act[i];
            if residual >= 0.0 {
                basis.push(n + i);
                is_basic[n + i] = true;
                x[n + i] = residual;
                binv[i * m + i] = 1.0;
            } else {
                let k = n + m + art_row.len();
                art_row.push(i);
                lower.push(0.0);
                upper.push(f64::INFINITY);
                x.push(-residual);
                state.push(NonBasic::Lower);
                is_basic.push(true);
                basis.push(k);
                binv[i * m + i] = -1.0;
            }
        }
        let total = x.len();
        let mut cost = vec![0.0; total];
        for c in cost.iter_mut().skip(n + m) {
            *c = 1.0;
        }

        Self {
            inst,
            opts,
            m,
            n,
            col_start,
            col_row,
            col_val,
            art_row,
            lower,
            upper,
            cost,
            x,
            state,
            basis,
            is_basic,
            binv,
            weights: vec![1.0; total],
            saved_bounds: None,
            iterations: 0,
            since_refactor: 0,
            degenerate_run: 0,
            work: 0.0,
        }
    }

    fn num_cols(&self) -> usize {
        self.x.len()
    }

    /// Calls `f(row, value)` for each nonzero of column `j`.
    fn for_col(&self, j: usize, mut f: impl FnMut(usize, f64)) {
        if j < self.n {
            for k in self.col_start[j]..self.col_start[j + 1] {
                f(self.col_row[k], self.col_val[k]);
            }
        } else if j < self.n + self.m {
            f(j - self.n, 1.0);
        } else {
            f(self.art_row[j - self.n - self.m], -1.0);
        }
    }

    fn max_iterations(&self) -> usize {
        self.opts.max_iterations.unwrap_or(50 * (self.n + self.m).max(1))
    }

    fn run(&mut self) -> LpResult {
        if !self.art_row.is_empty() {
            let step = self.optimize();
            self.unperturb();
            match step {
                Some(Step::Optimal) => {}
                Some(_) | None => {
                    return LpResult::terminal(LpStatus::IterationLimit, self.iterations, self.work)
                }
            }
            // a fresh inverse only when the updated one disagrees
            self.recompute_basic();
            if self.artificial_infeasibility() > self.opts.feas_tol && !self.refactor() {
                return LpResult::terminal(LpStatus::IterationLimit, self.iterations, self.work);
            }
            if self.artificial_infeasibility() > self.opts.feas_tol {
                return LpResult::terminal(LpStatus::Infeasible, self.iterations, self.work);
            }
            for j in self.n + self.m..self.num_cols() {
                self.upper[j] = 0.0;
                self.cost[j] = 0.0;
                if !self.is_basic[j] {
                    self.x[j] = 0.0;
                }
            }
        }
        for j in 0..self.n {
            self.cost[j] = self.inst.objective_coeffs()[j];
        }
        self.weights.fill(1.0);
        self.degenerate_run = 0;
        let step = self.optimize();
        self.unperturb();
        match step {
            Some(Step::Optimal) => {}
            Some(Step::Unbounded) => {
                return LpResult::terminal(LpStatus::Unbounded, self.iterations, self.work)
            }
            _ => return LpResult::terminal(LpStatus::IterationLimit, self.iterations, self.work),
        }
        self.recompute_basic();
        if !self.primal_feasible(&self.x[..self.n]) && !self.refactor() {
            return LpResult::terminal(LpStatus::IterationLimit, self.iterations, self.work);
        }
        let x: Vec<f64> = self.x[..self.n].to_vec();
        if !self.primal_feasible(&x) {
            log::warn!("simplex finished with a primal violation above tolerance");
            return LpResult::terminal(LpStatus::IterationLimit, self.iterations, self.work);
        }
        let objective = self.inst.objective_coeffs().iter().zip(&x).map(|(c, v)| c * v).sum();
        LpResult {
            status: LpStatus::Optimal,
            x: Some(x),
            objective: Some(objective),
            iterations: self.iterations,
            work: self.work,
        }
    }

    fn primal_feasible(&self, x: &[f64]) -> bool {
        let tol = self.opts.feas_tol;
        let bounds_ok = (0..self.n).all(|j| x[j] >= self.lower[j] - tol && x[j] <= self.upper[j] + tol);
        let act = self.inst.activities(x);
        bounds_ok && act.iter().zip(self.inst.rhs()).all(|(a, b)| *a <= b + tol)
    }

    /// Returns `None` on iteration cap or numerical failure.
    fn optimize(&mut self) -> Option<Step> {
        loop {
            if self.iterations >= self.max_iterations() {
                return None;
            }
            if self.since_refactor >= self.opts.refactor_every && !self.refactor() {
                return None;
            }
            if self.degenerate_run >= self.opts.degenerate_switch && self.saved_bounds.is_none() {
                self.perturb();
            }
            match self.iterate() {
                Some(Step::Moved) => continue,
                other => return other,
            }
        }
    }

    fn duals(&self) -> Vec<f64> {
        let m = self.m;
        let mut y = vec![0.0; m];
        for (i, &bv) in self.basis.iter().enumerate() {
            let cb = self.cost[bv];
            if cb != 0.0 {
                let row = &self.binv[i * m..(i + 1) * m];
                for (yk, r) in y.iter_mut().zip(row) {
                    *yk += cb * r;
                }
            }
        }
        y
    }

    fn reduced_cost(&self, j: usize, y: &[f64]) -> f64 {
        let mut d = self.cost[j];
        self.for_col(j, |row, val| d -= y[row] * val);
        d
    }

    fn iterate(&mut self) -> Option<Step> {
        let m = self.m;
        let tol = self.opts.opt_tol;
        let bland = self.degenerate_run >= self.opts.degenerate_switch;
        let y = self.duals();
        self.work += (m * m + self.inst.nnz() + self.num_cols()) as f64;

        // pricing
        let mut entering: Option<(usize, f64, f64)> = None; // (col, direction, |d|)
        for j in 0..self.num_cols() {
            if self.is_basic[j] || self.lower[j] == self.upper[j] {
                continue;
            }
            let d = self.reduced_cost(j, &y);
            let dir = match self.state[j] {
                NonBasic::Lower if d < -tol => 1.0,
                NonBasic::Upper if d > tol => -1.0,
                NonBasic::Free if d.abs() > tol => -d.signum(),
                _ => continue,
            };
            let score = d * d / self.weights[j];
            match entering {
                None => entering = Some((j, dir, score)),
                Some((_, _, best)) if !bland && score > best => entering = Some((j, dir, score)),
                _ => {}
            }
            if bland {
                break;
            }
        }
        let Some((q, dir, _)) = entering else {
            return Some(Step::Optimal);
        };

        // alpha = B^-1 a_q
        let mut alpha = vec![0.0; m];
        self.for_col(q, |row, val| {
            for i in 0..m {
                alpha[i] += self.binv[i * m + row] * val;
            }
        });

        // ratio test
        let mut t_best = if self.lower[q].is_finite() && self.upper[q].is_finite() {
            self.upper[q] - self.lower[q]
        } else {
            f64::INFINITY
        };
        let mut leave: Option<usize> = None;
        for i in 0..m {
            let a = alpha[i];
            if a.abs() <= self.opts.pivot_tol {
                continue;
            }
            let delta = -dir * a;
            let bv = self.basis[i];
            let limit = if delta < 0.0 {
                if !self.lower[bv].is_finite() {
                    continue;
                }
                ((self.x[bv] - self.lower[bv]) / -delta).max(0.0)
            } else {
                if !self.upper[bv].is_finite() {
                    continue;
                }
                ((self.upper[bv] - self.x[bv]) / delta).max(0.0)
            };
            let better = if limit < t_best - 1e-12 {
                true
            } else if limit <= t_best + 1e-12 {
                match leave {
                    Some(r) if bland => bv < self.basis[r],
                    Some(r) => a.abs() > alpha[r].abs(),
                    // equal to a bound flip: take the basis change
                    None => true,
                }
            } else {
                false
            };
            if better {
                t_best = limit;
                leave = Some(i);
            }
        }
        if !t_best.is_finite() {
            return Some(Step::Unbounded);
        }

        self.iterations += 1;
        self.since_refactor += 1;
        if t_best <= 1e-12 {
            self.degenerate_run += 1;
        } else {
            self.degenerate_run = 0;
        }

        self.x[q] += dir * t_best;
        for i in 0..m {
            let bv = self.basis[i];
            self.x[bv] -= dir * alpha[i] * t_best;
        }

        match leave {
            None => {
                // bound flip
                if dir > 0.0 {
                    self.x[q] = self.upper[q];
                    self.state[q] = NonBasic::Upper;
                } else {
                    self.x[q] = self.lower[q];
                    self.state[q] = NonBasic::Lower;
                }
            }
            Some(r) => {
                let out = self.basis[r];
                let delta = -dir * alpha[r];
                if delta < 0.0 {
                    self.x[out] = self.lower[out];
                    self.state[out] = NonBasic::Lower;
                } else {
                    self.x[out] = self.upper[out];
                    self.state[out] = NonBasic::Upper;
                }
                let piv = alpha[r];
                self.update_weights(q, out, r, piv);
                self.is_basic[out] = false;
                self.is_basic[q] = true;
                self.basis[r] = q;

                for k in 0..m {
                    self.binv[r * m + k] /= piv;
                }
                for i in 0..m {
                    if i == r || alpha[i] == 0.0 {
                        continue;
                    }
                    let f = alpha[i];
                    for k in 0..m {
                        self.binv[i * m + k] -= f * self.binv[r * m + k];
                    }
                }
                self.work += (m * m) as f64;
            }
        }
        Some(Step::Moved)
    }

    /// Widens the finite bounds of every basic variable by a random amount
    /// in `[1, 2) * 1e-8 * max(1, |bound|)`, so degenerate pivots move.
    fn perturb(&mut self) {
        self.saved_bounds = Some((self.lower.clone(), self.upper.clone()));
        let mut rng = SplitMix64::new(self.iterations as u64);
        for &bv in &self.basis {
            if self.lower[bv].is_finite() {
                self.lower[bv] -= (1.0 + rng.next_f64()) * 1e-8 * self.lower[bv].abs().max(1.0);
            }
            if self.upper[bv].is_finite() {
                self.upper[bv] += (1.0 + rng.next_f64()) * 1e-8 * self.upper[bv].abs().max(1.0);
            }
        }
        self.degenerate_run = 0;
    }

    /// Restores the original bounds and moves nonbasic variables back onto
    /// them.
    fn unperturb(&mut self) {
        let Some((lower, upper)) = self.saved_bounds.take() else {
            return;
        };
        self.lower = lower;
        self.upper = upper;
        for j in 0..self.num_cols() {
            if self.is_basic[j] {
                continue;
            }
            match self.state[j] {
                NonBasic::Lower => self.x[j] = self.lower[j],
                NonBasic::Upper => self.x[j] = self.upper[j],
                NonBasic::Free => {}
            }
        }
        self.recompute_basic();
    }

    /// Devex update from the pivot row, before `B^-1` changes.
    fn update_weights(&mut self, q: usize, out: usize, r: usize, piv: f64) {
        let m = self.m;
        let wq = self.weights[q];
        for j in 0..self.num_cols() {
            if self.is_basic[j] || j == q || self.lower[j] == self.upper[j] {
                continue;
            }
            let mut a = 0.0;
            self.for_col(j, |row, val| a += self.binv[r * m + row] * val);
            if a != 0.0 {
                let ratio = a / piv;
                self.weights[j] = self.weights[j].max(ratio * ratio * wq);
            }
        }
        self.weights[out] = (wq / (piv * piv)).max(1.0);
        self.work += (self.inst.nnz() + self.num_cols()) as f64;
    }

    /// Recomputes `B^-1` from scratch and the basic values from the nonbasic
    /// ones. Returns false if the basis matrix is numerically singular.
    ///
    /// Slack and artificial columns are signed unit vectors, so after
    /// permutation `B = [[D, A_U], [0, A_W]]` with `D` diagonal on the rows
    /// they cover. Only the structural block `A_W` is inverted densely.
    fn refactor(&mut self) -> bool {
        let m = self.m;
        self.since_refactor = 0;
        if m == 0 {
            return true;
        }
        // unit position and sign covering each row
        let mut unit: Vec<Option<(usize, f64)>> = vec![None; m];
        let mut structural = Vec::new();
        for (i, &bv) in self.basis.iter().enumerate() {
            let (row, sign) = if bv < self.n {
                structural.push(i);
                continue;
            } else if bv < self.n + self.m {
                (bv - self.n, 1.0)
            } else {
                (self.art_row[bv - self.n - self.m], -1.0)
            };
            if unit[row].is_some() {
                log::warn!("singular basis during refactorization");
                return false;
            }
            unit[row] = Some((i, sign));
        }
        let free_rows: Vec<usize> = (0..m).filter(|&r| unit[r].is_none()).collect();
        let s = structural.len();
        debug_assert_eq!(free_rows.len(), s);
        let mut w_index = vec![usize::MAX; m];
        for (k, &r) in free_rows.iter().enumerate() {
            w_index[r] = k;
        }
        let mut block = vec![0.0; s * s];
        for (c, &i) in structural.iter().enumerate() {
            self.for_col(self.basis[i], |row, val| {
                if w_index[row] != usize::MAX {
                    block[w_index[row] * s + c] = val;
                }
            });
        }
        let Some(block_inv) = invert_dense(block, s) else {
            log::warn!("singular basis during refactorization");
            return false;
        };

        let mut inv = vec![0.0; m * m];
        for (c, &i) in structural.iter().enumerate() {
            for (k, &r) in free_rows.iter().enumerate() {
                inv[i * m + r] = block_inv[c * s + k];
            }
        }
        let mut nnz = 0;
        for (row, cover) in unit.iter().enumerate() {
            if let Some((i, sign)) = *cover {
                inv[i * m + row] = sign;
            }
        }
        for (c, &i) in structural.iter().enumerate() {
            self.for_col(self.basis[i], |row, val| {
                nnz += 1;
                if let Some((u, sign)) = unit[row] {
                    for (k, &r) in free_rows.iter().enumerate() {
                        inv[u * m + r] -= sign * val * block_inv[c * s + k];
                    }
                }
            });
        }
        self.binv = inv;
        self.work += (s * s * s + nnz * s + m * m) as f64;
        self.recompute_basic();
        true
    }

    /// Basic values from the nonbasic ones through the current inverse.
    fn recompute_basic(&mut self) {
        let m = self.m;
        let mut rhs = self.inst.rhs().to_vec();
        for j in 0..self.num_cols() {
            if !self.is_basic[j] && self.x[j] != 0.0 {
                let xj = self.x[j];
                self.for_col(j, |row, val| rhs[row] -= val * xj);
            }
        }
        for i in 0..m {
            let v: f64 = (0..m).map(|k| self.binv[i * m + k] * rhs[k]).sum();
            let bv = self.basis[i];
            self.x[bv] = v;
        }
        self.work += (m * m + self.inst.nnz()) as f64;
    }

    fn artificial_infeasibility(&self) -> f64 {
        (self.n + self.m..self.num_cols()).map(|j| self.x[j]).fold(0.0, f64::max)
    }
}

/// Gauss-Jordan inverse of a row-major `s x s` matrix with partial pivoting.
fn invert_dense(mut mat: Vec<f64>, s: usize) -> Option<Vec<f64>> {
    let mut inv = vec![0.0; s * s];
    for i in 0..s {
        inv[i * s + i] = 1.0;
    }
    for col in 0..s {
        let mut piv = col;
        let mut best = mat[col * s + col].abs();
        for r in col + 1..s {
            let v = mat[r * s + col].abs();
            if v > best {
                best = v;
                piv = r;
            }
        }
        if best < 1e-12 {
            return None;
        }
        if piv != col {
            for k in 0..s {
                mat.swap(col * s + k, piv * s + k);
                inv.swap(col * s + k, piv * s + k);
            }
        }
        let p = mat[col * s + col];
        for k in 0..s {
            mat[col * s + k] /= p;
            inv[col * s + k] /= p;
        }
        for r in 0..s {
            if r == col {
                continue;
            }
            let f = mat[r * s + col];
            if f != 0.0 {
                for k in 0..s {
                    mat[r * s + k] -= f * mat[col * s + k];
                    inv[r * s + k] -= f * inv[col * s + k];
                }
            }
        }
    }
    Some(inv)
}
