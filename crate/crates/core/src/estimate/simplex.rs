//! Dense two-phase revised simplex for `min cᵀx  s.t.  Ax ≤ b, x ≥ 0`.
//!
//! The basis inverse is kept explicitly and updated with elementary row
//! operations, with a fresh factorization every [`REFACTOR_EVERY`] pivots and
//! at termination. Pricing is most-negative reduced cost; after a degenerate
//! pivot the solver switches to Bland's rule (lowest index enters, lowest
//! basic index leaves on ties) until the objective moves again, which rules
//! out cycling.

use nalgebra::DMatrix;

const REFACTOR_EVERY: usize = 50;
const PIVOT_TOL: f64 = 1e-11;

#[derive(Clone, Debug)]
pub struct LpProblem {
    pub m: usize,
    pub n: usize,
    /// Row-major `m × n`.
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    PivotLimit,
}

/// Residuals of the optimality conditions at the returned point.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LpCertificate {
    /// `max((Ax - b)₊, (-x)₊)`
    pub primal_infeasibility: f64,
    /// Most negative reduced cost over structural and slack columns, negated.
    pub dual_infeasibility: f64,
    /// `Σ |value_j · reduced_cost_j|` over structural and slack columns.
    pub complementarity: f64,
}

impl LpCertificate {
    pub fn max_residual(&self) -> f64 {
        self.primal_infeasibility.max(self.dual_infeasibility).max(self.complementarity)
    }
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    /// Row multipliers `y ≤ 0` of `Ax ≤ b`; `c - Aᵀy ≥ 0` at optimality.
    pub duals: Vec<f64>,
    pub pivots: usize,
    pub certificate: LpCertificate,
}

struct Tableau<'p> {
    prob: &'p LpProblem,
    /// +1 or -1: rows with negative rhs are negated so that rhs ≥ 0.
    sign: Vec<f64>,
    /// Column index of each row's artificial variable, if any.
    n_art: usize,
    art_row: Vec<usize>,
    basis: Vec<usize>,
    binv: Vec<f64>,
    xb: Vec<f64>,
    rhs: Vec<f64>,
    pivots: usize,
    max_pivots: usize,
    tol: f64,
}

impl<'p> Tableau<'p> {
    fn new(prob: &'p LpProblem, tol: f64, max_pivots: usize) -> Self {
        let m = prob.m;
        let sign: Vec<f64> = prob.b.iter().map(|&b| if b < 0.0 { -1.0 } else { 1.0 }).collect();
        let rhs: Vec<f64> = prob.b.iter().zip(&sign).map(|(b, s)| b * s).collect();
        let mut art_row = Vec::new();
        let mut basis = Vec::with_capacity(m);
        for i in 0..m {
            if sign[i] < 0.0 {
                basis.push(prob.n + m + art_row.len());
                art_row.push(i);
            } else {
                basis.push(prob.n + i);
            }
        }
        let mut binv = vec![0.0; m * m];
        for i in 0..m {
            binv[i * m + i] = 1.0;
        }
        Self {
            prob,
            sign,
            n_art: art_row.len(),
            art_row,
            basis,
            binv,
            xb: rhs.clone(),
            rhs,
            pivots: 0,
            max_pivots,
            tol,
        }
    }

    fn n_cols(&self) -> usize {
        self.prob.n + self.prob.m + self.n_art
    }

    fn is_artificial(&self, j: usize) -> bool {
        j >= self.prob.n + self.prob.m
    }

    /// Column `j` of the sign-adjusted constraint matrix `[A | I | art]`.
    fn column(&self, j: usize, out: &mut [f64]) {
        let (m, n) = (self.prob.m, self.prob.n);
        out.iter_mut().for_each(|v| *v = 0.0);
        if j < n {
            for i in 0..m {
                out[i] = self.sign[i] * self.prob.a[i * n + j];
            }
        } else if j < n + m {
            out[j - n] = self.sign[j - n];
        } else {
            out[self.art_row[j - n - m]] = 1.0;
        }
    }

    fn duals(&self, cost: &dyn Fn(usize) -> f64) -> Vec<f64> {
        let m = self.prob.m;
        let mut y = vec![0.0; m];
        for (r, &bj) in self.basis.iter().enumerate() {
            let cb = cost(bj);
            if cb != 0.0 {
                for (yi, &v) in y.iter_mut().zip(&self.binv[r * m..(r + 1) * m]) {
                    *yi += cb * v;
                }
            }
        }
        y
    }

    fn reduced_cost(&self, j: usize, y: &[f64], cost: &dyn Fn(usize) -> f64, col: &mut [f64]) -> f64 {
        self.column(j, col);
        cost(j) - y.iter().zip(col.iter()).map(|(a, b)| a * b).sum::<f64>()
    }

    fn refactor(&mut self) -> bool {
        let m = self.prob.m;
        let mut b = DMatrix::<f64>::zeros(m, m);
        let mut col = vec![0.0; m];
        for (r, &j) in self.basis.iter().enumerate() {
            self.column(j, &mut col);
            for i in 0..m {
                b[(i, r)] = col[i];
            }
        }
        let Some(inv) = b.try_inverse() else { return false };
        for i in 0..m {
            for k in 0..m {
                self.binv[i * m + k] = inv[(i, k)];
            }
        }
        for i in 0..m {
            self.xb[i] = (0..m).map(|k| self.binv[i * m + k] * self.rhs[k]).sum();
        }
        true
    }

    fn pivot(&mut self, r: usize, entering: usize, w: &[f64], step: f64) {
        let m = self.prob.m;
        for i in 0..m {
            self.xb[i] -= step * w[i];
        }
        self.xb[r] = step;
        let wr = w[r];
        for k in 0..m {
            self.binv[r * m + k] /= wr;
        }
        let (before, rest) = self.binv.split_at_mut(r * m);
        let (prow, after) = rest.split_at_mut(m);
        for (i, row) in before.chunks_exact_mut(m).chain(after.chunks_exact_mut(m)).enumerate() {
            let i = if i < r { i } else { i + 1 };
            let f = w[i];
            if f != 0.0 {
                for (v, &p) in row.iter_mut().zip(prow.iter()) {
                    *v -= f * p;
                }
            }
        }
        self.basis[r] = entering;
        self.pivots += 1;
        if self.pivots.is_multiple_of(REFACTOR_EVERY) {
            self.refactor();
        }
    }

    /// Runs simplex iterations for `cost`, never letting columns rejected by
    /// `allowed` enter.
    fn optimize(&mut self, cost: &dyn Fn(usize) -> f64, allowed: &dyn Fn(usize) -> bool) -> LpStatus {
        let m = self.prob.m;
        let mut col = vec![0.0; m];
        let mut w = vec![0.0; m];
        let mut bland = false;
        let mut in_basis = vec![false; self.n_cols()];
        loop {
            in_basis.iter_mut().for_each(|v| *v = false);
            for &j in &self.basis {
                in_basis[j] = true;
            }
            let y = self.duals(cost);
            let mut entering = None;
            let mut best = -self.tol;
            for j in 0..self.n_cols() {
                if in_basis[j] || !allowed(j) {
                    continue;
                }
                let rc = self.reduced_cost(j, &y, cost, &mut col);
                if rc < best {
                    entering = Some(j);
                    if bland {
                        break;
                    }
                    best = rc;
                }
            }
            let Some(j) = entering else { return LpStatus::Optimal };
            if self.pivots >= self.max_pivots {
                return LpStatus::PivotLimit;
            }

            self.column(j, &mut col);
            for i in 0..m {
                w[i] = (0..m).map(|k| self.binv[i * m + k] * col[k]).sum();
            }
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..m {
                if w[i] > PIVOT_TOL {
                    let ratio = self.xb[i].max(0.0) / w[i];
                    let better = match leave {
                        None => true,
                        Some((r, best)) => {
                            ratio < best - 1e-12 * best.abs().max(1.0)
                                || (ratio <= best + 1e-12 * best.abs().max(1.0) && self.basis[i] < self.basis[r])
                        }
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((r, step)) = leave else { return LpStatus::Unbounded };
            bland = step <= self.tol;
            self.pivot(r, j, &w, step);
        }
    }

    /// After phase one, replaces artificial variables still basic at level
    /// zero by structural or slack columns.
    fn evict_artificials(&mut self) {
        let m = self.prob.m;
        let mut col = vec![0.0; m];
        let mut w = vec![0.0; m];
        for r in 0..m {
            if !self.is_artificial(self.basis[r]) {
                continue;
            }
            for j in 0..(self.prob.n + m) {
                if self.basis.contains(&j) {
                    continue;
                }
                self.column(j, &mut col);
                for i in 0..m {
                    w[i] = (0..m).map(|k| self.binv[i * m + k] * col[k]).sum();
                }
                if w[r].abs() > 1e-9 {
                    let step = self.xb[r] / w[r];
                    self.pivot(r, j, &w, step);
                    break;
                }
            }
        }
    }

    /// Structural values followed by slack values.
    fn primal(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.prob.n + self.prob.m];
        for (r, &j) in self.basis.iter().enumerate() {
            if j < v.len() {
                v[j] = self.xb[r];
            }
        }
        v
    }
}

/// Solves the LP. `tol` is the feasibility/optimality tolerance.
pub fn solve(prob: &LpProblem, tol: f64, max_pivots: usize) -> LpSolution {
    assert_eq!(prob.a.len(), prob.m * prob.n);
    assert_eq!(prob.b.len(), prob.m);
    assert_eq!(prob.c.len(), prob.n);
    let (m, n) = (prob.m, prob.n);
    let mut tab = Tableau::new(prob, tol, max_pivots);

    if tab.n_art > 0 {
        let first_art = n + m;
        let phase1_cost = move |j: usize| if j >= first_art { 1.0 } else { 0.0 };
        let status = tab.optimize(&phase1_cost, &|_| true);
        if status == LpStatus::PivotLimit {
            return finish(&mut tab, LpStatus::PivotLimit);
        }
        tab.refactor();
        let infeasibility: f64 = tab.basis.iter().zip(&tab.xb).filter(|(&j, _)| j >= first_art).map(|(_, &x)| x).sum();
        let scale = 1.0 + prob.b.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        if infeasibility > tol * scale {
            return finish(&mut tab, LpStatus::Infeasible);
        }
        tab.evict_artificials();
    }

    let cost = |j: usize| if j < n { prob.c[j] } else { 0.0 };
    let status = tab.optimize(&cost, &|j| j < n + m);
    finish(&mut tab, status)
}

fn finish(tab: &mut Tableau<'_>, status: LpStatus) -> LpSolution {
    let prob = tab.prob;
    let (m, n) = (prob.m, prob.n);
    tab.refactor();
    let values = tab.primal();
    let x: Vec<f64> = values[..n].iter().map(|&v| v.max(0.0)).collect();
    let objective = x.iter().zip(&prob.c).map(|(a, b)| a * b).sum();

    let cost = |j: usize| if j < n { prob.c[j] } else { 0.0 };
    let y = tab.duals(&cost);
    let mut col = vec![0.0; m];
    let mut cert = LpCertificate::default();
    for i in 0..m {
        let ax: f64 = (0..n).map(|j| prob.a[i * n + j] * x[j]).sum();
        cert.primal_infeasibility = cert.primal_infeasibility.max(ax - prob.b[i]);
    }
    for (j, &v) in values.iter().enumerate() {
        cert.primal_infeasibility = cert.primal_infeasibility.max(-v);
        let rc = tab.reduced_cost(j, &y, &cost, &mut col);
        cert.dual_infeasibility = cert.dual_infeasibility.max(-rc);
        cert.complementarity += (v * rc).abs();
    }
    let duals = y.iter().zip(&tab.sign).map(|(v, s)| v * s).collect();
    LpSolution { status, x, objective, duals, pivots: tab.pivots, certificate: cert }
}
