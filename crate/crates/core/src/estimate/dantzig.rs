//! Dantzig selector, solved one row at a time.
//!
//! Both `‖A‖₁` and `‖AĈ + S‖∞` separate over the rows of `A`, so the matrix
//! problem splits into `d` independent LPs
//!
//! ```text
//! min ‖a‖₁  s.t.  ‖Ĉ a + sᵢ‖∞ ≤ λ
//! ```
//!
//! each written with `a = u - v`, `u, v ≥ 0`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::simplex::{self, LpProblem, LpSolution, LpStatus};
use super::{EstimateResult, Method, SolveStatus};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::simulate::SufficientStats;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DantzigConfig {
    pub lambda: f64,
    pub lp_tol: f64,
    /// Pivot budget per row; `None` means `10·d²`.
    pub max_pivots: Option<usize>,
}

impl DantzigConfig {
    pub fn new(lambda: f64) -> Self {
        Self { lambda, lp_tol: 1e-9, max_pivots: None }
    }
}

/// The LP for row `i`: variables `[u; v]`, constraints `Ĉ(u - v) ≤ λ - sᵢ`
/// and `-Ĉ(u - v) ≤ λ + sᵢ`.
pub(crate) fn row_problem(stats: &SufficientStats, row: usize, lambda: f64) -> LpProblem {
    let d = stats.dim();
    let c = &stats.c_hat;
    let s = stats.s_hat.row(row);
    let n = 2 * d;
    let mut a = vec![0.0; 2 * d * n];
    let mut b = vec![0.0; 2 * d];
    for k in 0..d {
        for j in 0..d {
            let v = c[(k, j)];
            a[k * n + j] = v;
            a[k * n + d + j] = -v;
            a[(d + k) * n + j] = -v;
            a[(d + k) * n + d + j] = v;
        }
        b[k] = lambda - s[k];
        b[d + k] = lambda + s[k];
    }
    LpProblem { m: 2 * d, n, a, b, c: vec![1.0; n] }
}

pub fn dantzig(stats: &SufficientStats, cfg: &DantzigConfig) -> Result<EstimateResult> {
    if !(cfg.lambda >= 0.0 && cfg.lambda.is_finite()) {
        return Err(Error::InvalidArgument(format!("lambda must be ≥ 0, got {}", cfg.lambda)));
    }
    if !(cfg.lp_tol > 0.0) {
        return Err(Error::InvalidArgument(format!("lp_tol must be > 0, got {}", cfg.lp_tol)));
    }
    let d = stats.dim();
    let max_pivots = cfg.max_pivots.unwrap_or(10 * d * d).max(1);
    let rows: Vec<LpSolution> = (0..d)
        .into_par_iter()
        .map(|i| simplex::solve(&row_problem(stats, i, cfg.lambda), cfg.lp_tol, max_pivots))
        .collect();

    let mut a_hat = Matrix::zeros(d, d);
    let mut status = SolveStatus::Converged;
    let mut pivots = 0;
    let mut residual: f64 = 0.0;
    for (i, sol) in rows.iter().enumerate() {
        match sol.status {
            LpStatus::Optimal => {}
            LpStatus::Infeasible => return Err(Error::InfeasibleRow { row: i }),
            LpStatus::Unbounded => unreachable!("objective ‖a‖₁ is bounded below"),
            LpStatus::PivotLimit => {
                log::warn!("dantzig: row {i} hit the pivot limit ({max_pivots})");
                status = SolveStatus::PivotLimit;
            }
        }
        for j in 0..d {
            a_hat[(i, j)] = sol.x[j] - sol.x[d + j];
        }
        pivots += sol.pivots;
        residual = residual.max(sol.certificate.max_residual());
    }
    let l1 = a_hat.norm_l1();
    EstimateResult::assemble(Method::Dantzig, cfg.lambda, a_hat, stats, pivots, l1, residual, status)
}
