//! Lasso via accelerated proximal gradient (FISTA) with monotone restarts.

use serde::{Deserialize, Serialize};

use super::{objective_with_product, EstimateResult, Method, SolveStatus};
use crate::error::{Error, Result};
use crate::linalg;
use crate::matrix::Matrix;
use crate::simulate::SufficientStats;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum StepRule {
    /// Constant step `1/λ_max(Ĉ_T)`.
    #[default]
    FixedLipschitz,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LassoConfig {
    pub lambda: f64,
    pub max_iter: usize,
    pub tol: f64,
    #[serde(default)]
    pub step_rule: StepRule,
    pub acceleration: bool,
}

impl LassoConfig {
    pub fn new(lambda: f64) -> Self {
        Self { lambda, max_iter: 20_000, tol: 1e-8, step_rule: StepRule::FixedLipschitz, acceleration: true }
    }

    fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!("lambda must be ≥ 0, got {}", self.lambda)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument(format!("tol must be > 0, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidArgument("max_iter must be ≥ 1".into()));
        }
        Ok(())
    }
}

/// `sign(x)·max(|x| - τ, 0)`.
pub fn soft_threshold(x: f64, tau: f64) -> f64 {
    debug_assert!(tau >= 0.0);
    if x > tau {
        x - tau
    } else if x < -tau {
        x + tau
    } else {
        0.0
    }
}

/// Largest violation of the entrywise optimality conditions: `|g + λ sign(a)|`
/// on the support, `(|g| - λ)₊` off it, where `g = S + AĈ`.
fn kkt_residual(a: &Matrix, grad: &[f64], lambda: f64) -> f64 {
    a.as_slice().iter().zip(grad).fold(0.0, |worst: f64, (&x, &g)| {
        let r = if x > 0.0 {
            (g + lambda).abs()
        } else if x < 0.0 {
            (g - lambda).abs()
        } else {
            (g.abs() - lambda).max(0.0)
        };
        worst.max(r)
    })
}

pub fn lasso(stats: &SufficientStats, cfg: &LassoConfig) -> Result<EstimateResult> {
    solve(stats, cfg, None)
}

pub(super) fn solve(stats: &SufficientStats, cfg: &LassoConfig, mut trace: Option<&mut Vec<f64>>) -> Result<EstimateResult> {
    cfg.validate()?;
    let d = stats.dim();
    let lambda = cfg.lambda;
    let c = &stats.c_hat;
    let tol = cfg.tol * (1.0 + lambda);

    let mut x = Matrix::zeros(d, d);
    let mut xc = Matrix::zeros(d, d);
    let grad_at = |xc: &Matrix| -> Vec<f64> { xc.as_slice().iter().zip(stats.s_hat.as_slice()).map(|(p, s)| p + s).collect() };
    let mut f_x = 0.0;
    let mut kkt = kkt_residual(&x, &grad_at(&xc), lambda);
    if let Some(t) = trace.as_deref_mut() {
        t.push(f_x);
    }
    if kkt <= tol {
        return EstimateResult::assemble(Method::Lasso, lambda, x, stats, 0, f_x, kkt, SolveStatus::Converged);
    }

    let lipschitz = *linalg::sym_eigenvalues(c).last().expect("non-empty");
    if !(lipschitz > 0.0) {
        return Err(Error::Singular(format!(
            "Gram matrix has no positive curvature and λ={lambda} < ‖S‖∞; the Lasso objective is unbounded"
        )));
    }
    let step = 1.0 / lipschitz;
    let thresh = lambda * step;

    let prox_step = |from: &Matrix, from_c: &Matrix| -> Matrix {
        let data = from
            .as_slice()
            .iter()
            .zip(from_c.as_slice())
            .zip(stats.s_hat.as_slice())
            .map(|((&v, &p), &s)| soft_threshold(v - step * (p + s), thresh))
            .collect();
        Matrix::from_raw(d, d, data)
    };

    let mut y = x.clone();
    let mut yc = xc.clone();
    let mut t = 1.0f64;
    let mut iterations = 0;
    let mut status = SolveStatus::MaxIterations;

    while iterations < cfg.max_iter {
        iterations += 1;
        let mut cand = prox_step(&y, &yc);
        let mut cand_c = cand.matmul(c)?;
        let mut f_cand = objective_with_product(&cand, &cand_c, stats, lambda);
        if cfg.acceleration && f_cand > f_x {
            // Momentum overshot: restart with a plain proximal step from x,
            // which cannot increase the objective.
            t = 1.0;
            cand = prox_step(&x, &xc);
            cand_c = cand.matmul(c)?;
            f_cand = objective_with_product(&cand, &cand_c, stats, lambda);
        }
        if cfg.acceleration {
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            let beta = (t - 1.0) / t_next;
            let y_data = cand.as_slice().iter().zip(x.as_slice()).map(|(&n, &o)| n + beta * (n - o)).collect();
            y = Matrix::from_raw(d, d, y_data);
            let yc_data = cand_c.as_slice().iter().zip(xc.as_slice()).map(|(&n, &o)| n + beta * (n - o)).collect();
            yc = Matrix::from_raw(d, d, yc_data);
            t = t_next;
        } else {
            y = cand.clone();
            yc = cand_c.clone();
        }
        x = cand;
        xc = cand_c;
        f_x = f_cand;
        if let Some(tr) = trace.as_deref_mut() {
            tr.push(f_x);
        }
        kkt = kkt_residual(&x, &grad_at(&xc), lambda);
        if kkt <= tol {
            status = SolveStatus::Converged;
            break;
        }
    }
    if status != SolveStatus::Converged {
        log::warn!("lasso: no convergence after {iterations} iterations (KKT residual {kkt:.3e})");
    }
    EstimateResult::assemble(Method::Lasso, lambda, x, stats, iterations, f_x, kkt, status)
}
