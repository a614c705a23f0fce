//! Drift estimators: maximum likelihood, Lasso and the Dantzig selector.
//!
//! All three consume only [`SufficientStats`]. The penalized problems use the
//! quadratic loss
//!
//! ```text
//! L(A) = tr(S Aᵀ + ½ A Ĉ Aᵀ),    ∇L(A) = S + A Ĉ
//! ```
//!
//! where `S = (1/T)∫dX Xᵀ` stands in for the unobservable `ε_T - A0 Ĉ_T`.

mod dantzig;
mod lasso;
pub mod simplex;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use dantzig::{dantzig, DantzigConfig};
pub use lasso::{lasso, soft_threshold, LassoConfig};

use crate::error::{Error, Result};
use crate::linalg;
use crate::matrix::Matrix;
use crate::model::ErgodicConstants;
use crate::simulate::SufficientStats;

/// Largest condition number of `Ĉ_T` accepted by [`mle`].
pub const MLE_CONDITION_CEILING: f64 = 1e12;

/// Default support threshold for counting nonzeros in an estimate.
pub const DEFAULT_SUPPORT_TAU: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Mle,
    Lasso,
    Dantzig,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Mle, Method::Lasso, Method::Dantzig];

    pub fn name(self) -> &'static str {
        match self {
            Method::Mle => "mle",
            Method::Lasso => "lasso",
            Method::Dantzig => "dantzig",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mle" | "ml" => Ok(Method::Mle),
            "lasso" => Ok(Method::Lasso),
            "dantzig" => Ok(Method::Dantzig),
            other => Err(Error::InvalidArgument(format!("unknown method {other:?} (expected mle|lasso|dantzig)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    /// Lasso stopped at `max_iter` before meeting its KKT tolerance.
    MaxIterations,
    /// A Dantzig row LP exhausted its pivot budget.
    PivotLimit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateResult {
    pub method: Method,
    pub lambda: f64,
    pub a_hat: Matrix,
    pub iterations: usize,
    /// Penalized objective for Lasso, `‖Â‖₁` for Dantzig, `L(Â)` for MLE.
    pub objective: f64,
    /// Lasso: entrywise subgradient residual. Dantzig: worst LP optimality
    /// residual over rows. MLE: `‖∇L(Â)‖∞`.
    pub kkt_residual: f64,
    /// `‖ÂĈ_T + S_T‖∞`
    pub dantzig_feasibility: f64,
    pub l1_norm: f64,
    pub status: SolveStatus,
}

impl EstimateResult {
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn assemble(
        method: Method,
        lambda: f64,
        a_hat: Matrix,
        stats: &SufficientStats,
        iterations: usize,
        objective: f64,
        kkt_residual: f64,
        status: SolveStatus,
    ) -> Result<Self> {
        let dantzig_feasibility = dantzig_feasibility(&a_hat, stats)?;
        Ok(Self {
            method,
            lambda,
            l1_norm: a_hat.norm_l1(),
            a_hat,
            iterations,
            objective,
            kkt_residual,
            dantzig_feasibility,
            status,
        })
    }

    /// Support size at threshold `tau`.
    pub fn l0_count_at(&self, tau: f64) -> usize {
        self.a_hat.count_above(tau)
    }

    pub fn converged(&self) -> bool {
        self.status == SolveStatus::Converged
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }
}

/// `L(A) + λ‖A‖₁` with `L(A) = tr(S Aᵀ + ½ A Ĉ Aᵀ)`.
pub fn lasso_objective(a: &Matrix, stats: &SufficientStats, lambda: f64) -> Result<f64> {
    let ac = a.matmul(&stats.c_hat)?;
    Ok(objective_with_product(a, &ac, stats, lambda))
}

pub(crate) fn objective_with_product(a: &Matrix, ac: &Matrix, stats: &SufficientStats, lambda: f64) -> f64 {
    let (mut lin, mut quad, mut l1) = (0.0, 0.0, 0.0);
    for ((&x, &s), &p) in a.as_slice().iter().zip(stats.s_hat.as_slice()).zip(ac.as_slice()) {
        lin += s * x;
        quad += p * x;
        l1 += x.abs();
    }
    lin + 0.5 * quad + lambda * l1
}

/// `∇L(A) = S + A Ĉ`.
pub fn lasso_gradient(a: &Matrix, stats: &SufficientStats) -> Result<Matrix> {
    a.matmul(&stats.c_hat)?.add(&stats.s_hat)
}

/// `‖AĈ_T + S_T‖∞`, the Dantzig constraint value.
pub fn dantzig_feasibility(a: &Matrix, stats: &SufficientStats) -> Result<f64> {
    Ok(lasso_gradient(a, stats)?.norm_max())
}

/// Condition number `λ_max/λ_min` of a symmetric matrix (infinite when not
/// positive definite).
pub fn condition_number(c: &Matrix) -> f64 {
    let ev = linalg::sym_eigenvalues(c);
    let (lo, hi) = (ev[0], ev[ev.len() - 1]);
    if lo > 0.0 {
        hi / lo
    } else {
        f64::INFINITY
    }
}

/// Maximum likelihood estimate `Â = -S_T Ĉ_T⁻¹`.
pub fn mle(stats: &SufficientStats) -> Result<EstimateResult> {
    let condition = condition_number(&stats.c_hat);
    if !(condition <= MLE_CONDITION_CEILING) {
        return Err(Error::IllConditioned { condition });
    }
    // Ĉ Âᵀ = -Sᵀ since Ĉ is symmetric.
    let c = stats.c_hat.symmetrize().to_nalgebra();
    let rhs = stats.s_hat.transpose().to_nalgebra() * -1.0;
    let a_t = c.lu().solve(&rhs).ok_or(Error::IllConditioned { condition })?;
    let a_hat = Matrix::from_nalgebra(&a_t.transpose())?;
    let objective = lasso_objective(&a_hat, stats, 0.0)?;
    let grad = dantzig_feasibility(&a_hat, stats)?;
    EstimateResult::assemble(Method::Mle, 0.0, a_hat, stats, 0, objective, grad, SolveStatus::Converged)
}

/// Source of the constants in the λ rule.
#[derive(Clone, Copy, Debug)]
pub enum LambdaConstants<'a> {
    /// Population constants `𝔪∞ = ‖diag C∞‖∞`, `𝔨∞ = λ_min(C∞)`.
    Population(&'a ErgodicConstants),
    /// Empirical surrogates `‖diag Ĉ_T‖∞` and `λ_min(Ĉ_T)`.
    PlugIn(&'a Matrix),
}

impl LambdaConstants<'_> {
    /// `(m, k)` pair entering the rule.
    pub fn values(&self) -> (f64, f64) {
        match self {
            LambdaConstants::Population(c) => (c.m_small, c.k_small),
            LambdaConstants::PlugIn(c_hat) => (c_hat.diag_max(), linalg::sym_eigenvalues(c_hat)[0].max(0.0)),
        }
    }
}

/// `λ = 2·sqrt((2m + k)·ln(2d²/ε₀)/T)`.
pub fn lambda_rule(d: usize, t_horizon: f64, eps0: f64, constants: LambdaConstants<'_>) -> Result<f64> {
    let (m, k) = constants.values();
    lambda_formula(d, t_horizon, eps0, m, k)
}

pub fn lambda_formula(d: usize, t_horizon: f64, eps0: f64, m_small: f64, k_small: f64) -> Result<f64> {
    if !(eps0 > 0.0 && eps0 < 1.0) {
        return Err(Error::InvalidArgument(format!("eps0 must lie in (0, 1), got {eps0}")));
    }
    if !(t_horizon > 0.0) || d == 0 {
        return Err(Error::InvalidArgument(format!("need T > 0 and d ≥ 1, got T={t_horizon}, d={d}")));
    }
    let dd = (d * d) as f64;
    Ok(2.0 * ((2.0 * m_small + k_small) * (2.0 * dd / eps0).ln() / t_horizon).sqrt())
}
