//! Support-recovery heatmaps and relative-error-vs-dimension studies.
//!
//! A replication at dimension `d` draws `A0` with [`generate_sparse_stable`],
//! simulates one trajectory, and fits all three estimators to the same
//! sufficient statistics. Every random stream is derived from
//! `(master seed, purpose, d, rep)`, so results do not depend on scheduling.

mod fig1;
mod fig2;
mod svg;

use serde::{Deserialize, Serialize};

pub use fig1::{run_fig1, Fig1Bundle};
pub use fig2::{run_fig2, Fig2Report, RawRow, SummaryRow, SupportRow};

use crate::error::{Error, Result};
use crate::estimate::{self, lambda_rule, DantzigConfig, EstimateResult, LambdaConstants, LassoConfig, Method};
use crate::matrix::Matrix;
use crate::model::{ergodic_constants, generate_sparse_stable, ModelSpec};
use crate::rng::{derive_seed, stream};
use crate::simulate::{simulate_stats, Scheme, SimConfig, SufficientStats};

/// How the penalty level is chosen in each replication.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum LambdaMode {
    /// Rule value with population constants of the drawn `A0`.
    Theoretical { eps0: f64 },
    /// Rule value with empirical surrogates from `Ĉ_T`.
    PlugIn { eps0: f64 },
    Fixed { value: f64 },
}

impl LambdaMode {
    pub fn label(&self) -> String {
        match self {
            LambdaMode::Theoretical { eps0 } => format!("theoretical(eps0={eps0})"),
            LambdaMode::PlugIn { eps0 } => format!("plug_in(eps0={eps0})"),
            LambdaMode::Fixed { value } => format!("fixed({value})"),
        }
    }

    fn resolve(&self, model: &ModelSpec, stats: &SufficientStats) -> Result<f64> {
        let d = model.d;
        match *self {
            LambdaMode::Theoretical { eps0 } => {
                let c = ergodic_constants(&model.a0)?;
                lambda_rule(d, stats.t_horizon, eps0, LambdaConstants::Population(&c))
            }
            LambdaMode::PlugIn { eps0 } => lambda_rule(d, stats.t_horizon, eps0, LambdaConstants::PlugIn(&stats.c_hat)),
            LambdaMode::Fixed { value } => Ok(value),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub d_values: Vec<usize>,
    /// Sparsity fraction: `s = round(rho·d²)`, diagonal included.
    pub rho: f64,
    pub t_horizon: f64,
    pub n_steps: usize,
    pub n_reps: usize,
    pub lambda_mode: LambdaMode,
    pub seed: u64,
    pub scheme: Scheme,
    /// Gershgorin margin of the generated drift matrices. Small margins leave
    /// one row with stationary variance near 1, which pushes the rule-based λ
    /// above `‖S‖∞` and zeroes every penalized estimate.
    pub margin: f64,
    /// Support threshold `|â| > tau`.
    pub tau: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            d_values: vec![5, 10, 15, 20],
            rho: 0.3,
            t_horizon: 300.0,
            n_steps: 500_000,
            n_reps: 10,
            lambda_mode: LambdaMode::PlugIn { eps0: 0.1 },
            seed: 0,
            scheme: Scheme::Exact,
            margin: 2.0,
            tau: estimate::DEFAULT_SUPPORT_TAU,
        }
    }
}

impl ExperimentConfig {
    pub fn sparsity(&self, d: usize) -> usize {
        (self.rho * (d * d) as f64).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.d_values.is_empty() {
            return bad("d_values is empty".into());
        }
        if !(self.rho > 0.0 && self.rho <= 1.0) {
            return bad(format!("rho must lie in (0, 1], got {}", self.rho));
        }
        for &d in &self.d_values {
            let s = self.sparsity(d);
            if d == 0 || s < d {
                return bad(format!("d={d}: round(rho·d²) = {s} < d, the diagonal alone needs d entries"));
            }
        }
        if self.n_reps == 0 {
            return bad("n_reps must be ≥ 1".into());
        }
        if !(self.t_horizon > 0.0 && self.t_horizon.is_finite()) || self.n_steps == 0 {
            return bad(format!("need T > 0 and n_steps ≥ 1, got T={}, n_steps={}", self.t_horizon, self.n_steps));
        }
        if !(self.margin > 0.0) || !(self.tau > 0.0) {
            return bad(format!("margin and tau must be > 0, got {} and {}", self.margin, self.tau));
        }
        match self.lambda_mode {
            LambdaMode::Theoretical { eps0 } | LambdaMode::PlugIn { eps0 } if !(eps0 > 0.0 && eps0 < 1.0) => {
                bad(format!("eps0 must lie in (0, 1), got {eps0}"))
            }
            LambdaMode::Fixed { value } if !(value >= 0.0 && value.is_finite()) => {
                bad(format!("fixed lambda must be ≥ 0, got {value}"))
            }
            _ => Ok(()),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str::<Self>(&text)
            .map_err(|e| Error::Parse { source_name: path.display().to_string(), message: e.to_string() })
            .and_then(|c| c.validate().map(|_| c))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupportMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Precision, recall and F1 of the support `{|â_ij| > tau}` against the true
/// support of `a0`. No predictions gives precision 1; an empty true support
/// gives recall 1.
pub fn support_metrics(a_hat: &Matrix, a0: &Matrix, tau: f64) -> Result<SupportMetrics> {
    a_hat.check_same_shape(a0)?;
    if !(tau > 0.0) {
        return Err(Error::InvalidArgument(format!("tau must be > 0, got {tau}")));
    }
    let (mut tp, mut pred, mut truth) = (0usize, 0usize, 0usize);
    for (&h, &t) in a_hat.as_slice().iter().zip(a0.as_slice()) {
        let p = h.abs() > tau;
        let s = t != 0.0;
        pred += p as usize;
        truth += s as usize;
        tp += (p && s) as usize;
    }
    let precision = if pred == 0 { 1.0 } else { tp as f64 / pred as f64 };
    let recall = if truth == 0 { 1.0 } else { tp as f64 / truth as f64 };
    let f1 = if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
    Ok(SupportMetrics { precision, recall, f1 })
}

/// Neumaier-compensated sum.
pub(crate) fn compensated_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for x in xs {
        let t = sum + x;
        comp += if sum.abs() >= x.abs() { (sum - t) + x } else { (x - t) + sum };
        sum = t;
    }
    sum + comp
}

/// Mean and sample standard deviation (`n - 1` denominator, 0 for one value).
pub(crate) fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = compensated_sum(xs.iter().copied()) / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = compensated_sum(xs.iter().map(|x| (x - mean) * (x - mean))) / (n - 1) as f64;
    (mean, var.sqrt())
}

pub(crate) struct Seeds {
    pub model: u64,
    pub path: u64,
}

pub(crate) fn seeds(master: u64, d: usize, rep: usize) -> Seeds {
    Seeds {
        model: derive_seed(master, &[stream::MODEL, d as u64, rep as u64]),
        path: derive_seed(master, &[stream::PATH, d as u64, rep as u64]),
    }
}

pub(crate) struct Replication {
    pub model: ModelSpec,
    pub lambda: f64,
    /// One entry per [`Method::ALL`], in that order.
    pub fits: Vec<Result<EstimateResult>>,
}

pub(crate) fn replicate(cfg: &ExperimentConfig, d: usize, rep: usize) -> Result<Replication> {
    let sd = seeds(cfg.seed, d, rep);
    let model = generate_sparse_stable(d, cfg.sparsity(d), cfg.margin, sd.model)?;
    let sim = SimConfig::new(cfg.t_horizon, cfg.n_steps, cfg.scheme, sd.path);
    let stats = simulate_stats(&model, &sim)?;
    let lambda = cfg.lambda_mode.resolve(&model, &stats)?;
    let fits = Method::ALL
        .iter()
        .map(|m| match m {
            Method::Mle => estimate::mle(&stats),
            Method::Lasso => estimate::lasso(&stats, &LassoConfig::new(lambda)),
            Method::Dantzig => estimate::dantzig(&stats, &DantzigConfig::new(lambda)),
        })
        .collect();
    Ok(Replication { model, lambda, fits })
}

pub(crate) fn write_file(path: &std::path::Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}
