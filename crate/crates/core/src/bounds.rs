//! Closed-form concentration thresholds, oracle-inequality constants and cone
//! diagnostics.
//!
//! Every evaluator takes an [`ErgodicConstants`] explicitly, so callers decide
//! whether to feed population constants or empirical surrogates.

use rand::seq::index::sample;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::{lambda_rule, LambdaConstants};
use crate::linalg;
use crate::matrix::Matrix;
use crate::model::ErgodicConstants;
use crate::rng::rng_from_seed;

/// Cone `{V ≠ 0 : ‖V‖₁ ≤ (1 + c₀)‖V restricted to its s largest entries‖₁}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeSpec {
    pub s: usize,
    pub c0: f64,
}

impl ConeSpec {
    pub fn new(s: usize, c0: f64) -> Result<Self> {
        if s == 0 {
            return Err(Error::InvalidArgument("cone sparsity s must be ≥ 1".into()));
        }
        if !(c0 > 0.0 && c0.is_finite()) {
            return Err(Error::InvalidArgument(format!("cone constant c0 must be > 0, got {c0}")));
        }
        Ok(Self { s, c0 })
    }
}

const CONE_SLACK: f64 = 1e-12;

fn check_domain(eps0: f64, s: usize, d: usize) -> Result<()> {
    if !(eps0 > 0.0 && eps0 < 1.0) {
        return Err(Error::InvalidArgument(format!("eps0 must lie in (0, 1), got {eps0}")));
    }
    if s == 0 {
        return Err(Error::InvalidArgument("s must be ≥ 1".into()));
    }
    if d < 2 {
        return Err(Error::InvalidArgument(format!("d must be ≥ 2, got {d}")));
    }
    Ok(())
}

/// Tail exponent of the quadratic-form deviation:
/// `H₀(x) = 𝔯₀/(8𝔭₀𝔎∞) · x²/(x + 𝔎∞)`.
pub fn h0(x: f64, c: &ErgodicConstants) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::InvalidArgument(format!("H0 needs x ≥ 0, got {x}")));
    }
    Ok(c.r0 / (8.0 * c.p0 * c.k_big) * x * x / (x + c.k_big))
}

/// Restricted-eigenvalue horizon. Returns `(T₀, 𝔗₀)` and the value of the
/// logarithmic bracket multiplying `𝔗₀`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct T0 {
    pub t0: f64,
    pub frak_t0: f64,
    pub bracket: f64,
}

impl T0 {
    /// The bracket can turn negative for small `d`; the value is reported as
    /// is and flagged here.
    pub fn bracket_negative(&self) -> bool {
        self.bracket < 0.0
    }
}

pub fn t0(eps0: f64, s: usize, c0: f64, c: &ErgodicConstants, d: usize) -> Result<T0> {
    check_domain(eps0, s, d)?;
    if !(c0 > 0.0) {
        return Err(Error::InvalidArgument(format!("c0 must be > 0, got {c0}")));
    }
    let w = (c0 + 2.0).powi(2);
    let frak_t0 = 144.0 * c.p0 * c.k_big * w * (c.k_small + 18.0 * w * c.k_big) / (c.r0 * c.k_small * c.k_small);
    let s = s as f64;
    let ln_d = (d as f64).ln();
    let bracket = (4.0 * s + 1.0) * ln_d - 2.0 * s * ((2.0 * s / 21.0).ln() - 1.0) + (2.0 / eps0).ln();
    Ok(T0 { t0: frak_t0 * bracket, frak_t0, bracket })
}

/// Horizon of the martingale deviation bound:
/// `(48𝔭₀𝔎∞/𝔯₀)·((𝔨∞ + 6𝔎∞)/𝔨∞²)·((2s+1) ln d − s(ln s − 1) + ln(4/ε₀))`.
pub fn t_mart(eps0: f64, s: usize, d: usize, c: &ErgodicConstants) -> Result<f64> {
    check_domain(eps0, s, d)?;
    let s = s as f64;
    let lead = 48.0 * c.p0 * c.k_big / c.r0 * (c.k_small + 6.0 * c.k_big) / (c.k_small * c.k_small);
    Ok(lead * ((2.0 * s + 1.0) * (d as f64).ln() - s * (s.ln() - 1.0) + (4.0 / eps0).ln()))
}

/// Error bounds for the penalized estimators on the high-probability event.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorBounds {
    /// `18 s₀ λ² / 𝔨∞`, prediction error `‖(Â − A₀)X‖²_{L²}`.
    pub l2_pred: f64,
    /// `36 s₀ λ² / 𝔨∞²`, squared Frobenius error.
    pub frob: f64,
    /// `24 s₀ λ / 𝔨∞`, entrywise ℓ₁ error.
    pub l1: f64,
    /// `(48𝔐∞/𝔨∞ + 72) s₀`, Lasso support size.
    pub sparsity: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleBounds {
    pub s0: usize,
    pub lambda: f64,
    pub gamma: f64,
    /// `9(2+γ)²/(2𝔨∞γ(1+γ))`
    pub lasso_oracle_const: f64,
    /// `(18/𝔨∞)((γ+2)²/(4γ) + 48𝔐∞/𝔨∞ + 72)`
    pub c_d: f64,
    pub error_bounds: ErrorBounds,
}

pub fn oracle_bounds(s0: usize, lambda: f64, gamma: f64, c: &ErgodicConstants) -> Result<OracleBounds> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidArgument(format!("gamma must be > 0, got {gamma}")));
    }
    if s0 == 0 {
        return Err(Error::InvalidArgument("s0 must be ≥ 1".into()));
    }
    if !(lambda >= 0.0) {
        return Err(Error::InvalidArgument(format!("lambda must be ≥ 0, got {lambda}")));
    }
    let k = c.k_small;
    let s = s0 as f64;
    let sparsity_factor = 48.0 * c.m_big / k + 72.0;
    Ok(OracleBounds {
        s0,
        lambda,
        gamma,
        lasso_oracle_const: 9.0 * (2.0 + gamma).powi(2) / (2.0 * k * gamma * (1.0 + gamma)),
        c_d: 18.0 / k * ((gamma + 2.0).powi(2) / (4.0 * gamma) + sparsity_factor),
        error_bounds: ErrorBounds {
            l2_pred: 18.0 * s * lambda * lambda / k,
            frob: 36.0 * s * lambda * lambda / (k * k),
            l1: 24.0 * s * lambda / k,
            sparsity: sparsity_factor * s0 as f64,
        },
    })
}

/// Inputs to a full [`BoundsReport`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundsInput {
    pub d: usize,
    pub s: usize,
    pub c0: f64,
    pub eps0: f64,
    pub t_horizon: f64,
    pub gamma: f64,
    /// Sparsity used in the oracle bounds; defaults to `s`.
    pub s0: Option<usize>,
    /// λ used in the oracle bounds; defaults to the rule value.
    pub lambda: Option<f64>,
    pub h0_points: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub input: BoundsInput,
    pub constants_label: String,
    pub h0_at: Vec<(f64, f64)>,
    pub t0: f64,
    pub frak_t0: f64,
    pub t0_bracket: f64,
    pub t0_bracket_negative: bool,
    pub t_mart: f64,
    /// λ-rule value at `(d, T, ε₀)`.
    pub lambda_min: f64,
    pub oracle: OracleBounds,
}

impl BoundsReport {
    pub fn build(input: BoundsInput, c: &ErgodicConstants, constants_label: impl Into<String>) -> Result<Self> {
        let h0_at = input.h0_points.iter().map(|&x| Ok((x, h0(x, c)?))).collect::<Result<Vec<_>>>()?;
        let t = t0(input.eps0, input.s, input.c0, c, input.d)?;
        let tm = t_mart(input.eps0, input.s, input.d, c)?;
        let lambda_min = lambda_rule(input.d, input.t_horizon, input.eps0, LambdaConstants::Population(c))?;
        let oracle = oracle_bounds(input.s0.unwrap_or(input.s), input.lambda.unwrap_or(lambda_min), input.gamma, c)?;
        Ok(Self {
            constants_label: constants_label.into(),
            h0_at,
            t0: t.t0,
            frak_t0: t.frak_t0,
            t0_bracket: t.bracket,
            t0_bracket_negative: t.bracket_negative(),
            t_mart: tm,
            lambda_min,
            oracle,
            input,
        })
    }

    /// `(label, formula, value)` rows for a human-readable audit table.
    pub fn table(&self) -> Vec<(String, &'static str, f64)> {
        let mut rows: Vec<(String, &'static str, f64)> = self
            .h0_at
            .iter()
            .map(|&(x, v)| (format!("H0({x})"), "r0/(8 p0 K) * x^2/(x+K)", v))
            .collect();
        let o = &self.oracle;
        rows.extend([
            ("frak_T0".into(), "144 p0 K (c0+2)^2 (k + 18 (c0+2)^2 K) / (r0 k^2)", self.frak_t0),
            ("T0_bracket".into(), "(4s+1) ln d - 2s (ln(2s/21) - 1) + ln(2/eps0)", self.t0_bracket),
            ("T0".into(), "frak_T0 * bracket", self.t0),
            ("T_mart".into(), "48 p0 K/r0 * (k+6K)/k^2 * ((2s+1) ln d - s(ln s - 1) + ln(4/eps0))", self.t_mart),
            ("lambda_min".into(), "2 sqrt((2m + k) ln(2d^2/eps0) / T)", self.lambda_min),
            ("lasso_oracle_const".into(), "9 (2+gamma)^2 / (2 k gamma (1+gamma))", o.lasso_oracle_const),
            ("C_D".into(), "18/k ((gamma+2)^2/(4 gamma) + 48 M/k + 72)", o.c_d),
            ("l2_pred".into(), "18 s0 lambda^2 / k", o.error_bounds.l2_pred),
            ("frob".into(), "36 s0 lambda^2 / k^2", o.error_bounds.frob),
            ("l1".into(), "24 s0 lambda / k", o.error_bounds.l1),
            ("sparsity".into(), "(48 M/k + 72) s0", o.error_bounds.sparsity),
        ]);
        rows
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Row-major indices of the `s` largest-magnitude entries; ties go to the
/// lowest index.
pub fn top_s_indices(v: &Matrix, s: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..v.as_slice().len()).collect();
    let data = v.as_slice();
    idx.sort_by(|&a, &b| data[b].abs().total_cmp(&data[a].abs()).then(a.cmp(&b)));
    idx.truncate(s.min(data.len()));
    idx
}

pub fn in_cone(v: &Matrix, cone: &ConeSpec) -> Result<bool> {
    if v.norm_max() == 0.0 {
        return Err(Error::InvalidArgument("cone membership is undefined for the zero matrix".into()));
    }
    let data = v.as_slice();
    let top: f64 = top_s_indices(v, cone.s).iter().map(|&k| data[k].abs()).sum();
    Ok(v.norm_l1() <= (1.0 + cone.c0) * top + CONE_SLACK)
}

/// `tr(V Ĉ Vᵀ) / ‖V‖₂²`.
pub fn re_ratio(v: &Matrix, c_hat: &Matrix) -> f64 {
    let d = c_hat.rows();
    let mut num = 0.0;
    let mut den = 0.0;
    for row in v.as_slice().chunks_exact(d) {
        for k in 0..d {
            let cv: f64 = (0..d).map(|l| c_hat[(k, l)] * row[l]).sum();
            num += row[k] * cv;
            den += row[k] * row[k];
        }
    }
    num / den
}

/// Monte-Carlo estimate (from above) of `inf over the cone of tr(VĈVᵀ)/‖V‖₂²`.
///
/// Candidates are the rank-one matrices `e_r u_minᵀ` (and their top-`s`
/// truncations) built from the bottom eigenvector of `Ĉ`, followed by
/// `n_samples` random matrices: an `s`-sparse Gaussian core plus a dense tail
/// scaled so the cone inequality binds (or, when that would reorder the top
/// `s` entries, as large as the ordering allows). Only candidates accepted by
/// [`in_cone`] count. This is an estimate, not a certified bound.
pub fn restricted_eigenvalue_empirical(c_hat: &Matrix, cone: &ConeSpec, n_samples: usize, seed: u64) -> Result<f64> {
    if !c_hat.is_square() {
        return Err(Error::Shape("Gram matrix must be square".into()));
    }
    let d = c_hat.rows();
    let dd = d * d;
    if cone.s > dd {
        return Err(Error::InvalidArgument(format!("cone sparsity {} exceeds d² = {dd}", cone.s)));
    }
    let mut best = f64::INFINITY;
    let mut consider = |v: &Matrix| -> Result<()> {
        if v.norm_max() > 0.0 && in_cone(v, cone)? {
            best = best.min(re_ratio(v, c_hat));
        }
        Ok(())
    };

    let (_, u) = linalg::sym_min_eigenpair(c_hat);
    let u_row = Matrix::new(1, d, u)?;
    let keep: Vec<usize> = top_s_indices(&u_row, cone.s);
    for r in 0..d {
        let full = Matrix::from_fn(d, d, |i, j| if i == r { u_row[(0, j)] } else { 0.0 });
        consider(&full)?;
        let trunc = Matrix::from_fn(d, d, |i, j| if i == r && keep.contains(&j) { u_row[(0, j)] } else { 0.0 });
        consider(&trunc)?;
    }

    let mut rng = rng_from_seed(seed);
    for _ in 0..n_samples {
        let mut v = vec![0.0; dd];
        let core: Vec<usize> = sample(&mut rng, dd, cone.s).into_vec();
        let mut core_l1 = 0.0;
        let mut core_min = f64::INFINITY;
        for &k in &core {
            let x: f64 = StandardNormal.sample(&mut rng);
            v[k] = x;
            core_l1 += x.abs();
            core_min = core_min.min(x.abs());
        }
        let tail: Vec<usize> = (0..dd).filter(|k| !core.contains(k)).collect();
        if !tail.is_empty() && core_min > 0.0 {
            let raw: Vec<f64> = tail.iter().map(|_| StandardNormal.sample(&mut rng)).collect();
            let raw_l1: f64 = raw.iter().map(|x: &f64| x.abs()).sum();
            let raw_max = raw.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            if raw_l1 > 0.0 {
                // tail mass c0·‖core‖₁ makes the inequality bind; cap so no tail
                // entry outranks the core.
                let scale = (cone.c0 * core_l1 / raw_l1).min(core_min / raw_max);
                for (&k, x) in tail.iter().zip(&raw) {
                    v[k] = x * scale;
                }
            }
        }
        consider(&Matrix::new(d, d, v)?)?;
    }
    if best.is_finite() {
        Ok(best)
    } else {
        Err(Error::InvalidArgument("no cone member was generated".into()))
    }
}
