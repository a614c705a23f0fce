//! Discretized OU trajectories and their sufficient statistics.
//!
//! Stochastic integrals use left-point (Itô) sums on the uniform grid
//! `t_k = kΔ`, `Δ = T/n`:
//!
//! ```text
//! Ĉ_T = (1/T) Σ_k X_k X_kᵀ Δ
//! S_T = (1/T) Σ_k (X_{k+1} - X_k) X_kᵀ
//! ε_T = (1/T) Σ_k ΔW_k X_kᵀ          (Euler paths with retained increments)
//! ```
//!
//! Both schemes start from the stationary law `N(0, C∞)`.

use std::io::Write as _;
use std::path::Path as FsPath;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::matrix::{format_f64, Matrix};
use crate::model::{check_assumption_h, lyapunov_unchecked, ModelSpec};
use crate::rng::{rng_from_seed, Rng};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Exact Gaussian transitions `X_{k+1} = ΦX_k + ξ_k`, `ξ_k ~ N(0, Q)`.
    Exact,
    /// Euler-Maruyama `X_{k+1} = X_k - A0 X_k Δ + ΔW_k`.
    Euler,
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "exact" => Ok(Scheme::Exact),
            "euler" => Ok(Scheme::Euler),
            other => Err(Error::InvalidArgument(format!("unknown scheme {other:?} (expected exact|euler)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub t_horizon: f64,
    pub n_steps: usize,
    pub scheme: Scheme,
    pub seed: u64,
    #[serde(default)]
    pub retain_brownian: bool,
}

impl SimConfig {
    pub fn new(t_horizon: f64, n_steps: usize, scheme: Scheme, seed: u64) -> Self {
        Self { t_horizon, n_steps, scheme, seed, retain_brownian: false }
    }

    pub fn with_brownian(mut self) -> Self {
        self.retain_brownian = true;
        self
    }

    pub fn dt(&self) -> f64 {
        self.t_horizon / self.n_steps as f64
    }

    fn validate(&self) -> Result<()> {
        if !(self.t_horizon > 0.0 && self.t_horizon.is_finite()) {
            return Err(Error::InvalidArgument(format!("time horizon must be positive, got {}", self.t_horizon)));
        }
        if self.n_steps == 0 {
            return Err(Error::InvalidArgument("n_steps must be at least 1".into()));
        }
        if self.retain_brownian && self.scheme == Scheme::Exact {
            return Err(Error::InvalidArgument("Brownian increments are only available under the Euler scheme".into()));
        }
        Ok(())
    }
}

/// A discretized trajectory `X_{t_0}, …, X_{t_n}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Path {
    d: usize,
    dt: f64,
    /// Row-major `(n+1) × d`.
    states: Vec<f64>,
    /// Row-major `n × d`, when retained.
    brownian: Option<Vec<f64>>,
}

impl Path {
    pub fn new(d: usize, dt: f64, states: Vec<f64>, brownian: Option<Vec<f64>>) -> Result<Self> {
        if d == 0 || !states.len().is_multiple_of(d) || states.len() / d < 2 {
            return Err(Error::Shape(format!("path needs at least two states of dimension {d}")));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("step must be positive, got {dt}")));
        }
        if let Some(k) = states.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { row: k / d, col: k % d });
        }
        if let Some(w) = &brownian {
            if w.len() != states.len() - d {
                return Err(Error::Shape("Brownian increments must have one row per step".into()));
            }
        }
        Ok(Self { d, dt, states, brownian })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_steps(&self) -> usize {
        self.states.len() / self.d - 1
    }

    pub fn t_horizon(&self) -> f64 {
        self.dt * self.n_steps() as f64
    }

    pub fn state(&self, k: usize) -> &[f64] {
        &self.states[k * self.d..(k + 1) * self.d]
    }

    pub fn states(&self) -> &[f64] {
        &self.states
    }

    pub fn brownian_increment(&self, k: usize) -> Option<&[f64]> {
        self.brownian.as_ref().map(|w| &w[k * self.d..(k + 1) * self.d])
    }

    pub fn has_brownian(&self) -> bool {
        self.brownian.is_some()
    }

    /// CSV export: `t, X¹, …, X^d` per line.
    pub fn write_csv(&self, path: impl AsRef<FsPath>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = std::io::BufWriter::new(file);
        for k in 0..=self.n_steps() {
            let mut line = format_f64(k as f64 * self.dt);
            for &x in self.state(k) {
                line.push(',');
                line.push_str(&format_f64(x));
            }
            line.push('\n');
            out.write_all(line.as_bytes()).map_err(|e| Error::io(path, e))?;
        }
        out.flush().map_err(|e| Error::io(path, e))
    }
}

/// Everything the estimators consume.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SufficientStats {
    pub c_hat: Matrix,
    pub s_hat: Matrix,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_hat: Option<Matrix>,
    #[serde(rename = "T")]
    pub t_horizon: f64,
}

#[derive(Serialize, Deserialize)]
struct StatsFile {
    d: usize,
    #[serde(flatten)]
    stats: SufficientStats,
}

impl SufficientStats {
    pub fn new(c_hat: Matrix, s_hat: Matrix, eps_hat: Option<Matrix>, t_horizon: f64) -> Result<Self> {
        if !c_hat.is_square() {
            return Err(Error::Shape("Gram matrix must be square".into()));
        }
        c_hat.check_same_shape(&s_hat)?;
        if let Some(e) = &eps_hat {
            c_hat.check_same_shape(e)?;
        }
        if !(t_horizon > 0.0) {
            return Err(Error::InvalidArgument(format!("time horizon must be positive, got {t_horizon}")));
        }
        Ok(Self { c_hat, s_hat, eps_hat, t_horizon })
    }

    pub fn dim(&self) -> usize {
        self.c_hat.rows()
    }

    /// JSON export `{d, T, c_hat, s_hat, eps_hat?}`.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&StatsFile { d: self.dim(), stats: self.clone() })?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: StatsFile = serde_json::from_str(text)?;
        let s = file.stats;
        let s = Self::new(s.c_hat, s.s_hat, s.eps_hat, s.t_horizon)?;
        if s.dim() != file.d {
            return Err(Error::Shape(format!("stats file declares d={} but matrices are {}x{}", file.d, s.dim(), s.dim())));
        }
        Ok(s)
    }

    pub fn load(path: impl AsRef<FsPath>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Json(j) => Error::Parse {
                source_name: path.display().to_string(),
                message: format!("line {}, column {}: {j}", j.line(), j.column()),
            },
            other => other,
        })
    }

    pub fn save(&self, path: impl AsRef<FsPath>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }
}

/// Single-pass accumulator for the left-point sums.
#[derive(Clone, Debug)]
pub struct StatsAccumulator {
    d: usize,
    dt: f64,
    steps: usize,
    sum_xx: Vec<f64>,
    sum_dxx: Vec<f64>,
    sum_wx: Option<Vec<f64>>,
    dx: Vec<f64>,
}

impl StatsAccumulator {
    pub fn new(d: usize, dt: f64, with_brownian: bool) -> Self {
        Self {
            d,
            dt,
            steps: 0,
            sum_xx: vec![0.0; d * d],
            sum_dxx: vec![0.0; d * d],
            sum_wx: with_brownian.then(|| vec![0.0; d * d]),
            dx: vec![0.0; d],
        }
    }

    /// Adds the step `x → x_next`, with its Brownian increment when tracked.
    pub fn push(&mut self, x: &[f64], x_next: &[f64], dw: Option<&[f64]>) {
        let d = self.d;
        for ((o, &a), &b) in self.dx.iter_mut().zip(x_next).zip(x) {
            *o = a - b;
        }
        for i in 0..d {
            let xi = x[i];
            let row = &mut self.sum_xx[i * d..(i + 1) * d];
            // upper triangle only; mirrored in finish()
            for j in i..d {
                row[j] += xi * x[j];
            }
            let dxi = self.dx[i];
            let row = &mut self.sum_dxx[i * d..(i + 1) * d];
            for (o, &xj) in row.iter_mut().zip(x) {
                *o += dxi * xj;
            }
        }
        if let (Some(acc), Some(w)) = (self.sum_wx.as_mut(), dw) {
            for i in 0..d {
                let wi = w[i];
                for (o, &xj) in acc[i * d..(i + 1) * d].iter_mut().zip(x) {
                    *o += wi * xj;
                }
            }
        }
        self.steps += 1;
    }

    pub fn finish(mut self) -> Result<SufficientStats> {
        if self.steps == 0 {
            return Err(Error::InvalidArgument("no steps accumulated".into()));
        }
        let d = self.d;
        let t = self.dt * self.steps as f64;
        for i in 0..d {
            for j in 0..i {
                self.sum_xx[i * d + j] = self.sum_xx[j * d + i];
            }
        }
        let c_hat = Matrix::new(d, d, self.sum_xx.iter().map(|v| v * self.dt / t).collect())?;
        let s_hat = Matrix::new(d, d, self.sum_dxx.iter().map(|v| v / t).collect())?;
        let eps_hat = self
            .sum_wx
            .map(|w| Matrix::new(d, d, w.iter().map(|v| v / t).collect()))
            .transpose()?;
        SufficientStats::new(c_hat, s_hat, eps_hat, t)
    }
}

/// Exact transition pair `Φ = e^{-AΔ}` and `Q = ∫₀^Δ e^{-sA}e^{-sAᵀ}ds`, the
/// latter through `Q = C∞ - ΦC∞Φᵀ`.
pub fn transition_kernel(a: &Matrix, delta: f64) -> Result<(Matrix, Matrix)> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidArgument(format!("step must be positive, got {delta}")));
    }
    check_assumption_h(a)?.require()?;
    let c_inf = lyapunov_unchecked(a)?;
    kernel_from_c_inf(a, delta, &c_inf)
}

fn kernel_from_c_inf(a: &Matrix, delta: f64, c_inf: &Matrix) -> Result<(Matrix, Matrix)> {
    let phi = linalg::expm(&a.scale(-delta))?;
    let q = c_inf.sub(&phi.matmul(c_inf)?.matmul(&phi.transpose())?)?.symmetrize();
    Ok((phi, q))
}

/// Drives the chosen scheme, handing each step to `visit(x_k, x_{k+1}, ΔW_k)`.
/// Returns the initial state.
fn drive(
    model: &ModelSpec,
    cfg: &SimConfig,
    mut visit: impl FnMut(&[f64], &[f64], Option<&[f64]>),
) -> Result<Vec<f64>> {
    cfg.validate()?;
    let d = model.d;
    let a = &model.a0;
    let dt = cfg.dt();
    check_assumption_h(a)?.require()?;
    let c_inf = lyapunov_unchecked(a)?;
    let l0 = linalg::cholesky_lower(&c_inf, "stationary covariance C∞")?;
    let mut rng = rng_from_seed(cfg.seed);

    let mut z = vec![0.0; d];
    let mut x = vec![0.0; d];
    fill_normal(&mut rng, &mut z);
    l0.matvec(&z, &mut x);
    let x0 = x.clone();
    let mut next = vec![0.0; d];

    match cfg.scheme {
        Scheme::Exact => {
            let (phi, q) = kernel_from_c_inf(a, dt, &c_inf)?;
            let lq = linalg::cholesky_lower(&q, "transition covariance Q")?;
            let mut noise = vec![0.0; d];
            for _ in 0..cfg.n_steps {
                fill_normal(&mut rng, &mut z);
                lq.matvec(&z, &mut noise);
                phi.matvec(&x, &mut next);
                for (n, e) in next.iter_mut().zip(&noise) {
                    *n += e;
                }
                visit(&x, &next, None);
                std::mem::swap(&mut x, &mut next);
            }
        }
        Scheme::Euler => {
            let sd = dt.sqrt();
            let mut drift = vec![0.0; d];
            for _ in 0..cfg.n_steps {
                fill_normal(&mut rng, &mut z);
                for w in z.iter_mut() {
                    *w *= sd;
                }
                a.matvec(&x, &mut drift);
                for ((n, (&xi, &fi)), &wi) in next.iter_mut().zip(x.iter().zip(&drift)).zip(&z) {
                    *n = xi + (-fi * dt + wi);
                }
                visit(&x, &next, Some(&z));
                std::mem::swap(&mut x, &mut next);
            }
        }
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("simulation diverged (step too large for the Euler scheme?)".into()));
    }
    Ok(x0)
}

fn fill_normal(rng: &mut Rng, out: &mut [f64]) {
    for v in out.iter_mut() {
        *v = StandardNormal.sample(rng);
    }
}

/// Simulates and stores the whole trajectory.
pub fn simulate_path(model: &ModelSpec, cfg: &SimConfig) -> Result<Path> {
    let d = model.d;
    let mut states = Vec::with_capacity((cfg.n_steps + 1) * d);
    let mut brownian = cfg.retain_brownian.then(|| Vec::with_capacity(cfg.n_steps * d));
    let mut first = true;
    drive(model, cfg, |x, next, dw| {
        if first {
            states.extend_from_slice(x);
            first = false;
        }
        states.extend_from_slice(next);
        if let (Some(b), Some(w)) = (brownian.as_mut(), dw) {
            b.extend_from_slice(w);
        }
    })?;
    Path::new(d, cfg.dt(), states, brownian)
}

/// Simulates and reduces to sufficient statistics in one pass, without
/// storing the path. Bitwise identical to
/// `sufficient_stats(&simulate_path(model, cfg)?)`.
pub fn simulate_stats(model: &ModelSpec, cfg: &SimConfig) -> Result<SufficientStats> {
    cfg.validate()?;
    let mut acc = StatsAccumulator::new(model.d, cfg.dt(), cfg.retain_brownian);
    drive(model, cfg, |x, next, dw| acc.push(x, next, dw))?;
    acc.finish()
}

pub fn sufficient_stats(path: &Path) -> Result<SufficientStats> {
    let mut acc = StatsAccumulator::new(path.dim(), path.dt(), path.has_brownian());
    for k in 0..path.n_steps() {
        acc.push(path.state(k), path.state(k + 1), path.brownian_increment(k));
    }
    acc.finish()
}
