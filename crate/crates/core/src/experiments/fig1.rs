use std::path::Path;

use serde::Serialize;

use super::{replicate, seeds, support_metrics, svg, write_file, ExperimentConfig, SupportMetrics};
use crate::error::{Error, Result};
use crate::estimate::Method;
use crate::matrix::Matrix;

/// One replication at a single dimension: `A0` and the three estimates, all
/// drawn on the same symmetric colour scale.
#[derive(Clone, Debug, Serialize)]
pub struct Fig1Bundle {
    pub d: usize,
    pub s: usize,
    pub lambda: f64,
    pub lambda_mode: String,
    pub model_seed: u64,
    pub path_seed: u64,
    pub tau: f64,
    /// `max |entry|` over all four matrices.
    pub color_max: f64,
    /// `("a0" | method name, matrix)`.
    pub matrices: Vec<(String, Matrix)>,
    /// Support metrics per estimator.
    pub support: Vec<(String, SupportMetrics)>,
}

pub fn run_fig1(d: usize, cfg: &ExperimentConfig) -> Result<Fig1Bundle> {
    let cfg = ExperimentConfig { d_values: vec![d], ..cfg.clone() };
    cfg.validate()?;
    let rep = replicate(&cfg, d, 0)?;
    let sd = seeds(cfg.seed, d, 0);
    let mut matrices = vec![("a0".to_string(), rep.model.a0.clone())];
    let mut support = Vec::new();
    for (m, fit) in Method::ALL.iter().zip(rep.fits) {
        let fit = fit?;
        support.push((m.name().to_string(), support_metrics(&fit.a_hat, &rep.model.a0, cfg.tau)?));
        matrices.push((m.name().to_string(), fit.a_hat));
    }
    let color_max = matrices.iter().map(|(_, m)| m.norm_max()).fold(0.0, f64::max);
    Ok(Fig1Bundle {
        d,
        s: cfg.sparsity(d),
        lambda: rep.lambda,
        lambda_mode: cfg.lambda_mode.label(),
        model_seed: sd.model,
        path_seed: sd.path,
        tau: cfg.tau,
        color_max,
        matrices,
        support,
    })
}

impl Fig1Bundle {
    /// Writes `fig1_<name>.csv`, `fig1_<name>.svg` and `fig1_meta.json`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (name, m) in &self.matrices {
            m.write_csv(dir.join(format!("fig1_{name}.csv")))?;
            let title = format!("{name}, d={}", self.d);
            write_file(&dir.join(format!("fig1_{name}.svg")), &svg::heatmap(m, self.color_max, &title))?;
        }
        #[derive(Serialize)]
        struct Meta<'a> {
            d: usize,
            s: usize,
            lambda: f64,
            lambda_mode: &'a str,
            model_seed: u64,
            path_seed: u64,
            tau: f64,
            color_max: f64,
            support: &'a [(String, SupportMetrics)],
        }
        let meta = Meta {
            d: self.d,
            s: self.s,
            lambda: self.lambda,
            lambda_mode: &self.lambda_mode,
            model_seed: self.model_seed,
            path_seed: self.path_seed,
            tau: self.tau,
            color_max: self.color_max,
            support: &self.support,
        };
        write_file(&dir.join("fig1_meta.json"), &serde_json::to_string_pretty(&meta)?)
    }

    pub fn support_of(&self, method: Method) -> Option<SupportMetrics> {
        self.support.iter().find(|(n, _)| n == method.name()).map(|(_, m)| *m)
    }
}
