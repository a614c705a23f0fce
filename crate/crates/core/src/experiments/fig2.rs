use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::svg::{self, Series};
use super::{mean_std, replicate, seeds, support_metrics, write_file, ExperimentConfig};
use crate::error::{Error, Result};
use crate::estimate::{Method, SolveStatus};
use crate::matrix::format_f64;

/// One (d, rep, method) cell.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RawRow {
    pub d: usize,
    pub rep: usize,
    pub method: Method,
    pub lambda: f64,
    pub rel_l1: f64,
    pub rel_frobenius: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// `None` for a converged fit; otherwise the flag or the error message.
    pub issue: Option<String>,
}

impl RawRow {
    /// True when the row holds a usable estimate.
    pub fn ok(&self) -> bool {
        self.rel_frobenius.is_finite()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummaryRow {
    pub d: usize,
    pub method: Method,
    /// `"l1"` or `"frobenius"`.
    pub norm: &'static str,
    pub mean: f64,
    pub std: f64,
    pub n_ok: usize,
    pub n_failed: usize,
    pub lambda_mean: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SupportRow {
    pub d: usize,
    pub method: Method,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub f1_std: f64,
    pub n_ok: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Fig2Report {
    pub config: ExperimentConfig,
    pub raw: Vec<RawRow>,
    pub summary: Vec<SummaryRow>,
    pub support: Vec<SupportRow>,
    pub wall_time_secs: f64,
}

fn failed_rows(d: usize, rep: usize, lambda: f64, msg: &str) -> Vec<RawRow> {
    Method::ALL
        .iter()
        .map(|&method| RawRow {
            d,
            rep,
            method,
            lambda,
            rel_l1: f64::NAN,
            rel_frobenius: f64::NAN,
            precision: f64::NAN,
            recall: f64::NAN,
            f1: f64::NAN,
            issue: Some(msg.to_string()),
        })
        .collect()
}

fn run_cell(cfg: &ExperimentConfig, d: usize, rep: usize) -> Vec<RawRow> {
    let r = match replicate(cfg, d, rep) {
        Ok(r) => r,
        Err(e) => {
            log::warn!("fig2: d={d} rep={rep} failed: {e}");
            return failed_rows(d, rep, f64::NAN, &e.to_string());
        }
    };
    let a0 = &r.model.a0;
    let (n1, nf) = (a0.norm_l1(), a0.norm_frobenius());
    Method::ALL
        .iter()
        .zip(r.fits)
        .map(|(&method, fit)| {
            let lambda = if method == Method::Mle { 0.0 } else { r.lambda };
            let fit = match fit {
                Ok(f) => f,
                Err(e) => {
                    log::warn!("fig2: d={d} rep={rep} {method} failed: {e}");
                    let mut row = failed_rows(d, rep, lambda, &e.to_string()).remove(0);
                    row.method = method;
                    return row;
                }
            };
            let diff = fit.a_hat.sub(a0).expect("same shape");
            let sm = support_metrics(&fit.a_hat, a0, cfg.tau).expect("same shape");
            RawRow {
                d,
                rep,
                method,
                lambda,
                rel_l1: diff.norm_l1() / n1,
                rel_frobenius: diff.norm_frobenius() / nf,
                precision: sm.precision,
                recall: sm.recall,
                f1: sm.f1,
                issue: match fit.status {
                    SolveStatus::Converged => None,
                    s => Some(format!("{s:?}")),
                },
            }
        })
        .collect()
}

/// Runs every `(d, rep)` replication in parallel and aggregates per
/// `(d, method)`. Failed replications appear in `raw` with an `issue` and are
/// left out of the means.
pub fn run_fig2(cfg: &ExperimentConfig) -> Result<Fig2Report> {
    cfg.validate()?;
    let start = Instant::now();
    let cells: Vec<(usize, usize)> = cfg.d_values.iter().flat_map(|&d| (0..cfg.n_reps).map(move |r| (d, r))).collect();
    let mut raw: Vec<RawRow> = cells.par_iter().flat_map_iter(|&(d, rep)| run_cell(cfg, d, rep)).collect();
    // par collect preserves order already; the sort makes the contract explicit.
    raw.sort_by_key(|r| (cfg.d_values.iter().position(|&x| x == r.d), r.rep, Method::ALL.iter().position(|&m| m == r.method)));

    let mut summary = Vec::new();
    let mut support = Vec::new();
    let mut seen = Vec::new();
    for &d in &cfg.d_values {
        if seen.contains(&d) {
            continue;
        }
        seen.push(d);
        for method in Method::ALL {
            let rows: Vec<&RawRow> = raw.iter().filter(|r| r.d == d && r.method == method).collect();
            let ok: Vec<&&RawRow> = rows.iter().filter(|r| r.ok()).collect();
            let col = |f: fn(&RawRow) -> f64| -> Vec<f64> { ok.iter().map(|r| f(r)).collect() };
            let (lambda_mean, _) = mean_std(&col(|r| r.lambda));
            for (norm, values) in [("l1", col(|r| r.rel_l1)), ("frobenius", col(|r| r.rel_frobenius))] {
                let (mean, std) = mean_std(&values);
                summary.push(SummaryRow { d, method, norm, mean, std, n_ok: ok.len(), n_failed: rows.len() - ok.len(), lambda_mean });
            }
            let (f1, f1_std) = mean_std(&col(|r| r.f1));
            support.push(SupportRow {
                d,
                method,
                precision: mean_std(&col(|r| r.precision)).0,
                recall: mean_std(&col(|r| r.recall)).0,
                f1,
                f1_std,
                n_ok: ok.len(),
            });
        }
    }
    Ok(Fig2Report { config: cfg.clone(), raw, summary, support, wall_time_secs: start.elapsed().as_secs_f64() })
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.into_inner().map_err(|e| Error::Csv(e.into_error().into()))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn num(x: f64) -> String {
    if x.is_finite() {
        format_f64(x)
    } else {
        String::new()
    }
}

impl Fig2Report {
    pub fn mean(&self, d: usize, method: Method, norm: &str) -> Option<f64> {
        self.summary.iter().find(|r| r.d == d && r.method == method && r.norm == norm).map(|r| r.mean)
    }

    pub fn support_row(&self, d: usize, method: Method) -> Option<&SupportRow> {
        self.support.iter().find(|r| r.d == d && r.method == method)
    }

    /// Exact bytes of `fig2_summary.csv`.
    pub fn summary_csv_bytes(&self) -> Result<Vec<u8>> {
        csv_bytes(SUMMARY_HEADER, self.summary_rows())
    }

    fn summary_rows(&self) -> impl Iterator<Item = Vec<String>> + '_ {
        let mode = self.config.lambda_mode.label();
        self.summary.iter().map(move |r| {
            vec![
                r.d.to_string(),
                r.method.name().into(),
                r.norm.into(),
                num(r.mean),
                num(r.std),
                r.n_ok.to_string(),
                r.n_failed.to_string(),
                num(r.lambda_mean),
                if r.method == Method::Mle { "none".into() } else { mode.clone() },
            ]
        })
    }

    /// Writes `fig2_summary.csv`, `fig2_raw.csv`, `fig2_support.csv`,
    /// `fig2_l1.svg`, `fig2_frobenius.svg` and `run_meta.json`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_bytes(&dir.join("fig2_summary.csv"), &self.summary_csv_bytes()?)?;
        let raw = csv_bytes(
            &["d", "rep", "method", "lambda", "rel_l1", "rel_frobenius", "precision", "recall", "f1", "issue"],
            self.raw.iter().map(|r| {
                vec![
                    r.d.to_string(),
                    r.rep.to_string(),
                    r.method.name().into(),
                    num(r.lambda),
                    num(r.rel_l1),
                    num(r.rel_frobenius),
                    num(r.precision),
                    num(r.recall),
                    num(r.f1),
                    r.issue.clone().unwrap_or_default(),
                ]
            }),
        )?;
        write_bytes(&dir.join("fig2_raw.csv"), &raw)?;
        let support = csv_bytes(
            &["d", "method", "precision", "recall", "f1", "f1_std", "n_ok"],
            self.support.iter().map(|r| {
                vec![
                    r.d.to_string(),
                    r.method.name().into(),
                    num(r.precision),
                    num(r.recall),
                    num(r.f1),
                    num(r.f1_std),
                    r.n_ok.to_string(),
                ]
            }),
        )?;
        write_bytes(&dir.join("fig2_support.csv"), &support)?;
        for norm in ["l1", "frobenius"] {
            let series: Vec<Series> = Method::ALL
                .iter()
                .zip(["#1b9e77", "#d95f02", "#7570b3"])
                .map(|(&m, color)| Series {
                    name: m.name().into(),
                    color,
                    points: self
                        .summary
                        .iter()
                        .filter(|r| r.method == m && r.norm == norm)
                        .map(|r| (r.d as f64, r.mean, if r.std.is_finite() { r.std } else { 0.0 }))
                        .collect(),
                })
                .collect();
            let chart = svg::line_chart(&format!("relative {norm} error"), "d", "relative error", &series);
            write_file(&dir.join(format!("fig2_{norm}.svg")), &chart)?;
        }
        write_file(&dir.join("run_meta.json"), &self.meta_json()?)
    }

    fn meta_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct CellMeta {
            d: usize,
            rep: usize,
            model_seed: u64,
            path_seed: u64,
            lambda: Option<f64>,
            failed: bool,
        }
        #[derive(Serialize)]
        struct Meta<'a> {
            crate_version: &'static str,
            config: &'a ExperimentConfig,
            lambda_mode: String,
            scheme: String,
            cells: Vec<CellMeta>,
            wall_time_secs: f64,
            note: &'static str,
        }
        let cells = self
            .raw
            .iter()
            .filter(|r| r.method == Method::Lasso)
            .map(|r| {
                let sd = seeds(self.config.seed, r.d, r.rep);
                CellMeta {
                    d: r.d,
                    rep: r.rep,
                    model_seed: sd.model,
                    path_seed: sd.path,
                    lambda: r.lambda.is_finite().then_some(r.lambda),
                    failed: self.raw.iter().any(|x| x.d == r.d && x.rep == r.rep && !x.ok()),
                }
            })
            .collect();
        let meta = Meta {
            crate_version: env!("CARGO_PKG_VERSION"),
            config: &self.config,
            lambda_mode: self.config.lambda_mode.label(),
            scheme: format!("{:?}", self.config.scheme).to_lowercase(),
            cells,
            wall_time_secs: self.wall_time_secs,
            note: "A0 generation law, penalty level and colour scales are choices of this harness; \
                   compare trends across d rather than absolute values",
        };
        Ok(serde_json::to_string_pretty(&meta)?)
    }
}

const SUMMARY_HEADER: &[&str] = &["d", "method", "norm", "mean", "std", "n_ok", "n_failed", "lambda_mean", "lambda_mode"];
