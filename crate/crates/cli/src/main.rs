//! `oudrift` command-line tool.
//!
//! Exit codes: 0 success, 1 domain error (for example assumption (H) fails or
//! an estimator cannot run), 2 usage, configuration or I/O error.

mod settings;

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use oudrift::bounds::{BoundsInput, BoundsReport};
use oudrift::estimate::{self, lambda_rule, LambdaConstants};
use oudrift::experiments::{run_fig1, run_fig2, ExperimentConfig};
use oudrift::matrix::format_f64;
use oudrift::model::{check_assumption_h, ergodic_constants, generate_sparse_stable};
use oudrift::simulate::{simulate_path, simulate_stats, sufficient_stats};
use oudrift::{
    DantzigConfig, ErgodicConstants, Error, LassoConfig, Method, ModelSpec, Scheme, SimConfig, SufficientStats,
};

use settings::{BoundsSettings, EstimateSettings, Layers, SimulateSettings};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Lib(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Lib(e) if e.is_domain() => 1,
            CliError::Lib(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::Lib(e) => write!(f, "{e}"),
        }
    }
}

type CliResult<T = ()> = Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(name = "oudrift", version, about = "Sparse drift estimation for Ornstein-Uhlenbeck processes")]
struct Cli {
    /// Directory for output files.
    #[arg(long, global = true, env = "OUDRIFT_OUTPUT_DIR", default_value = ".")]
    output_dir: PathBuf,
    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    /// Only log errors.
    #[arg(short, long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct Common {
    /// JSON settings file; explicit flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override any settings key, e.g. `--set n_steps=2000`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate a trajectory and write its sufficient statistics.
    Simulate(SimulateArgs),
    /// Fit MLE, Lasso and/or Dantzig to sufficient statistics.
    Estimate(EstimateArgs),
    /// Evaluate concentration thresholds and oracle bounds.
    Bounds(BoundsArgs),
    /// Support-recovery heatmaps for one replication.
    Fig1(FigArgs),
    /// Relative error against dimension, replicated.
    Fig2(FigArgs),
    /// Check assumption (H) and print the ergodic constants of a model.
    Check(CheckArgs),
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    /// Model file (JSON or CSV); omit to generate one with --d and --s.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    s: Option<usize>,
    #[arg(long)]
    margin: Option<f64>,
    #[arg(long)]
    model_seed: Option<u64>,
    #[arg(long = "T", alias = "t-horizon")]
    t_horizon: Option<f64>,
    #[arg(long)]
    n_steps: Option<usize>,
    #[arg(long, value_enum)]
    scheme: Option<SchemeArg>,
    #[arg(long)]
    seed: Option<u64>,
    /// Keep Brownian increments (Euler only) so that ε_T is written.
    #[arg(long)]
    brownian: bool,
    /// Also write the full trajectory to path.csv.
    #[arg(long)]
    write_path: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SchemeArg {
    Exact,
    Euler,
}

impl From<SchemeArg> for Scheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::Exact => Scheme::Exact,
            SchemeArg::Euler => Scheme::Euler,
        }
    }
}

#[derive(Args, Debug)]
struct EstimateArgs {
    #[command(flatten)]
    common: Common,
    /// Sufficient statistics JSON written by `simulate`.
    #[arg(long)]
    stats: Option<PathBuf>,
    /// mle, lasso, dantzig or all.
    #[arg(long)]
    method: Option<String>,
    /// Fixed penalty level; defaults to the plug-in rule.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    eps0: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    lp_tol: Option<f64>,
}

#[derive(Args, Debug)]
struct BoundsArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    s: Option<usize>,
    #[arg(long)]
    c0: Option<f64>,
    #[arg(long)]
    eps0: Option<f64>,
    #[arg(long = "T", alias = "t-horizon")]
    t_horizon: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    s0: Option<usize>,
    #[arg(long)]
    lambda: Option<f64>,
    /// Points at which to evaluate H0 (repeatable).
    #[arg(long = "x")]
    h0_points: Vec<f64>,
    /// Use 𝔯₀ = 𝔭₀ = 𝔎∞ = 𝔨∞ = 𝔪∞ = 𝔐∞ = 1.
    #[arg(long, conflicts_with = "model")]
    unit_constants: bool,
    /// Compute the constants from this model.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Print JSON instead of a table.
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct FigArgs {
    #[command(flatten)]
    common: Common,
    /// Dimensions, e.g. `--d 5,10,15` (fig1 uses the first).
    #[arg(long, value_delimiter = ',')]
    d: Vec<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long = "T", alias = "t-horizon")]
    t_horizon: Option<f64>,
    #[arg(long)]
    n_steps: Option<usize>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    margin: Option<f64>,
    /// Fixed penalty; overrides the rule.
    #[arg(long, conflicts_with_all = ["eps0", "lambda_mode"])]
    lambda: Option<f64>,
    #[arg(long, value_enum)]
    lambda_mode: Option<RuleArg>,
    #[arg(long)]
    eps0: Option<f64>,
    #[arg(long, value_enum)]
    scheme: Option<SchemeArg>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum RuleArg {
    PlugIn,
    Theoretical,
}

#[derive(Args, Debug)]
struct CheckArgs {
    /// Model file (JSON or CSV).
    model: PathBuf,
    /// Condition ceiling for the eigenvector matrix.
    #[arg(long, default_value_t = oudrift::model::DEFAULT_CONDITION_CEILING)]
    ceiling: f64,
}

fn ensure_dir(dir: &Path) -> CliResult {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Usage(format!("output directory {} is not writable: {e}", dir.display())))
}

fn scheme_name(s: Scheme) -> &'static str {
    match s {
        Scheme::Exact => "exact",
        Scheme::Euler => "euler",
    }
}

fn simulate(args: SimulateArgs, out: &Path) -> CliResult {
    let mut l = Layers::from_file(args.common.config.as_deref())?;
    l.set_opt("model", args.model);
    l.set_opt("d", args.d);
    l.set_opt("s", args.s);
    l.set_opt("margin", args.margin);
    l.set_opt("model_seed", args.model_seed);
    l.set_opt("t_horizon", args.t_horizon);
    l.set_opt("n_steps", args.n_steps);
    l.set_opt("scheme", args.scheme.map(|s| scheme_name(s.into())));
    l.set_opt("seed", args.seed);
    if args.brownian {
        l.set("brownian", true);
    }
    if args.write_path {
        l.set("write_path", true);
    }
    l.set_pairs(&args.common.set)?;
    let st: SimulateSettings = l.build("simulate")?;

    let model = match (&st.model, st.d) {
        (Some(path), _) => ModelSpec::load(path)?,
        (None, Some(d)) => {
            let s = st.s.unwrap_or(((0.3 * (d * d) as f64).round() as usize).max(d));
            generate_sparse_stable(d, s, st.margin, st.model_seed.unwrap_or(st.seed))?
        }
        (None, None) => return Err(CliError::Usage("simulate needs --model or --d".into())),
    };
    let mut cfg = SimConfig::new(st.t_horizon, st.n_steps, st.scheme, st.seed);
    if st.brownian {
        cfg = cfg.with_brownian();
    }
    ensure_dir(out)?;
    let stats = if st.write_path {
        let path = simulate_path(&model, &cfg)?;
        path.write_csv(out.join("path.csv"))?;
        sufficient_stats(&path)?
    } else {
        simulate_stats(&model, &cfg)?
    };
    model.save(out.join("model.json"))?;
    stats.save(out.join("stats.json"))?;
    log::info!("wrote model.json and stats.json to {}", out.display());
    println!("d={} T={} n_steps={} scheme={}", model.d, st.t_horizon, st.n_steps, scheme_name(st.scheme));
    Ok(())
}

#[derive(Serialize)]
struct EstimateRecord<'a> {
    method: Method,
    lambda: f64,
    lambda_source: &'a str,
    iterations: usize,
    objective: f64,
    kkt_residual: f64,
    dantzig_feasibility: f64,
    l1_norm: f64,
    status: oudrift::SolveStatus,
    a_hat: &'a oudrift::Matrix,
}

fn estimate_cmd(args: EstimateArgs, out: &Path) -> CliResult {
    let mut l = Layers::from_file(args.common.config.as_deref())?;
    l.set_opt("stats", args.stats);
    l.set_opt("method", args.method);
    l.set_opt("lambda", args.lambda);
    l.set_opt("eps0", args.eps0);
    l.set_opt("max_iter", args.max_iter);
    l.set_opt("tol", args.tol);
    l.set_opt("lp_tol", args.lp_tol);
    l.set_pairs(&args.common.set)?;
    let st: EstimateSettings = l.build("estimate")?;

    let path = st.stats.ok_or_else(|| CliError::Usage("estimate needs --stats".into()))?;
    let stats = SufficientStats::load(&path)?;
    let methods: Vec<Method> = if st.method == "all" {
        Method::ALL.to_vec()
    } else {
        vec![st.method.parse().map_err(|e: Error| CliError::Usage(e.to_string()))?]
    };
    let (lambda, source) = match st.lambda {
        Some(v) => (v, "fixed".to_string()),
        None => (
            lambda_rule(stats.dim(), stats.t_horizon, st.eps0, LambdaConstants::PlugIn(&stats.c_hat))?,
            format!("plug_in(eps0={})", st.eps0),
        ),
    };
    ensure_dir(out)?;
    let single = methods.len() == 1;
    let mut stdout = std::io::stdout().lock();
    for m in methods {
        let r = match m {
            Method::Mle => estimate::mle(&stats)?,
            Method::Lasso => {
                let mut cfg = LassoConfig::new(lambda);
                cfg.max_iter = st.max_iter;
                cfg.tol = st.tol;
                estimate::lasso(&stats, &cfg)?
            }
            Method::Dantzig => {
                let mut cfg = DantzigConfig::new(lambda);
                cfg.lp_tol = st.lp_tol;
                estimate::dantzig(&stats, &cfg)?
            }
        };
        let suffix = if single { String::new() } else { format!("_{}", m.name()) };
        r.a_hat.write_csv(out.join(format!("a_hat{suffix}.csv")))?;
        let rec = EstimateRecord {
            method: m,
            lambda: r.lambda,
            lambda_source: if m == Method::Mle { "none" } else { &source },
            iterations: r.iterations,
            objective: r.objective,
            kkt_residual: r.kkt_residual,
            dantzig_feasibility: r.dantzig_feasibility,
            l1_norm: r.l1_norm,
            status: r.status,
            a_hat: &r.a_hat,
        };
        let json = serde_json::to_string_pretty(&rec).map_err(Error::from)?;
        let file = out.join(format!("estimate{suffix}.json"));
        std::fs::write(&file, json)
            .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", file.display())))?;
        let _ = writeln!(
            stdout,
            "{:<8} lambda={} status={:?} iterations={} l1={} feasibility={}",
            m.name(),
            format_f64(r.lambda),
            r.status,
            r.iterations,
            format_f64(r.l1_norm),
            format_f64(r.dantzig_feasibility)
        );
    }
    Ok(())
}

fn bounds_cmd(args: BoundsArgs, out: &Path) -> CliResult {
    let mut l = Layers::from_file(args.common.config.as_deref())?;
    l.set_opt("d", args.d);
    l.set_opt("s", args.s);
    l.set_opt("c0", args.c0);
    l.set_opt("eps0", args.eps0);
    l.set_opt("t_horizon", args.t_horizon);
    l.set_opt("gamma", args.gamma);
    l.set_opt("s0", args.s0);
    l.set_opt("lambda", args.lambda);
    if !args.h0_points.is_empty() {
        l.set("h0_points", &args.h0_points);
    }
    if args.unit_constants {
        l.set("unit_constants", true);
        l.set("model", serde_json::Value::Null);
    }
    if let Some(m) = args.model {
        l.set("model", m);
        l.set("unit_constants", false);
    }
    l.set_pairs(&args.common.set)?;
    let st: BoundsSettings = l.build("bounds")?;

    let (constants, label): (ErgodicConstants, String) = match (&st.model, st.unit_constants) {
        (Some(path), false) => (ergodic_constants(&ModelSpec::load(path)?.a0)?, format!("model {}", path.display())),
        (None, true) => (ErgodicConstants::unit(), "unit".into()),
        _ => return Err(CliError::Usage("bounds needs exactly one of --unit-constants or --model".into())),
    };
    let d = st.d.ok_or_else(|| CliError::Usage("bounds needs --d".into()))?;
    let s = st.s.ok_or_else(|| CliError::Usage("bounds needs --s".into()))?;
    let input = BoundsInput {
        d,
        s,
        c0: st.c0,
        eps0: st.eps0,
        t_horizon: st.t_horizon,
        gamma: st.gamma,
        s0: st.s0,
        lambda: st.lambda,
        h0_points: st.h0_points,
    };
    let report = BoundsReport::build(input, &constants, label)?;
    let json = report.to_json()?;
    if args.json {
        println!("{json}");
    } else {
        println!("{:<20} {:>24}  formula", "quantity", "value");
        for (name, formula, value) in report.table() {
            println!("{name:<20} {:>24}  {formula}", format_f64(value));
        }
        if report.t0_bracket_negative {
            println!("note: the T0 bracket is negative for these inputs");
        }
    }
    ensure_dir(out)?;
    let file = out.join("bounds.json");
    std::fs::write(&file, json).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", file.display())))
}

fn experiment_config(args: &FigArgs) -> CliResult<ExperimentConfig> {
    let mut l = Layers::from_file(args.common.config.as_deref())?;
    if !args.d.is_empty() {
        l.set("d_values", &args.d);
    }
    l.set_opt("seed", args.seed);
    l.set_opt("n_reps", args.reps);
    l.set_opt("t_horizon", args.t_horizon);
    l.set_opt("n_steps", args.n_steps);
    l.set_opt("rho", args.rho);
    l.set_opt("margin", args.margin);
    l.set_opt("scheme", args.scheme.map(|s| scheme_name(s.into())));
    if let Some(v) = args.lambda {
        l.set("lambda_mode", serde_json::json!({"mode": "fixed", "value": v}));
    } else if args.lambda_mode.is_some() || args.eps0.is_some() {
        let file_eps0 = l.get("lambda_mode").and_then(|m| m.get("eps0")).and_then(|v| v.as_f64());
        let eps0 = args.eps0.or(file_eps0).unwrap_or(0.1);
        let mode = match args.lambda_mode {
            Some(RuleArg::Theoretical) => "theoretical",
            Some(RuleArg::PlugIn) => "plug_in",
            None => match l.get("lambda_mode").and_then(|m| m.get("mode")).and_then(|v| v.as_str()) {
                Some("theoretical") => "theoretical",
                _ => "plug_in",
            },
        };
        l.set("lambda_mode", serde_json::json!({"mode": mode, "eps0": eps0}));
    }
    l.set_pairs(&args.common.set)?;
    let cfg: ExperimentConfig = l.build("experiment")?;
    cfg.validate()?;
    Ok(cfg)
}

fn fig1_cmd(args: FigArgs, out: &Path) -> CliResult {
    let mut cfg = experiment_config(&args)?;
    if args.d.is_empty() && args.common.config.is_none() {
        cfg.d_values = vec![15];
    }
    let d = cfg.d_values[0];
    ensure_dir(out)?;
    let bundle = run_fig1(d, &cfg)?;
    bundle.write(out)?;
    for (name, m) in &bundle.support {
        println!("{name:<8} precision={:.3} recall={:.3} f1={:.3}", m.precision, m.recall, m.f1);
    }
    Ok(())
}

fn fig2_cmd(args: FigArgs, out: &Path) -> CliResult {
    let cfg = experiment_config(&args)?;
    ensure_dir(out)?;
    let report = run_fig2(&cfg)?;
    report.write(out)?;
    for r in report.summary.iter().filter(|r| r.norm == "frobenius") {
        println!("d={:<3} {:<8} frobenius mean={:.4} std={:.4} (n={})", r.d, r.method.name(), r.mean, r.std, r.n_ok);
    }
    let failed = report.raw.iter().filter(|r| !r.ok()).count();
    if failed > 0 {
        log::warn!("{failed} estimator runs failed; see fig2_raw.csv");
    }
    Ok(())
}

fn check_cmd(args: CheckArgs) -> CliResult {
    let model = ModelSpec::load(&args.model)?;
    let cert = oudrift::model::check_assumption_h_with(&model.a0, args.ceiling)?;
    println!("d = {}", model.d);
    println!("s0 = {}", model.s0);
    let eig: Vec<String> = cert
        .eigenvalues
        .iter()
        .map(|e| if e.im == 0.0 { format_f64(e.re) } else { format!("{}{:+}i", format_f64(e.re), e.im) })
        .collect();
    println!("eigenvalues = [{}]", eig.join(", "));
    println!("r0 = {}", format_f64(cert.r0));
    println!("p0 = {}", format_f64(cert.p0));
    println!("diagonalizable = {}", cert.diagonalizable);
    println!("condition_estimate = {}", format_f64(cert.condition_estimate));
    println!("s0 >= d: {}", model.s0 >= model.d);
    if !cert.holds() {
        println!("assumption (H): violated");
        let why = if !cert.diagonalizable {
            "eigenvector matrix is numerically singular".to_string()
        } else {
            format!("smallest real part r0 = {} is not positive", format_f64(cert.r0))
        };
        return Err(CliError::Lib(Error::AssumptionH(why)));
    }
    println!("assumption (H): holds");
    let _ = check_assumption_h(&model.a0)?;
    let c = ergodic_constants(&model.a0)?;
    println!("K_inf = {}", format_f64(c.k_big));
    println!("k_inf = {}", format_f64(c.k_small));
    println!("m_inf = {}", format_f64(c.m_small));
    println!("M_inf = {}", format_f64(c.m_big));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet {
        log::LevelFilter::Error
    } else {
        [log::LevelFilter::Warn, log::LevelFilter::Info, log::LevelFilter::Debug][cli.verbose.min(2) as usize]
    };
    env_logger::Builder::new().filter_level(level).parse_default_env().init();

    let out = cli.output_dir.as_path();
    let result = match cli.command {
        Command::Simulate(a) => simulate(a, out),
        Command::Estimate(a) => estimate_cmd(a, out),
        Command::Bounds(a) => bounds_cmd(a, out),
        Command::Fig1(a) => fig1_cmd(a, out),
        Command::Fig2(a) => fig2_cmd(a, out),
        Command::Check(a) => check_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
