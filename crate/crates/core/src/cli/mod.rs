//! The `oprisk` command line: `simulate`, `fit`, `cvar` and `report`.
//!
//! Exit codes: 0 success, 2 usage or configuration error, 3 data parse
//! error, 4 sampler failure, 5 convergence failure.
//!
//! A master `seed` drives every stage through [`derive_seed`]. The
//! `OPRISK_WORKERS` environment variable caps the worker threads.

mod config;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::cvar::{self, compare_reports, CvarReport};
use crate::error::Error;
use crate::inference::{sample_posterior, SamplerConfig};
use crate::models::{HagParams, ModelKind};
use crate::simulator::{export_panel, import_panel, simulate_panel};

pub use config::{derive_seed, ConfigFile, Levels, KNOWN_KEYS};

/// Convergence gate applied by `fit`.
pub const MAX_RHAT: f64 = 1.01;
pub const MIN_ESS_BULK: f64 = 400.0;

pub const DEFAULT_SEED: u64 = 20240;
pub const DEFAULT_THRESHOLD: f64 = 5e5;
pub const DEFAULT_YEARS: usize = 15;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Lib(#[from] Error),
    #[error("convergence check failed: {0}")]
    Convergence(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Convergence(_) => 5,
            CliError::Lib(e) => match e {
                Error::InvalidParameter(_)
                | Error::InvalidArgument(_)
                | Error::IntensityOverflow { .. }
                | Error::Io { .. } => 2,
                Error::Parse { .. } | Error::Json(_) => 3,
                Error::Sampler(_) | Error::NonFiniteGradient { .. } => 4,
            },
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "oprisk", version, about = "Bayesian operational-risk models: simulate, fit, and tail risk")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// key=value configuration file; flags take precedence
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed from which every stage seed is derived
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a synthetic loss panel from the Hawkes-AR-Gumbel process
    Simulate(SimulateArgs),
    /// Sample a model posterior with NUTS
    Fit(FitArgs),
    /// Posterior-predictive VaR and CVaR
    Cvar(CvarArgs),
    /// Join CVaR reports into one comparison table
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    /// Number of years
    #[arg(long, visible_alias = "T")]
    years: Option<usize>,
    /// Reporting threshold u
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    phi: Option<f64>,
    #[arg(long)]
    mu_lambda: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    mu_sigma: Option<f64>,
    #[arg(long)]
    beta_s: Option<f64>,
    #[arg(long)]
    xi: Option<f64>,
    #[arg(long)]
    theta: Option<f64>,
    /// Output panel (.json for JSON, text otherwise)
    #[arg(long)]
    panel: Option<PathBuf>,
    /// Output JSON with the generating parameters and latent states
    #[arg(long)]
    truth: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FitArgs {
    #[command(flatten)]
    common: Common,
    /// indep, shared or hag
    #[arg(long)]
    model: Option<ModelKind>,
    /// Input panel
    #[arg(long)]
    panel: Option<PathBuf>,
    /// Output draws CSV
    #[arg(long)]
    draws: Option<PathBuf>,
    /// Output diagnostics JSON
    #[arg(long)]
    diagnostics: Option<PathBuf>,
    #[arg(long)]
    chains: Option<usize>,
    #[arg(long)]
    warmup: Option<usize>,
    /// Post-warmup draws per chain
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    target_accept: Option<f64>,
    #[arg(long)]
    max_tree_depth: Option<u32>,
}

#[derive(Debug, Args)]
struct CvarArgs {
    #[command(flatten)]
    common: Common,
    /// Input draws CSV
    #[arg(long)]
    draws: Option<PathBuf>,
    /// Model of the draws when not using the default file name
    #[arg(long)]
    model: Option<ModelKind>,
    #[arg(long)]
    threshold: Option<f64>,
    /// Comma-separated confidence levels
    #[arg(long)]
    levels: Option<Levels>,
    /// Number of predictive simulations M
    #[arg(long)]
    simulations: Option<usize>,
    /// Output report JSON
    #[arg(long)]
    report: Option<PathBuf>,
    /// Output text table
    #[arg(long)]
    table: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ReportArgs {
    #[command(flatten)]
    common: Common,
    /// CVaR report JSON files
    #[arg(required = true)]
    reports: Vec<PathBuf>,
    /// Output text table
    #[arg(long)]
    table: Option<PathBuf>,
}

fn load_config(common: &Common) -> Result<ConfigFile, CliError> {
    match &common.config {
        Some(p) => ConfigFile::load(p),
        None => Ok(ConfigFile::default()),
    }
}

fn master_seed(cfg: &ConfigFile, common: &Common) -> Result<u64, CliError> {
    cfg.resolve_or("seed", common.seed, DEFAULT_SEED)
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    crate::io::write_atomic(path, text.as_bytes())?;
    Ok(())
}

fn cmd_simulate(a: SimulateArgs) -> Result<(), CliError> {
    let cfg = load_config(&a.common)?;
    let d = HagParams::benchmark();
    let p = HagParams {
        phi: cfg.resolve_or("phi", a.phi, d.phi)?,
        mu_lambda: cfg.resolve_or("mu_lambda", a.mu_lambda, d.mu_lambda)?,
        alpha: cfg.resolve_or("alpha", a.alpha, d.alpha)?,
        eta: cfg.resolve_or("eta", a.eta, d.eta)?,
        kappa: cfg.resolve_or("kappa", a.kappa, d.kappa)?,
        mu_sigma: cfg.resolve_or("mu_sigma", a.mu_sigma, d.mu_sigma)?,
        beta_s: cfg.resolve_or("beta_s", a.beta_s, d.beta_s)?,
        xi: cfg.resolve_or("xi", a.xi, d.xi)?,
        theta: cfg.resolve_or("theta", a.theta, d.theta)?,
    };
    p.validate()?;
    let years = cfg.resolve_or("years", a.years, DEFAULT_YEARS)?;
    let threshold = cfg.resolve_or("threshold", a.threshold, DEFAULT_THRESHOLD)?;
    let panel_path = cfg.resolve_or("panel", a.panel, PathBuf::from("panel.txt"))?;
    let truth_path = cfg.resolve_or("truth", a.truth, PathBuf::from("truth.json"))?;
    let seed = derive_seed(master_seed(&cfg, &a.common)?, "simulate");

    let (panel, truth) = simulate_panel(&p, years, threshold, seed)?;
    export_panel(&panel, &panel_path)?;
    write_text(&truth_path, &serde_json::to_string_pretty(&truth).map_err(Error::from)?)?;
    println!(
        "simulated {} years, {} events -> {}",
        panel.years(),
        panel.total_events(),
        panel_path.display()
    );
    Ok(())
}

fn cmd_fit(a: FitArgs) -> Result<(), CliError> {
    let cfg = load_config(&a.common)?;
    let model: ModelKind = cfg
        .resolve("model", a.model)?
        .ok_or_else(|| CliError::Usage("fit needs --model (indep, shared or hag)".into()))?;
    let defaults = SamplerConfig::for_model(model);
    let sampler = SamplerConfig {
        chains: cfg.resolve_or("chains", a.chains, defaults.chains)?,
        warmup: cfg.resolve_or("warmup", a.warmup, defaults.warmup)?,
        draws: cfg.resolve_or("samples", a.samples, defaults.draws)?,
        target_accept: cfg.resolve_or("target_accept", a.target_accept, defaults.target_accept)?,
        max_tree_depth: cfg.resolve_or("max_tree_depth", a.max_tree_depth, defaults.max_tree_depth)?,
        seed: derive_seed(master_seed(&cfg, &a.common)?, "fit"),
    };
    sampler.validate()?;
    let panel_path = cfg.resolve_or("panel", a.panel, PathBuf::from("panel.txt"))?;
    let draws_path = cfg.resolve_or("draws", a.draws, PathBuf::from(format!("draws_{model}.csv")))?;
    let diag_path = cfg.resolve_or(
        "diagnostics",
        a.diagnostics,
        PathBuf::from(format!("diagnostics_{model}.json")),
    )?;
    let panel = import_panel(&panel_path)?;

    eprintln!(
        "fitting {} model: {} chains x ({} warmup + {} draws), target accept {}",
        model.display_name(),
        sampler.chains,
        sampler.warmup,
        sampler.draws,
        sampler.target_accept
    );
    let draws = sample_posterior(model, &panel, &sampler)?;
    draws.save(&draws_path)?;
    let diag = draws.diagnostics();
    write_text(&diag_path, &diag.to_json()?)?;

    println!("{:<10} {:>10} {:>9} {:>21} {:>7} {:>8}", "param", "mean", "sd", "hdi94", "rhat", "ess_bulk");
    for j in 0..draws.structural {
        let s = draws.summary(j);
        println!(
            "{:<10} {:>10.4} {:>9.4} [{:>9.4}, {:>9.4}] {:>7.3} {:>8.0}",
            s.name, s.mean, s.sd, s.hdi_low, s.hdi_high, s.rhat, s.ess_bulk
        );
    }
    println!(
        "divergences {}, tree depth saturations {}",
        diag.divergences, diag.tree_depth_saturations
    );
    let failures = diag.failures(MAX_RHAT, MIN_ESS_BULK);
    if !failures.is_empty() {
        return Err(CliError::Convergence(format!(
            "R-hat >= {MAX_RHAT} or bulk ESS <= {MIN_ESS_BULK} for {}",
            failures.join(", ")
        )));
    }
    Ok(())
}

fn cmd_cvar(a: CvarArgs) -> Result<(), CliError> {
    let cfg = load_config(&a.common)?;
    let model: Option<ModelKind> = cfg.resolve("model", a.model)?;
    let threshold = cfg.resolve_or("threshold", a.threshold, DEFAULT_THRESHOLD)?;
    let levels = cfg.resolve_or("levels", a.levels, Levels(cvar::DEFAULT_LEVELS.to_vec()))?.0;
    let m = cfg.resolve_or("simulations", a.simulations, cvar::DEFAULT_SIMULATIONS)?;
    let default_draws = model.map(|k| PathBuf::from(format!("draws_{k}.csv")));
    let draws_path = cfg
        .resolve("draws", a.draws)?
        .or(default_draws)
        .ok_or_else(|| CliError::Usage("cvar needs --draws or --model".into()))?;
    if !(threshold.is_finite() && threshold > 0.0) {
        return Err(CliError::Usage(format!("threshold must be positive, got {threshold}")));
    }
    if m == 0 {
        return Err(CliError::Usage("simulations must be positive".into()));
    }
    if levels.is_empty() || levels.iter().any(|q| !(*q > 0.0 && *q < 1.0)) || levels.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CliError::Usage(format!(
            "levels must be strictly increasing in (0, 1): {levels:?}"
        )));
    }
    let seed = derive_seed(master_seed(&cfg, &a.common)?, "cvar");

    let draws = crate::inference::PosteriorDraws::load(&draws_path)?;
    if let (Some(k), Some(d)) = (model, draws.model) {
        if k != d {
            return Err(CliError::Usage(format!(
                "--model {k} but {} holds {d} draws",
                draws_path.display()
            )));
        }
    }
    let kind = draws
        .model
        .ok_or_else(|| CliError::Usage("draws file has no model tag".into()))?;
    let report_path = cfg.resolve_or("report", a.report, PathBuf::from(format!("cvar_{kind}.json")))?;
    let report = cvar::estimate_cvar(&draws, threshold, &levels, m, seed)?;
    write_text(&report_path, &report.to_json()?)?;
    let table = report.to_table();
    if let Some(t) = cfg.resolve::<PathBuf>("table", a.table)? {
        write_text(&t, &table)?;
    }
    print!("{table}");
    Ok(())
}

fn cmd_report(a: ReportArgs) -> Result<(), CliError> {
    let cfg = load_config(&a.common)?;
    let reports = a
        .reports
        .iter()
        .map(|p| CvarReport::load(p))
        .collect::<Result<Vec<_>, _>>()?;
    let table = compare_reports(&reports)?;
    if let Some(t) = cfg.resolve::<PathBuf>("table", a.table)? {
        write_text(&t, &table)?;
    }
    print!("{table}");
    Ok(())
}

fn init_workers() -> Result<(), CliError> {
    if let Ok(v) = std::env::var("OPRISK_WORKERS") {
        let n: usize = v
            .parse()
            .map_err(|_| CliError::Usage(format!("OPRISK_WORKERS must be a positive integer, got `{v}`")))?;
        if n == 0 {
            return Err(CliError::Usage("OPRISK_WORKERS must be at least 1".into()));
        }
        // a pool may already exist when called twice in one process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = init_workers().and_then(|_| match cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Fit(a) => cmd_fit(a),
        Command::Cvar(a) => cmd_cvar(a),
        Command::Report(a) => cmd_report(a),
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
