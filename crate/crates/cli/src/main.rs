use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use spectral_sparse::tuning::AlphaRule;
use spectral_sparse_cli::config::{parse_alpha_rule, Algorithm, Experiment, ExperimentConfig, Timing};
use spectral_sparse_cli::experiments::{self, RecoverRequest, RunReport};
use spectral_sparse_cli::{exit_code, InputError};

#[derive(Parser)]
#[command(name = "spectral-sparse", version, about = "Sparse recovery via singular value decomposition")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Gaussian compressive sensing benchmark.
    CsBench(Common),
    /// Gaussian deblurring benchmark over blur widths.
    DeblurBench(Common),
    /// Success rate against support size.
    SuccessCurve(Common),
    /// Error-versus-noise rate sweep on diagonal operators.
    RateCheck(Common),
    /// Recover one signal from K.csv and y.csv, or from an instance directory.
    Recover(RecoverArgs),
    /// Write a random compressive sensing instance.
    Generate(GenerateArgs),
}

#[derive(Args)]
struct AlphaArgs {
    /// Fixed regularization parameter.
    #[arg(long, conflicts_with = "alpha_rule")]
    alpha: Option<f64>,
    /// Parameter rule: fixed:A, oder_delta[:C], discrepancy[:TAU], rate_two_thirds[:C], rate_one_half[:C].
    #[arg(long)]
    alpha_rule: Option<String>,
}

impl AlphaArgs {
    fn rule(&self) -> anyhow::Result<Option<AlphaRule>> {
        match (self.alpha, &self.alpha_rule) {
            (Some(alpha), _) => {
                let r = AlphaRule::Fixed { alpha };
                r.validate().map_err(|e| InputError::new(format!("--alpha: {e}")))?;
                Ok(Some(r))
            }
            (None, Some(name)) => Ok(Some(parse_alpha_rule(name).map_err(|e| InputError::new(format!("--alpha-rule: {e:#}")))?)),
            (None, None) => Ok(None),
        }
    }
}

#[derive(Args)]
struct Common {
    /// JSON config merged over the built-in defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, env = "SPECTRAL_SPARSE_SEED")]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    snr_db: Option<f64>,
    #[command(flatten)]
    alpha: AlphaArgs,
    #[arg(long)]
    success_threshold: Option<f64>,
    /// Comma-separated algorithm names.
    #[arg(long, value_delimiter = ',')]
    algorithms: Option<Vec<Algorithm>>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    /// `off` writes zero times so reruns are byte-identical.
    #[arg(long, value_parser = parse_timing)]
    timing: Option<Timing>,
}

fn parse_timing(s: &str) -> Result<Timing, String> {
    match s {
        "wall" => Ok(Timing::Wall),
        "off" => Ok(Timing::Off),
        _ => Err(format!("expected 'wall' or 'off', got '{s}'")),
    }
}

impl Common {
    fn config(&self, experiment: Experiment) -> anyhow::Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::load(experiment, self.config.as_deref())?;
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(t) = self.trials {
            cfg.trials = t;
        }
        if let Some(s) = self.snr_db {
            cfg.snr_db = Some(s);
        }
        if let Some(rule) = self.alpha.rule()? {
            cfg.spectral_alpha_rule = rule;
            cfg.iterative_alpha_rule = rule;
        }
        if let Some(t) = self.success_threshold {
            cfg.success_threshold = t;
        }
        if let Some(a) = &self.algorithms {
            cfg.algorithms = a.clone();
        }
        if let Some(o) = &self.out {
            cfg.output_dir = o.clone();
        }
        if let Some(w) = self.workers {
            cfg.workers = w;
        }
        if let Some(t) = self.timing {
            cfg.timing = t;
        }
        cfg.validate().map_err(|e| InputError::new(format!("invalid configuration: {e:#}")))?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct RecoverArgs {
    #[arg(long, requires = "y", conflicts_with = "instance")]
    k: Option<PathBuf>,
    #[arg(long, requires = "k")]
    y: Option<PathBuf>,
    /// Instance directory written by `generate`.
    #[arg(long)]
    instance: Option<PathBuf>,
    #[arg(long, default_value = "l1_svd")]
    algorithm: Algorithm,
    #[command(flatten)]
    alpha: AlphaArgs,
    /// Noise level `‖y − y_clean‖`, needed by data-driven rules.
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long, default_value = "recovered")]
    out: PathBuf,
    #[arg(long, default_value_t = spectral_sparse::iterative::DEFAULT_MAX_ITERS)]
    max_iters: usize,
    #[arg(long, default_value_t = spectral_sparse::iterative::DEFAULT_REL_CHANGE_TOL)]
    rel_change_tol: f64,
    #[arg(long, value_parser = parse_timing, default_value = "wall")]
    timing: Timing,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, default_value_t = 200)]
    m: usize,
    #[arg(long, default_value_t = 200)]
    n: usize,
    /// Number of nonzeros.
    #[arg(long, default_value_t = 20)]
    s: usize,
    /// Omit for noiseless data.
    #[arg(long)]
    snr_db: Option<f64>,
    #[arg(long, env = "SPECTRAL_SPARSE_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn report(rep: &RunReport) -> anyhow::Result<()> {
    for f in &rep.files {
        println!("wrote {}", f.display());
    }
    if rep.failures.is_empty() {
        return Ok(());
    }
    for f in &rep.failures {
        eprintln!("failed: {f}");
    }
    anyhow::bail!("{} trial(s) did not complete", rep.failures.len())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::CsBench(c) => report(&experiments::run_cs_bench(&c.config(Experiment::CsBench)?)?),
        Command::DeblurBench(c) => report(&experiments::run_deblur_bench(&c.config(Experiment::DeblurBench)?)?),
        Command::SuccessCurve(c) => report(&experiments::run_success_curve(&c.config(Experiment::SuccessCurve)?)?),
        Command::RateCheck(c) => {
            let (rep, lines) = experiments::run_rate_check(&c.config(Experiment::RateCheck)?)?;
            for l in &lines {
                println!(
                    "{:?} {}: slope {:.4} (expected {:.4}), R² {:.4}{}",
                    l.source,
                    l.rule.name(),
                    l.slope,
                    l.expected_slope,
                    l.r_squared,
                    if l.asserted { "" } else { " [comparison only]" }
                );
            }
            report(&rep)
        }
        Command::Recover(r) => {
            let defaults = ExperimentConfig::defaults(Experiment::RecoverSingle);
            let rule = match r.alpha.rule()? {
                Some(rule) => rule,
                None if r.algorithm.iterative().is_some() => defaults.iterative_alpha_rule,
                None => defaults.spectral_alpha_rule,
            };
            let req = RecoverRequest {
                k: r.k,
                y: r.y,
                instance: r.instance,
                algorithm: r.algorithm,
                rule,
                delta: r.delta,
                out: r.out,
                max_iters: r.max_iters,
                rel_change_tol: r.rel_change_tol,
                timing: r.timing,
            };
            let rep = experiments::recover_single(&req)?;
            println!("{}", serde_json::to_string(&rep).context("serializing report")?);
            Ok(())
        }
        Command::Generate(g) => {
            let snr = g.snr_db.unwrap_or(f64::INFINITY);
            let inst = experiments::generate_instance(g.m, g.n, g.s, snr, g.seed, &g.out)?;
            println!("wrote {}x{} instance (delta {:e}) to {}", inst.m(), inst.n(), inst.delta, g.out.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
