//! The benchmark experiments and the single-problem recovery command.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, bail, Context};
use serde::Serialize;
use serde_json::json;
use spectral_sparse::io::{load_instance, read_matrix_csv, read_vector_csv, save_instance, write_vector_csv};
use spectral_sparse::linalg::sub;
use spectral_sparse::problems::{stream, GENERATOR_VERSION};
use spectral_sparse::tuning::{self, run_rate_protocol, AlphaRule, SourceCondition};
use spectral_sparse::{
    blur_operator, blur_singular_system, cond2, derive_seed, make_cs_instance, sparse_signal, svd, two_norm,
    BlurSpec, DenseMatrix, ProblemInstance, SingularSystem,
};

use crate::config::{Algorithm, ExperimentConfig, SvdRoute, Timing};
use crate::output::{format_f64, format_results, write_json, write_table, write_text};
use crate::runner::{self, run_trials, Prepared, Timed, TrialBatch, TrialFailure, TrialSetup};
use crate::InputError;

/// What an experiment produced.
#[derive(Debug, Default)]
pub struct RunReport {
    pub failures: Vec<TrialFailure>,
    pub files: Vec<PathBuf>,
}

fn write_meta(cfg: &ExperimentConfig, extra: serde_json::Value) -> anyhow::Result<PathBuf> {
    let path = cfg.output_dir.join("meta.json");
    let clock = match cfg.timing {
        Timing::Wall => "monotonic wall clock (std::time::Instant), milliseconds",
        Timing::Off => "disabled; time_ms written as 0",
    };
    write_json(
        &path,
        &json!({
            "tool": env!("CARGO_PKG_NAME"),
            "version": env!("CARGO_PKG_VERSION"),
            "generator_version": GENERATOR_VERSION,
            "clock": clock,
            "config": cfg,
            "details": extra,
        }),
    )?;
    Ok(path)
}

fn write_results(cfg: &ExperimentConfig, batch: &TrialBatch) -> anyhow::Result<PathBuf> {
    let path = cfg.output_dir.join("results.csv");
    let rows: Vec<_> = batch.rows().collect();
    write_text(&path, &format_results(&rows))?;
    Ok(path)
}

struct GroupStats {
    completed: usize,
    median_rerror: f64,
    median_time_ms: f64,
    median_iterations: f64,
    success_rate: f64,
}

fn group_stats(batch: &TrialBatch, algorithm_index: usize, group: usize) -> GroupStats {
    let recs: Vec<_> = batch
        .records
        .iter()
        .filter(|r| r.algorithm_index == algorithm_index && r.group == group)
        .collect();
    let pick = |f: &dyn Fn(&runner::ResultRow) -> f64| tuning::median(&recs.iter().map(|r| f(&r.row)).collect::<Vec<_>>());
    GroupStats {
        completed: recs.len(),
        median_rerror: pick(&|r| r.rerror),
        median_time_ms: pick(&|r| r.time_ms),
        median_iterations: pick(&|r| r.iterations as f64),
        success_rate: if recs.is_empty() {
            f64::NAN
        } else {
            recs.iter().filter(|r| r.row.success).count() as f64 / recs.len() as f64
        },
    }
}

fn finish(cfg: &ExperimentConfig, batch: TrialBatch, mut files: Vec<PathBuf>, meta: serde_json::Value) -> anyhow::Result<RunReport> {
    files.insert(0, write_results(cfg, &batch)?);
    files.push(write_meta(cfg, meta)?);
    Ok(RunReport {
        failures: batch.failures,
        files,
    })
}

/// Random Gaussian compressive sensing over `sizes × sparsity levels`.
pub fn run_cs_bench(cfg: &ExperimentConfig) -> anyhow::Result<RunReport> {
    cfg.validate()?;
    let mut groups = Vec::new();
    for &(m, n) in &cfg.sizes {
        for s in cfg.sparsity.levels(m, n) {
            if s > n {
                bail!("sparsity {s} exceeds n = {n}");
            }
            groups.push((m, n, s));
        }
    }
    let tasks: Vec<(usize, usize)> = (0..groups.len())
        .flat_map(|g| (0..cfg.trials).map(move |t| (g, t)))
        .collect();
    let snr = cfg.snr();
    let batch = run_trials(cfg, &tasks, |g, _, seed| {
        let (m, n, s) = groups[g];
        Ok(TrialSetup {
            instance: make_cs_instance(m, n, s, snr, seed)?,
            shared_system: None,
        })
    })?;
    let mut rows = Vec::new();
    for (ai, alg) in cfg.algorithms.iter().enumerate() {
        for (g, &(m, n, s)) in groups.iter().enumerate() {
            let st = group_stats(&batch, ai, g);
            rows.push(vec![
                alg.name().to_string(),
                m.to_string(),
                n.to_string(),
                s.to_string(),
                cfg.trials.to_string(),
                st.completed.to_string(),
                format_f64(st.median_rerror),
                format!("{:.3}", st.median_time_ms),
                st.median_iterations.to_string(),
                st.success_rate.to_string(),
            ]);
        }
    }
    let summary = cfg.output_dir.join("summary.csv");
    write_table(
        &summary,
        "algorithm,m,n,s,trials,completed,median_rerror,median_time_ms,median_iterations,success_rate",
        &rows,
    )?;
    finish(cfg, batch, vec![summary], json!({ "groups": groups }))
}

/// Reads a grayscale image given as an `n x n` matrix or an `n²` vector.
pub fn read_image(path: &Path, n: usize) -> anyhow::Result<Vec<f64>> {
    let k = read_matrix_csv(path).map_err(|e| InputError::new(e.to_string()))?;
    let len = n * n;
    if k.as_slice().len() != len || !(k.rows() == n || k.rows() == len || k.cols() == len) {
        return Err(InputError::new(format!(
            "{}: expected a {n}x{n} image or a vector of {len} pixels, found {}x{}",
            path.display(),
            k.rows(),
            k.cols()
        ))
        .into());
    }
    Ok(k.as_slice().to_vec())
}

struct BlurGroup {
    spec: BlurSpec,
    k: Arc<DenseMatrix>,
    system: Arc<Timed<SingularSystem>>,
    cond: f64,
}

/// Gaussian deblurring over a grid of blur widths.
pub fn run_deblur_bench(cfg: &ExperimentConfig) -> anyhow::Result<RunReport> {
    cfg.validate()?;
    let d = &cfg.deblur;
    let band = d.band.unwrap_or((d.n / 4).max(1));
    let image = d.image.as_deref().map(|p| read_image(p, d.n)).transpose()?;
    let mut groups = Vec::new();
    for &tau in &d.taus {
        let spec = BlurSpec::new(d.n, band, tau)?;
        let k = blur_operator(&spec)?;
        let system = Timed::measure(cfg.timing, || match d.svd_route {
            SvdRoute::Kronecker => blur_singular_system(&spec),
            SvdRoute::Dense => svd(&k, None),
        });
        let system = Timed {
            value: system.value.with_context(|| format!("decomposing blur operator tau={tau}"))?,
            ms: system.ms,
        };
        let cond = cond2(&system.value)?;
        groups.push(BlurGroup {
            spec,
            k: Arc::new(k),
            system: Arc::new(system),
            cond,
        });
    }
    let pixels = d.n * d.n;
    let s_img = ((d.image_sparsity * pixels as f64).round() as usize).min(pixels);
    let tasks: Vec<(usize, usize)> = (0..groups.len())
        .flat_map(|g| (0..cfg.trials).map(move |t| (g, t)))
        .collect();
    let snr = cfg.snr();
    let needs_svd = cfg.algorithms.iter().any(|a| a.iterative().is_none());
    let batch = run_trials(cfg, &tasks, |g, _, seed| {
        let grp = &groups[g];
        let x = match &image {
            Some(img) => img.clone(),
            None => sparse_signal(pixels, s_img, derive_seed(seed, stream::SIGNAL))?,
        };
        let mut inst =
            ProblemInstance::from_parts((*grp.k).clone(), x, snr, seed, derive_seed(seed, stream::NOISE))?;
        inst.blur = Some(grp.spec);
        Ok(TrialSetup {
            instance: inst,
            shared_system: needs_svd.then(|| grp.system.clone()),
        })
    })?;
    let mut rows = Vec::new();
    for (ai, alg) in cfg.algorithms.iter().enumerate() {
        for (g, grp) in groups.iter().enumerate() {
            let st = group_stats(&batch, ai, g);
            rows.push(vec![
                alg.name().to_string(),
                d.n.to_string(),
                band.to_string(),
                grp.spec.tau.to_string(),
                format_f64(grp.cond),
                pixels.to_string(),
                cfg.trials.to_string(),
                st.completed.to_string(),
                format_f64(st.median_rerror),
                format!("{:.3}", st.median_time_ms),
                st.median_iterations.to_string(),
                st.success_rate.to_string(),
            ]);
        }
    }
    let summary = cfg.output_dir.join("summary.csv");
    write_table(
        &summary,
        "algorithm,image_n,band,tau,cond,pixels,trials,completed,median_rerror,median_time_ms,median_iterations,success_rate",
        &rows,
    )?;
    let conds: Vec<_> = groups
        .iter()
        .map(|g| json!({ "tau": g.spec.tau, "band": g.spec.band, "cond": g.cond, "svd_ms": g.system.ms }))
        .collect();
    finish(cfg, batch, vec![summary], json!({ "blur": conds, "image_nonzeros": s_img }))
}

/// Success rate against support size at a fixed operator size.
pub fn run_success_curve(cfg: &ExperimentConfig) -> anyhow::Result<RunReport> {
    cfg.validate()?;
    let &(m, n) = cfg.sizes.first().context("success curve needs one size")?;
    let levels = cfg.sparsity.levels(m, n);
    if let Some(&s) = levels.iter().find(|&&s| s > n) {
        bail!("support {s} exceeds n = {n}");
    }
    let tasks: Vec<(usize, usize)> = (0..levels.len())
        .flat_map(|g| (0..cfg.trials).map(move |t| (g, t)))
        .collect();
    let snr = cfg.snr();
    let batch = run_trials(cfg, &tasks, |g, _, seed| {
        Ok(TrialSetup {
            instance: make_cs_instance(m, n, levels[g], snr, seed)?,
            shared_system: None,
        })
    })?;
    let mut rows = Vec::new();
    for (g, &s) in levels.iter().enumerate() {
        for (ai, alg) in cfg.algorithms.iter().enumerate() {
            let st = group_stats(&batch, ai, g);
            rows.push(vec![s.to_string(), alg.name().to_string(), st.success_rate.to_string()]);
        }
    }
    let curve = cfg.output_dir.join("success_curve.csv");
    write_table(&curve, "supp,algorithm,success_rate", &rows)?;
    let mut summary_rows = Vec::new();
    for (ai, alg) in cfg.algorithms.iter().enumerate() {
        for (g, &s) in levels.iter().enumerate() {
            let st = group_stats(&batch, ai, g);
            summary_rows.push(vec![
                alg.name().to_string(),
                m.to_string(),
                n.to_string(),
                s.to_string(),
                cfg.trials.to_string(),
                st.completed.to_string(),
                format_f64(st.median_rerror),
                format!("{:.3}", st.median_time_ms),
                st.median_iterations.to_string(),
                st.success_rate.to_string(),
            ]);
        }
    }
    let summary = cfg.output_dir.join("summary.csv");
    write_table(
        &summary,
        "algorithm,m,n,s,trials,completed,median_rerror,median_time_ms,median_iterations,success_rate",
        &summary_rows,
    )?;
    finish(cfg, batch, vec![curve, summary], json!({ "m": m, "n": n, "supports": levels }))
}

/// One fitted sweep of the rate experiment.
#[derive(Debug, Clone, Serialize)]
pub struct RateLine {
    pub source: SourceCondition,
    pub rule: AlphaRule,
    pub exponent: f64,
    pub expected_slope: f64,
    pub slope: f64,
    pub r_squared: f64,
    /// Whether this sweep uses the rule the error estimate is stated for.
    pub asserted: bool,
    pub within_tolerance: bool,
}

pub const RATE_SLOPE_TOLERANCE: f64 = 0.15;

fn rule_exponent(rule: &AlphaRule) -> f64 {
    match *rule {
        AlphaRule::PowerLaw { exponent, .. } => exponent,
        AlphaRule::RateTwoThirds { .. } => 2.0 / 3.0,
        AlphaRule::RateOneHalf { .. } => 0.5,
        AlphaRule::OderDelta { .. } => 1.0,
        _ => f64::NAN,
    }
}

/// Error-versus-noise sweeps for ℓ¹-SVD under both source conditions.
pub fn run_rate_check(cfg: &ExperimentConfig) -> anyhow::Result<(RunReport, Vec<RateLine>)> {
    let r = &cfg.rate;
    let mut lines = Vec::new();
    let mut point_rows = Vec::new();
    for &source in &r.sources {
        let mut rules = vec![(source.default_rule(r.c, r.e), true)];
        if r.compare_alternatives {
            let alt = match source {
                SourceCondition::Range => AlphaRule::RateTwoThirds { c: r.c, e: r.e },
                SourceCondition::NormalRange => AlphaRule::RateOneHalf { c: r.c, e: r.e },
            };
            rules.push((alt, false));
        }
        for (rule, asserted) in rules {
            let res = run_rate_protocol(&r.protocol(source, rule, cfg.seed))?;
            let source_name = serde_json::to_value(source)?.as_str().unwrap_or_default().to_string();
            for p in &res.points {
                point_rows.push(vec![
                    source_name.clone(),
                    rule.name().to_string(),
                    rule_exponent(&rule).to_string(),
                    format_f64(p.delta),
                    format_f64(p.alpha),
                    format_f64(p.error),
                ]);
            }
            let expected = source.expected_slope();
            lines.push(RateLine {
                source,
                rule,
                exponent: rule_exponent(&rule),
                expected_slope: expected,
                slope: res.fit.slope,
                r_squared: res.fit.r_squared,
                asserted,
                within_tolerance: (res.fit.slope - expected).abs() <= RATE_SLOPE_TOLERANCE,
            });
        }
    }
    let rate = cfg.output_dir.join("rate.csv");
    write_table(&rate, "source,rule,exponent,delta,alpha,error", &point_rows)?;
    let summary = cfg.output_dir.join("summary.csv");
    let rows: Vec<Vec<String>> = lines
        .iter()
        .map(|l| {
            vec![
                serde_json::to_value(l.source).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default(),
                l.rule.name().to_string(),
                l.exponent.to_string(),
                l.expected_slope.to_string(),
                l.slope.to_string(),
                l.r_squared.to_string(),
                l.asserted.to_string(),
                l.within_tolerance.to_string(),
            ]
        })
        .collect();
    write_table(
        &summary,
        "source,rule,exponent,expected_slope,slope,r_squared,asserted,within_tolerance",
        &rows,
    )?;
    let meta = write_meta(cfg, json!({ "fits": lines, "decades": (r.delta_hi / r.delta_lo).log10() }))?;
    Ok((
        RunReport {
            failures: Vec::new(),
            files: vec![rate, summary, meta],
        },
        lines,
    ))
}

/// Inputs of the single-problem recovery command.
#[derive(Debug, Clone)]
pub struct RecoverRequest {
    pub k: Option<PathBuf>,
    pub y: Option<PathBuf>,
    pub instance: Option<PathBuf>,
    pub algorithm: Algorithm,
    pub rule: AlphaRule,
    /// Noise level for data-driven rules; taken from the instance if absent.
    pub delta: Option<f64>,
    pub out: PathBuf,
    pub max_iters: usize,
    pub rel_change_tol: f64,
    pub timing: Timing,
}

/// Sidecar written next to `x_hat.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecoverReport {
    pub algorithm: String,
    pub alpha_rule: AlphaRule,
    pub alpha: f64,
    pub iterations: usize,
    /// `‖K x̂ − y‖₂` on the unscaled operator.
    pub residual: f64,
    pub time_ms: f64,
    /// Present when the ground truth is known.
    pub rerror: Option<f64>,
}

fn input<T>(r: spectral_sparse::Result<T>) -> anyhow::Result<T> {
    r.map_err(|e| InputError::new(e.to_string()).into())
}

pub fn recover_single(req: &RecoverRequest) -> anyhow::Result<RecoverReport> {
    req.rule.validate()?;
    let (k, y, delta, truth) = match (&req.instance, &req.k, &req.y) {
        (Some(dir), None, None) => {
            let inst = input(load_instance(dir))?;
            (inst.k, inst.y_noisy, req.delta.or(Some(inst.delta)), Some(inst.x_true))
        }
        (None, Some(kp), Some(yp)) => {
            let k = input(read_matrix_csv(kp))?;
            let y = input(read_vector_csv(yp))?;
            if y.len() != k.rows() {
                return Err(InputError::new(format!(
                    "{}: data length {} does not match {} rows of {}",
                    yp.display(),
                    y.len(),
                    k.rows(),
                    kp.display()
                ))
                .into());
            }
            (k, y, req.delta, None)
        }
        _ => bail!("pass either --instance DIR or both --k FILE and --y FILE"),
    };
    let needs_delta = !matches!(req.rule, AlphaRule::Fixed { .. }) && req.algorithm != Algorithm::Naive;
    let delta = match delta {
        Some(d) => d,
        None if needs_delta => bail!("alpha rule '{}' needs the noise level; pass --delta", req.rule.name()),
        None => 0.0,
    };
    let mut cfg = ExperimentConfig::defaults(crate::config::Experiment::RecoverSingle);
    cfg.algorithms = vec![req.algorithm];
    cfg.spectral_alpha_rule = req.rule;
    cfg.iterative_alpha_rule = req.rule;
    cfg.max_iters = req.max_iters;
    cfg.rel_change_tol = req.rel_change_tol;
    cfg.timing = req.timing;
    let inst = ProblemInstance {
        x_true: vec![0.0; k.cols()],
        y_clean: y.clone(),
        y_noisy: y,
        delta,
        snr_db: f64::INFINITY,
        seed: 0,
        s: 0,
        blur: None,
        k,
    };
    let (system, scaled) = if req.algorithm.iterative().is_some() {
        (None, Some(runner::prepare_scaled(&inst.k, req.timing)?))
    } else {
        (Some(runner::prepare_svd(&inst.k, req.timing)?), None)
    };
    let prep = Prepared {
        instance: &inst,
        system: system.as_ref(),
        scaled: scaled.as_ref(),
    };
    let out = runner::run_algorithm(req.algorithm, &prep, &cfg)?;
    let residual = two_norm(&sub(&inst.k.matvec(&out.x_hat)?, &inst.y_noisy));
    let rerror = match &truth {
        Some(t) if t.iter().any(|v| *v != 0.0) => Some(tuning::rerror(&out.x_hat, t)?),
        _ => None,
    };
    let report = RecoverReport {
        algorithm: req.algorithm.name().into(),
        alpha_rule: req.rule,
        alpha: out.alpha,
        iterations: out.iterations,
        residual,
        time_ms: out.time_ms,
        rerror,
    };
    std::fs::create_dir_all(&req.out).with_context(|| format!("creating {}", req.out.display()))?;
    write_vector_csv(&req.out.join("x_hat.csv"), &out.x_hat)?;
    write_json(&req.out.join("x_hat.json"), &report)?;
    Ok(report)
}

/// Writes one compressive-sensing instance to `dir`.
pub fn generate_instance(m: usize, n: usize, s: usize, snr_db: f64, seed: u64, dir: &Path) -> anyhow::Result<ProblemInstance> {
    let inst = make_cs_instance(m, n, s, snr_db, seed)?;
    save_instance(dir, &inst).map_err(|e| anyhow!("{e}"))?;
    Ok(inst)
}
