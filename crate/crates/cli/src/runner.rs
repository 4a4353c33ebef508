//! Trial execution shared by all benchmark experiments.

use std::fmt;

use anyhow::{anyhow, Context};
use rayon::prelude::*;
use spectral_sparse::tuning::{self, AlphaRule, DiscrepancyGrid};
use spectral_sparse::{
    derive_seed, recover, scale_operator, select_alpha_discrepancy, solve, svd, DenseMatrix, IterativeSpec,
    ProblemInstance, SingularSystem,
};

use crate::config::{Algorithm, ExperimentConfig, Timing};

/// One row of `results.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub algorithm: String,
    pub m: usize,
    pub n: usize,
    pub s: usize,
    pub snr_db: f64,
    pub alpha: f64,
    pub rerror: f64,
    pub iterations: usize,
    pub time_ms: f64,
    pub success: bool,
    pub seed: u64,
}

/// A row plus the keys used to order output deterministically.
#[derive(Debug, Clone)]
pub struct TrialRecord {
    pub algorithm_index: usize,
    pub group: usize,
    pub trial: usize,
    pub row: ResultRow,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialFailure {
    pub algorithm: String,
    pub group: usize,
    pub trial: usize,
    pub seed: u64,
    pub message: String,
}

impl fmt::Display for TrialFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "algorithm={} group={} trial={} seed={}: {}",
            self.algorithm, self.group, self.trial, self.seed, self.message
        )
    }
}

#[derive(Debug, Default)]
pub struct TrialBatch {
    pub records: Vec<TrialRecord>,
    pub failures: Vec<TrialFailure>,
}

impl TrialBatch {
    fn sort(&mut self) {
        self.records.sort_by_key(|r| (r.algorithm_index, r.group, r.trial));
        self.failures.sort_by(|a, b| (a.group, a.trial, &a.algorithm).cmp(&(b.group, b.trial, &b.algorithm)));
    }

    pub fn rows(&self) -> impl Iterator<Item = &ResultRow> {
        self.records.iter().map(|r| &r.row)
    }
}

/// Seed of trial `trial` in group `group`.
pub fn trial_seed(base: u64, group: usize, trial: usize) -> u64 {
    derive_seed(base, ((group as u64) << 32) | trial as u64)
}

/// Value plus the milliseconds it took to produce.
#[derive(Debug)]
pub struct Timed<T> {
    pub value: T,
    pub ms: f64,
}

impl<T> Timed<T> {
    pub fn measure(timing: Timing, f: impl FnOnce() -> T) -> Self {
        let (value, ms) = tuning::timed(f);
        Self {
            value,
            ms: if timing == Timing::Off { 0.0 } else { ms },
        }
    }
}

/// Operator-level work shared by every algorithm in a trial.
pub struct Prepared<'a> {
    pub instance: &'a ProblemInstance,
    pub system: Option<&'a Timed<SingularSystem>>,
    pub scaled: Option<&'a Timed<(DenseMatrix, f64)>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub x_hat: Vec<f64>,
    pub alpha: f64,
    pub iterations: usize,
    pub time_ms: f64,
}

/// Singular system of the instance operator, timed.
pub fn prepare_svd(k: &DenseMatrix, timing: Timing) -> anyhow::Result<Timed<SingularSystem>> {
    let t = Timed::measure(timing, || svd(k, None));
    Ok(Timed {
        value: t.value.context("singular value decomposition")?,
        ms: t.ms,
    })
}

/// Scaled operator for the iterative solvers, timed.
pub fn prepare_scaled(k: &DenseMatrix, timing: Timing) -> anyhow::Result<Timed<(DenseMatrix, f64)>> {
    let t = Timed::measure(timing, || scale_operator(k));
    Ok(Timed {
        value: t.value.context("operator scaling")?,
        ms: t.ms,
    })
}

fn discrepancy_grid(rule: &AlphaRule, delta: f64) -> anyhow::Result<DiscrepancyGrid> {
    rule.discrepancy_grid(delta)
        .ok_or_else(|| anyhow!("rule {} has no discrepancy grid", rule.name()))
}

/// Runs one algorithm on one prepared instance.
pub fn run_algorithm(
    algorithm: Algorithm,
    prep: &Prepared<'_>,
    cfg: &ExperimentConfig,
) -> anyhow::Result<Outcome> {
    let inst = prep.instance;
    let y = &inst.y_noisy;
    let delta = inst.delta;
    if let Some(alg) = algorithm.iterative() {
        let scaled = prep.scaled.ok_or_else(|| anyhow!("scaled operator not prepared"))?;
        let (ks, c) = (&scaled.value.0, scaled.value.1);
        let yc: Vec<f64> = y.iter().map(|v| c * v).collect();
        let dc = c * delta;
        let mut spec = IterativeSpec::new(alg, 1.0);
        spec.max_iters = cfg.max_iters;
        spec.rel_change_tol = cfg.rel_change_tol;
        let rule = cfg.iterative_alpha_rule;
        let run = Timed::measure(cfg.timing, || -> anyhow::Result<(Vec<f64>, f64, usize)> {
            match rule.alpha_for_delta(dc)? {
                Some(alpha) => {
                    spec.alpha = alpha;
                    let (x, trace) = solve(ks, &yc, &spec, None)?;
                    Ok((x, alpha, trace.iterations_run))
                }
                None => {
                    let grid = discrepancy_grid(&rule, dc)?;
                    let sel = select_alpha_discrepancy(ks, &yc, dc, &grid, |alpha| {
                        let mut sp = spec;
                        sp.alpha = alpha;
                        solve(ks, &yc, &sp, None).map(|(x, t)| (x, t.iterations_run))
                    })?;
                    Ok((sel.estimate, sel.alpha, sel.extra))
                }
            }
        });
        let (x_hat, alpha, iterations) = run.value?;
        return Ok(Outcome {
            x_hat,
            alpha,
            iterations,
            time_ms: scaled.ms + run.ms,
        });
    }

    let system = prep.system.ok_or_else(|| anyhow!("singular system not prepared"))?;
    let s = &system.value;
    let rule = cfg.spectral_alpha_rule;
    let run = Timed::measure(cfg.timing, || -> anyhow::Result<(Vec<f64>, f64)> {
        if algorithm == Algorithm::Naive {
            return Ok((recover(s, y, algorithm.spectral(0.0).expect("spectral"))?, 0.0));
        }
        match rule.alpha_for_delta(delta)? {
            Some(alpha) => Ok((recover(s, y, algorithm.spectral(alpha).expect("spectral"))?, alpha)),
            None => {
                let grid = discrepancy_grid(&rule, delta)?;
                let sel = select_alpha_discrepancy(&inst.k, y, delta, &grid, |alpha| {
                    recover(s, y, algorithm.spectral(alpha).expect("spectral")).map(|x| (x, ()))
                })?;
                Ok((sel.estimate, sel.alpha))
            }
        }
    });
    let (x_hat, alpha) = run.value?;
    Ok(Outcome {
        x_hat,
        alpha,
        iterations: 0,
        time_ms: system.ms + run.ms,
    })
}

/// Relative error, or the absolute error norm when the truth is zero.
pub fn trial_error(x_hat: &[f64], x_true: &[f64]) -> anyhow::Result<f64> {
    if x_true.iter().all(|v| *v == 0.0) {
        Ok(spectral_sparse::two_norm(x_hat))
    } else {
        Ok(tuning::rerror(x_hat, x_true)?)
    }
}

/// Everything a trial needs besides its algorithms.
pub struct TrialSetup {
    pub instance: ProblemInstance,
    /// Precomputed system shared across the group (deblurring).
    pub shared_system: Option<std::sync::Arc<Timed<SingularSystem>>>,
}

/// Runs `cfg.algorithms` on every `(group, trial)` task.
///
/// `make` builds the trial's instance from its seed. Work is spread over
/// `cfg.workers` threads; the output order does not depend on scheduling.
pub fn run_trials(
    cfg: &ExperimentConfig,
    tasks: &[(usize, usize)],
    make: impl Fn(usize, usize, u64) -> anyhow::Result<TrialSetup> + Sync,
) -> anyhow::Result<TrialBatch> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .context("starting worker pool")?;
    let needs_svd = cfg.algorithms.iter().any(|a| a.iterative().is_none());
    let needs_scaled = cfg.algorithms.iter().any(|a| a.iterative().is_some());
    let parts: Vec<TrialBatch> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(group, trial)| {
                let seed = trial_seed(cfg.seed, group, trial);
                let mut batch = TrialBatch::default();
                let fail_all = |batch: &mut TrialBatch, msg: String| {
                    for a in &cfg.algorithms {
                        batch.failures.push(TrialFailure {
                            algorithm: a.name().into(),
                            group,
                            trial,
                            seed,
                            message: msg.clone(),
                        });
                    }
                };
                let setup = match make(group, trial, seed) {
                    Ok(s) => s,
                    Err(e) => {
                        fail_all(&mut batch, format!("{e:#}"));
                        return batch;
                    }
                };
                let inst = &setup.instance;
                let local_svd = match (&setup.shared_system, needs_svd) {
                    (None, true) => Some(prepare_svd(&inst.k, cfg.timing)),
                    _ => None,
                };
                let scaled = needs_scaled.then(|| prepare_scaled(&inst.k, cfg.timing));
                for (ai, &alg) in cfg.algorithms.iter().enumerate() {
                    let system = match (&setup.shared_system, &local_svd) {
                        (Some(s), _) => Ok(Some(s.as_ref())),
                        (None, Some(Ok(s))) => Ok(Some(s)),
                        (None, Some(Err(e))) => Err(anyhow!("{e:#}")),
                        (None, None) => Ok(None),
                    };
                    let scaled_ref = match &scaled {
                        Some(Ok(s)) => Ok(Some(s)),
                        Some(Err(e)) => Err(anyhow!("{e:#}")),
                        None => Ok(None),
                    };
                    let result = system.and_then(|system| {
                        let scaled = scaled_ref?;
                        let prep = Prepared {
                            instance: inst,
                            system: if alg.iterative().is_none() { system } else { None },
                            scaled: if alg.iterative().is_some() { scaled } else { None },
                        };
                        let out = run_algorithm(alg, &prep, cfg)?;
                        let err = trial_error(&out.x_hat, &inst.x_true)?;
                        Ok((out, err))
                    });
                    match result {
                        Ok((out, err)) => batch.records.push(TrialRecord {
                            algorithm_index: ai,
                            group,
                            trial,
                            row: ResultRow {
                                algorithm: alg.name().into(),
                                m: inst.m(),
                                n: inst.n(),
                                s: inst.s,
                                snr_db: inst.snr_db,
                                alpha: out.alpha,
                                rerror: err,
                                iterations: out.iterations,
                                time_ms: out.time_ms,
                                success: tuning::success(err, cfg.success_threshold),
                                seed,
                            },
                        }),
                        Err(e) => batch.failures.push(TrialFailure {
                            algorithm: alg.name().into(),
                            group,
                            trial,
                            seed,
                            message: format!("{e:#}"),
                        }),
                    }
                }
                batch
            })
            .collect()
    });
    let mut all = TrialBatch::default();
    for p in parts {
        all.records.extend(p.records);
        all.failures.extend(p.failures);
    }
    all.sort();
    Ok(all)
}
