//! Experiment configuration: built-in defaults per experiment, overlaid by a
//! JSON file, overlaid by command-line flags.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use spectral_sparse::tuning::{AlphaRule, RateConfig, SourceCondition, DEFAULT_SUCCESS_THRESHOLD};
use spectral_sparse::{FilterKind, IterativeAlgorithm, SpectralMethod};

use crate::InputError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    CsBench,
    DeblurBench,
    SuccessCurve,
    RateCheck,
    RecoverSingle,
}

/// Every recovery method the runner knows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    L1Svd,
    LHalfSvd,
    Ista,
    Fista,
    PgHalf,
    Naive,
    Tikhonov,
    Landweber,
    Tsvd,
}

impl Algorithm {
    pub const ALL: [Algorithm; 9] = [
        Algorithm::L1Svd,
        Algorithm::LHalfSvd,
        Algorithm::Ista,
        Algorithm::Fista,
        Algorithm::PgHalf,
        Algorithm::Naive,
        Algorithm::Tikhonov,
        Algorithm::Landweber,
        Algorithm::Tsvd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::L1Svd => "l1_svd",
            Algorithm::LHalfSvd => "l_half_svd",
            Algorithm::Ista => "ista",
            Algorithm::Fista => "fista",
            Algorithm::PgHalf => "pg_half",
            Algorithm::Naive => "naive",
            Algorithm::Tikhonov => "tikhonov",
            Algorithm::Landweber => "landweber",
            Algorithm::Tsvd => "tsvd",
        }
    }

    pub fn iterative(self) -> Option<IterativeAlgorithm> {
        match self {
            Algorithm::Ista => Some(IterativeAlgorithm::Ista),
            Algorithm::Fista => Some(IterativeAlgorithm::Fista),
            Algorithm::PgHalf => Some(IterativeAlgorithm::PgHalf),
            _ => None,
        }
    }

    /// Spectral method at `alpha`; `None` for iterative algorithms.
    pub fn spectral(self, alpha: f64) -> Option<SpectralMethod> {
        Some(match self {
            Algorithm::L1Svd => SpectralMethod::L1Svd { alpha },
            Algorithm::LHalfSvd => SpectralMethod::LHalfSvd { alpha },
            Algorithm::Naive => SpectralMethod::Naive,
            Algorithm::Tikhonov => SpectralMethod::Filtered { kind: FilterKind::Tikhonov, alpha },
            Algorithm::Landweber => SpectralMethod::Filtered { kind: FilterKind::Landweber, alpha },
            Algorithm::Tsvd => SpectralMethod::Filtered { kind: FilterKind::Tsvd, alpha },
            Algorithm::Ista | Algorithm::Fista | Algorithm::PgHalf => return None,
        })
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        Algorithm::ALL.into_iter().find(|a| a.name() == s).ok_or_else(|| {
            let names: Vec<&str> = Algorithm::ALL.iter().map(|a| a.name()).collect();
            anyhow::anyhow!("unknown algorithm '{s}' (expected one of {})", names.join(", "))
        })
    }
}

/// Nonzero count of the ground truth: a fraction of `m`, or explicit counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Sparsity {
    Ratio(f64),
    Levels(Vec<usize>),
}

impl Sparsity {
    /// Support sizes for a problem with `m` measurements and `n` unknowns.
    pub fn levels(&self, m: usize, n: usize) -> Vec<usize> {
        match self {
            Sparsity::Ratio(r) => vec![((r * m as f64).round() as usize).min(n)],
            Sparsity::Levels(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Timing {
    /// Monotonic wall clock.
    Wall,
    /// Write `time_ms = 0` so outputs are byte-reproducible.
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SvdRoute {
    /// Decompose the `n x n` Toeplitz factor and expand.
    Kronecker,
    /// Decompose the full `n² x n²` operator.
    Dense,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeblurConfig {
    pub n: usize,
    /// Defaults to `floor(n/4)`.
    pub band: Option<usize>,
    pub taus: Vec<f64>,
    /// Fraction of nonzero pixels in the synthetic image.
    pub image_sparsity: f64,
    /// Optional grayscale image (`n x n` matrix or `n²` vector CSV).
    pub image: Option<PathBuf>,
    pub svd_route: SvdRoute,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateSettings {
    pub sources: Vec<SourceCondition>,
    pub c: f64,
    pub e: f64,
    pub modes: usize,
    pub sigma_min: f64,
    pub delta_hi: f64,
    pub delta_lo: f64,
    pub delta_points: usize,
    /// Also sweep the alternative parameter exponents for comparison.
    pub compare_alternatives: bool,
}

impl RateSettings {
    pub fn protocol(&self, source: SourceCondition, rule: AlphaRule, seed: u64) -> RateConfig {
        RateConfig {
            source,
            rule,
            modes: self.modes,
            sigma_min: self.sigma_min,
            delta_hi: self.delta_hi,
            delta_lo: self.delta_lo,
            delta_points: self.delta_points,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub algorithms: Vec<Algorithm>,
    /// `(m, n)` pairs.
    pub sizes: Vec<(usize, usize)>,
    pub sparsity: Sparsity,
    /// `null` means noiseless data.
    pub snr_db: Option<f64>,
    pub trials: usize,
    pub seed: u64,
    /// Parameter rule for the SVD-based methods.
    pub spectral_alpha_rule: AlphaRule,
    /// Parameter rule for ISTA, FISTA and pg_half (applied to the scaled problem).
    pub iterative_alpha_rule: AlphaRule,
    pub success_threshold: f64,
    pub output_dir: PathBuf,
    pub workers: usize,
    pub timing: Timing,
    pub max_iters: usize,
    pub rel_change_tol: f64,
    pub deblur: DeblurConfig,
    pub rate: RateSettings,
}

impl ExperimentConfig {
    pub fn defaults(experiment: Experiment) -> Self {
        let mut cfg = Self {
            experiment,
            algorithms: vec![Algorithm::L1Svd, Algorithm::LHalfSvd, Algorithm::Ista, Algorithm::Fista],
            sizes: vec![(200, 200)],
            sparsity: Sparsity::Ratio(0.1),
            snr_db: Some(80.0),
            trials: 20,
            seed: 0,
            spectral_alpha_rule: AlphaRule::OderDelta { c: 1e-3 },
            iterative_alpha_rule: AlphaRule::discrepancy_default(),
            success_threshold: DEFAULT_SUCCESS_THRESHOLD,
            output_dir: PathBuf::from("results"),
            workers: 1,
            timing: Timing::Wall,
            max_iters: spectral_sparse::iterative::DEFAULT_MAX_ITERS,
            rel_change_tol: spectral_sparse::iterative::DEFAULT_REL_CHANGE_TOL,
            deblur: DeblurConfig {
                n: 32,
                band: None,
                taus: vec![0.7],
                image_sparsity: 0.1,
                image: None,
                svd_route: SvdRoute::Kronecker,
            },
            rate: RateSettings {
                sources: vec![SourceCondition::Range, SourceCondition::NormalRange],
                c: 1.0,
                e: 1.0,
                modes: 200,
                sigma_min: 1e-4,
                delta_hi: 1e-2,
                delta_lo: 1e-6,
                delta_points: 17,
                compare_alternatives: true,
            },
        };
        match experiment {
            Experiment::DeblurBench => {
                cfg.algorithms = vec![Algorithm::L1Svd, Algorithm::LHalfSvd, Algorithm::PgHalf];
                cfg.trials = 5;
                // A discrepancy scan of a 1024² iterative solve costs minutes.
                cfg.iterative_alpha_rule = AlphaRule::OderDelta { c: 1e-3 };
            }
            Experiment::SuccessCurve => {
                cfg.trials = 50;
                cfg.sparsity = Sparsity::Levels((0..=6).map(|i| 20 * i).collect());
            }
            Experiment::RateCheck => {
                cfg.algorithms = vec![Algorithm::L1Svd];
                cfg.trials = 1;
                cfg.snr_db = None;
            }
            Experiment::CsBench | Experiment::RecoverSingle => {}
        }
        cfg
    }

    /// Defaults for `experiment` with the JSON file at `path` merged on top.
    pub fn load(experiment: Experiment, path: Option<&Path>) -> anyhow::Result<Self> {
        let mut base = serde_json::to_value(Self::defaults(experiment)).expect("defaults serialize");
        if let Some(path) = path {
            let text = std::fs::read_to_string(path)
                .map_err(|e| InputError::new(format!("cannot read config {}: {e}", path.display())))?;
            let overlay: Value = serde_json::from_str(&text)
                .map_err(|e| InputError::new(format!("invalid JSON in config {}: {e}", path.display())))?;
            if !overlay.is_object() {
                return Err(InputError::new(format!("config {} must hold a JSON object", path.display())).into());
            }
            merge(&mut base, overlay);
        }
        if let Some(obj) = base.as_object_mut() {
            obj.insert("experiment".into(), serde_json::to_value(experiment).expect("serializes"));
        }
        let cfg: Self = serde_json::from_value(base).map_err(|e| {
            InputError::new(match path {
                Some(p) => format!("invalid config {}: {e}", p.display()),
                None => format!("invalid config: {e}"),
            })
        })?;
        Ok(cfg)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.trials == 0 {
            bail!("trials must be at least 1");
        }
        if self.workers == 0 {
            bail!("workers must be at least 1");
        }
        if self.algorithms.is_empty() {
            bail!("no algorithms selected");
        }
        if self.sizes.iter().any(|&(m, n)| m == 0 || n == 0) {
            bail!("sizes must be positive");
        }
        if let Some(snr) = self.snr_db {
            if !snr.is_finite() {
                bail!("snr_db must be finite (use null for noiseless data)");
            }
        }
        if let Sparsity::Ratio(r) = self.sparsity {
            if !(0.0..=1.0).contains(&r) {
                bail!("sparsity ratio must lie in [0, 1], got {r}");
            }
        }
        if !(self.success_threshold > 0.0 && self.success_threshold.is_finite()) {
            bail!("success_threshold must be positive");
        }
        if self.max_iters == 0 || self.rel_change_tol <= 0.0 || self.rel_change_tol.is_nan() {
            bail!("max_iters and rel_change_tol must be positive");
        }
        self.spectral_alpha_rule.validate().context("spectral_alpha_rule")?;
        self.iterative_alpha_rule.validate().context("iterative_alpha_rule")?;
        if self.deblur.taus.is_empty() || self.deblur.taus.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
            bail!("deblur.taus must be nonempty and positive");
        }
        if !(0.0..=1.0).contains(&self.deblur.image_sparsity) {
            bail!("deblur.image_sparsity must lie in [0, 1]");
        }
        Ok(())
    }

    pub fn snr(&self) -> f64 {
        self.snr_db.unwrap_or(f64::INFINITY)
    }
}

/// Recursive object merge; non-object values in `overlay` replace `base`.
fn merge(base: &mut Value, overlay: Value) {
    match (base, overlay) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Parses `NAME` or `NAME:C` into a parameter rule.
///
/// `C` is the constant `c` of the rule (or `α` itself for `fixed`).
pub fn parse_alpha_rule(spec: &str) -> anyhow::Result<AlphaRule> {
    let (name, arg) = match spec.split_once(':') {
        Some((n, a)) => (n, Some(a.parse::<f64>().with_context(|| format!("bad constant in '{spec}'"))?)),
        None => (spec, None),
    };
    let rule = match name {
        "fixed" => AlphaRule::Fixed {
            alpha: arg.context("fixed rule needs a value, e.g. fixed:0.01")?,
        },
        "oder_delta" | "order_delta" => AlphaRule::OderDelta { c: arg.unwrap_or(1e-3) },
        "discrepancy" => match (AlphaRule::discrepancy_default(), arg) {
            (AlphaRule::Discrepancy { grid_lo, grid_hi, grid_points, .. }, Some(tau)) => {
                AlphaRule::Discrepancy { tau, grid_lo, grid_hi, grid_points }
            }
            (rule, _) => rule,
        },
        "rate_two_thirds" => AlphaRule::RateTwoThirds { c: arg.unwrap_or(1.0), e: 1.0 },
        "rate_one_half" => AlphaRule::RateOneHalf { c: arg.unwrap_or(1.0), e: 1.0 },
        other => bail!(
            "unknown alpha rule '{other}' (expected fixed, oder_delta, discrepancy, rate_two_thirds, rate_one_half)"
        ),
    };
    rule.validate()?;
    Ok(rule)
}
