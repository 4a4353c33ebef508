//! Parameter choice rules, error metrics and the convergence-rate protocol.

use std::time::Instant;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_finite, Error, Result};
use crate::linalg::{sub, two_norm, DenseMatrix, SingularSystem};
use crate::problems::{derive_seed, rng_from_seed};
use crate::spectral::l1_svd;

pub const DEFAULT_SUCCESS_THRESHOLD: f64 = 1e-2;
pub const DEFAULT_DISCREPANCY_TAU: f64 = 1.01;
pub const DEFAULT_GRID_LO: f64 = 1e-8;
pub const DEFAULT_GRID_HI: f64 = 1e2;
pub const DEFAULT_GRID_POINTS: usize = 40;
/// Stand-in noise level when the data are exact.
pub const DELTA_FLOOR: f64 = 1e-12;

/// `‖x̂ − x‖₂ / ‖x‖₂`
pub fn rerror(x_hat: &[f64], x_true: &[f64]) -> Result<f64> {
    if x_hat.len() != x_true.len() {
        return Err(Error::DimensionMismatch {
            op: "rerror",
            expected: x_true.len(),
            found: x_hat.len(),
        });
    }
    let denom = two_norm(x_true);
    if denom == 0.0 {
        return Err(Error::ZeroSignal);
    }
    Ok(two_norm(&sub(x_hat, x_true)) / denom)
}

/// Inclusive: `rerror ≤ threshold`.
pub fn success(rerror: f64, threshold: f64) -> bool {
    rerror <= threshold
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub rerror: f64,
    pub wall_time_ms: f64,
    pub iterations: usize,
    pub success: bool,
}

/// Fraction of successful trials.
pub fn success_probability(trials: &[Metrics]) -> Result<f64> {
    if trials.is_empty() {
        return Err(Error::InvalidArgument("no trials to aggregate".into()));
    }
    Ok(trials.iter().filter(|m| m.success).count() as f64 / trials.len() as f64)
}

/// Runs `f` and reports its wall time in milliseconds (monotonic clock).
pub fn timed<R>(f: impl FnOnce() -> R) -> (R, f64) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64() * 1e3)
}

/// Median of a nonempty sample; `NaN` for an empty one.
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    }
}

/// How to pick the regularization parameter from the noise level `δ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AlphaRule {
    Fixed { alpha: f64 },
    /// `α = c·δ`
    #[serde(alias = "order_delta")]
    OderDelta { c: f64 },
    /// Morozov scan; grid bounds are multiples of `δ`.
    Discrepancy {
        tau: f64,
        grid_lo: f64,
        grid_hi: f64,
        grid_points: usize,
    },
    /// `α = c(δ/E)^{2/3}`
    RateTwoThirds { c: f64, e: f64 },
    /// `α = c(δ/E)^{1/2}`
    RateOneHalf { c: f64, e: f64 },
    /// `α = c(δ/E)^{exponent}`
    PowerLaw { c: f64, e: f64, exponent: f64 },
}

impl AlphaRule {
    pub fn discrepancy_default() -> Self {
        AlphaRule::Discrepancy {
            tau: DEFAULT_DISCREPANCY_TAU,
            grid_lo: DEFAULT_GRID_LO,
            grid_hi: DEFAULT_GRID_HI,
            grid_points: DEFAULT_GRID_POINTS,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            AlphaRule::Fixed { .. } => "fixed",
            AlphaRule::OderDelta { .. } => "oder_delta",
            AlphaRule::Discrepancy { .. } => "discrepancy",
            AlphaRule::RateTwoThirds { .. } => "rate_two_thirds",
            AlphaRule::RateOneHalf { .. } => "rate_one_half",
            AlphaRule::PowerLaw { .. } => "power_law",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!("{} rule: {name} must be positive, got {v}", self.name())))
            }
        };
        match *self {
            AlphaRule::Fixed { alpha } => positive("alpha", alpha),
            AlphaRule::OderDelta { c } => positive("c", c),
            AlphaRule::Discrepancy { tau, grid_lo, grid_hi, grid_points } => {
                positive("tau", tau)?;
                positive("grid_lo", grid_lo)?;
                positive("grid_hi", grid_hi)?;
                if grid_lo >= grid_hi || grid_points < 2 {
                    return Err(Error::InvalidArgument(
                        "discrepancy grid needs grid_lo < grid_hi and at least 2 points".into(),
                    ));
                }
                Ok(())
            }
            AlphaRule::RateTwoThirds { c, e } | AlphaRule::RateOneHalf { c, e } => {
                positive("c", c)?;
                positive("e", e)
            }
            AlphaRule::PowerLaw { c, e, exponent } => {
                positive("c", c)?;
                positive("e", e)?;
                positive("exponent", exponent)
            }
        }
    }

    /// Closed-form `α(δ)`; `None` for the discrepancy scan, which needs a
    /// solver. `δ = 0` is replaced by [`DELTA_FLOOR`].
    pub fn alpha_for_delta(&self, delta: f64) -> Result<Option<f64>> {
        self.validate()?;
        if !(delta >= 0.0 && delta.is_finite()) {
            return Err(Error::InvalidArgument(format!("noise level must be >= 0, got {delta}")));
        }
        let d = delta.max(DELTA_FLOOR);
        Ok(match *self {
            AlphaRule::Fixed { alpha } => Some(alpha),
            AlphaRule::OderDelta { c } => Some(c * d),
            AlphaRule::Discrepancy { .. } => None,
            AlphaRule::RateTwoThirds { c, e } => Some(c * (d / e).powf(2.0 / 3.0)),
            AlphaRule::RateOneHalf { c, e } => Some(c * (d / e).sqrt()),
            AlphaRule::PowerLaw { c, e, exponent } => Some(c * (d / e).powf(exponent)),
        })
    }

    /// Absolute scan grid for noise level `δ`; `None` unless this is a
    /// discrepancy rule.
    pub fn discrepancy_grid(&self, delta: f64) -> Option<DiscrepancyGrid> {
        match *self {
            AlphaRule::Discrepancy { tau, grid_lo, grid_hi, grid_points } => {
                let d = delta.max(DELTA_FLOOR);
                Some(DiscrepancyGrid {
                    tau,
                    lo: grid_lo * d,
                    hi: grid_hi * d,
                    points: grid_points,
                })
            }
            _ => None,
        }
    }
}

/// Geometric grid of candidate `α` values and the discrepancy factor `τ_d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscrepancyGrid {
    pub tau: f64,
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl DiscrepancyGrid {
    /// Grid values in descending order, from `hi` to `lo`.
    pub fn descending(&self) -> Vec<f64> {
        let ratio = (self.lo / self.hi).ln() / (self.points - 1) as f64;
        (0..self.points)
            .map(|i| match i {
                0 => self.hi,
                i if i == self.points - 1 => self.lo,
                i => self.hi * (ratio * i as f64).exp(),
            })
            .collect()
    }
}

/// Outcome of a discrepancy scan.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaSelection<T> {
    pub alpha: f64,
    /// `false` when even the largest grid value undershoots `τ_d·δ`.
    pub satisfied: bool,
    /// `‖K x̂(α) − y‖₂` at the selected `α`.
    pub residual: f64,
    pub estimate: Vec<f64>,
    /// Whatever extra output the solver returned at the selected `α`.
    pub extra: T,
    pub evaluations: usize,
}

/// Morozov discrepancy principle over a geometric grid.
///
/// Walks the grid downward from `grid.hi` and keeps the smallest `α` whose
/// residual still satisfies `‖K x̂(α) − y‖ ≥ τ_d·δ`. The walk also stops as
/// soon as the residual grows again: an inexact solver can produce
/// non-monotone residuals at small `α`, and those estimates are not trusted.
/// If `grid.hi` already undershoots, it is returned with `satisfied = false`.
pub fn select_alpha_discrepancy<T>(
    k: &DenseMatrix,
    y: &[f64],
    delta: f64,
    grid: &DiscrepancyGrid,
    mut solver: impl FnMut(f64) -> Result<(Vec<f64>, T)>,
) -> Result<AlphaSelection<T>> {
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(Error::InvalidArgument(format!("noise level must be >= 0, got {delta}")));
    }
    if !(grid.lo > 0.0 && grid.lo < grid.hi && grid.hi.is_finite() && grid.points >= 2 && grid.tau > 0.0) {
        return Err(Error::InvalidArgument(format!("invalid discrepancy grid {grid:?}")));
    }
    let target = grid.tau * delta;
    let mut best: Option<AlphaSelection<T>> = None;
    let mut evaluations = 0;
    for alpha in grid.descending() {
        let (x, extra) = solver(alpha)?;
        evaluations += 1;
        check_finite(&x, "solver output")?;
        let residual = two_norm(&sub(&k.matvec(&x)?, y));
        let candidate = AlphaSelection {
            alpha,
            satisfied: residual >= target,
            residual,
            estimate: x,
            extra,
            evaluations,
        };
        match &best {
            None if !candidate.satisfied => {
                best = Some(candidate);
                break;
            }
            None => best = Some(candidate),
            Some(prev) if candidate.satisfied && candidate.residual <= prev.residual => best = Some(candidate),
            Some(_) => break,
        }
    }
    let mut out = best.expect("grid has at least two points");
    out.evaluations = evaluations;
    Ok(out)
}

/// Least-squares line through `(ln x, ln y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn loglog_fit(x: &[f64], y: &[f64]) -> Result<LogLogFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InvalidArgument("log-log fit needs two or more paired points".into()));
    }
    if x.iter().chain(y).any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidArgument("log-log fit needs positive finite values".into()));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = ly.iter().map(|b| (b - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("log-log fit needs distinct x values".into()));
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(LogLogFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
    })
}

/// Smoothness assumption on the true solution in the rate experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceCondition {
    /// `x = Kᵀz`
    Range,
    /// `x = KᵀK z`
    NormalRange,
}

impl SourceCondition {
    /// Expected error exponent in `δ`.
    pub fn expected_slope(self) -> f64 {
        match self {
            SourceCondition::Range => 1.0 / 3.0,
            SourceCondition::NormalRange => 0.5,
        }
    }

    /// Parameter rule that yields [`Self::expected_slope`] for ℓ¹-SVD.
    pub fn default_rule(self, c: f64, e: f64) -> AlphaRule {
        match self {
            SourceCondition::Range => AlphaRule::PowerLaw { c, e, exponent: 4.0 / 3.0 },
            SourceCondition::NormalRange => AlphaRule::PowerLaw { c, e, exponent: 1.0 },
        }
    }
}

/// Diagonal synthetic family for measuring `‖x^{α(δ),δ} − x‖` against `δ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateConfig {
    pub source: SourceCondition,
    pub rule: AlphaRule,
    /// Number of modes; singular values are geometric from 1 to `sigma_min`.
    pub modes: usize,
    pub sigma_min: f64,
    pub delta_hi: f64,
    pub delta_lo: f64,
    pub delta_points: usize,
    pub seed: u64,
}

impl RateConfig {
    pub fn new(source: SourceCondition, seed: u64) -> Self {
        Self {
            source,
            rule: source.default_rule(1.0, 1.0),
            modes: 200,
            sigma_min: 1e-4,
            delta_hi: 1e-2,
            delta_lo: 1e-6,
            delta_points: 17,
            seed,
        }
    }

    pub fn decades(&self) -> f64 {
        (self.delta_hi / self.delta_lo).log10()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub delta: f64,
    pub alpha: f64,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateResult {
    pub points: Vec<RatePoint>,
    pub fit: LogLogFit,
}

/// Sweeps `δ` on a diagonal operator and fits the error exponent.
///
/// `z` and the noise direction are unit vectors drawn once from `seed`, so
/// `E = ‖z‖ = 1` and the noise is exactly `δ` in norm at every level.
pub fn run_rate_protocol(cfg: &RateConfig) -> Result<RateResult> {
    cfg.rule.validate()?;
    if cfg.modes == 0
        || cfg.delta_points < 2
        || !(cfg.sigma_min > 0.0 && cfg.sigma_min <= 1.0)
        || !(cfg.delta_lo > 0.0 && cfg.delta_lo < cfg.delta_hi && cfg.delta_hi.is_finite())
    {
        return Err(Error::InvalidArgument(format!("invalid rate configuration {cfg:?}")));
    }
    if matches!(cfg.rule, AlphaRule::Discrepancy { .. }) {
        return Err(Error::InvalidArgument("rate protocol needs a closed-form parameter rule".into()));
    }
    let n = cfg.modes;
    let sigma: Vec<f64> = (0..n)
        .map(|i| {
            if n == 1 {
                1.0
            } else {
                cfg.sigma_min.powf(i as f64 / (n - 1) as f64)
            }
        })
        .collect();
    let unit = |stream: u64| {
        let mut rng = rng_from_seed(derive_seed(cfg.seed, stream));
        let v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let nv = two_norm(&v);
        v.into_iter().map(|x| x / nv).collect::<Vec<f64>>()
    };
    let z = unit(1);
    let dir = unit(2);
    let power = match cfg.source {
        SourceCondition::Range => 1,
        SourceCondition::NormalRange => 2,
    };
    let x: Vec<f64> = sigma.iter().zip(&z).map(|(s, zi)| s.powi(power) * zi).collect();
    let system = SingularSystem::from_diagonal(&sigma)?;
    let y: Vec<f64> = sigma.iter().zip(&x).map(|(s, xi)| s * xi).collect();

    let ratio = (cfg.delta_lo / cfg.delta_hi).ln() / (cfg.delta_points - 1) as f64;
    let mut points = Vec::with_capacity(cfg.delta_points);
    for i in 0..cfg.delta_points {
        let delta = cfg.delta_hi * (ratio * i as f64).exp();
        let alpha = cfg.rule.alpha_for_delta(delta)?.expect("closed-form rule");
        let yd: Vec<f64> = y.iter().zip(&dir).map(|(a, e)| a + delta * e).collect();
        let xh = l1_svd(&system, &yd, alpha)?;
        points.push(RatePoint {
            delta,
            alpha,
            error: two_norm(&sub(&xh, &x)),
        });
    }
    let deltas: Vec<f64> = points.iter().map(|p| p.delta).collect();
    let errors: Vec<f64> = points.iter().map(|p| p.error).collect();
    let fit = loglog_fit(&deltas, &errors)?;
    Ok(RateResult { points, fit })
}
