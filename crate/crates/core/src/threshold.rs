//! Pointwise shrinkage maps and the classical spectral filters.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Soft thresholding with dead zone `[-α/2, α/2]`.
///
/// Proximal map of `α|x|` for the quadratic `(x - t)²`.
pub fn soft_threshold(t: f64, alpha: f64) -> f64 {
    debug_assert!(alpha > 0.0);
    let m = t.abs() - 0.5 * alpha;
    if m <= 0.0 {
        0.0
    } else {
        m.copysign(t)
    }
}

/// Magnitude below which [`half_threshold`] returns zero: `¾ α^{2/3}`.
pub fn half_threshold_knee(alpha: f64) -> f64 {
    0.75 * alpha.powf(2.0 / 3.0)
}

/// Half thresholding `H_{α,n}(t)` for singular value `sigma_n`.
///
/// Zero when `|t| ≤ ¾α^{2/3}`, otherwise
/// `(2 / (3σₙ^{4/3})) · t · (1 + cos(2π/3 − ⅔φ))` with
/// `φ = arccos((α/8)(|t|/3)^{-3/2})`. For `t = σₙ^{1/3} y` this is the
/// stationary point of `(σₙx − y)² + α|x|^{1/2}` picked by the largest
/// root of the associated cubic.
pub fn half_threshold(t: f64, alpha: f64, sigma_n: f64) -> f64 {
    debug_assert!(alpha > 0.0 && sigma_n > 0.0);
    if t.abs() <= half_threshold_knee(alpha) {
        return 0.0;
    }
    let arg = (alpha / 8.0) * (t.abs() / 3.0).powf(-1.5);
    let phi = arg.clamp(1e-16 - 1.0, 1.0).acos();
    let scale = 2.0 / (3.0 * sigma_n.powf(4.0 / 3.0));
    scale * t * (1.0 + (2.0 * PI / 3.0 - 2.0 * phi / 3.0).cos())
}

/// Validated `(α, σₙ)` pair for repeated half thresholding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdParams {
    alpha: f64,
    sigma_n: f64,
}

impl ThresholdParams {
    pub fn new(alpha: f64, sigma_n: f64) -> Result<Self> {
        crate::error::check_alpha(alpha)?;
        if !(sigma_n > 0.0 && sigma_n.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "singular value must be positive and finite, got {sigma_n}"
            )));
        }
        Ok(Self { alpha, sigma_n })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn sigma_n(&self) -> f64 {
        self.sigma_n
    }

    pub fn soft(&self, t: f64) -> f64 {
        soft_threshold(t, self.alpha)
    }

    pub fn half(&self, t: f64) -> f64 {
        half_threshold(t, self.alpha, self.sigma_n)
    }
}

/// Classical linear regularizing filters `q(α, σ)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterKind {
    Tikhonov,
    Landweber,
    Tsvd,
}

impl FilterKind {
    pub const ALL: [FilterKind; 3] = [FilterKind::Tikhonov, FilterKind::Landweber, FilterKind::Tsvd];

    pub fn name(self) -> &'static str {
        match self {
            FilterKind::Tikhonov => "tikhonov",
            FilterKind::Landweber => "landweber",
            FilterKind::Tsvd => "tsvd",
        }
    }
}

impl fmt::Display for FilterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FilterKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FilterKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown filter '{s}'")))
    }
}

/// Filter factor `q(α, σ) ∈ [0, 1]`.
///
/// * Tikhonov: `σ² / (α + σ²)`
/// * Landweber: `1 − (1 − ασ²)^{1/α}`, base clamped at 0, evaluated in log space
/// * TSVD: `1` if `σ² ≥ α`, else `0`
pub fn classical_filter(kind: FilterKind, alpha: f64, sigma: f64) -> f64 {
    debug_assert!(alpha > 0.0 && sigma > 0.0);
    let s2 = sigma * sigma;
    match kind {
        FilterKind::Tikhonov => s2 / (alpha + s2),
        FilterKind::Landweber => {
            let a = alpha * s2;
            if a >= 1.0 {
                1.0
            } else {
                (-((-a).ln_1p() / alpha).exp_m1()).clamp(0.0, 1.0)
            }
        }
        FilterKind::Tsvd => {
            if s2 >= alpha {
                1.0
            } else {
                0.0
            }
        }
    }
}
