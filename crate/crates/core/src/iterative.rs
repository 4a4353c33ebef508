//! Iterative thresholding baselines: ISTA, FISTA and iterative half
//! thresholding (`pg_half`).
//!
//! All three expect an operator with `‖K‖₂ < 1`; see [`scale_operator`].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{check_alpha, check_finite, Error, Result};
use crate::linalg::{axpy, dot, spectral_norm, sub, two_norm, DenseMatrix};
use crate::threshold::{half_threshold, soft_threshold};

pub const DEFAULT_MAX_ITERS: usize = 2000;
pub const DEFAULT_REL_CHANGE_TOL: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IterativeAlgorithm {
    Ista,
    Fista,
    PgHalf,
}

impl IterativeAlgorithm {
    pub const ALL: [IterativeAlgorithm; 3] =
        [IterativeAlgorithm::Ista, IterativeAlgorithm::Fista, IterativeAlgorithm::PgHalf];

    pub fn name(self) -> &'static str {
        match self {
            IterativeAlgorithm::Ista => "ista",
            IterativeAlgorithm::Fista => "fista",
            IterativeAlgorithm::PgHalf => "pg_half",
        }
    }
}

impl fmt::Display for IterativeAlgorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for IterativeAlgorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        IterativeAlgorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown iterative algorithm '{s}'")))
    }
}

/// Gradient step length for `pg_half`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepScale {
    /// `μ = 0.99 / σ₁(K)²`
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterativeSpec {
    pub algorithm: IterativeAlgorithm,
    pub alpha: f64,
    pub max_iters: usize,
    pub rel_change_tol: f64,
    /// Only `pg_half` uses this; ISTA and FISTA take unit steps.
    pub step_scale: StepScale,
    pub record_objective: bool,
}

impl IterativeSpec {
    pub fn new(algorithm: IterativeAlgorithm, alpha: f64) -> Self {
        Self {
            algorithm,
            alpha,
            max_iters: DEFAULT_MAX_ITERS,
            rel_change_tol: DEFAULT_REL_CHANGE_TOL,
            step_scale: StepScale::Auto,
            record_objective: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)?;
        if self.max_iters == 0 {
            return Err(Error::InvalidArgument("max_iters must be at least 1".into()));
        }
        if !(self.rel_change_tol > 0.0 && self.rel_change_tol.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "rel_change_tol must be positive, got {}",
                self.rel_change_tol
            )));
        }
        if let StepScale::Fixed(mu) = self.step_scale {
            if !(mu > 0.0 && mu.is_finite()) {
                return Err(Error::InvalidArgument(format!("step must be positive, got {mu}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct IterateTrace {
    pub iterations_run: usize,
    /// Objective at `x0` followed by one value per iteration, when requested.
    pub objective_history: Option<Vec<f64>>,
    pub converged: bool,
}

/// Scales `K` so that its spectral norm is below one.
///
/// Returns `(cK, c)` with `c = 0.99/σ₁` when `σ₁ ≥ 1` and `c = 1` otherwise.
/// Data vectors must be multiplied by the same `c`.
pub fn scale_operator(k: &DenseMatrix) -> Result<(DenseMatrix, f64)> {
    let sigma_max = spectral_norm(k);
    if sigma_max == 0.0 {
        return Err(Error::ZeroOperator);
    }
    let c = if sigma_max >= 1.0 { 0.99 / sigma_max } else { 1.0 };
    Ok((if c == 1.0 { k.clone() } else { k.scaled(c) }, c))
}

/// Next FISTA momentum parameter `(1 + √(1 + 4t²)) / 2`.
pub fn fista_momentum(t: f64) -> f64 {
    (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0
}

/// `‖Kx − y‖² + α‖x‖₁`
pub fn l1_objective(k: &DenseMatrix, y: &[f64], x: &[f64], alpha: f64) -> Result<f64> {
    let r = sub(&k.matvec(x)?, y);
    Ok(dot(&r, &r) + alpha * x.iter().map(|v| v.abs()).sum::<f64>())
}

/// `‖Kx − y‖² + α Σ|xᵢ|^{1/2}`
pub fn half_objective(k: &DenseMatrix, y: &[f64], x: &[f64], alpha: f64) -> Result<f64> {
    let r = sub(&k.matvec(x)?, y);
    Ok(dot(&r, &r) + alpha * x.iter().map(|v| v.abs().sqrt()).sum::<f64>())
}

type Objective = fn(&DenseMatrix, &[f64], &[f64], f64) -> Result<f64>;

pub fn ista(k: &DenseMatrix, y: &[f64], spec: &IterativeSpec, x0: Option<&[f64]>) -> Result<(Vec<f64>, IterateTrace)> {
    run(k, y, spec, x0, IterativeAlgorithm::Ista)
}

pub fn fista(k: &DenseMatrix, y: &[f64], spec: &IterativeSpec, x0: Option<&[f64]>) -> Result<(Vec<f64>, IterateTrace)> {
    run(k, y, spec, x0, IterativeAlgorithm::Fista)
}

pub fn pg_half(k: &DenseMatrix, y: &[f64], spec: &IterativeSpec, x0: Option<&[f64]>) -> Result<(Vec<f64>, IterateTrace)> {
    run(k, y, spec, x0, IterativeAlgorithm::PgHalf)
}

/// Runs `spec.algorithm`.
pub fn solve(k: &DenseMatrix, y: &[f64], spec: &IterativeSpec, x0: Option<&[f64]>) -> Result<(Vec<f64>, IterateTrace)> {
    run(k, y, spec, x0, spec.algorithm)
}

fn run(
    k: &DenseMatrix,
    y: &[f64],
    spec: &IterativeSpec,
    x0: Option<&[f64]>,
    algorithm: IterativeAlgorithm,
) -> Result<(Vec<f64>, IterateTrace)> {
    spec.validate()?;
    if y.len() != k.rows() {
        return Err(Error::DimensionMismatch {
            op: algorithm.name(),
            expected: k.rows(),
            found: y.len(),
        });
    }
    check_finite(y, "data vector")?;
    let n = k.cols();
    let mut x = match x0 {
        Some(x0) if x0.len() != n => {
            return Err(Error::DimensionMismatch {
                op: "initial iterate",
                expected: n,
                found: x0.len(),
            })
        }
        Some(x0) => {
            check_finite(x0, "initial iterate")?;
            x0.to_vec()
        }
        None => vec![0.0; n],
    };
    let sigma_max = spectral_norm(k);
    if sigma_max >= 1.0 {
        return Err(Error::OperatorNotScaled { sigma_max });
    }
    let alpha = spec.alpha;
    let (step, objective): (f64, Objective) = match algorithm {
        IterativeAlgorithm::Ista | IterativeAlgorithm::Fista => (1.0, l1_objective),
        IterativeAlgorithm::PgHalf => (
            match spec.step_scale {
                StepScale::Auto if sigma_max > 0.0 => 0.99 / (sigma_max * sigma_max),
                StepScale::Auto => 1.0,
                StepScale::Fixed(mu) => mu,
            },
            half_objective,
        ),
    };
    let shrink = |t: f64| match algorithm {
        IterativeAlgorithm::PgHalf => half_threshold(t, step * alpha, 1.0),
        _ => soft_threshold(t, alpha),
    };

    let mut history = spec.record_objective.then(Vec::new);
    if let Some(h) = history.as_mut() {
        h.push(objective(k, y, &x, alpha)?);
    }
    let mut x_prev = x.clone();
    let mut t = 1.0;
    let mut trace = IterateTrace::default();
    for iter in 1..=spec.max_iters {
        // Gradient point: the iterate itself, or the FISTA extrapolation.
        let z = if algorithm == IterativeAlgorithm::Fista {
            let t_next = fista_momentum(t);
            let beta = (t - 1.0) / t_next;
            t = t_next;
            let mut z = x.clone();
            axpy(beta, &sub(&x, &x_prev), &mut z);
            z
        } else {
            x.clone()
        };
        let residual = sub(&k.matvec(&z)?, y);
        let grad = k.matvec_transpose(&residual)?;
        let mut next = z;
        axpy(-step, &grad, &mut next);
        next.iter_mut().for_each(|v| *v = shrink(*v));
        check_finite(&next, "iterate")?;

        let change = two_norm(&sub(&next, &x)) / two_norm(&x).max(1.0);
        x_prev = std::mem::replace(&mut x, next);
        trace.iterations_run = iter;
        if let Some(h) = history.as_mut() {
            h.push(objective(k, y, &x, alpha)?);
        }
        if change < spec.rel_change_tol {
            trace.converged = true;
            break;
        }
    }
    trace.objective_history = history;
    Ok((x, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::svd;
    use crate::spectral::{l1_svd, l_half_svd};

    fn spec(algorithm: IterativeAlgorithm, alpha: f64) -> IterativeSpec {
        IterativeSpec::new(algorithm, alpha)
    }

    #[test]
    fn zero_data_is_a_fixed_point() {
        let k = DenseMatrix::from_diag(&[0.5, 0.3]);
        for a in IterativeAlgorithm::ALL {
            let (x, tr) = solve(&k, &[0.0, 0.0], &spec(a, 0.1), None).unwrap();
            assert_eq!(x, vec![0.0, 0.0]);
            assert_eq!(tr.iterations_run, 1);
            assert!(tr.converged);
        }
    }

    #[test]
    fn scalar_fixed_point() {
        // x = S_0.1(0.75x + 0.5)  ⇒  0.75x + 0.45 = x  ⇒  x = 1.8
        let k = DenseMatrix::from_diag(&[0.5]);
        let mut sp = spec(IterativeAlgorithm::Ista, 0.1);
        sp.rel_change_tol = 1e-14;
        sp.max_iters = 100_000;
        let (x, tr) = ista(&k, &[1.0], &sp, None).unwrap();
        assert!(tr.converged);
        assert!((x[0] - 1.8).abs() < 1e-12, "{}", x[0]);
        assert!((x[0] - soft_threshold(x[0] - 0.25 * x[0] + 0.5, 0.1)).abs() < 1e-12);
    }

    #[test]
    fn unscaled_operator_is_rejected() {
        let k = DenseMatrix::from_diag(&[2.0, 0.5]);
        for a in IterativeAlgorithm::ALL {
            assert!(matches!(
                solve(&k, &[1.0, 1.0], &spec(a, 0.1), None),
                Err(Error::OperatorNotScaled { .. })
            ));
        }
    }

    #[test]
    fn scale_operator_examples() {
        let k = DenseMatrix::from_diag(&[0.5, 0.2]);
        let (ks, c) = scale_operator(&k).unwrap();
        assert_eq!(c, 1.0);
        assert_eq!(ks, k);
        let k = DenseMatrix::from_diag(&[10.0, 2.0]);
        let (ks, c) = scale_operator(&k).unwrap();
        assert!((c - 0.099).abs() < 1e-14);
        assert!((spectral_norm(&ks) - 0.99).abs() < 1e-12);
        let c1 = crate::linalg::cond2(&svd(&k, None).unwrap()).unwrap();
        let c2 = crate::linalg::cond2(&svd(&ks, None).unwrap()).unwrap();
        assert!((c1 - c2).abs() <= 1e-10 * c1);
        assert!(matches!(scale_operator(&DenseMatrix::zeros(2, 2)), Err(Error::ZeroOperator)));
    }

    #[test]
    fn momentum_sequence() {
        assert_eq!(fista_momentum(1.0), (1.0 + 5f64.sqrt()) / 2.0);
    }

    #[test]
    fn invalid_specs() {
        let k = DenseMatrix::from_diag(&[0.5]);
        let mut sp = spec(IterativeAlgorithm::Ista, 0.1);
        sp.max_iters = 0;
        assert!(ista(&k, &[1.0], &sp, None).is_err());
        let mut sp = spec(IterativeAlgorithm::PgHalf, 0.1);
        sp.step_scale = StepScale::Fixed(-1.0);
        assert!(pg_half(&k, &[1.0], &sp, None).is_err());
        assert!(ista(&k, &[1.0, 2.0], &spec(IterativeAlgorithm::Ista, 0.1), None).is_err());
        assert!(ista(&k, &[1.0], &spec(IterativeAlgorithm::Ista, 0.1), Some(&[0.0, 0.0])).is_err());
        assert!(ista(&k, &[1.0], &spec(IterativeAlgorithm::Ista, -0.1), None).is_err());
    }

    #[test]
    fn large_alpha_zeroes_pg_half_in_one_step() {
        let k = DenseMatrix::from_diag(&[0.9, 0.5]);
        let (x, tr) = pg_half(&k, &[1.0, -1.0], &spec(IterativeAlgorithm::PgHalf, 100.0), None).unwrap();
        assert_eq!(x, vec![0.0, 0.0]);
        assert_eq!(tr.iterations_run, 1);
    }

    #[test]
    fn diagonal_limits_match_spectral_estimates() {
        let d = [0.9, 0.7, 0.5, 0.3];
        let k = DenseMatrix::from_diag(&d);
        let y = [1.0, -0.4, 0.3, 0.05];
        let s = svd(&k, None).unwrap();
        let mut sp = spec(IterativeAlgorithm::Ista, 0.1);
        sp.rel_change_tol = 1e-13;
        sp.max_iters = 100_000;
        let target = l1_svd(&s, &y, 0.1).unwrap();
        for a in [IterativeAlgorithm::Ista, IterativeAlgorithm::Fista] {
            sp.algorithm = a;
            let (x, _) = solve(&k, &y, &sp, None).unwrap();
            for (u, v) in x.iter().zip(&target) {
                assert!((u - v).abs() < 1e-6, "{a}: {x:?} vs {target:?}");
            }
        }
        sp.algorithm = IterativeAlgorithm::PgHalf;
        sp.alpha = 0.05;
        let (x, _) = solve(&k, &y, &sp, None).unwrap();
        for ((&xi, &si), &yi) in x.iter().zip(&d).zip(&y) {
            if xi != 0.0 {
                let r = 2.0 * si * (si * xi - yi) + sp.alpha * xi.signum() / (2.0 * xi.abs().sqrt());
                assert!(r.abs() <= 1e-6, "{r}");
            }
        }
        // Same minimizer family as the closed-form map when started there.
        let lh = l_half_svd(&s, &y, 0.05).unwrap();
        let (x, _) = solve(&k, &y, &sp, Some(&lh)).unwrap();
        for (u, v) in x.iter().zip(&lh) {
            assert!((u - v).abs() < 1e-6);
        }
    }

    #[test]
    fn ista_objective_is_monotone_and_deterministic() {
        let k = DenseMatrix::from_fn(8, 6, |i, j| (((i * 7 + j * 3) % 11) as f64 - 5.0) / 30.0);
        let (ks, c) = scale_operator(&k).unwrap();
        let y: Vec<f64> = (0..8).map(|i| c * ((i as f64).sin())).collect();
        let mut sp = spec(IterativeAlgorithm::Ista, 0.01);
        sp.record_objective = true;
        let (x1, t1) = ista(&ks, &y, &sp, None).unwrap();
        let h = t1.objective_history.as_ref().unwrap();
        assert_eq!(h.len(), t1.iterations_run + 1);
        assert!(h.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        let (x2, t2) = ista(&ks, &y, &sp, None).unwrap();
        assert_eq!(x1, x2);
        assert_eq!(t1, t2);
    }
}
