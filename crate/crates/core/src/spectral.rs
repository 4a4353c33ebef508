//! Reconstruction from a precomputed singular system.
//!
//! Every method here works coefficient by coefficient: project the data onto
//! `uₙ`, map the coefficient, and resynthesize along `vₙ`.

use crate::error::{check_alpha, check_finite, Error, Result};
use crate::linalg::SingularSystem;
use crate::threshold::{classical_filter, half_threshold, soft_threshold, FilterKind};

/// Which spectral reconstruction to apply.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpectralMethod {
    Naive,
    Filtered { kind: FilterKind, alpha: f64 },
    L1Svd { alpha: f64 },
    LHalfSvd { alpha: f64 },
}

impl SpectralMethod {
    pub fn alpha(&self) -> Option<f64> {
        match *self {
            SpectralMethod::Naive => None,
            SpectralMethod::Filtered { alpha, .. }
            | SpectralMethod::L1Svd { alpha }
            | SpectralMethod::LHalfSvd { alpha } => Some(alpha),
        }
    }
}

fn coefficients(s: &SingularSystem, y: &[f64]) -> Result<Vec<f64>> {
    if s.is_empty() {
        return Err(Error::EmptySingularSystem);
    }
    check_finite(y, "data vector")?;
    s.project(y)
}

fn map_and_synthesize(
    s: &SingularSystem,
    y: &[f64],
    f: impl Fn(f64, f64) -> f64,
) -> Result<Vec<f64>> {
    let mut c = coefficients(s, y)?;
    for (ci, &sigma) in c.iter_mut().zip(s.sigma()) {
        *ci = f(*ci, sigma);
    }
    s.synthesize(&c)
}

/// `Σ ⟨y,uₙ⟩/σₙ · vₙ` over the retained triplets.
pub fn naive_inverse(s: &SingularSystem, y: &[f64]) -> Result<Vec<f64>> {
    map_and_synthesize(s, y, |c, sigma| c / sigma)
}

/// `Σ q(α,σₙ)/σₙ · ⟨y,uₙ⟩ · vₙ`.
pub fn filtered_inverse(s: &SingularSystem, y: &[f64], kind: FilterKind, alpha: f64) -> Result<Vec<f64>> {
    check_alpha(alpha)?;
    map_and_synthesize(s, y, |c, sigma| classical_filter(kind, alpha, sigma) / sigma * c)
}

/// ℓ¹-SVD: `Σ S_α(σₙ⟨y,uₙ⟩)/σₙ² · vₙ`.
///
/// Coordinatewise minimizer of `‖Kx − y‖² + α‖x‖₁` in the `vₙ` basis.
pub fn l1_svd(s: &SingularSystem, y: &[f64], alpha: f64) -> Result<Vec<f64>> {
    check_alpha(alpha)?;
    map_and_synthesize(s, y, |c, sigma| soft_threshold(sigma * c, alpha) / (sigma * sigma))
}

/// ℓ¹ᐟ²-SVD: `Σ H_{α,n}(σₙ^{1/3}⟨y,uₙ⟩) · vₙ`.
pub fn l_half_svd(s: &SingularSystem, y: &[f64], alpha: f64) -> Result<Vec<f64>> {
    check_alpha(alpha)?;
    map_and_synthesize(s, y, |c, sigma| half_threshold(sigma.cbrt() * c, alpha, sigma))
}

pub fn recover(s: &SingularSystem, y: &[f64], method: SpectralMethod) -> Result<Vec<f64>> {
    match method {
        SpectralMethod::Naive => naive_inverse(s, y),
        SpectralMethod::Filtered { kind, alpha } => filtered_inverse(s, y, kind, alpha),
        SpectralMethod::L1Svd { alpha } => l1_svd(s, y, alpha),
        SpectralMethod::LHalfSvd { alpha } => l_half_svd(s, y, alpha),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{svd, DenseMatrix};
    use proptest::prelude::*;

    fn diag_system(d: &[f64]) -> SingularSystem {
        svd(&DenseMatrix::from_diag(d), None).unwrap()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn naive_examples() {
        let y = [0.3, -2.0, 5.0];
        let s = svd(&DenseMatrix::identity(3), None).unwrap();
        assert!(close(&naive_inverse(&s, &y).unwrap(), &y, 1e-15));
        let s = diag_system(&[2.0, 1.0]);
        assert_eq!(naive_inverse(&s, &[4.0, 1.0]).unwrap(), vec![2.0, 1.0]);
    }

    #[test]
    fn naive_round_trip() {
        let k = DenseMatrix::from_fn(5, 5, |i, j| if i == j { 4.0 } else { ((i + 2 * j) % 3) as f64 * 0.3 });
        let x = [1.0, -0.5, 0.25, 2.0, -1.5];
        let y = k.matvec(&x).unwrap();
        let xr = naive_inverse(&svd(&k, None).unwrap(), &y).unwrap();
        assert!(close(&xr, &x, 1e-8));
    }

    #[test]
    fn filtered_examples() {
        let s = diag_system(&[2.0, 1.0]);
        let y = [4.0, 1.0];
        assert!(close(&filtered_inverse(&s, &y, FilterKind::Tikhonov, 1.0).unwrap(), &[1.6, 0.5], 1e-15));
        assert_eq!(
            filtered_inverse(&s, &y, FilterKind::Tsvd, 0.5).unwrap(),
            naive_inverse(&s, &y).unwrap()
        );
    }

    #[test]
    fn landweber_limit_on_well_separated_spectrum() {
        // Spectrum chosen so the printed factor's limit 1 − exp(−σ²) is 1 to
        // well below the tolerance.
        let k = DenseMatrix::new(3, 3, vec![6.0, 0.5, 0.0, 0.5, 5.0, 0.2, 0.0, 0.2, 4.5]).unwrap();
        let s = svd(&k, None).unwrap();
        assert!(*s.sigma().last().unwrap() > 4.0);
        let y = [1.0, -2.0, 0.5];
        let lw = filtered_inverse(&s, &y, FilterKind::Landweber, 1e-6).unwrap();
        assert!(close(&lw, &naive_inverse(&s, &y).unwrap(), 1e-4));
    }

    #[test]
    fn l1_svd_example() {
        let s = diag_system(&[2.0, 1.0]);
        let x = l1_svd(&s, &[4.0, 1.0], 1.0).unwrap();
        assert!(close(&x, &[1.875, 0.5], 1e-15));
        // Brute force over a fine grid per coordinate.
        for (n, (&sigma, &yn)) in [2.0, 1.0].iter().zip(&[4.0, 1.0]).enumerate() {
            let phi = |t: f64| (sigma * t - yn).powi(2) + 1.0 * t.abs();
            let best = (-40000..=40000)
                .map(|i| i as f64 * 1e-4)
                .min_by(|a, b| phi(*a).total_cmp(&phi(*b)))
                .unwrap();
            assert!((best - x[n]).abs() <= 1e-4);
            assert!(phi(x[n]) <= phi(best));
        }
    }

    #[test]
    fn l1_svd_dead_zone() {
        let s = diag_system(&[2.0, 1.0]);
        let y = [4.0, 1.0];
        let alpha = 2.0 * 8.0;
        assert_eq!(l1_svd(&s, &y, alpha).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn l1_svd_small_alpha_approaches_naive() {
        let d = [3.0, 0.5, 1.5];
        let s = diag_system(&d);
        let y = [1.0, 2.0, -3.0];
        let alpha = 1e-6;
        let bound = alpha * d.iter().map(|v| 1.0 / (v * v)).fold(0.0, f64::max) / 2.0;
        assert!(close(&l1_svd(&s, &y, alpha).unwrap(), &naive_inverse(&s, &y).unwrap(), bound * 1.0001));
    }

    #[test]
    fn l_half_svd_identity_example() {
        let s = svd(&DenseMatrix::identity(5), None).unwrap();
        let x = l_half_svd(&s, &[1.0, 0.0, 0.0, 0.0, 0.0], 0.1).unwrap();
        assert!(x[1..].iter().all(|&v| v == 0.0));
        let r = 2.0 * (x[0] - 1.0) + 0.1 * x[0].signum() / (2.0 * x[0].abs().sqrt());
        assert!(r.abs() <= 1e-8, "{r}");
    }

    #[test]
    fn l_half_svd_limits() {
        let d = [3.0, 0.5, 1.5];
        let s = diag_system(&d);
        let y = [1.0, 2.0, -3.0];
        assert_eq!(l_half_svd(&s, &y, 1e3).unwrap(), vec![0.0; 3]);
        assert!(close(&l_half_svd(&s, &y, 1e-9).unwrap(), &naive_inverse(&s, &y).unwrap(), 1e-4));
    }

    #[test]
    fn empty_system_and_bad_alpha_fail() {
        let s = svd(&DenseMatrix::zeros(2, 2), None).unwrap();
        assert!(matches!(naive_inverse(&s, &[1.0, 1.0]), Err(Error::EmptySingularSystem)));
        assert!(matches!(l1_svd(&s, &[1.0, 1.0], 1.0), Err(Error::EmptySingularSystem)));
        let s = diag_system(&[1.0]);
        assert!(l1_svd(&s, &[1.0], 0.0).is_err());
        assert!(l_half_svd(&s, &[1.0], f64::NAN).is_err());
        assert!(l1_svd(&s, &[1.0, 2.0], 1.0).is_err());
    }

    #[test]
    fn recover_dispatches() {
        let s = diag_system(&[2.0, 1.0]);
        let y = [4.0, 1.0];
        assert_eq!(recover(&s, &y, SpectralMethod::Naive).unwrap(), naive_inverse(&s, &y).unwrap());
        assert_eq!(recover(&s, &y, SpectralMethod::L1Svd { alpha: 1.0 }).unwrap(), l1_svd(&s, &y, 1.0).unwrap());
        assert_eq!(
            recover(&s, &y, SpectralMethod::LHalfSvd { alpha: 0.2 }).unwrap(),
            l_half_svd(&s, &y, 0.2).unwrap()
        );
        assert_eq!(
            recover(&s, &y, SpectralMethod::Filtered { kind: FilterKind::Tikhonov, alpha: 1.0 }).unwrap(),
            vec![1.6, 0.5]
        );
        assert_eq!(SpectralMethod::Naive.alpha(), None);
    }

    #[test]
    fn sign_flips_do_not_change_estimates() {
        let k = DenseMatrix::from_fn(6, 4, |i, j| ((3 * i + 5 * j) % 7) as f64 - 3.0 + 0.1 * i as f64);
        let s = svd(&k, None).unwrap();
        let flipped = s.with_flipped_signs(&[0, 2]);
        let y = [0.4, -1.0, 2.0, 0.1, 0.0, 1.3];
        for alpha in [1e-3, 0.1, 1.0] {
            assert!(close(&l1_svd(&s, &y, alpha).unwrap(), &l1_svd(&flipped, &y, alpha).unwrap(), 1e-12));
            assert!(close(&l_half_svd(&s, &y, alpha).unwrap(), &l_half_svd(&flipped, &y, alpha).unwrap(), 1e-12));
        }
    }

    proptest! {
        #[test]
        fn support_shrinks_with_alpha(d in prop::collection::vec(0.1f64..5.0, 1..8), seed in prop::collection::vec(-3.0f64..3.0, 8)) {
            let s = diag_system(&d);
            let y = &seed[..d.len()];
            let grid = [1e-4, 1e-2, 0.1, 0.5, 1.0, 3.0, 10.0];
            let nnz = |x: Vec<f64>| x.iter().filter(|v| **v != 0.0).count();
            let l1: Vec<usize> = grid.iter().map(|&a| nnz(l1_svd(&s, y, a).unwrap())).collect();
            let lh: Vec<usize> = grid.iter().map(|&a| nnz(l_half_svd(&s, y, a).unwrap())).collect();
            prop_assert!(l1.windows(2).all(|w| w[0] >= w[1]));
            prop_assert!(lh.windows(2).all(|w| w[0] >= w[1]));
        }

        #[test]
        fn l1_svd_is_stable_under_noise(
            d in prop::collection::vec(0.1f64..5.0, 3),
            y in prop::collection::vec(-3.0f64..3.0, 3),
            dir in prop::collection::vec(-1.0f64..1.0, 3),
            delta in 1e-9f64..1e-3,
            alpha in 1e-3f64..2.0,
        ) {
            let nd = crate::linalg::two_norm(&dir);
            prop_assume!(nd > 1e-3);
            let s = diag_system(&d);
            let yd: Vec<f64> = y.iter().zip(&dir).map(|(a, e)| a + delta * e / nd).collect();
            let (a, b) = (l1_svd(&s, &yd, alpha).unwrap(), l1_svd(&s, &y, alpha).unwrap());
            let diff = crate::linalg::two_norm(&crate::linalg::sub(&a, &b));
            let inv_min = 1.0 / s.sigma().last().unwrap();
            // Allowance for rounding in the two evaluations themselves.
            let ulp = 16.0 * f64::EPSILON * crate::linalg::two_norm(&b).max(1.0);
            prop_assert!(diff <= inv_min * delta * (1.0 + 1e-9) + ulp);
        }
    }
}
