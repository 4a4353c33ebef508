//! Sparse recovery through nonlinear singular-value regularization.
//!
//! The closed-form ℓ¹-SVD and ℓ¹ᐟ²-SVD estimators threshold the data
//! coefficients of a singular system instead of iterating. Classical filters
//! (Tikhonov, Landweber, truncated SVD) and the iterative baselines (ISTA,
//! FISTA, iterative half thresholding) are included for comparison, along with
//! the seeded problem generators and metrics used by the benchmark CLI.
//!
//! ```
//! use spectral_sparse::{l1_svd, svd, DenseMatrix};
//!
//! let k = DenseMatrix::from_diag(&[2.0, 1.0]);
//! let s = svd(&k, None).unwrap();
//! let x = l1_svd(&s, &[4.0, 1.0], 1.0).unwrap();
//! assert!((x[0] - 1.875).abs() < 1e-12 && (x[1] - 0.5).abs() < 1e-12);
//! ```

pub mod error;
pub mod io;
pub mod iterative;
pub mod linalg;
pub mod problems;
pub mod spectral;
pub mod threshold;
pub mod tuning;

pub use error::{Error, Result};
pub use iterative::{
    fista, ista, pg_half, scale_operator, solve, IterateTrace, IterativeAlgorithm, IterativeSpec, StepScale,
};
pub use linalg::{cond2, kron, spectral_norm, svd, symmetric_banded_toeplitz, two_norm, DenseMatrix, SingularSystem};
pub use problems::{
    awgn, blur_operator, blur_singular_system, derive_seed, gaussian_matrix, make_cs_instance,
    make_deblur_instance, sparse_signal, BlurSpec, ProblemInstance,
};
pub use spectral::{filtered_inverse, l1_svd, l_half_svd, naive_inverse, recover, SpectralMethod};
pub use threshold::{classical_filter, half_threshold, soft_threshold, FilterKind, ThresholdParams};
pub use tuning::{
    rerror, select_alpha_discrepancy, success, success_probability, timed, AlphaRule, AlphaSelection, Metrics,
};
