//! Seeded problem generators for the compressive-sensing and deblurring
//! experiments.
//!
//! Every draw comes from a ChaCha20 stream seeded through [`derive_seed`], so
//! a `(seed, stream)` pair fixes the output on every platform.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_finite, Error, Result};
use crate::linalg::{kron, sub, svd, symmetric_banded_toeplitz, two_norm, DenseMatrix, SingularSystem};

/// Bumped whenever a generator changes its output for a given seed.
pub const GENERATOR_VERSION: &str = "chacha20-splitmix64-v1";

/// Stream indices used by the instance builders.
pub mod stream {
    pub const OPERATOR: u64 = 1;
    pub const SIGNAL: u64 = 2;
    pub const NOISE: u64 = 3;
}

/// Mixes a base seed with a stream index (splitmix64 finalizer).
///
/// Used to give every trial and every random component its own generator.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn rng_from_seed(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// `m x n` matrix of i.i.d. standard normal entries.
pub fn gaussian_matrix(m: usize, n: usize, seed: u64) -> Result<DenseMatrix> {
    let len = m.checked_mul(n).ok_or(Error::Overflow("gaussian matrix"))?;
    let mut rng = rng_from_seed(seed);
    let data: Vec<f64> = (0..len).map(|_| rng.sample(StandardNormal)).collect();
    DenseMatrix::new(m, n, data)
}

/// Length-`n` vector with exactly `s` standard normal entries on a uniformly
/// random support.
pub fn sparse_signal(n: usize, s: usize, seed: u64) -> Result<Vec<f64>> {
    if s > n {
        return Err(Error::InvalidArgument(format!("sparsity {s} exceeds length {n}")));
    }
    let mut rng = rng_from_seed(seed);
    let mut support = rand::seq::index::sample(&mut rng, n, s).into_vec();
    support.sort_unstable();
    let mut x = vec![0.0; n];
    for i in support {
        // A normal draw is zero with probability zero, but keep the count exact.
        let mut v: f64 = rng.sample(StandardNormal);
        while v == 0.0 {
            v = rng.sample(StandardNormal);
        }
        x[i] = v;
    }
    Ok(x)
}

/// Adds white Gaussian noise at `snr_db` relative to the mean power of `y`.
///
/// Returns the noisy vector and `δ = ‖noise‖₂`. An infinite SNR adds nothing.
pub fn awgn(y: &[f64], snr_db: f64, seed: u64) -> Result<(Vec<f64>, f64)> {
    check_finite(y, "clean data")?;
    if snr_db.is_nan() || snr_db == f64::NEG_INFINITY {
        return Err(Error::InvalidArgument(format!("invalid SNR {snr_db} dB")));
    }
    if snr_db == f64::INFINITY {
        return Ok((y.to_vec(), 0.0));
    }
    if y.is_empty() {
        return Err(Error::ZeroSignal);
    }
    let power = y.iter().map(|v| v * v).sum::<f64>() / y.len() as f64;
    if power == 0.0 {
        return Err(Error::ZeroSignal);
    }
    let std = (power / 10f64.powf(snr_db / 10.0)).sqrt();
    let mut rng = rng_from_seed(seed);
    let noisy: Vec<f64> = y
        .iter()
        .map(|v| v + std * rng.sample::<f64, _>(StandardNormal))
        .collect();
    check_finite(&noisy, "noisy data")?;
    let delta = two_norm(&sub(&noisy, y));
    Ok((noisy, delta))
}

/// Gaussian blur model on an `n x n` image.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlurSpec {
    pub n: usize,
    pub band: usize,
    pub tau: f64,
}

impl BlurSpec {
    pub fn new(n: usize, band: usize, tau: f64) -> Result<Self> {
        let spec = Self { n, band, tau };
        spec.validate()?;
        Ok(spec)
    }

    /// Band `floor(n/4)`, clamped to at least 1.
    pub fn with_default_band(n: usize, tau: f64) -> Result<Self> {
        Self::new(n, (n / 4).max(1), tau)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.band == 0 || self.band > self.n {
            return Err(Error::InvalidArgument(format!(
                "blur requires 1 <= band <= n, got n={} band={}",
                self.n, self.band
            )));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::InvalidArgument(format!("blur width must be positive, got {}", self.tau)));
        }
        self.n.checked_mul(self.n).ok_or(Error::Overflow("blur image size"))?;
        Ok(())
    }

    /// `z[i] = exp(−i²/(2τ²))` for `i < band`.
    pub fn first_row(&self) -> Vec<f64> {
        (0..self.band)
            .map(|i| (-((i * i) as f64) / (2.0 * self.tau * self.tau)).exp())
            .collect()
    }

    /// `(2πτ²)⁻¹`
    pub fn normalization(&self) -> f64 {
        1.0 / (2.0 * PI * self.tau * self.tau)
    }

    fn factor(&self) -> Result<DenseMatrix> {
        self.validate()?;
        symmetric_banded_toeplitz(&self.first_row(), self.n)
    }
}

/// Dense `n² x n²` blur operator `(2πτ²)⁻¹ T ⊗ T`.
pub fn blur_operator(spec: &BlurSpec) -> Result<DenseMatrix> {
    let t = spec.factor()?;
    Ok(kron(&t, &t)?.scaled(spec.normalization()))
}

/// Singular system of [`blur_operator`] assembled from the `n x n` factor.
///
/// Exact up to rounding and far cheaper than decomposing the dense operator.
pub fn blur_singular_system(spec: &BlurSpec) -> Result<SingularSystem> {
    let st = svd(&spec.factor()?, None)?;
    SingularSystem::kron(&st, &st)?.scaled(spec.normalization())
}

/// One benchmark trial.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    pub k: DenseMatrix,
    pub x_true: Vec<f64>,
    pub y_clean: Vec<f64>,
    pub y_noisy: Vec<f64>,
    /// `‖y_noisy − y_clean‖₂`
    pub delta: f64,
    /// `+∞` means noiseless.
    pub snr_db: f64,
    pub seed: u64,
    /// Nonzeros in `x_true`.
    pub s: usize,
    pub blur: Option<BlurSpec>,
}

impl ProblemInstance {
    /// Assembles an instance from an operator and ground truth, computing the
    /// clean data and adding noise from `noise_seed`.
    ///
    /// A zero signal has no defined SNR; its data are left noiseless.
    pub fn from_parts(k: DenseMatrix, x_true: Vec<f64>, snr_db: f64, seed: u64, noise_seed: u64) -> Result<Self> {
        check_finite(&x_true, "ground truth")?;
        let y_clean = k.matvec(&x_true)?;
        let (y_noisy, delta) = if y_clean.iter().all(|v| *v == 0.0) {
            (y_clean.clone(), 0.0)
        } else {
            awgn(&y_clean, snr_db, noise_seed)?
        };
        let s = x_true.iter().filter(|v| **v != 0.0).count();
        Ok(Self {
            k,
            x_true,
            y_clean,
            y_noisy,
            delta,
            snr_db,
            seed,
            s,
            blur: None,
        })
    }

    pub fn m(&self) -> usize {
        self.k.rows()
    }

    pub fn n(&self) -> usize {
        self.k.cols()
    }
}

/// Gaussian `m x n` operator, `s`-sparse truth, noise at `snr_db`.
pub fn make_cs_instance(m: usize, n: usize, s: usize, snr_db: f64, seed: u64) -> Result<ProblemInstance> {
    let k = gaussian_matrix(m, n, derive_seed(seed, stream::OPERATOR))?;
    let x = sparse_signal(n, s, derive_seed(seed, stream::SIGNAL))?;
    ProblemInstance::from_parts(k, x, snr_db, seed, derive_seed(seed, stream::NOISE))
}

/// Blurred and noisy observation of the image `x_true` (row-major, `n²` pixels).
pub fn make_deblur_instance(spec: &BlurSpec, x_true: Vec<f64>, snr_db: f64, seed: u64) -> Result<ProblemInstance> {
    let k = blur_operator(spec)?;
    if x_true.len() != k.cols() {
        return Err(Error::DimensionMismatch {
            op: "deblur ground truth",
            expected: k.cols(),
            found: x_true.len(),
        });
    }
    let mut inst = ProblemInstance::from_parts(k, x_true, snr_db, seed, derive_seed(seed, stream::NOISE))?;
    inst.blur = Some(*spec);
    Ok(inst)
}
