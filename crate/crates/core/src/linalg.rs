//! Dense real linear algebra: the matrix type, vector kernels, singular
//! systems and the structured constructors used by the blur model.

use faer::Mat;

use crate::error::{check_finite, Error, Result};

/// Dense row-major matrix of finite `f64` entries.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    /// Builds a matrix from row-major entries.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidArgument(format!(
                "matrix dimensions must be positive, got {rows}x{cols}"
            )));
        }
        let len = rows.checked_mul(cols).ok_or(Error::Overflow("matrix size"))?;
        if data.len() != len {
            return Err(Error::DimensionMismatch {
                op: "DenseMatrix::new",
                expected: len,
                found: data.len(),
            });
        }
        check_finite(&data, "matrix entries")?;
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diag(&vec![1.0; n])
    }

    /// Square matrix with `diag` on the diagonal.
    pub fn from_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * n + i] = d;
        }
        m
    }

    /// Panics if `f` produces a non-finite value.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self::new(rows, cols, data).expect("from_fn produced an invalid matrix")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }

    pub fn is_symmetric(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    /// `K x`.
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::DimensionMismatch {
                op: "matvec",
                expected: self.cols,
                found: x.len(),
            });
        }
        Ok(self.data.chunks_exact(self.cols).map(|row| dot(row, x)).collect())
    }

    /// `Kᵀ y`.
    pub fn matvec_transpose(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.rows {
            return Err(Error::DimensionMismatch {
                op: "matvec_transpose",
                expected: self.rows,
                found: y.len(),
            });
        }
        let mut out = vec![0.0; self.cols];
        for (row, &yi) in self.data.chunks_exact(self.cols).zip(y) {
            if yi != 0.0 {
                axpy(yi, row, &mut out);
            }
        }
        Ok(out)
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                op: "matmul",
                expected: self.cols,
                found: other.rows,
            });
        }
        let mut out = vec![0.0; self.rows * other.cols];
        for (i, out_row) in out.chunks_exact_mut(other.cols).enumerate() {
            for (k, &a) in self.row(i).iter().enumerate() {
                if a != 0.0 {
                    axpy(a, other.row(k), out_row);
                }
            }
        }
        DenseMatrix::new(self.rows, other.cols, out)
    }

    pub fn fro_norm(&self) -> f64 {
        two_norm(&self.data)
    }

    /// Largest absolute entrywise difference; `None` when shapes differ.
    pub fn max_abs_diff(&self, other: &DenseMatrix) -> Option<f64> {
        (self.rows == other.rows && self.cols == other.cols).then(|| {
            self.data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        })
    }

    fn to_faer(&self) -> Mat<f64> {
        Mat::from_fn(self.rows, self.cols, |i, j| self.data[i * self.cols + j])
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn two_norm(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

/// `y += a * x`
pub fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// Elementwise `a - b`.
pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Kronecker product: block `(i, j)` of the result is `a[i, j] * b`.
pub fn kron(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    let rows = a.rows.checked_mul(b.rows).ok_or(Error::Overflow("kron rows"))?;
    let cols = a.cols.checked_mul(b.cols).ok_or(Error::Overflow("kron cols"))?;
    rows.checked_mul(cols).ok_or(Error::Overflow("kron size"))?;
    let mut data = vec![0.0; rows * cols];
    for ia in 0..a.rows {
        for ib in 0..b.rows {
            let out_row = &mut data[(ia * b.rows + ib) * cols..(ia * b.rows + ib + 1) * cols];
            for (ja, &av) in a.row(ia).iter().enumerate() {
                if av == 0.0 {
                    continue;
                }
                let block = &mut out_row[ja * b.cols..(ja + 1) * b.cols];
                for (o, &bv) in block.iter_mut().zip(b.row(ib)) {
                    *o = av * bv;
                }
            }
        }
    }
    DenseMatrix::new(rows, cols, data)
}

/// `n x n` symmetric Toeplitz matrix with `T[i, j] = first_row[|i - j|]`
/// inside the band and zero outside it.
pub fn symmetric_banded_toeplitz(first_row: &[f64], n: usize) -> Result<DenseMatrix> {
    if first_row.is_empty() || n == 0 {
        return Err(Error::InvalidArgument(
            "toeplitz first row and size must be nonempty".into(),
        ));
    }
    check_finite(first_row, "toeplitz first row")?;
    Ok(DenseMatrix::from_fn(n, n, |i, j| {
        first_row.get(i.abs_diff(j)).copied().unwrap_or(0.0)
    }))
}

/// Largest singular value by power iteration on `KᵀK`.
///
/// The Rayleigh quotient approaches `σ₁` from below.
pub fn spectral_norm(k: &DenseMatrix) -> f64 {
    const MAX_ITERS: usize = 5000;
    let n = k.cols;
    // Irrational stride keeps the start vector generic.
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + (i as f64 * 0.618_033_988_749_895).fract()).collect();
    let nv = two_norm(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    let mut estimate = 0.0;
    for _ in 0..MAX_ITERS {
        let kv = k.matvec(&v).expect("dimensions fixed");
        let current = two_norm(&kv);
        let mut w = k.matvec_transpose(&kv).expect("dimensions fixed");
        let nw = two_norm(&w);
        if nw == 0.0 || current == 0.0 {
            return current;
        }
        w.iter_mut().for_each(|x| *x /= nw);
        v = w;
        let converged = (current - estimate).abs() <= 1e-15 * current;
        estimate = current;
        if converged {
            break;
        }
    }
    estimate
}

/// Default numerical-rank cutoff: `max(m, n) · ε · σ₁`.
pub fn default_rank_tol(rows: usize, cols: usize, sigma_max: f64) -> f64 {
    rows.max(cols) as f64 * f64::EPSILON * sigma_max
}

/// Ordered singular triplets `(σₙ, uₙ, vₙ)` with `K vₙ = σₙ uₙ`.
///
/// Only triplets with `σₙ > rank_tol` are stored. Left and right vectors are
/// kept row-major (`m x r` and `n x r`) so projections and syntheses stream
/// through memory in order.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularSystem {
    sigma: Vec<f64>,
    m: usize,
    n: usize,
    u: Vec<f64>,
    v: Vec<f64>,
    rank_tol: f64,
}

impl SingularSystem {
    /// Assembles a singular system from explicit factors.
    ///
    /// `u` is `m x r` and `v` is `n x r` with the vectors as columns. Sigma
    /// must be non-increasing and every entry must exceed `rank_tol`.
    /// Orthonormality is the caller's responsibility.
    pub fn from_parts(
        sigma: Vec<f64>,
        u: &DenseMatrix,
        v: &DenseMatrix,
        rank_tol: f64,
    ) -> Result<Self> {
        let r = sigma.len();
        if u.cols != r || v.cols != r {
            return Err(Error::DimensionMismatch {
                op: "SingularSystem::from_parts",
                expected: r,
                found: if u.cols != r { u.cols } else { v.cols },
            });
        }
        if !(rank_tol >= 0.0 && rank_tol.is_finite()) {
            return Err(Error::InvalidArgument(format!("rank_tol must be >= 0, got {rank_tol}")));
        }
        check_finite(&sigma, "singular values")?;
        if sigma.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidArgument("singular values must be non-increasing".into()));
        }
        if sigma.iter().any(|&s| s <= rank_tol) {
            return Err(Error::InvalidArgument("retained singular values must exceed rank_tol".into()));
        }
        Ok(Self {
            sigma,
            m: u.rows,
            n: v.rows,
            u: u.data.clone(),
            v: v.data.clone(),
            rank_tol,
        })
    }

    /// Singular system of a diagonal operator, computed exactly.
    ///
    /// Entries are ordered by magnitude (stable for ties); negative entries
    /// put their sign on `uₙ`. Zero entries are dropped.
    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        check_finite(diag, "diagonal")?;
        let n = diag.len();
        let mut order: Vec<usize> = (0..n).filter(|&i| diag[i] != 0.0).collect();
        order.sort_by(|&a, &b| diag[b].abs().total_cmp(&diag[a].abs()));
        let r = order.len();
        let mut u = vec![0.0; n * r];
        let mut v = vec![0.0; n * r];
        let mut sigma = Vec::with_capacity(r);
        for (col, &i) in order.iter().enumerate() {
            sigma.push(diag[i].abs());
            u[i * r + col] = diag[i].signum();
            v[i * r + col] = 1.0;
        }
        Ok(Self {
            sigma,
            m: n,
            n,
            u,
            v,
            rank_tol: 0.0,
        })
    }

    /// Singular system of `A ⊗ B` from the systems of the factors.
    ///
    /// Uses `σ(A ⊗ B) = σ(A)σ(B)` with vectors `uᵢ ⊗ u'ⱼ`, `vᵢ ⊗ v'ⱼ`, then
    /// reorders and applies the default rank cutoff for the product size.
    pub fn kron(a: &SingularSystem, b: &SingularSystem) -> Result<Self> {
        let m = a.m.checked_mul(b.m).ok_or(Error::Overflow("kron rows"))?;
        let n = a.n.checked_mul(b.n).ok_or(Error::Overflow("kron cols"))?;
        let mut pairs: Vec<(usize, usize)> = (0..a.len())
            .flat_map(|i| (0..b.len()).map(move |j| (i, j)))
            .collect();
        pairs.sort_by(|&(i1, j1), &(i2, j2)| {
            (a.sigma[i2] * b.sigma[j2]).total_cmp(&(a.sigma[i1] * b.sigma[j1]))
        });
        let sigma_max = pairs.first().map_or(0.0, |&(i, j)| a.sigma[i] * b.sigma[j]);
        let tol = default_rank_tol(m, n, sigma_max).max(a.rank_tol * b.rank_tol);
        pairs.retain(|&(i, j)| a.sigma[i] * b.sigma[j] > tol);
        let r = pairs.len();
        m.checked_mul(r).ok_or(Error::Overflow("kron singular vectors"))?;
        let expand = |fa: &[f64], ra: usize, fb: &[f64], rb: usize, rows_a: usize, rows_b: usize| {
            let mut out = vec![0.0; rows_a * rows_b * r];
            for p in 0..rows_a {
                for q in 0..rows_b {
                    let row = &mut out[(p * rows_b + q) * r..(p * rows_b + q + 1) * r];
                    for (slot, &(i, j)) in row.iter_mut().zip(&pairs) {
                        *slot = fa[p * ra + i] * fb[q * rb + j];
                    }
                }
            }
            out
        };
        let u = expand(&a.u, a.len(), &b.u, b.len(), a.m, b.m);
        let v = expand(&a.v, a.len(), &b.v, b.len(), a.n, b.n);
        Ok(Self {
            sigma: pairs.iter().map(|&(i, j)| a.sigma[i] * b.sigma[j]).collect(),
            m,
            n,
            u,
            v,
            rank_tol: tol,
        })
    }

    /// Singular system of `cK` for `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidArgument(format!("scale must be positive, got {c}")));
        }
        let mut out = self.clone();
        out.sigma.iter_mut().for_each(|s| *s *= c);
        out.rank_tol *= c;
        Ok(out)
    }

    /// Number of retained triplets.
    pub fn len(&self) -> usize {
        self.sigma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma.is_empty()
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn rank_tol(&self) -> f64 {
        self.rank_tol
    }

    /// Dimension of the data space (rows of `K`).
    pub fn output_dim(&self) -> usize {
        self.m
    }

    /// Dimension of the unknown (columns of `K`).
    pub fn input_dim(&self) -> usize {
        self.n
    }

    pub fn u_column(&self, j: usize) -> Vec<f64> {
        let r = self.len();
        (0..self.m).map(|i| self.u[i * r + j]).collect()
    }

    pub fn v_column(&self, j: usize) -> Vec<f64> {
        let r = self.len();
        (0..self.n).map(|i| self.v[i * r + j]).collect()
    }

    /// Left singular vectors as an `m x r` matrix; `None` when empty.
    pub fn u_matrix(&self) -> Option<DenseMatrix> {
        (!self.is_empty()).then(|| DenseMatrix {
            rows: self.m,
            cols: self.len(),
            data: self.u.clone(),
        })
    }

    /// Right singular vectors as an `n x r` matrix; `None` when empty.
    pub fn v_matrix(&self) -> Option<DenseMatrix> {
        (!self.is_empty()).then(|| DenseMatrix {
            rows: self.n,
            cols: self.len(),
            data: self.v.clone(),
        })
    }

    /// Data coefficients `⟨y, uₙ⟩`.
    pub fn project(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.m {
            return Err(Error::DimensionMismatch {
                op: "project onto left singular vectors",
                expected: self.m,
                found: y.len(),
            });
        }
        let r = self.len();
        let mut out = vec![0.0; r];
        if r == 0 {
            return Ok(out);
        }
        for (row, &yi) in self.u.chunks_exact(r).zip(y) {
            if yi != 0.0 {
                axpy(yi, row, &mut out);
            }
        }
        Ok(out)
    }

    /// `Σₙ cₙ vₙ`.
    pub fn synthesize(&self, coeffs: &[f64]) -> Result<Vec<f64>> {
        let r = self.len();
        if coeffs.len() != r {
            return Err(Error::DimensionMismatch {
                op: "synthesize from right singular vectors",
                expected: r,
                found: coeffs.len(),
            });
        }
        if r == 0 {
            return Ok(vec![0.0; self.n]);
        }
        Ok(self.v.chunks_exact(r).map(|row| dot(row, coeffs)).collect())
    }

    /// `U · diag(σ) · Vᵀ`.
    pub fn reconstruct(&self) -> DenseMatrix {
        let r = self.len();
        let mut out = DenseMatrix::zeros(self.m, self.n);
        for i in 0..self.m {
            let ui = &self.u[i * r..(i + 1) * r];
            let out_row = &mut out.data[i * self.n..(i + 1) * self.n];
            for (j, o) in out_row.iter_mut().enumerate() {
                let vj = &self.v[j * r..(j + 1) * r];
                *o = ui
                    .iter()
                    .zip(vj)
                    .zip(&self.sigma)
                    .map(|((a, b), s)| a * s * b)
                    .sum();
            }
        }
        out
    }

    /// Copy with the listed triplets' vectors negated jointly.
    pub fn with_flipped_signs(&self, which: &[usize]) -> Self {
        let mut out = self.clone();
        let r = self.len();
        for &j in which {
            for i in 0..self.m {
                out.u[i * r + j] = -out.u[i * r + j];
            }
            for i in 0..self.n {
                out.v[i * r + j] = -out.v[i * r + j];
            }
        }
        out
    }
}

/// Thin singular value decomposition with numerically-zero triplets removed.
///
/// `rank_tol = None` selects [`default_rank_tol`]. Each `vₙ` is oriented so
/// its first nonzero entry is positive, with `uₙ` flipped jointly.
pub fn svd(k: &DenseMatrix, rank_tol: Option<f64>) -> Result<SingularSystem> {
    let (m, n) = (k.rows, k.cols);
    let dec = k
        .to_faer()
        .thin_svd()
        .map_err(|e| Error::SvdFailed(format!("{e:?}")))?;
    let s = dec.S().column_vector();
    let (uf, vf) = (dec.U(), dec.V());
    let full = m.min(n);
    let values: Vec<f64> = (0..full).map(|i| s[i]).collect();
    if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::SvdFailed("backend returned invalid singular values".into()));
    }
    let mut order: Vec<usize> = (0..full).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let sigma_max = order.first().map_or(0.0, |&i| values[i]);
    let tol = match rank_tol {
        Some(t) if t >= 0.0 && t.is_finite() => t,
        Some(t) => return Err(Error::InvalidArgument(format!("rank_tol must be >= 0, got {t}"))),
        None => default_rank_tol(m, n, sigma_max),
    };
    order.retain(|&i| values[i] > tol);
    let r = order.len();
    let mut u = vec![0.0; m * r];
    let mut v = vec![0.0; n * r];
    for (col, &src) in order.iter().enumerate() {
        let vcol: Vec<f64> = (0..n).map(|i| vf[(i, src)]).collect();
        let scale = vcol.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
        let lead = vcol.iter().find(|x| x.abs() > 1e-10 * scale).copied().unwrap_or(1.0);
        let sign = if lead < 0.0 { -1.0 } else { 1.0 };
        for (i, val) in vcol.iter().enumerate() {
            v[i * r + col] = sign * val;
        }
        for i in 0..m {
            u[i * r + col] = sign * uf[(i, src)];
        }
    }
    check_finite(&u, "left singular vectors").map_err(|_| Error::SvdFailed("non-finite vectors".into()))?;
    check_finite(&v, "right singular vectors").map_err(|_| Error::SvdFailed("non-finite vectors".into()))?;
    Ok(SingularSystem {
        sigma: order.iter().map(|&i| values[i]).collect(),
        m,
        n,
        u,
        v,
        rank_tol: tol,
    })
}

/// Spectral condition number `σ₁ / σ_r` over the retained triplets.
pub fn cond2(s: &SingularSystem) -> Result<f64> {
    match (s.sigma.first(), s.sigma.last()) {
        (Some(&hi), Some(&lo)) => Ok(hi / lo),
        _ => Err(Error::ZeroOperator),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_orthonormality_defect(q: &DenseMatrix) -> f64 {
        let g = q.transpose().matmul(q).unwrap();
        g.max_abs_diff(&DenseMatrix::identity(q.cols())).unwrap()
    }

    #[test]
    fn diagonal_is_its_own_svd() {
        let s = svd(&DenseMatrix::from_diag(&[2.0, 1.0]), None).unwrap();
        assert_eq!(s.sigma(), &[2.0, 1.0]);
        let u = s.u_matrix().unwrap();
        let v = s.v_matrix().unwrap();
        assert!(u.max_abs_diff(&DenseMatrix::identity(2)).unwrap() < 1e-14);
        assert!(v.max_abs_diff(&DenseMatrix::identity(2)).unwrap() < 1e-14);
    }

    #[test]
    fn zero_operator_has_no_triplets() {
        let s = svd(&DenseMatrix::zeros(3, 3), Some(1e-12)).unwrap();
        assert!(s.is_empty());
        assert!(matches!(cond2(&s), Err(Error::ZeroOperator)));
    }

    #[test]
    fn shear_matrix_singular_values_match_quadratic_roots() {
        // KᵀK = [[1,1],[1,2]]: λ = (3 ± √5)/2.
        let oracle = [((3.0 + 5f64.sqrt()) / 2.0).sqrt(), ((3.0 - 5f64.sqrt()) / 2.0).sqrt()];
        let k = DenseMatrix::new(2, 2, vec![1.0, 1.0, 0.0, 1.0]).unwrap();
        let s = svd(&k, None).unwrap();
        assert!((s.sigma()[0] - oracle[0]).abs() < 1e-14);
        assert!((s.sigma()[1] - oracle[1]).abs() < 1e-14);
        assert!((oracle[0] - 1.6180339887).abs() < 1e-9);
        assert!((oracle[1] - 0.6180339887).abs() < 1e-9);
    }

    #[test]
    fn sign_convention_first_nonzero_of_v_positive() {
        let k = DenseMatrix::new(3, 2, vec![-1.0, 2.0, 0.5, -3.0, 4.0, 1.0]).unwrap();
        let s = svd(&k, None).unwrap();
        for j in 0..s.len() {
            let v = s.v_column(j);
            let lead = v.iter().find(|x| x.abs() > 1e-10).unwrap();
            assert!(*lead > 0.0);
        }
        assert!(s.reconstruct().max_abs_diff(&k).unwrap() < 1e-12);
    }

    #[test]
    fn rectangular_factors_are_orthonormal() {
        let k = DenseMatrix::from_fn(7, 4, |i, j| ((i * 3 + j * 5) % 7) as f64 - 2.5);
        let s = svd(&k, None).unwrap();
        assert!(s.len() <= 4);
        assert!(max_orthonormality_defect(&s.u_matrix().unwrap()) < 1e-10);
        assert!(max_orthonormality_defect(&s.v_matrix().unwrap()) < 1e-10);
    }

    #[test]
    fn explicit_rank_tol_drops_small_values() {
        let s = svd(&DenseMatrix::from_diag(&[3.0, 1e-3, 2.0]), Some(1e-2)).unwrap();
        assert_eq!(s.sigma(), &[3.0, 2.0]);
        assert_eq!(cond2(&s).unwrap(), 1.5);
        assert!(svd(&DenseMatrix::identity(2), Some(-1.0)).is_err());
    }

    #[test]
    fn cond2_examples() {
        assert_eq!(cond2(&svd(&DenseMatrix::from_diag(&[2.0, 1.0]), None).unwrap()).unwrap(), 2.0);
        assert_eq!(cond2(&svd(&DenseMatrix::identity(4), None).unwrap()).unwrap(), 1.0);
    }

    #[test]
    fn kron_with_identity_is_block_diagonal() {
        let b = DenseMatrix::new(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let k = kron(&DenseMatrix::identity(2), &b).unwrap();
        let expected = DenseMatrix::new(
            4,
            4,
            vec![
                1.0, 2.0, 0.0, 0.0, //
                3.0, 4.0, 0.0, 0.0, //
                0.0, 0.0, 1.0, 2.0, //
                0.0, 0.0, 3.0, 4.0,
            ],
        )
        .unwrap();
        assert_eq!(k, expected);
    }

    #[test]
    fn kron_with_scalar_scales() {
        let b = DenseMatrix::new(2, 3, vec![1.0, -2.0, 3.0, 4.0, 5.0, -6.0]).unwrap();
        let k = kron(&DenseMatrix::new(1, 1, vec![2.0]).unwrap(), &b).unwrap();
        assert_eq!(k, b.scaled(2.0));
    }

    #[test]
    fn kron_entrywise_expansion() {
        let a = DenseMatrix::new(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let b = DenseMatrix::new(2, 2, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        // Expanded by hand from the block definition.
        let expected = [
            [0.0, 1.0, 0.0, 2.0],
            [1.0, 0.0, 2.0, 0.0],
            [0.0, 3.0, 0.0, 4.0],
            [3.0, 0.0, 4.0, 0.0],
        ];
        let k = kron(&a, &b).unwrap();
        for (i, row) in expected.iter().enumerate() {
            for (j, &e) in row.iter().enumerate() {
                assert_eq!(k.get(i, j), e);
            }
        }
    }

    #[test]
    fn toeplitz_examples() {
        assert_eq!(symmetric_banded_toeplitz(&[1.0], 3).unwrap(), DenseMatrix::identity(3));
        let t = symmetric_banded_toeplitz(&[2.0, 1.0], 3).unwrap();
        assert_eq!(t.as_slice(), &[2.0, 1.0, 0.0, 1.0, 2.0, 1.0, 0.0, 1.0, 2.0]);
        let z: Vec<f64> = (0..4).map(|i: i32| (-(i * i) as f64 / (2.0 * 0.49)).exp()).collect();
        let t = symmetric_banded_toeplitz(&z, 8).unwrap();
        assert_eq!(t.get(0, 1), (-1.0f64 / 0.98).exp());
        assert_eq!(t.get(0, 4), 0.0);
        assert_eq!(t, t.transpose());
        assert!(symmetric_banded_toeplitz(&[], 3).is_err());
    }

    #[test]
    fn vector_kernels() {
        assert_eq!(two_norm(&[3.0, 4.0]), 5.0);
        let x = [0.3, -1.2, 7.0];
        assert_eq!(DenseMatrix::identity(3).matvec(&x).unwrap(), x.to_vec());
        let d = DenseMatrix::from_diag(&[2.0, 1.0]);
        assert_eq!(d.matvec(&[1.0, 1.0]).unwrap(), vec![2.0, 1.0]);
        assert!(matches!(d.matvec(&[1.0]), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(d.matvec_transpose(&[1.0, 2.0, 3.0]), Err(Error::DimensionMismatch { .. })));
        let r = DenseMatrix::new(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert_eq!(r.matvec_transpose(&[1.0, -1.0]).unwrap(), vec![-3.0, -3.0, -3.0]);
        assert_eq!(r.fro_norm(), 91f64.sqrt());
    }

    #[test]
    fn construction_rejects_bad_input() {
        assert!(DenseMatrix::new(2, 2, vec![1.0; 3]).is_err());
        assert!(DenseMatrix::new(0, 2, vec![]).is_err());
        assert!(matches!(
            DenseMatrix::new(1, 2, vec![1.0, f64::NAN]),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn spectral_norm_matches_svd() {
        let d = DenseMatrix::from_diag(&[0.5, 10.0, 3.0]);
        assert!((spectral_norm(&d) - 10.0).abs() < 1e-12);
        let k = DenseMatrix::from_fn(6, 5, |i, j| ((i + 2 * j) % 5) as f64 - 1.5);
        let s = svd(&k, None).unwrap();
        assert!((spectral_norm(&k) - s.sigma()[0]).abs() < 1e-10 * s.sigma()[0]);
        assert_eq!(spectral_norm(&DenseMatrix::zeros(2, 2)), 0.0);
    }

    #[test]
    fn from_diagonal_orders_by_magnitude() {
        let s = SingularSystem::from_diagonal(&[1.0, -3.0, 0.0, 2.0]).unwrap();
        assert_eq!(s.sigma(), &[3.0, 2.0, 1.0]);
        let k = DenseMatrix::from_diag(&[1.0, -3.0, 0.0, 2.0]);
        assert_eq!(s.reconstruct(), k);
    }

    #[test]
    fn kron_singular_system_matches_dense() {
        let a = DenseMatrix::new(2, 2, vec![2.0, 1.0, 1.0, 3.0]).unwrap();
        let b = DenseMatrix::new(3, 3, vec![1.0, 0.5, 0.0, 0.5, 1.0, 0.5, 0.0, 0.5, 1.0]).unwrap();
        let dense = svd(&kron(&a, &b).unwrap(), None).unwrap();
        let fact = SingularSystem::kron(&svd(&a, None).unwrap(), &svd(&b, None).unwrap()).unwrap();
        assert_eq!(dense.len(), fact.len());
        for (x, y) in dense.sigma().iter().zip(fact.sigma()) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!(fact.reconstruct().max_abs_diff(&kron(&a, &b).unwrap()).unwrap() < 1e-12);
    }

    #[test]
    fn project_and_synthesize_dimension_checks() {
        let s = svd(&DenseMatrix::from_diag(&[2.0, 1.0]), None).unwrap();
        assert!(s.project(&[1.0]).is_err());
        assert!(s.synthesize(&[1.0, 2.0, 3.0]).is_err());
        assert_eq!(s.project(&[4.0, 1.0]).unwrap(), vec![4.0, 1.0]);
    }
}
