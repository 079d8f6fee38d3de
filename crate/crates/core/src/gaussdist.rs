//! Gaussian summaries of embedding sets and the Fréchet distance between
//! them.
//!
//! `FD = |mu_s - mu_t|^2 + Tr(S) + Tr(T) - 2 Tr((S T)^{1/2})`. The trace of
//! the matrix square root is taken through the symmetric form
//! `Tr((S^{1/2} T S^{1/2})^{1/2})`, which has the same eigenvalues as `S T`
//! but can use a symmetric eigensolver.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// Ridge added to both covariances when a summary has no more samples than
/// dimensions.
pub const RIDGE: f64 = 1e-6;
const SYMMETRY_TOL: f64 = 1e-9;
const EIGEN_MAX_ITER: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianSummary {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
    n: usize,
}

impl GaussianSummary {
    /// Build a summary from given moments. `cov` must be square, match the
    /// mean, and be symmetric within `1e-9`.
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid(format!("a summary needs n >= 2 samples, got {n}")));
        }
        if !cov.is_square() || cov.nrows() != mean.len() {
            return Err(Error::DimensionMismatch {
                expected: mean.len(),
                got: cov.nrows(),
            });
        }
        if mean.iter().chain(cov.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Numeric("non-finite mean or covariance".into()));
        }
        let asym = (&cov - cov.transpose()).amax();
        if asym > SYMMETRY_TOL {
            return Err(Error::invalid(format!("covariance not symmetric (max gap {asym:e})")));
        }
        Ok(Self { mean, cov, n })
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// Column mean and unbiased (`n - 1`) covariance of `rows`.
pub fn summarize<'a, I>(rows: I) -> Result<GaussianSummary>
where
    I: IntoIterator<Item = &'a [f32]>,
{
    let rows: Vec<&[f32]> = rows.into_iter().collect();
    let n = rows.len();
    if n < 2 {
        return Err(Error::invalid(format!("a summary needs n >= 2 samples, got {n}")));
    }
    let dim = rows[0].len();
    if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: bad.len(),
        });
    }
    if rows.iter().any(|r| r.iter().any(|v| !v.is_finite())) {
        return Err(Error::Numeric("NaN or infinite input to summarize".into()));
    }
    let data = DMatrix::from_fn(n, dim, |i, j| f64::from(rows[i][j]));
    let mean = DVector::from_fn(dim, |j, _| data.column(j).sum() / n as f64);
    let mut centered = data;
    for (j, mut col) in centered.column_iter_mut().enumerate() {
        col.add_scalar_mut(-mean[j]);
    }
    let mut cov = centered.transpose() * &centered / (n as f64 - 1.0);
    // the product is symmetric up to rounding
    cov = (&cov + cov.transpose()) * 0.5;
    GaussianSummary::new(mean, cov, n)
}

/// Eigenvalues of a symmetric matrix.
fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Result<DVector<f64>> {
    m.clone()
        .try_symmetric_eigen(f64::EPSILON, EIGEN_MAX_ITER)
        .map(|e| e.eigenvalues)
        .ok_or_else(|| Error::Numeric("symmetric eigendecomposition did not converge".into()))
}

/// Principal square root of a symmetric PSD matrix; negative eigenvalues
/// are clamped to zero.
fn psd_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = m
        .clone()
        .try_symmetric_eigen(f64::EPSILON, EIGEN_MAX_ITER)
        .ok_or_else(|| Error::Numeric("symmetric eigendecomposition did not converge".into()))?;
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    let v = &eig.eigenvectors;
    Ok(v * DMatrix::from_diagonal(&roots) * v.transpose())
}

/// `Tr((a b)^{1/2})` for symmetric PSD `a`, `b`.
pub fn trace_sqrt_product(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    if !a.is_square() || a.shape() != b.shape() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            got: b.nrows(),
        });
    }
    let sqrt_a = psd_sqrt(a)?;
    let inner = &sqrt_a * b * &sqrt_a;
    let inner = (&inner + inner.transpose()) * 0.5;
    let eig = symmetric_eigenvalues(&inner)?;
    Ok(eig.iter().map(|l| l.max(0.0).sqrt()).sum())
}

/// Fréchet distance between two Gaussian summaries, clamped at zero.
///
/// When either side has `n <= dim`, `RIDGE * I` is added to both
/// covariances before the matrix square root.
pub fn frechet_distance(s: &GaussianSummary, t: &GaussianSummary) -> Result<f64> {
    if s.dim() != t.dim() {
        return Err(Error::DimensionMismatch {
            expected: s.dim(),
            got: t.dim(),
        });
    }
    let dim = s.dim();
    let ridge = if s.n <= dim || t.n <= dim { RIDGE } else { 0.0 };
    let eye = DMatrix::<f64>::identity(dim, dim) * ridge;
    let cs = &s.cov + &eye;
    let ct = &t.cov + &eye;
    let mean_gap = (&s.mean - &t.mean).norm_squared();
    let fd = mean_gap + cs.trace() + ct.trace() - 2.0 * trace_sqrt_product(&cs, &ct)?;
    if !fd.is_finite() {
        return Err(Error::Numeric("Fréchet distance is not finite".into()));
    }
    Ok(fd.max(0.0))
}
