//! Small dense linear algebra: square matrices, Cholesky factors, vector helpers.

use std::ops::{Index, IndexMut};

use crate::error::{check_dim, Error, Result};
use crate::scalar::Real;

/// Relative pivot threshold below which a matrix is treated as not positive definite.
pub const PD_TOLERANCE: f64 = 1e-10;

/// Dense square matrix stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<F> {
    dim: usize,
    data: Vec<F>,
}

impl<F: Real> Matrix<F> {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![F::zero(); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::scaled_identity(dim, F::one())
    }

    pub fn scaled_identity(dim: usize, scale: F) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = scale;
        }
        m
    }

    pub fn from_diagonal(diag: &[F]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn from_row_major(dim: usize, data: Vec<F>) -> Result<Self> {
        check_dim(dim * dim, data.len())?;
        Ok(Self { dim, data })
    }

    /// Builds a matrix from nested rows; every row must have `rows.len()` entries.
    pub fn from_rows<R: AsRef<[F]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            let row = row.as_ref();
            check_dim(dim, row.len())?;
            data.extend_from_slice(row);
        }
        Ok(Self { dim, data })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[F] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[F] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn to_rows(&self) -> Vec<Vec<F>> {
        (0..self.dim).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn map(&self, f: impl Fn(F) -> F) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scaled(&self, s: F) -> Self {
        self.map(|v| v * s)
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    /// `(M + Mᵀ) / 2`.
    pub fn symmetrized(&self) -> Self {
        let half = F::lit(0.5);
        let mut s = self.clone();
        for i in 0..self.dim {
            for j in (i + 1)..self.dim {
                let v = (self[(i, j)] + self[(j, i)]) * half;
                s[(i, j)] = v;
                s[(j, i)] = v;
            }
        }
        s
    }

    pub fn mul_vec(&self, v: &[F]) -> Result<Vec<F>> {
        check_dim(self.dim, v.len())?;
        Ok((0..self.dim).map(|i| dot(self.row(i), v)).collect())
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        check_dim(self.dim, other.dim)?;
        let d = self.dim;
        let mut out = Self::zeros(d);
        for i in 0..d {
            for k in 0..d {
                let a = self[(i, k)];
                if a == F::zero() {
                    continue;
                }
                for j in 0..d {
                    out.data[i * d + j] += a * other.data[k * d + j];
                }
            }
        }
        Ok(out)
    }

    /// `self += alpha · other`.
    pub fn add_scaled(&mut self, alpha: F, other: &Self) {
        debug_assert_eq!(self.dim, other.dim);
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
    }

    /// `self += alpha · u uᵀ`.
    pub fn add_outer(&mut self, alpha: F, u: &[F]) {
        debug_assert_eq!(self.dim, u.len());
        for i in 0..self.dim {
            let ai = alpha * u[i];
            for (cell, &uj) in self.data[i * self.dim..(i + 1) * self.dim].iter_mut().zip(u) {
                *cell += ai * uj;
            }
        }
    }

    pub fn diagonal(&self) -> Vec<F> {
        (0..self.dim).map(|i| self[(i, i)]).collect()
    }

    /// Entries on and above the diagonal, row by row.
    pub fn upper_triangle(&self) -> Vec<F> {
        let mut out = Vec::with_capacity(self.dim * (self.dim + 1) / 2);
        for i in 0..self.dim {
            out.extend_from_slice(&self.row(i)[i..]);
        }
        out
    }

    pub fn frobenius_norm(&self) -> F {
        self.data.iter().map(|&v| v * v).sum::<F>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &Self) -> F {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| (a - b).abs())
            .fold(F::zero(), F::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

impl<F> Index<(usize, usize)> for Matrix<F> {
    type Output = F;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &F {
        &self.data[i * self.dim + j]
    }
}

impl<F> IndexMut<(usize, usize)> for Matrix<F> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut F {
        &mut self.data[i * self.dim + j]
    }
}

/// Cholesky factor `L` of a symmetric positive definite matrix, with its log-determinant.
#[derive(Clone, Debug, PartialEq)]
pub struct SpdFactor<F> {
    lower: Matrix<F>,
    log_det: F,
}

/// Cholesky factorization of the symmetrized input.
///
/// A pivot at or below `PD_TOLERANCE · max(1, max diagonal)` (or a NaN pivot) is
/// reported as [`Error::NotPositiveDefinite`].
pub fn spd_factorize<F: Real>(m: &Matrix<F>) -> Result<SpdFactor<F>> {
    let d = m.dim();
    if d == 0 {
        return Err(Error::InvalidDimension(0));
    }
    let a = m.symmetrized();
    let max_diag = a.diagonal().into_iter().fold(F::one(), F::max);
    let tol = F::lit(PD_TOLERANCE) * max_diag;

    let mut l = Matrix::zeros(d);
    let mut log_det = F::zero();
    for j in 0..d {
        let mut pivot = a[(j, j)];
        for k in 0..j {
            pivot -= l[(j, k)] * l[(j, k)];
        }
        if !(pivot > tol) {
            return Err(Error::NotPositiveDefinite {
                index: j,
                pivot: pivot.as_f64(),
            });
        }
        let ljj = pivot.sqrt();
        l[(j, j)] = ljj;
        log_det += ljj.ln();
        for i in (j + 1)..d {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / ljj;
        }
    }
    Ok(SpdFactor {
        lower: l,
        log_det: log_det + log_det,
    })
}

impl<F: Real> SpdFactor<F> {
    #[inline]
    pub fn dim(&self) -> usize {
        self.lower.dim()
    }

    pub fn lower(&self) -> &Matrix<F> {
        &self.lower
    }

    /// `ln |A|` of the factored matrix.
    #[inline]
    pub fn log_det(&self) -> F {
        self.log_det
    }

    /// Solves `L y = v` in place.
    fn forward_in_place(&self, y: &mut [F]) {
        let l = &self.lower;
        for i in 0..y.len() {
            let mut s = y[i];
            for k in 0..i {
                s -= l[(i, k)] * y[k];
            }
            y[i] = s / l[(i, i)];
        }
    }

    /// Solves `Lᵀ y = v` in place.
    fn backward_in_place(&self, y: &mut [F]) {
        let l = &self.lower;
        for i in (0..y.len()).rev() {
            let mut s = y[i];
            for k in (i + 1)..y.len() {
                s -= l[(k, i)] * y[k];
            }
            y[i] = s / l[(i, i)];
        }
    }

    /// Solves `A x = v` where `A = L Lᵀ`.
    pub fn solve(&self, v: &[F]) -> Result<Vec<F>> {
        check_dim(self.dim(), v.len())?;
        let mut y = v.to_vec();
        self.forward_in_place(&mut y);
        self.backward_in_place(&mut y);
        Ok(y)
    }

    /// `vᵀ A⁻¹ v`.
    pub fn quad_form(&self, v: &[F]) -> Result<F> {
        check_dim(self.dim(), v.len())?;
        let mut y = v.to_vec();
        self.forward_in_place(&mut y);
        Ok(dot(&y, &y))
    }

    /// `L z`.
    pub fn mul_lower(&self, z: &[F]) -> Vec<F> {
        let l = &self.lower;
        (0..self.dim())
            .map(|i| (0..=i).map(|k| l[(i, k)] * z[k]).sum())
            .collect()
    }

    /// `L Lᵀ`.
    pub fn reconstruct(&self) -> Matrix<F> {
        let d = self.dim();
        let l = &self.lower;
        let mut m = Matrix::zeros(d);
        for i in 0..d {
            for j in 0..=i {
                let v: F = (0..=j).map(|k| l[(i, k)] * l[(j, k)]).sum();
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    }

    /// `A⁻¹`, symmetrized.
    pub fn inverse(&self) -> Matrix<F> {
        let d = self.dim();
        let mut inv = Matrix::zeros(d);
        let mut e = vec![F::zero(); d];
        for j in 0..d {
            e.iter_mut().for_each(|v| *v = F::zero());
            e[j] = F::one();
            self.forward_in_place(&mut e);
            self.backward_in_place(&mut e);
            for i in 0..d {
                inv[(i, j)] = e[i];
            }
        }
        inv.symmetrized()
    }
}

#[inline]
pub fn dot<F: Real>(a: &[F], b: &[F]) -> F {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

#[inline]
pub fn norm<F: Real>(a: &[F]) -> F {
    dot(a, a).sqrt()
}

#[inline]
pub fn sub<F: Real>(a: &[F], b: &[F]) -> Vec<F> {
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

/// `y += alpha · x`.
#[inline]
pub fn axpy<F: Real>(alpha: F, x: &[F], y: &mut [F]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m2(a: f64, b: f64, c: f64, d: f64) -> Matrix<f64> {
        Matrix::from_rows(&[[a, b], [c, d]]).unwrap()
    }

    #[test]
    fn factorizes_toy_covariance() {
        let f = spd_factorize(&m2(0.52, 0.48, 0.48, 0.52)).unwrap();
        // 0.52² − 0.48² = 0.04
        assert!((f.log_det() - 0.04f64.ln()).abs() < 1e-12);
        assert!((f.log_det() + 3.218_875_824_868_201).abs() < 1e-12);
    }

    #[test]
    fn rejects_indefinite() {
        let err = spd_factorize(&m2(1.0, 2.0, 2.0, 1.0)).unwrap_err();
        assert!(matches!(err, Error::NotPositiveDefinite { index: 1, .. }));
    }

    #[test]
    fn identity_has_zero_log_det() {
        let f = spd_factorize(&Matrix::<f64>::identity(3)).unwrap();
        assert_eq!(f.log_det(), 0.0);
    }

    #[test]
    fn pivot_tolerance_is_scale_aware() {
        assert!(spd_factorize(&Matrix::<f64>::scaled_identity(2, 1e-12)).is_err());
        // same relative conditioning, but below the absolute floor of 1
        assert!(spd_factorize(&Matrix::<f64>::scaled_identity(2, 1e-9)).is_ok());
        let mut big = Matrix::<f64>::identity(2);
        big[(0, 0)] = 1e6;
        big[(1, 1)] = 1e-5;
        assert!(spd_factorize(&big).is_err());
    }

    #[test]
    fn rejects_nan() {
        assert!(spd_factorize(&m2(f64::NAN, 0.0, 0.0, 1.0)).is_err());
    }

    #[test]
    fn symmetrizes_before_factorizing() {
        let f = spd_factorize(&m2(2.0, 0.4, 0.6, 2.0)).unwrap();
        let r = f.reconstruct();
        assert!((r[(0, 1)] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn solves_small_systems() {
        let id = spd_factorize(&Matrix::<f64>::identity(2)).unwrap();
        assert_eq!(id.solve(&[3.0, 4.0]).unwrap(), vec![3.0, 4.0]);

        let diag = spd_factorize(&Matrix::from_diagonal(&[4.0, 4.0])).unwrap();
        assert_eq!(diag.solve(&[4.0, 8.0]).unwrap(), vec![1.0, 2.0]);

        // inverse of [[.52,.48],[.48,.52]] is 25·[[.52,−.48],[−.48,.52]]
        let toy = spd_factorize(&m2(0.52, 0.48, 0.48, 0.52)).unwrap();
        let x = toy.solve(&[1.0, 0.0]).unwrap();
        assert!((x[0] - 13.0).abs() < 1e-10);
        assert!((x[1] + 12.0).abs() < 1e-10);
    }

    #[test]
    fn solve_rejects_wrong_length() {
        let f = spd_factorize(&Matrix::<f64>::identity(2)).unwrap();
        assert!(matches!(
            f.solve(&[1.0]),
            Err(Error::DimensionMismatch { expected: 2, found: 1 })
        ));
    }

    #[test]
    fn inverse_matches_solve() {
        let toy = spd_factorize(&m2(0.52, 0.48, 0.48, 0.52)).unwrap();
        let inv = toy.inverse();
        assert!((inv[(0, 0)] - 13.0).abs() < 1e-10);
        assert!((inv[(0, 1)] + 12.0).abs() < 1e-10);
    }

    #[test]
    fn works_in_single_precision() {
        let f = spd_factorize(&Matrix::<f32>::from_rows(&[[4.0f32, 2.0], [2.0, 3.0]]).unwrap())
            .unwrap();
        assert!((f.log_det() - 8.0f32.ln()).abs() < 1e-6);
    }

    #[test]
    fn upper_triangle_layout() {
        let m = Matrix::from_rows(&[[1.0, 2.0, 3.0], [2.0, 4.0, 5.0], [3.0, 5.0, 6.0]]).unwrap();
        assert_eq!(m.upper_triangle(), vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
    }
}
