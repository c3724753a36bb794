//! Small dense complex linear algebra kernels.
//!
//! Sized for link-level processing (matrices up to a few hundred rows), so
//! everything is plain row-major storage and textbook algorithms. The only
//! factorization provided is a Cholesky solve for Hermitian positive
//! definite systems, which is all the MMSE filters need: their system
//! matrices are a positive semi-definite covariance plus a strictly
//! positive noise diagonal.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use num_complex::Complex64;

/// Error raised by the factorization routines.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinalgError {
    /// Dimensions of the operands do not agree.
    DimensionMismatch,
    /// The matrix is not (numerically) Hermitian positive definite.
    NotPositiveDefinite,
}

impl fmt::Display for LinalgError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LinalgError::DimensionMismatch => write!(f, "operand dimensions do not agree"),
            LinalgError::NotPositiveDefinite => {
                write!(f, "matrix is not Hermitian positive definite")
            }
        }
    }
}

impl core::error::Error for LinalgError {}

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMat {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::ZERO; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    /// Identity scaled by `s`.
    pub fn scaled_identity(n: usize, s: f64) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(s, 0.0);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[Complex64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// `self * x` for a column vector `x`.
    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.cols, x.len(), "matvec dimension mismatch");
        (0..self.rows)
            .map(|r| {
                self.row(r)
                    .iter()
                    .zip(x)
                    .map(|(a, b)| a * b)
                    .sum::<Complex64>()
            })
            .collect()
    }

    /// `self^H * x`, without materializing the adjoint.
    pub fn adjoint_matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.rows, x.len(), "adjoint matvec dimension mismatch");
        let mut out = vec![Complex64::ZERO; self.cols];
        for r in 0..self.rows {
            let xr = x[r];
            for (c, a) in self.row(r).iter().enumerate() {
                out[c] += a.conj() * xr;
            }
        }
        out
    }

    /// Gram matrix `self * self^H` (Hermitian, `rows x rows`).
    pub fn gram(&self) -> CMat {
        let n = self.rows;
        let mut g = CMat::zeros(n, n);
        for i in 0..n {
            let ri = self.row(i);
            for j in 0..=i {
                let v: Complex64 = ri
                    .iter()
                    .zip(self.row(j))
                    .map(|(a, b)| a * b.conj())
                    .sum();
                g[(i, j)] = v;
                g[(j, i)] = v.conj();
            }
        }
        g
    }

    pub fn frobenius_norm_sq(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn trace_real(&self) -> f64 {
        assert_eq!(self.rows, self.cols, "trace of a non-square matrix");
        (0..self.rows).map(|i| self[(i, i)].re).sum()
    }

    /// `self += s * other`.
    pub fn add_scaled(&mut self, other: &CMat, s: f64) {
        assert_eq!(self.rows, other.rows, "add_scaled dimension mismatch");
        assert_eq!(self.cols, other.cols, "add_scaled dimension mismatch");
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b * s;
        }
    }

    /// `self += s * I`.
    pub fn add_scaled_identity(&mut self, s: f64) {
        assert_eq!(self.rows, self.cols, "identity update on non-square matrix");
        for i in 0..self.rows {
            self[(i, i)] += s;
        }
    }

    /// Rank-1 Hermitian update `self += s * v v^H`.
    pub fn add_scaled_outer(&mut self, v: &[Complex64], s: f64) {
        assert_eq!(self.rows, v.len(), "outer update dimension mismatch");
        assert_eq!(self.cols, v.len(), "outer update dimension mismatch");
        for i in 0..self.rows {
            let vi = v[i] * s;
            for j in 0..self.cols {
                self[(i, j)] += vi * v[j].conj();
            }
        }
    }

    /// Solve `self * x = b` for Hermitian positive definite `self`.
    pub fn hermitian_solve(&self, b: &[Complex64]) -> Result<Vec<Complex64>, LinalgError> {
        let chol = self.cholesky()?;
        if b.len() != self.rows {
            return Err(LinalgError::DimensionMismatch);
        }
        Ok(chol.solve(b))
    }

    /// Lower-triangular Cholesky factor `L` with `L L^H = self`.
    pub fn cholesky(&self) -> Result<Cholesky, LinalgError> {
        if self.rows != self.cols {
            return Err(LinalgError::DimensionMismatch);
        }
        let n = self.rows;
        let mut l = CMat::zeros(n, n);
        for j in 0..n {
            let mut d = self[(j, j)].re;
            for k in 0..j {
                d -= l[(j, k)].norm_sqr();
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(LinalgError::NotPositiveDefinite);
            }
            let djj = d.sqrt();
            l[(j, j)] = Complex64::new(djj, 0.0);
            for i in (j + 1)..n {
                let mut s = self[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)].conj();
                }
                l[(i, j)] = s / djj;
            }
        }
        Ok(Cholesky { l })
    }
}

impl core::ops::Index<(usize, usize)> for CMat {
    type Output = Complex64;

    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        &self.data[r * self.cols + c]
    }
}

impl core::ops::IndexMut<(usize, usize)> for CMat {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        &mut self.data[r * self.cols + c]
    }
}

/// Cholesky factorization of a Hermitian positive definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: CMat,
}

impl Cholesky {
    /// Solve `L L^H x = b` by forward then backward substitution.
    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let n = self.l.rows;
        assert_eq!(b.len(), n, "solve dimension mismatch");
        let mut y = b.to_vec();
        for i in 0..n {
            for k in 0..i {
                let lik = self.l[(i, k)];
                y[i] = y[i] - lik * y[k];
            }
            y[i] /= self.l[(i, i)];
        }
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                let lki = self.l[(k, i)].conj();
                y[i] = y[i] - lki * y[k];
            }
            y[i] /= self.l[(i, i)];
        }
        y
    }
}

/// Conjugated inner product `a^H b`.
pub fn dot_conj(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    assert_eq!(a.len(), b.len(), "dot dimension mismatch");
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Squared Euclidean norm.
pub fn norm_sq(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// Scale `v` to unit Euclidean norm. Leaves the zero vector untouched.
pub fn normalize(v: &mut [Complex64]) {
    let n = norm_sq(v).sqrt();
    if n > 0.0 {
        for z in v.iter_mut() {
            *z /= n;
        }
    }
}

/// Real quadratic form `v^H M v` of a Hermitian `M`.
pub fn quadratic_form(m: &CMat, v: &[Complex64]) -> f64 {
    dot_conj(v, &m.matvec(v)).re
}
