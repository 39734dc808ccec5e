//! Small dense complex matrices: Householder QR, Cholesky solves, norms.
//!
//! Sizes here never exceed a few dozen rows, so everything is row-major in a
//! flat `Vec` with no blocking.

use std::ops::{Index, IndexMut};

use num_complex::Complex64;

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Dense complex matrix stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    /// Builds a matrix from row-major entries. Rejects empty shapes, a wrong
    /// entry count and non-finite entries.
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::DimensionMismatch(format!(
                "matrix must be at least 1x1, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidInput("matrix entries must be finite".into()));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from real row-major entries.
    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        Self::new(rows, cols, data.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix must be at least 1x1");
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut a = Self::zeros(n, n);
        for i in 0..n {
            a[(i, i)] = ONE;
        }
        a
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        assert!(rows > 0 && cols > 0, "matrix must be at least 1x1");
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Matrix whose columns are the given vectors (all of equal length).
    pub fn from_columns(columns: &[Vec<Complex64>]) -> Result<Self> {
        let cols = columns.len();
        let rows = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != rows) {
            return Err(Error::DimensionMismatch("columns have different lengths".into()));
        }
        let mut data = vec![ZERO; rows * cols];
        for (j, c) in columns.iter().enumerate() {
            for (i, &z) in c.iter().enumerate() {
                data[i * cols + j] = z;
            }
        }
        Self::new(rows, cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn col(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_shape(other)?;
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.same_shape(other)?;
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other[(k, j)];
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix times vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// `self^H v`.
    pub fn adjoint_mul_vec(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        if v.len() != self.rows {
            return Err(Error::DimensionMismatch(format!(
                "adjoint of {}x{} matrix times vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        let mut out = vec![ZERO; self.cols];
        for (i, &vi) in v.iter().enumerate() {
            for (j, o) in out.iter_mut().enumerate() {
                *o += self[(i, j)].conj() * vi;
            }
        }
        Ok(out)
    }

    /// Columns picked (and reordered) by `idx`.
    pub fn select_columns(&self, idx: &[usize]) -> Self {
        assert!(!idx.is_empty(), "at least one column must be selected");
        Self::from_fn(self.rows, idx.len(), |i, j| self[(i, idx[j])])
    }

    /// `self self^H`.
    pub fn gram_outer(&self) -> Self {
        let n = self.rows;
        let mut out = Self::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let s: Complex64 = self
                    .row(i)
                    .iter()
                    .zip(self.row(j))
                    .map(|(a, b)| a * b.conj())
                    .sum();
                out[(i, j)] = s;
                out[(j, i)] = s.conj();
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    fn same_shape(&self, other: &Self) -> Result<()> {
        if (self.rows, self.cols) != (other.rows, other.cols) {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// Full QR factors `a = q r` with `q` unitary (n x n) and `r` upper
/// triangular (n x m) with a real non-negative diagonal.
#[derive(Clone, Debug)]
pub struct QrFactors {
    pub q: ComplexMatrix,
    pub r: ComplexMatrix,
    /// `|r_ii|^2` for `i = 1..m`.
    pub diag_sq: Vec<f64>,
}

/// Householder QR of an `n x m` matrix with `n >= m`.
pub fn qr_decompose(a: &ComplexMatrix) -> Result<QrFactors> {
    let (n, m) = (a.rows(), a.cols());
    if n < m {
        return Err(Error::DimensionMismatch(format!(
            "QR needs rows >= cols, got {n}x{m}"
        )));
    }
    let mut r = a.clone();
    let mut q = ComplexMatrix::identity(n);
    let mut v = vec![ZERO; n];

    for k in 0..m {
        let norm = (k..n).map(|i| r[(i, k)].norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let x0 = r[(k, k)];
        let phase = if x0.norm() > 0.0 { x0 / x0.norm() } else { ONE };
        let alpha = -phase * norm;
        for i in k..n {
            v[i] = r[(i, k)];
        }
        v[k] -= alpha;
        let vv: f64 = (k..n).map(|i| v[i].norm_sqr()).sum();
        if vv == 0.0 {
            continue;
        }
        let tau = 2.0 / vv;

        // r <- (I - tau v v^H) r on the trailing block
        for j in k..m {
            let s: Complex64 = (k..n).map(|i| v[i].conj() * r[(i, j)]).sum();
            let s = s * tau;
            for i in k..n {
                let vi = v[i];
                r[(i, j)] -= s * vi;
            }
        }
        r[(k, k)] = alpha;
        for i in k + 1..n {
            r[(i, k)] = ZERO;
        }

        // q <- q (I - tau v v^H)
        for row in 0..n {
            let s: Complex64 = (k..n).map(|i| q[(row, i)] * v[i]).sum();
            let s = s * tau;
            for i in k..n {
                let vi = v[i];
                q[(row, i)] -= s * vi.conj();
            }
        }
    }

    // absorb the diagonal phases into q so that r_ii >= 0
    for k in 0..m {
        let d = r[(k, k)];
        let mag = d.norm();
        if mag == 0.0 {
            continue;
        }
        let ph = d / mag;
        for j in k..m {
            r[(k, j)] *= ph.conj();
        }
        r[(k, k)] = Complex64::new(mag, 0.0);
        for row in 0..n {
            q[(row, k)] *= ph;
        }
    }

    let diag_sq = (0..m).map(|k| r[(k, k)].re * r[(k, k)].re).collect();
    Ok(QrFactors { q, r, diag_sq })
}

/// Lower Cholesky factor `l` with `a = l l^H`.
#[derive(Clone, Debug)]
pub struct Cholesky {
    l: ComplexMatrix,
}

impl Cholesky {
    /// Factors a Hermitian positive-definite matrix. Asymmetry above `1e-10`
    /// (relative to the largest entry) and pivots below `1e-14` of the largest
    /// diagonal entry are rejected.
    pub fn new(a: &ComplexMatrix) -> Result<Self> {
        let n = a.rows();
        if a.cols() != n {
            return Err(Error::DimensionMismatch(format!(
                "Cholesky needs a square matrix, got {}x{}",
                n,
                a.cols()
            )));
        }
        let scale = a.max_abs().max(1.0);
        let mut asym: f64 = 0.0;
        for i in 0..n {
            for j in 0..=i {
                asym = asym.max((a[(i, j)] - a[(j, i)].conj()).norm());
            }
        }
        if asym > 1e-10 * scale {
            return Err(Error::NotHermitian(asym));
        }

        let largest = (0..n).map(|i| a[(i, i)].re).fold(0.0, f64::max);
        let mut l = ComplexMatrix::zeros(n, n);
        for j in 0..n {
            let mut d = a[(j, j)].re;
            for k in 0..j {
                d -= l[(j, k)].norm_sqr();
            }
            if !(d > 1e-14 * largest) {
                return Err(Error::Singular { pivot: d, largest });
            }
            let ljj = d.sqrt();
            l[(j, j)] = Complex64::new(ljj, 0.0);
            for i in j + 1..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)].conj();
                }
                l[(i, j)] = s / ljj;
            }
        }
        Ok(Self { l })
    }

    pub fn factor(&self) -> &ComplexMatrix {
        &self.l
    }

    pub fn solve(&self, b: &[Complex64]) -> Result<Vec<Complex64>> {
        let n = self.l.rows();
        if b.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "right-hand side has length {}, expected {n}",
                b.len()
            )));
        }
        let l = &self.l;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= l[(i, k)] * y[k];
            }
            y[i] = s / l[(i, i)].re;
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= l[(k, i)].conj() * y[k];
            }
            y[i] = s / l[(i, i)].re;
        }
        Ok(y)
    }
}

/// Solves `a x = b` for Hermitian positive-definite `a`.
pub fn solve_hpd(a: &ComplexMatrix, b: &[Complex64]) -> Result<Vec<Complex64>> {
    Cholesky::new(a)?.solve(b)
}

/// Squared Euclidean norm of every column.
pub fn col_norms_sq(a: &ComplexMatrix) -> Vec<f64> {
    let mut out = vec![0.0; a.cols()];
    for i in 0..a.rows() {
        for (j, o) in out.iter_mut().enumerate() {
            *o += a[(i, j)].norm_sqr();
        }
    }
    out
}

/// `x^H y`.
pub fn dot_c(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

pub fn norm_sq(x: &[Complex64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn qr_of_identity() {
        let f = qr_decompose(&ComplexMatrix::identity(3)).unwrap();
        assert!(f.q.max_abs_diff(&ComplexMatrix::identity(3)) < 1e-15);
        assert!(f.r.max_abs_diff(&ComplexMatrix::identity(3)) < 1e-15);
    }

    #[test]
    fn qr_single_column_norm() {
        let a = ComplexMatrix::from_real(2, 1, &[3.0, 4.0]).unwrap();
        let f = qr_decompose(&a).unwrap();
        assert!((f.r[(0, 0)].re - 5.0).abs() < 1e-14);
        assert!((f.diag_sq[0] - 25.0).abs() < 1e-12);
    }

    #[test]
    fn qr_rejects_wide() {
        let a = ComplexMatrix::zeros(2, 3);
        assert!(matches!(qr_decompose(&a), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn solve_identity_and_scaled() {
        let b = vec![c(1.0, 2.0), c(-3.0, 0.5)];
        let x = solve_hpd(&ComplexMatrix::identity(2), &b).unwrap();
        assert_eq!(x, b);
        let a = ComplexMatrix::identity(2).scale(2.0);
        let x = solve_hpd(&a, &[c(4.0, 0.0), c(6.0, 0.0)]).unwrap();
        assert!((x[0] - c(2.0, 0.0)).norm() < 1e-15);
        assert!((x[1] - c(3.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn solve_rejects_non_hermitian_and_singular() {
        let a = ComplexMatrix::new(2, 2, vec![c(1.0, 0.0), c(0.5, 0.0), c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert!(matches!(solve_hpd(&a, &[c(1.0, 0.0); 2]), Err(Error::NotHermitian(_))));
        let s = ComplexMatrix::from_real(2, 2, &[1.0, 1.0, 1.0, 1.0]).unwrap();
        assert!(matches!(solve_hpd(&s, &[c(1.0, 0.0); 2]), Err(Error::Singular { .. })));
    }

    #[test]
    fn column_norms() {
        assert_eq!(col_norms_sq(&ComplexMatrix::identity(2)), vec![1.0, 1.0]);
        let a = ComplexMatrix::new(2, 1, vec![c(1.0, 1.0), c(1.0, -1.0)]).unwrap();
        assert_eq!(col_norms_sq(&a), vec![4.0]);
    }

    #[test]
    fn construction_checks() {
        assert!(ComplexMatrix::new(0, 1, vec![]).is_err());
        assert!(ComplexMatrix::new(1, 2, vec![ONE]).is_err());
        assert!(ComplexMatrix::new(1, 1, vec![c(f64::NAN, 0.0)]).is_err());
    }
}
