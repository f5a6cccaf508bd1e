//! Explicit complex matrices for oracles and small displacement blocks.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::C64;

/// Default cap on the order of anything materialized densely.
pub const DESK_CAP: usize = 4096;

/// Row-major complex matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDense", into = "RawDense")]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<C64>,
}

#[derive(Serialize, Deserialize)]
struct RawDense {
    rows: usize,
    cols: usize,
    entries: Vec<C64>,
}

impl TryFrom<RawDense> for DenseMatrix {
    type Error = String;
    fn try_from(r: RawDense) -> std::result::Result<Self, String> {
        DenseMatrix::new(r.rows, r.cols, r.entries).map_err(|e| e.to_string())
    }
}

impl From<DenseMatrix> for RawDense {
    fn from(m: DenseMatrix) -> Self {
        RawDense {
            rows: m.rows,
            cols: m.cols,
            entries: m.entries,
        }
    }
}

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.entries[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.entries[i * self.cols + j]
    }
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<C64>) -> Result<Self> {
        check_len(rows * cols, entries.len())?;
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Rejected("non-finite matrix entry".into()));
        }
        Ok(DenseMatrix {
            rows,
            cols,
            entries,
        })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            entries: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut entries = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                entries.push(f(i, j));
            }
        }
        DenseMatrix {
            rows,
            cols,
            entries,
        }
    }

    pub fn from_real(rows: usize, cols: usize, entries: &[f64]) -> Result<Self> {
        Self::new(
            rows,
            cols,
            entries.iter().map(|&x| C64::new(x, 0.0)).collect(),
        )
    }

    /// Builds a matrix whose columns are the given vectors (all of length `rows`).
    pub fn from_columns(rows: usize, columns: &[Vec<C64>]) -> Result<Self> {
        for c in columns {
            check_len(rows, c.len())?;
        }
        Ok(Self::from_fn(rows, columns.len(), |i, j| columns[j][i]))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, v: &[C64]) {
        for (i, &x) in v.iter().enumerate() {
            self[(i, j)] = x;
        }
    }

    pub fn submatrix(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |i, j| self[(r0 + i, c0 + j)])
    }

    pub fn set_submatrix(&mut self, r0: usize, c0: usize, block: &DenseMatrix) {
        for i in 0..block.rows {
            for j in 0..block.cols {
                self[(r0 + i, c0 + j)] = block[(i, j)];
            }
        }
    }

    /// Horizontal concatenation.
    pub fn hstack(rows: usize, parts: &[DenseMatrix]) -> Result<Self> {
        for p in parts {
            check_len(rows, p.rows)?;
        }
        let cols: usize = parts.iter().map(|p| p.cols).sum();
        let mut out = Self::zeros(rows, cols);
        let mut off = 0;
        for p in parts {
            out.set_submatrix(0, off, p);
            off += p.cols;
        }
        Ok(out)
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Self {
        self.map(|z| z.conj())
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> Self {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|&z| f(z)).collect(),
        }
    }

    /// Real part as a complex matrix.
    pub fn real_part(&self) -> Self {
        self.map(|z| C64::new(z.re, 0.0))
    }

    /// Imaginary part as a (real-valued) complex matrix.
    pub fn imag_part(&self) -> Self {
        self.map(|z| C64::new(z.im, 0.0))
    }

    pub fn scale(&self, s: C64) -> Self {
        self.map(|z| z * s)
    }

    pub fn add(&self, other: &DenseMatrix) -> Result<Self> {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &DenseMatrix) -> Result<Self> {
        self.zip(other, |a, b| a - b)
    }

    fn zip(&self, other: &DenseMatrix, f: impl Fn(C64, C64) -> C64) -> Result<Self> {
        check_len(self.rows, other.rows)?;
        check_len(self.cols, other.cols)?;
        Ok(DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn matvec(&self, x: &[C64]) -> Result<Vec<C64>> {
        check_len(self.cols, x.len())?;
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect())
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<Self> {
        check_len(self.cols, other.rows)?;
        let (ar, ai) = self.split();
        let (br, bi) = other.split();
        let re = &ar * &br - &ai * &bi;
        let im = &ar * &bi + &ai * &br;
        Ok(Self::join(&re, &im))
    }

    /// A·A* computed with real matrix products.
    pub fn gram(&self) -> Self {
        let (x, y) = self.split();
        let xy = concat_cols(&x, &y);
        let re = &xy * xy.transpose();
        let cross = &y * x.transpose();
        let im = &cross - cross.transpose();
        Self::join(&re, &im)
    }

    /// B·B* − C·C* for two factors with the same row count.
    pub fn gram_difference(b: &DenseMatrix, c: &DenseMatrix) -> Result<Self> {
        check_len(b.rows, c.rows)?;
        b.gram().sub(&c.gram())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_real(&self) -> bool {
        self.entries.iter().all(|z| z.im == 0.0)
    }

    /// Relative Frobenius distance ‖self − other‖ / ‖other‖ (absolute when other is zero).
    pub fn relative_error(&self, reference: &DenseMatrix) -> Result<f64> {
        let d = self.sub(reference)?.frobenius_norm();
        let r = reference.frobenius_norm();
        Ok(if r == 0.0 { d } else { d / r })
    }

    fn split(&self) -> (DMatrix<f64>, DMatrix<f64>) {
        let re = DMatrix::from_fn(self.rows, self.cols, |i, j| self[(i, j)].re);
        let im = DMatrix::from_fn(self.rows, self.cols, |i, j| self[(i, j)].im);
        (re, im)
    }

    fn join(re: &DMatrix<f64>, im: &DMatrix<f64>) -> Self {
        Self::from_fn(re.nrows(), re.ncols(), |i, j| C64::new(re[(i, j)], im[(i, j)]))
    }

    pub fn to_nalgebra(&self) -> DMatrix<C64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| self[(i, j)])
    }

    pub fn from_nalgebra(m: &DMatrix<C64>) -> Self {
        Self::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
    }

    /// Singular values in decreasing order.
    pub fn singular_values(&self) -> Result<Vec<f64>> {
        if self.rows == 0 || self.cols == 0 {
            return Ok(Vec::new());
        }
        let svd = self
            .to_nalgebra()
            .try_svd(false, false, f64::EPSILON, 10_000)
            .ok_or_else(|| Error::Numeric("singular value iteration did not converge".into()))?;
        let mut s: Vec<f64> = svd.singular_values.iter().copied().collect();
        s.sort_by(|a, b| b.total_cmp(a));
        Ok(s)
    }

    /// Count of singular values above `tau` times the largest one.
    pub fn numeric_rank(&self, tau: f64) -> Result<usize> {
        let s = self.singular_values()?;
        let top = s.first().copied().unwrap_or(0.0);
        if top == 0.0 {
            return Ok(0);
        }
        Ok(s.iter().filter(|&&x| x > tau * top).count())
    }

    /// 2-norm condition number; infinite for singular input.
    pub fn condition_number(&self) -> Result<f64> {
        let s = self.singular_values()?;
        match (s.first(), s.last()) {
            (Some(&hi), Some(&lo)) if lo > 0.0 => Ok(hi / lo),
            _ => Ok(f64::INFINITY),
        }
    }

    /// Eigen-decomposition of a Hermitian matrix: eigenvalues and eigenvectors as columns.
    pub fn hermitian_eigen(&self) -> Result<(Vec<f64>, DenseMatrix)> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch {
                expected: self.rows,
                got: self.cols,
            });
        }
        if self.rows == 0 {
            return Ok((Vec::new(), DenseMatrix::zeros(0, 0)));
        }
        let eig = nalgebra::SymmetricEigen::try_new(self.to_nalgebra(), f64::EPSILON, 10_000)
            .ok_or_else(|| {
                Error::Numeric(format!(
                    "Hermitian eigensolver did not converge (order {}, max |entry| {:e})",
                    self.rows,
                    self.max_abs()
                ))
            })?;
        Ok((
            eig.eigenvalues.iter().copied().collect(),
            Self::from_nalgebra(&eig.eigenvectors),
        ))
    }

    pub fn inverse(&self) -> Result<DenseMatrix> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch {
                expected: self.rows,
                got: self.cols,
            });
        }
        self.to_nalgebra()
            .try_inverse()
            .map(|m| Self::from_nalgebra(&m))
            .ok_or_else(|| Error::Numeric("matrix is singular".into()))
    }

    /// Hermitian part ½(M + M*).
    pub fn hermitian_part(&self) -> Result<DenseMatrix> {
        Ok(self.add(&self.adjoint())?.scale(C64::new(0.5, 0.0)))
    }
}

fn concat_cols(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
    out.columns_mut(0, a.ncols()).copy_from(a);
    out.columns_mut(a.ncols(), b.ncols()).copy_from(b);
    out
}
