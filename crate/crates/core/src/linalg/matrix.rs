use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use faer::Mat;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{invalid, Result};
use crate::C64;

/// Dense complex matrix. Entries are finite on construction.
///
/// Storage is a `faer` matrix; the public constructors take row-major data.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    inner: Mat<C64>,
}

impl ComplexMatrix {
    /// Builds a matrix from row-major entries.
    pub fn new(rows: usize, cols: usize, entries: Vec<C64>) -> Result<Self> {
        if entries.len() != rows * cols {
            return invalid(format!(
                "matrix data has {} entries, expected {rows}x{cols}",
                entries.len()
            ));
        }
        if let Some(pos) = entries.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return invalid(format!("non-finite entry at ({}, {})", pos / cols.max(1), pos % cols.max(1)));
        }
        Ok(Self { inner: Mat::from_fn(rows, cols, |i, j| entries[i * cols + j]) })
    }

    pub fn from_real(rows: usize, cols: usize, entries: &[f64]) -> Result<Self> {
        Self::new(rows, cols, entries.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { inner: Mat::zeros(rows, cols) }
    }

    pub fn identity(n: usize) -> Self {
        Self { inner: Mat::identity(n, n) }
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Self { inner: Mat::from_fn(rows, cols, f) }
    }

    pub fn from_diag(diag: &[C64]) -> Self {
        let n = diag.len();
        Self::from_fn(n, n, |i, j| if i == j { diag[i] } else { C64::new(0.0, 0.0) })
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        Self::from_fn(n, n, |i, j| if i == j { C64::new(diag[i], 0.0) } else { C64::new(0.0, 0.0) })
    }

    /// Matrix whose columns are the given vectors (all of equal length).
    pub fn from_columns(cols: &[Vec<C64>]) -> Result<Self> {
        let n = cols.first().map_or(0, Vec::len);
        if cols.iter().any(|c| c.len() != n) {
            return invalid("columns of unequal length");
        }
        Ok(Self::from_fn(n, cols.len(), |i, j| cols[j][i]))
    }

    pub fn column_vector(v: &[C64]) -> Self {
        Self::from_fn(v.len(), 1, |i, _| v[i])
    }

    pub(crate) fn from_faer(inner: Mat<C64>) -> Self {
        Self { inner }
    }

    pub fn as_faer(&self) -> &Mat<C64> {
        &self.inner
    }

    pub fn into_faer(self) -> Mat<C64> {
        self.inner
    }

    pub fn rows(&self) -> usize {
        self.inner.nrows()
    }

    pub fn cols(&self) -> usize {
        self.inner.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn is_empty(&self) -> bool {
        self.rows() == 0 || self.cols() == 0
    }

    pub fn to_row_major(&self) -> Vec<C64> {
        let mut out = Vec::with_capacity(self.rows() * self.cols());
        for i in 0..self.rows() {
            for j in 0..self.cols() {
                out.push(self[(i, j)]);
            }
        }
        out
    }

    pub fn row(&self, i: usize) -> Vec<C64> {
        (0..self.cols()).map(|j| self[(i, j)]).collect()
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows()).map(|i| self[(i, j)]).collect()
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.rows().min(self.cols())).map(|i| self[(i, i)]).collect()
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self { inner: self.inner.adjoint().to_owned() }
    }

    pub fn transpose(&self) -> Self {
        Self { inner: self.inner.transpose().to_owned() }
    }

    pub fn conj(&self) -> Self {
        Self::from_fn(self.rows(), self.cols(), |i, j| self[(i, j)].conj())
    }

    pub fn scale(&self, c: C64) -> Self {
        Self::from_fn(self.rows(), self.cols(), |i, j| self[(i, j)] * c)
    }

    pub fn scale_real(&self, c: f64) -> Self {
        self.scale(C64::new(c, 0.0))
    }

    /// `self + c·I`.
    pub fn shift(&self, c: C64) -> Self {
        let mut out = self.clone();
        for i in 0..self.rows().min(self.cols()) {
            out[(i, i)] += c;
        }
        out
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols(), other.rows(), "matmul dimension mismatch");
        Self { inner: &self.inner * &other.inner }
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols(), v.len(), "matrix-vector dimension mismatch");
        let x = faer::ColRef::from_slice(v);
        let y = self.inner.as_ref() * x;
        y.iter().copied().collect()
    }

    /// `(A + A*)/2`.
    pub fn hermitian_part(&self) -> Self {
        let adj = self.adjoint();
        Self::from_fn(self.rows(), self.cols(), |i, j| (self[(i, j)] + adj[(i, j)]) * 0.5)
    }

    /// `(A − A*)/(2i)`, Hermitian; its top eigenvalue is the sup of Im of the numerical range.
    pub fn imaginary_part(&self) -> Self {
        let adj = self.adjoint();
        let half_over_i = C64::new(0.0, -0.5);
        Self::from_fn(self.rows(), self.cols(), |i, j| (self[(i, j)] - adj[(i, j)]) * half_over_i)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.inner.norm_l2()
    }

    pub fn max_abs(&self) -> f64 {
        let mut m = 0.0f64;
        for j in 0..self.cols() {
            for i in 0..self.rows() {
                m = m.max(self[(i, j)].norm());
            }
        }
        m
    }

    /// Max entry distance between two equally-shaped matrices.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows(), self.cols()), (other.rows(), other.cols()));
        (self - other).max_abs()
    }

    /// Hermitian to relative tolerance `tol` (relative to the largest entry).
    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.is_square() && self.max_abs_diff(&self.adjoint()) <= tol * self.max_abs().max(f64::MIN_POSITIVE)
    }

    pub fn is_finite(&self) -> bool {
        (0..self.cols()).all(|j| (0..self.rows()).all(|i| {
            let z = self[(i, j)];
            z.re.is_finite() && z.im.is_finite()
        }))
    }

    /// Rows `[r0, r1)`.
    pub fn row_block(&self, r0: usize, r1: usize) -> Self {
        Self::from_fn(r1 - r0, self.cols(), |i, j| self[(r0 + i, j)])
    }

    /// Columns `[c0, c1)`.
    pub fn col_block(&self, c0: usize, c1: usize) -> Self {
        Self::from_fn(self.rows(), c1 - c0, |i, j| self[(i, c0 + j)])
    }

    /// Stacks `self` on top of `other`.
    pub fn vstack(&self, other: &Self) -> Self {
        assert_eq!(self.cols(), other.cols(), "vstack column mismatch");
        let r = self.rows();
        Self::from_fn(r + other.rows(), self.cols(), |i, j| if i < r { self[(i, j)] } else { other[(i - r, j)] })
    }

    /// Block-diagonal sum `diag(self, other)`.
    pub fn direct_sum(&self, other: &Self) -> Self {
        let (r, c) = (self.rows(), self.cols());
        Self::from_fn(r + other.rows(), c + other.cols(), |i, j| match (i < r, j < c) {
            (true, true) => self[(i, j)],
            (false, false) => other[(i - r, j - c)],
            _ => C64::new(0.0, 0.0),
        })
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, idx: (usize, usize)) -> &C64 {
        &self.inner[idx]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, idx: (usize, usize)) -> &mut C64 {
        &mut self.inner[idx]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: Self) -> ComplexMatrix {
        assert_eq!((self.rows(), self.cols()), (rhs.rows(), rhs.cols()), "add dimension mismatch");
        ComplexMatrix { inner: &self.inner + &rhs.inner }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: Self) -> ComplexMatrix {
        assert_eq!((self.rows(), self.cols()), (rhs.rows(), rhs.cols()), "sub dimension mismatch");
        ComplexMatrix { inner: &self.inner - &rhs.inner }
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: Self) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        self.scale_real(-1.0)
    }
}

/// `[re, im]` pairs, nested row by row.
impl Serialize for ComplexMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<[f64; 2]>> = (0..self.rows())
            .map(|i| (0..self.cols()).map(|j| [self[(i, j)].re, self[(i, j)].im]).collect())
            .collect();
        rows.serialize(s)
    }
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows: Vec<Vec<[f64; 2]>> = Vec::deserialize(d)?;
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != m) {
            return Err(serde::de::Error::custom("ragged matrix rows"));
        }
        let entries = rows.iter().flatten().map(|p| C64::new(p[0], p[1])).collect();
        ComplexMatrix::new(n, m, entries).map_err(serde::de::Error::custom)
    }
}

pub fn vdot(x: &[C64], y: &[C64]) -> C64 {
    // y^H x
    x.iter().zip(y).map(|(a, b)| a * b.conj()).sum()
}

pub fn vnorm(x: &[C64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}
