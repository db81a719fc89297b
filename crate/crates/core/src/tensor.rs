//! Dense matrices and d-way tensors.
//!
//! Tensors are stored row-major: the last index varies fastest. The mode-n
//! unfolding orders its columns cyclically as `(i_{n+1}, ..., i_d, i_1, ...,
//! i_{n-1})` with `i_{n-1}` fastest, which makes
//!
//! ```text
//! unfold(S x_1 U1 ... x_d Ud, n) = Un * unfold(S, n) * (U{n+1} (x) ... (x) Ud (x) U1 (x) ... (x) U{n-1})^T
//! ```
//!
//! hold exactly with the standard Kronecker layout.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Index, IndexMut, Mul, Sub};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, values: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diag(&vec![1.0; n])
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    /// Builds a matrix from a row-major value vector.
    pub fn from_vec(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{} values for a {rows}x{cols} matrix",
                values.len()
            )));
        }
        Ok(Self { rows, cols, values })
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut values = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(Error::Shape(format!("row {i} has {} entries, expected {cols}", r.len())));
            }
            values.extend_from_slice(r);
        }
        Ok(Self { rows: rows.len(), cols, values })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                values.push(f(i, j));
            }
        }
        Self { rows, cols, values }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::Shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let out_row = &mut out.values[i * rhs.cols..(i + 1) * rhs.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(rhs.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `self * self^T`.
    pub fn gram(&self) -> Self {
        let n = self.rows;
        let mut out = Self::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v: f64 = self.row(i).iter().zip(self.row(j)).map(|(a, b)| a * b).sum();
                out[(i, j)] = v;
                out[(j, i)] = v;
            }
        }
        out
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { rows: self.rows, cols: self.cols, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.check_same_shape(other)?;
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self { rows: self.rows, cols: self.cols, values })
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|v| v * s)
    }

    /// `self + s * other`.
    pub fn add_scaled(&self, other: &Self, s: f64) -> Result<Self> {
        self.zip_map(other, |a, b| a + s * b)
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frob_norm(&self) -> f64 {
        libm::sqrt(self.values.iter().map(|v| v * v).sum())
    }

    /// Sum of absolute values of all entries.
    pub fn l1_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// `(self + self^T) / 2`.
    pub fn symmetrize(&self) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| 0.5 * (self[(i, j)] + self[(j, i)]))
    }

    /// `self - other` measured in the Frobenius norm.
    pub fn frob_distance(&self, other: &Self) -> f64 {
        libm::sqrt(self.values.iter().zip(&other.values).map(|(a, b)| (a - b) * (a - b)).sum())
    }

    /// Frobenius norm of `self - self^T`.
    pub fn asymmetry(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.rows {
            for j in 0..self.cols {
                let d = self[(i, j)] - self[(j, i)];
                s += d * d;
            }
        }
        libm::sqrt(s)
    }

    /// Principal submatrix on the given index set.
    pub fn principal_submatrix(&self, idx: &[usize]) -> Self {
        Self::from_fn(idx.len(), idx.len(), |i, j| self[(idx[i], idx[j])])
    }

    /// Column-stacking vectorization, the ordering under which
    /// `vec(B X A^T) = (A (x) B) vec(X)`.
    pub fn vectorize(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.values.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                out.push(self[(i, j)]);
            }
        }
        out
    }

    /// Inverse of [`DenseMatrix::vectorize`].
    pub fn from_column_major(rows: usize, cols: usize, v: &[f64]) -> Result<Self> {
        if v.len() != rows * cols {
            return Err(Error::Shape(format!("{} values for a {rows}x{cols} matrix", v.len())));
        }
        Ok(Self::from_fn(rows, cols, |i, j| v[j * rows + i]))
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Shape(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.values[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.values[i * self.cols + j]
    }
}

// Operator sugar for same-shape arithmetic. Panics on shape mismatch, like
// slice indexing; use the fallible methods where shapes come from input.
impl Add for &DenseMatrix {
    type Output = DenseMatrix;
    fn add(self, rhs: &DenseMatrix) -> DenseMatrix {
        self.zip_map(rhs, |a, b| a + b).expect("matrix add: shape mismatch")
    }
}

impl Sub for &DenseMatrix {
    type Output = DenseMatrix;
    fn sub(self, rhs: &DenseMatrix) -> DenseMatrix {
        self.zip_map(rhs, |a, b| a - b).expect("matrix sub: shape mismatch")
    }
}

impl Mul for &DenseMatrix {
    type Output = DenseMatrix;
    fn mul(self, rhs: &DenseMatrix) -> DenseMatrix {
        self.matmul(rhs).expect("matrix mul: shape mismatch")
    }
}

/// Kronecker product with the A-row index slow and the B-row index fast.
pub fn kron(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    let (br, bc) = (b.rows(), b.cols());
    DenseMatrix::from_fn(a.rows() * br, a.cols() * bc, |i, j| {
        a[(i / br, j / bc)] * b[(i % br, j % bc)]
    })
}

/// Dense d-way array, last index fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    dims: Vec<usize>,
    values: Vec<f64>,
}

impl DenseTensor {
    pub fn new(dims: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::Shape("tensor needs at least one mode".into()));
        }
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::Shape(format!("zero-length mode in dims {dims:?}")));
        }
        let n: usize = dims.iter().product();
        if values.len() != n {
            return Err(Error::Shape(format!(
                "{} values for dims {dims:?} ({n} expected)",
                values.len()
            )));
        }
        Ok(Self { dims, values })
    }

    pub fn zeros(dims: Vec<usize>) -> Result<Self> {
        let n = dims.iter().product();
        Self::new(dims, vec![0.0; n])
    }

    pub fn from_fn(dims: Vec<usize>, mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let n: usize = dims.iter().product();
        let mut idx = vec![0usize; dims.len()];
        let mut values = Vec::with_capacity(n);
        for _ in 0..n {
            values.push(f(&idx));
            increment(&mut idx, &dims);
        }
        Self::new(dims, values)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        debug_assert_eq!(idx.len(), self.dims.len());
        let flat = idx.iter().zip(&self.dims).fold(0, |acc, (&i, &d)| acc * d + i);
        self.values[flat]
    }

    pub fn frob_norm(&self) -> f64 {
        libm::sqrt(self.values.iter().map(|v| v * v).sum())
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn is_nonnegative(&self) -> bool {
        self.values.iter().all(|&v| v >= 0.0)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { dims: self.dims.clone(), values: self.values.iter().map(|&v| f(v)).collect() }
    }

    /// Frobenius norm of `self - other`.
    pub fn frob_distance(&self, other: &Self) -> Result<f64> {
        if self.dims != other.dims {
            return Err(Error::Shape(format!("dims {:?} vs {:?}", self.dims, other.dims)));
        }
        Ok(libm::sqrt(
            self.values.iter().zip(&other.values).map(|(a, b)| (a - b) * (a - b)).sum(),
        ))
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.dims.len() {
            return Err(Error::ModeOutOfRange { mode, order: self.dims.len() });
        }
        Ok(())
    }

    /// Mode-`mode` unfolding: `dims[mode]` rows, columns in cyclic order.
    pub fn unfold(&self, mode: usize) -> Result<DenseMatrix> {
        self.check_mode(mode)?;
        let strides = unfolding_column_strides(&self.dims, mode);
        let cols = self.values.len() / self.dims[mode];
        let mut out = DenseMatrix::zeros(self.dims[mode], cols);
        let mut idx = vec![0usize; self.dims.len()];
        for &v in &self.values {
            let col: usize = idx.iter().zip(&strides).map(|(i, s)| i * s).sum();
            out[(idx[mode], col)] = v;
            increment(&mut idx, &self.dims);
        }
        Ok(out)
    }

    /// Inverse of [`DenseTensor::unfold`].
    pub fn fold(m: &DenseMatrix, mode: usize, dims: &[usize]) -> Result<Self> {
        if mode >= dims.len() {
            return Err(Error::ModeOutOfRange { mode, order: dims.len() });
        }
        let total: usize = dims.iter().product();
        if m.rows() != dims[mode] || m.rows() * m.cols() != total {
            return Err(Error::Shape(format!(
                "cannot fold a {}x{} matrix at mode {mode} into dims {dims:?}",
                m.rows(),
                m.cols()
            )));
        }
        let strides = unfolding_column_strides(dims, mode);
        let mut values = Vec::with_capacity(total);
        let mut idx = vec![0usize; dims.len()];
        for _ in 0..total {
            let col: usize = idx.iter().zip(&strides).map(|(i, s)| i * s).sum();
            values.push(m[(idx[mode], col)]);
            increment(&mut idx, dims);
        }
        Self::new(dims.to_vec(), values)
    }

    /// Mode-n product `self x_n m`: contracts mode `mode` with the columns of `m`.
    pub fn mode_product(&self, m: &DenseMatrix, mode: usize) -> Result<Self> {
        self.check_mode(mode)?;
        let n = self.dims[mode];
        if m.cols() != n {
            return Err(Error::Shape(format!(
                "mode-{mode} product needs {n} matrix columns, got {}",
                m.cols()
            )));
        }
        let outer: usize = self.dims[..mode].iter().product();
        let inner: usize = self.dims[mode + 1..].iter().product();
        let r = m.rows();
        let mut values = vec![0.0; outer * r * inner];
        for o in 0..outer {
            let src = &self.values[o * n * inner..(o + 1) * n * inner];
            let dst = &mut values[o * r * inner..(o + 1) * r * inner];
            for row in 0..r {
                let d = &mut dst[row * inner..(row + 1) * inner];
                for (k, &w) in m.row(row).iter().enumerate() {
                    if w == 0.0 {
                        continue;
                    }
                    for (x, &s) in d.iter_mut().zip(&src[k * inner..(k + 1) * inner]) {
                        *x += w * s;
                    }
                }
            }
        }
        let mut dims = self.dims.clone();
        dims[mode] = r;
        Self::new(dims, values)
    }
}

/// Row-major odometer step.
fn increment(idx: &mut [usize], dims: &[usize]) {
    for k in (0..dims.len()).rev() {
        idx[k] += 1;
        if idx[k] < dims[k] {
            return;
        }
        idx[k] = 0;
    }
}

/// Per-mode stride of the unfolding column index. Mode `mode` itself gets 0.
fn unfolding_column_strides(dims: &[usize], mode: usize) -> Vec<usize> {
    let d = dims.len();
    let mut strides = vec![0usize; d];
    let mut s = 1;
    // Walk the cyclic order backwards from the fastest mode, mode - 1.
    for step in 1..d {
        let k = (mode + d - step) % d;
        strides[k] = s;
        s *= dims[k];
    }
    strides
}
