//! Dense N-order tensors and the multilinear operators built on them.
//!
//! Storage is a flat column-major array: mode 1 varies fastest, so the flat
//! buffer *is* the lexicographic vectorization `vec(X)`. Indices in this API
//! are zero-based; the 1-based convention only appears in file formats.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::Scalar;

/// N-order real array with an explicit dimension vector.
///
/// An order-0 tensor (empty `dims`) holds a single scalar.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTensor<T>", bound(deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct DenseTensor<T> {
    dims: Vec<usize>,
    data: Vec<T>,
}

#[derive(Deserialize)]
struct RawTensor<T> {
    dims: Vec<usize>,
    data: Vec<T>,
}

impl<T: Scalar> TryFrom<RawTensor<T>> for DenseTensor<T> {
    type Error = Error;

    fn try_from(raw: RawTensor<T>) -> Result<Self> {
        DenseTensor::new(raw.dims, raw.data)
    }
}

/// Row/column mode sets for a general matricization.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModePartition {
    rows: Vec<usize>,
    cols: Vec<usize>,
}

impl ModePartition {
    /// Ordered row and column mode sets; together they must be a partition of `0..order`.
    pub fn new(rows: Vec<usize>, cols: Vec<usize>, order: usize) -> Result<Self> {
        if rows.is_empty() || cols.is_empty() {
            return Err(Error::domain("matricization needs nonempty row and column mode sets"));
        }
        let mut seen = vec![false; order];
        for &m in rows.iter().chain(cols.iter()) {
            if m >= order {
                return Err(Error::domain(format!("mode {m} out of range for order {order}")));
            }
            if seen[m] {
                return Err(Error::domain(format!("mode {m} appears twice in partition")));
            }
            seen[m] = true;
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::domain("partition does not cover every mode"));
        }
        Ok(ModePartition { rows, cols })
    }

    /// `rows = {n}`, columns the remaining modes in ascending order.
    pub fn mode_n(n: usize, order: usize) -> Result<Self> {
        if n >= order {
            return Err(Error::domain(format!("mode {n} out of range for order {order}")));
        }
        let cols = (0..order).filter(|&m| m != n).collect();
        ModePartition::new(vec![n], cols, order)
    }

    /// Leading `k` modes to rows, the rest to columns.
    pub fn split_at(k: usize, order: usize) -> Result<Self> {
        ModePartition::new((0..k).collect(), (k..order).collect(), order)
    }

    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    pub fn cols(&self) -> &[usize] {
        &self.cols
    }
}

fn check_dims(dims: &[usize]) -> Result<usize> {
    if let Some(pos) = dims.iter().position(|&d| d == 0) {
        return Err(Error::domain(format!("dimension {pos} has size zero")));
    }
    Ok(dims.iter().product())
}

impl<T: Scalar> DenseTensor<T> {
    pub fn new(dims: Vec<usize>, data: Vec<T>) -> Result<Self> {
        let len = check_dims(&dims)?;
        if data.len() != len {
            return Err(Error::domain(format!(
                "data length {} does not match dims {:?} (expected {len})",
                data.len(),
                dims
            )));
        }
        Ok(DenseTensor { dims, data })
    }

    pub fn zeros(dims: &[usize]) -> Self {
        let len = dims.iter().product();
        DenseTensor {
            dims: dims.to_vec(),
            data: vec![T::zero(); len],
        }
    }

    pub fn scalar(value: T) -> Self {
        DenseTensor {
            dims: Vec::new(),
            data: vec![value],
        }
    }

    /// Builds a tensor by evaluating `f` at every zero-based multi-index.
    pub fn from_fn(dims: &[usize], mut f: impl FnMut(&[usize]) -> T) -> Self {
        let len: usize = dims.iter().product();
        let mut idx = vec![0usize; dims.len()];
        let mut data = Vec::with_capacity(len);
        for _ in 0..len {
            data.push(f(&idx));
            increment(&mut idx, dims);
        }
        DenseTensor {
            dims: dims.to_vec(),
            data,
        }
    }

    /// Identity of the contracted product over `dims`: a tensor of dims `dims ++ dims`
    /// with ones where the first and second index halves coincide.
    pub fn identity(dims: &[usize]) -> Self {
        let n: usize = dims.iter().product();
        let mut full = dims.to_vec();
        full.extend_from_slice(dims);
        let mut data = vec![T::zero(); n * n];
        for k in 0..n {
            data[k + n * k] = T::one();
        }
        DenseTensor { dims: full, data }
    }

    /// Inverse of `vectorize`.
    pub fn devectorize(v: Vec<T>, dims: &[usize]) -> Result<Self> {
        DenseTensor::new(dims.to_vec(), v)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Flat data in lexicographic (mode-1 fastest) order.
    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn vectorize(&self) -> Vec<T> {
        self.data.clone()
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    /// Zero-based flat position of a zero-based multi-index.
    pub fn flat_index(&self, idx: &[usize]) -> Result<usize> {
        if idx.len() != self.dims.len() {
            return Err(Error::domain(format!(
                "index of length {} for a tensor of order {}",
                idx.len(),
                self.order()
            )));
        }
        let mut flat = 0;
        let mut stride = 1;
        for (m, (&i, &d)) in idx.iter().zip(&self.dims).enumerate() {
            if i >= d {
                return Err(Error::domain(format!("index {i} out of range in mode {m} (size {d})")));
            }
            flat += i * stride;
            stride *= d;
        }
        Ok(flat)
    }

    /// Zero-based multi-index of a flat position.
    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        self.dims
            .iter()
            .map(|&d| {
                let i = flat % d;
                flat /= d;
                i
            })
            .collect()
    }

    pub fn get(&self, idx: &[usize]) -> Option<T> {
        self.flat_index(idx).ok().map(|k| self.data[k])
    }

    /// Same data viewed under new dims with equal total size.
    pub fn reshape(&self, dims: &[usize]) -> Result<Self> {
        DenseTensor::new(dims.to_vec(), self.data.clone())
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        DenseTensor {
            dims: self.dims.clone(),
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn scale(&self, c: T) -> Self {
        self.map(|x| x * c)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(T, T) -> T) -> Result<Self> {
        if self.dims != other.dims {
            return Err(Error::domain(format!(
                "shape mismatch {:?} vs {:?}",
                self.dims, other.dims
            )));
        }
        Ok(DenseTensor {
            dims: self.dims.clone(),
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    /// `<X, Y>` over identically shaped tensors.
    pub fn inner(&self, other: &Self) -> Result<T> {
        if self.dims != other.dims {
            return Err(Error::domain(format!(
                "inner product of {:?} and {:?}",
                self.dims, other.dims
            )));
        }
        Ok(self.data.iter().zip(&other.data).map(|(&a, &b)| a * b).sum())
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|&x| x * x).sum::<T>().sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
    }

    /// Mode-n unfolding: `I_n × ∏_{m≠n} I_m`, remaining modes in ascending order
    /// with the lowest varying fastest along columns.
    pub fn mode_n_matricize(&self, n: usize) -> Result<DMatrix<T>> {
        if self.order() == 1 && n == 0 {
            return Ok(DMatrix::from_column_slice(self.len(), 1, &self.data));
        }
        let part = ModePartition::mode_n(n, self.order())?;
        self.general_matricize(&part)
    }

    /// Matricization under an arbitrary ordered row/column mode partition.
    pub fn general_matricize(&self, part: &ModePartition) -> Result<DMatrix<T>> {
        if part.rows.len() + part.cols.len() != self.order()
            || part.rows.iter().chain(&part.cols).any(|&m| m >= self.order())
        {
            return Err(Error::domain(format!(
                "partition {:?}/{:?} does not match tensor order {}",
                part.rows,
                part.cols,
                self.order()
            )));
        }
        let nrows: usize = part.rows.iter().map(|&m| self.dims[m]).product();
        let ncols: usize = part.cols.iter().map(|&m| self.dims[m]).product();
        let row_strides = sub_strides(&self.dims, &part.rows);
        let col_strides = sub_strides(&self.dims, &part.cols);
        let mut out = DMatrix::<T>::zeros(nrows, ncols);
        let mut idx = vec![0usize; self.order()];
        for &x in &self.data {
            let r: usize = part.rows.iter().zip(&row_strides).map(|(&m, &s)| idx[m] * s).sum();
            let c: usize = part.cols.iter().zip(&col_strides).map(|(&m, &s)| idx[m] * s).sum();
            out[(r, c)] = x;
            increment(&mut idx, &self.dims);
        }
        Ok(out)
    }

    /// `X ×̄_n Y`: sums over the trailing `n` modes of `self` against the leading
    /// `n` modes of `other`. The result has dims (leading dims of X, trailing dims of Y);
    /// when both are exhausted it is an order-0 tensor holding `<X, Y>`.
    pub fn contracted_product(&self, other: &Self, n: usize) -> Result<Self> {
        if n > self.order() || n > other.order() {
            return Err(Error::domain(format!(
                "cannot contract {n} modes of tensors of order {} and {}",
                self.order(),
                other.order()
            )));
        }
        let k = self.order() - n;
        if self.dims[k..] != other.dims[..n] {
            return Err(Error::domain(format!(
                "contracted modes differ: {:?} vs {:?}",
                &self.dims[k..],
                &other.dims[..n]
            )));
        }
        // With mode-1-fastest storage both operands are already column-major matrices:
        // X is (∏ leading) × (∏ contracted), Y is (∏ contracted) × (∏ trailing).
        let rows: usize = self.dims[..k].iter().product();
        let inner: usize = self.dims[k..].iter().product();
        let cols: usize = other.dims[n..].iter().product();
        let data = linalg::matmul_colmajor(&self.data, &other.data, rows, inner, cols);
        let mut dims = self.dims[..k].to_vec();
        dims.extend_from_slice(&other.dims[n..]);
        Ok(DenseTensor { dims, data })
    }

    /// Contraction of mode `n` against a vector; mode `n` is removed from the result.
    pub fn mode_n_product(&self, v: &[T], n: usize) -> Result<Self> {
        if n >= self.order() {
            return Err(Error::domain(format!(
                "mode {n} out of range for order {}",
                self.order()
            )));
        }
        if v.len() != self.dims[n] {
            return Err(Error::domain(format!(
                "vector of length {} for mode {n} of size {}",
                v.len(),
                self.dims[n]
            )));
        }
        let inner: usize = self.dims[..n].iter().product();
        let outer: usize = self.dims[n + 1..].iter().product();
        let size = self.dims[n];
        let mut data = vec![T::zero(); inner * outer];
        for o in 0..outer {
            for (k, &vk) in v.iter().enumerate() {
                let base = inner * (k + size * o);
                let dst = &mut data[inner * o..inner * (o + 1)];
                for (d, &x) in dst.iter_mut().zip(&self.data[base..base + inner]) {
                    *d += x * vk;
                }
            }
        }
        let mut dims = self.dims.clone();
        dims.remove(n);
        Ok(DenseTensor { dims, data })
    }

    /// Multiplies every mode-`n` fiber by `m` (`m.ncols() == I_n`); mode `n` takes size
    /// `m.nrows()`. Applying one matrix per mode gives
    /// `vec(X ×₁ M₁ ⋯ ×_N M_N) = (M_N ⊗ ⋯ ⊗ M₁) vec(X)`.
    pub fn mode_n_matrix_product(&self, m: &DMatrix<T>, n: usize) -> Result<Self> {
        if n >= self.order() {
            return Err(Error::domain(format!(
                "mode {n} out of range for order {}",
                self.order()
            )));
        }
        if m.ncols() != self.dims[n] {
            return Err(Error::domain(format!(
                "matrix with {} columns for mode {n} of size {}",
                m.ncols(),
                self.dims[n]
            )));
        }
        let inner: usize = self.dims[..n].iter().product();
        let outer: usize = self.dims[n + 1..].iter().product();
        let (rows, size) = (m.nrows(), self.dims[n]);
        let mut data = vec![T::zero(); inner * rows * outer];
        for o in 0..outer {
            for k in 0..size {
                let src = &self.data[inner * (k + size * o)..inner * (k + 1 + size * o)];
                for r in 0..rows {
                    let c = m[(r, k)];
                    if c == T::zero() {
                        continue;
                    }
                    let base = inner * (r + rows * o);
                    for (d, &x) in data[base..base + inner].iter_mut().zip(src) {
                        *d += c * x;
                    }
                }
            }
        }
        let mut dims = self.dims.clone();
        dims[n] = rows;
        Ok(DenseTensor { dims, data })
    }

    /// `(X ∘ Y)_{i,j} = X_i Y_j`, an order `M + N` tensor.
    pub fn outer_product(&self, other: &Self) -> Self {
        let mut data = Vec::with_capacity(self.len() * other.len());
        for &y in &other.data {
            data.extend(self.data.iter().map(|&x| x * y));
        }
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        DenseTensor { dims, data }
    }

    /// Spectral radius of a square tensor with dims `(I_1..I_N, I_1..I_N)`, i.e. of its
    /// `∏I_j × ∏I_j` matricization. Computed in double precision.
    pub fn spectral_radius(&self) -> Result<T> {
        let order = self.order();
        if order == 0 || !order.is_multiple_of(2) || self.dims[..order / 2] != self.dims[order / 2..] {
            return Err(Error::domain(format!(
                "spectral radius needs dims (I, I), got {:?}",
                self.dims
            )));
        }
        let n: usize = self.dims[..order / 2].iter().product();
        let m = DMatrix::<f64>::from_iterator(n, n, self.data.iter().map(|x| x.to_f64_lossy()));
        Ok(T::from_f64_lossy(linalg::spectral_radius(&m)))
    }
}

/// Column-major strides of a subset of modes, in the given order.
fn sub_strides(dims: &[usize], modes: &[usize]) -> Vec<usize> {
    let mut s = 1;
    modes
        .iter()
        .map(|&m| {
            let cur = s;
            s *= dims[m];
            cur
        })
        .collect()
}

/// Advances a zero-based multi-index in mode-1-fastest order.
pub(crate) fn increment(idx: &mut [usize], dims: &[usize]) {
    for (i, &d) in idx.iter_mut().zip(dims) {
        *i += 1;
        if *i < d {
            return;
        }
        *i = 0;
    }
}
