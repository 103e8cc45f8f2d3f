//! Dense third-order tensors.
//!
//! A [`Tensor3`] of size `n1 × n2 × n3` stores its entries slice-major: frontal
//! slice `k` occupies the contiguous range `k·n1·n2 .. (k+1)·n1·n2`, and inside a
//! slice entries are column-major (row index fastest). A frontal slice therefore
//! maps directly onto a column-major [`nalgebra::DMatrix`].
//!
//! All indices in this crate are 0-based: frontal slice `0` is the first slice.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Dense matrix used for frontal slices, unfoldings and block-circulant forms.
pub type MatrixBlock<T = f64> = DMatrix<T>;

/// Upper bound on the element count of dense helper matrices (bcirc, bdiag).
pub const MAX_DENSE_ELEMENTS: usize = 1 << 27;

pub(crate) fn check_dense_size(rows: usize, cols: usize, what: &str) -> Result<()> {
    match rows.checked_mul(cols) {
        Some(n) if n <= MAX_DENSE_ELEMENTS => Ok(()),
        _ => Err(Error::Resource(format!(
            "{what} would be {rows}x{cols}, limit is {MAX_DENSE_ELEMENTS} elements"
        ))),
    }
}

/// Dense real `n1 × n2 × n3` tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor3 {
    dims: (usize, usize, usize),
    data: Vec<f64>,
}

impl Tensor3 {
    /// Builds a tensor from slice-major data, rejecting zero dimensions,
    /// length mismatches and non-finite values.
    pub fn new(dims: (usize, usize, usize), data: Vec<f64>) -> Result<Self> {
        let len = checked_len(dims)?;
        if data.len() != len {
            return Err(Error::Shape(format!(
                "data length {} does not match dims {:?} ({len})",
                data.len(),
                dims
            )));
        }
        if let Some((index, &value)) = data.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { index, value });
        }
        Ok(Self { dims, data })
    }

    /// Internal constructor for results of arithmetic on already valid tensors.
    pub(crate) fn from_raw(dims: (usize, usize, usize), data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), dims.0 * dims.1 * dims.2);
        Self { dims, data }
    }

    pub fn zeros(dims: (usize, usize, usize)) -> Result<Self> {
        let len = checked_len(dims)?;
        Ok(Self {
            dims,
            data: vec![0.0; len],
        })
    }

    /// Builds a tensor by evaluating `f(i, j, k)` at every position.
    pub fn from_fn<F>(dims: (usize, usize, usize), mut f: F) -> Result<Self>
    where
        F: FnMut(usize, usize, usize) -> f64,
    {
        let len = checked_len(dims)?;
        let (n1, n2, n3) = dims;
        let mut data = Vec::with_capacity(len);
        for k in 0..n3 {
            for j in 0..n2 {
                for i in 0..n1 {
                    data.push(f(i, j, k));
                }
            }
        }
        Self::new(dims, data)
    }

    /// Stacks equally sized matrices as frontal slices.
    pub fn from_frontal_slices(slices: &[MatrixBlock]) -> Result<Self> {
        let first = slices
            .first()
            .ok_or_else(|| Error::Shape("no frontal slices given".into()))?;
        let (n1, n2) = first.shape();
        let mut data = Vec::with_capacity(n1 * n2 * slices.len());
        for (k, s) in slices.iter().enumerate() {
            if s.shape() != (n1, n2) {
                return Err(Error::Shape(format!(
                    "slice {k} is {:?}, expected {:?}",
                    s.shape(),
                    (n1, n2)
                )));
            }
            data.extend_from_slice(s.as_slice());
        }
        Self::new((n1, n2, slices.len()), data)
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Raw slice-major data.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        let (n1, n2, _) = self.dims;
        i + n1 * (j + n2 * k)
    }

    /// Entry `(i, j, k)`; panics when out of bounds.
    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        let (n1, n2, n3) = self.dims;
        assert!(
            i < n1 && j < n2 && k < n3,
            "index ({i},{j},{k}) out of bounds for {:?}",
            self.dims
        );
        self.data[self.index(i, j, k)]
    }

    /// Contiguous storage of frontal slice `k`.
    pub fn slice_data(&self, k: usize) -> &[f64] {
        let step = self.dims.0 * self.dims.1;
        &self.data[k * step..(k + 1) * step]
    }

    /// Copy of frontal slice `k` (0-based) as an `n1 × n2` matrix.
    pub fn frontal_slice(&self, k: usize) -> Result<MatrixBlock> {
        let (n1, n2, n3) = self.dims;
        if k >= n3 {
            return Err(Error::Range(format!(
                "frontal slice {k} of tensor with n3 = {n3}"
            )));
        }
        Ok(DMatrix::from_column_slice(n1, n2, self.slice_data(k)))
    }

    pub fn frontal_slices(&self) -> Vec<MatrixBlock> {
        (0..self.dims.2)
            .map(|k| DMatrix::from_column_slice(self.dims.0, self.dims.1, self.slice_data(k)))
            .collect()
    }

    /// Stacks the frontal slices vertically into an `(n1·n3) × n2` matrix.
    pub fn unfold(&self) -> MatrixBlock {
        let (n1, n2, n3) = self.dims;
        DMatrix::from_fn(n1 * n3, n2, |row, j| {
            self.data[self.index(row % n1, j, row / n1)]
        })
    }

    /// Inverse of [`Tensor3::unfold`] for a tensor of the given dims.
    pub fn fold(m: &MatrixBlock, dims: (usize, usize, usize)) -> Result<Self> {
        let (n1, n2, n3) = dims;
        checked_len(dims)?;
        if m.nrows() != n1 * n3 || m.ncols() != n2 {
            return Err(Error::Shape(format!(
                "cannot fold {}x{} matrix into {:?}",
                m.nrows(),
                m.ncols(),
                dims
            )));
        }
        Self::from_fn(dims, |i, j, k| m[(k * n1 + i, j)])
    }

    /// Block-circulant matrix: block `(p, q)` is frontal slice `(p − q) mod n3`.
    pub fn bcirc(&self) -> Result<MatrixBlock> {
        let (n1, n2, n3) = self.dims;
        check_dense_size(n1 * n3, n2 * n3, "bcirc")?;
        Ok(DMatrix::from_fn(n1 * n3, n2 * n3, |row, col| {
            let (p, i) = (row / n1, row % n1);
            let (q, j) = (col / n2, col % n2);
            let k = (p + n3 - q) % n3;
            self.data[self.index(i, j, k)]
        }))
    }

    /// Sum over all entries of the elementwise product.
    pub fn inner_product(&self, other: &Tensor3) -> Result<f64> {
        self.check_same_dims(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .fold(0.0, |acc, (a, b)| acc + a * b))
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, v| acc + v * v).sqrt()
    }

    pub fn l1(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, v| acc + v.abs())
    }

    pub fn linf(&self) -> f64 {
        self.data.iter().fold(0.0, |acc: f64, v| acc.max(v.abs()))
    }

    /// Sum of the traces of all frontal slices; requires square slices.
    pub fn trace(&self) -> Result<f64> {
        let (n1, n2, n3) = self.dims;
        if n1 != n2 {
            return Err(Error::Shape(format!(
                "trace needs square frontal slices, got {n1}x{n2}"
            )));
        }
        let mut total = 0.0;
        for k in 0..n3 {
            for i in 0..n1 {
                total += self.data[self.index(i, i, k)];
            }
        }
        Ok(total)
    }

    /// Applies `f` elementwise. The result is checked for finiteness.
    pub fn map<F: FnMut(f64) -> f64>(&self, f: F) -> Result<Self> {
        Self::new(self.dims, self.data.iter().copied().map(f).collect())
    }

    /// Lateral columns `0..r` of the tensor, i.e. `T(:, 0..r, :)`.
    pub fn lateral_columns(&self, r: usize) -> Result<Self> {
        let (n1, n2, n3) = self.dims;
        if r == 0 || r > n2 {
            return Err(Error::Argument(format!(
                "cannot take {r} lateral slices of {n2}"
            )));
        }
        Self::from_fn((n1, r, n3), |i, j, k| self.data[self.index(i, j, k)])
    }

    pub fn check_same_dims(&self, other: &Tensor3) -> Result<()> {
        if self.dims != other.dims {
            return Err(Error::Shape(format!("{:?} vs {:?}", self.dims, other.dims)));
        }
        Ok(())
    }

    /// `‖self − other‖_F`.
    pub fn distance(&self, other: &Tensor3) -> Result<f64> {
        self.check_same_dims(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .fold(0.0, |acc, (a, b)| acc + (a - b) * (a - b))
            .sqrt())
    }

    pub(crate) fn zip_with<F: Fn(f64, f64) -> f64>(&self, other: &Tensor3, f: F) -> Self {
        assert_eq!(self.dims, other.dims, "tensor dims differ");
        Self::from_raw(
            self.dims,
            self.data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }
}

fn checked_len(dims: (usize, usize, usize)) -> Result<usize> {
    let (n1, n2, n3) = dims;
    if n1 == 0 || n2 == 0 || n3 == 0 {
        return Err(Error::Shape(format!(
            "dimensions must be positive, got {dims:?}"
        )));
    }
    n1.checked_mul(n2)
        .and_then(|v| v.checked_mul(n3))
        .ok_or_else(|| Error::Resource(format!("tensor of dims {dims:?} overflows usize")))
}

impl Add for &Tensor3 {
    type Output = Tensor3;
    fn add(self, rhs: &Tensor3) -> Tensor3 {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl Sub for &Tensor3 {
    type Output = Tensor3;
    fn sub(self, rhs: &Tensor3) -> Tensor3 {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl Mul<f64> for &Tensor3 {
    type Output = Tensor3;
    fn mul(self, rhs: f64) -> Tensor3 {
        Tensor3::from_raw(self.dims, self.data.iter().map(|v| v * rhs).collect())
    }
}

impl Neg for &Tensor3 {
    type Output = Tensor3;
    fn neg(self) -> Tensor3 {
        self * -1.0
    }
}
