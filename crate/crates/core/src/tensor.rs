//! Dense row-major `f64` arrays and the handful of kernels the networks need.

use crate::error::{FscoError, Result};
use crate::par;

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        if shape.contains(&0) {
            return Err(FscoError::Dimension(format!("shape {shape:?} has a zero extent")));
        }
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(FscoError::Dimension(format!(
                "shape {shape:?} needs {n} values, got {}",
                data.len()
            )));
        }
        Ok(Tensor { shape, data })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        let n = shape.iter().product();
        Tensor { shape: shape.to_vec(), data: vec![0.0; n] }
    }

    pub fn filled(shape: &[usize], value: f64) -> Self {
        let n = shape.iter().product();
        Tensor { shape: shape.to_vec(), data: vec![value; n] }
    }

    /// Builds a `rows × cols` matrix from a row-major buffer.
    pub fn matrix(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        Tensor::new(vec![rows, cols], data)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(FscoError::Dimension("ragged rows".into()));
        }
        Tensor::matrix(r, c, rows.concat())
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Leading dimension (batch size for activations).
    pub fn rows(&self) -> usize {
        self.shape.first().copied().unwrap_or(0)
    }

    /// Product of all trailing dimensions.
    pub fn cols(&self) -> usize {
        self.shape.iter().skip(1).product()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let c = self.cols();
        &self.data[i * c..(i + 1) * c]
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols() + j]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    pub fn max_abs_diff(&self, other: &Tensor) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Selects rows by index into a new matrix.
    pub fn gather_rows(&self, idx: &[usize]) -> Tensor {
        let c = self.cols();
        let mut data = Vec::with_capacity(idx.len() * c);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        let mut shape = self.shape.clone();
        shape[0] = idx.len();
        Tensor { shape, data }
    }

    /// Concatenates two matrices with equal row counts side by side.
    pub fn hstack(&self, other: &Tensor) -> Result<Tensor> {
        if self.rows() != other.rows() {
            return Err(FscoError::Dimension(format!(
                "hstack row counts {} vs {}",
                self.rows(),
                other.rows()
            )));
        }
        let (a, b) = (self.cols(), other.cols());
        let mut data = Vec::with_capacity(self.rows() * (a + b));
        for i in 0..self.rows() {
            data.extend_from_slice(self.row(i));
            data.extend_from_slice(other.row(i));
        }
        Tensor::matrix(self.rows(), a + b, data)
    }

    /// Copies columns `start..end` of a matrix.
    pub fn columns(&self, start: usize, end: usize) -> Tensor {
        let data = (0..self.rows())
            .flat_map(|i| self.row(i)[start..end].iter().copied())
            .collect();
        Tensor { shape: vec![self.rows(), end - start], data }
    }
}

/// `a · bᵀ` for `a: [m × k]`, `b: [n × k]`, giving `[m × n]`.
pub fn matmul_nt(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    let (m, k, n) = (a.rows(), a.cols(), b.rows());
    if b.cols() != k {
        return Err(FscoError::Dimension(format!(
            "matmul_nt inner dims {k} vs {}",
            b.cols()
        )));
    }
    let mut out = vec![0.0; m * n];
    par::for_each_row(&mut out, n, m * n * k, |i, row| {
        let ai = a.row(i);
        for (j, o) in row.iter_mut().enumerate() {
            *o = dot(ai, b.row(j));
        }
    });
    Ok(Tensor { shape: vec![m, n], data: out })
}

/// `a · b` for `a: [m × k]`, `b: [k × n]`, giving `[m × n]`.
pub fn matmul_nn(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    let (m, k, n) = (a.rows(), a.cols(), b.cols());
    if b.rows() != k {
        return Err(FscoError::Dimension(format!(
            "matmul_nn inner dims {k} vs {}",
            b.rows()
        )));
    }
    let mut out = vec![0.0; m * n];
    par::for_each_row(&mut out, n, m * n * k, |i, row| {
        for (p, &aip) in a.row(i).iter().enumerate() {
            axpy(aip, b.row(p), row);
        }
    });
    Ok(Tensor { shape: vec![m, n], data: out })
}

/// `aᵀ · b` for `a: [k × m]`, `b: [k × n]`, giving `[m × n]`.
pub fn matmul_tn(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    let (k, m, n) = (a.rows(), a.cols(), b.cols());
    if b.rows() != k {
        return Err(FscoError::Dimension(format!(
            "matmul_tn leading dims {k} vs {}",
            b.rows()
        )));
    }
    let mut out = vec![0.0; m * n];
    par::for_each_row(&mut out, n, m * n * k, |i, row| {
        for p in 0..k {
            axpy(a.at(p, i), b.row(p), row);
        }
    });
    Ok(Tensor { shape: vec![m, n], data: out })
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}
