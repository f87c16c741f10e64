//! Row-major dense matrix with the handful of products the quantizers need.
//!
//! Products over the long (row) axis are split into blocks whose boundaries
//! depend only on the matrix shape, and block partials are summed in block
//! order, so results are bit-identical for any rayon thread count.

use std::ops::{Index, IndexMut};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Minimum rows per reduction block.
const MIN_BLOCK_ROWS: usize = 2048;
/// Upper bound on the number of reduction blocks.
const MAX_BLOCKS: usize = 64;

#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(size: usize) -> Self {
        let mut m = Self::zeros(size, size);
        for i in 0..size {
            m[(i, i)] = T::one();
        }
        m
    }

    /// Wraps a row-major buffer.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "buffer of length {} cannot hold a {}x{} matrix",
                data.len(),
                rows,
                cols
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows<R: AsRef<[T]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::Dimension(format!(
                    "row {} has {} entries, expected {}",
                    i,
                    r.len(),
                    cols
                )));
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn rows_iter(&self) -> impl Iterator<Item = &[T]> {
        // chunks_exact panics on a zero chunk size
        let cols = self.cols.max(1);
        self.data.chunks_exact(cols).take(self.rows)
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(
            T::zero(),
            |acc, v| if v.abs() > acc { v.abs() } else { acc },
        )
    }

    pub fn frobenius_norm_sq(&self) -> T {
        self.data.iter().map(|v| *v * *v).sum()
    }

    pub fn frobenius_norm(&self) -> T {
        self.frobenius_norm_sq().sqrt()
    }

    pub fn column_sums(&self) -> Vec<T> {
        let mut sums = vec![T::zero(); self.cols];
        for r in self.rows_iter() {
            for (s, v) in sums.iter_mut().zip(r) {
                *s += *v;
            }
        }
        sums
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| f(*v)).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other, "subtract")?;
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| *a - *b)
                .collect(),
        })
    }

    /// Largest absolute elementwise difference.
    pub fn max_abs_diff(&self, other: &Self) -> Result<T> {
        self.check_same_shape(other, "compare")?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .fold(T::zero(), |acc, (a, b)| acc.max((*a - *b).abs())))
    }

    fn check_same_shape(&self, other: &Self, what: &str) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::Dimension(format!(
                "cannot {} {}x{} and {}x{}",
                what, self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }

    /// `self · other`. Output rows are computed independently in parallel.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let (n, inner, m) = (self.rows, self.cols, other.cols);
        let mut out = Self::zeros(n, m);
        if m == 0 {
            return Ok(out);
        }
        out.data
            .par_chunks_mut(m)
            .zip(self.data.par_chunks(inner.max(1)))
            .for_each(|(dst, src)| {
                for (k, a) in src.iter().enumerate() {
                    if *a == T::zero() {
                        continue;
                    }
                    let brow = &other.data[k * m..(k + 1) * m];
                    for (d, b) in dst.iter_mut().zip(brow) {
                        *d += *a * *b;
                    }
                }
            });
        Ok(out)
    }

    /// `selfᵀ · other`, reducing over the shared row axis.
    pub fn t_matmul(&self, other: &Self) -> Result<Self> {
        if self.rows != other.rows {
            return Err(Error::Dimension(format!(
                "cannot form transpose product of {}x{} and {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let (a_cols, b_cols) = (self.cols, other.cols);
        let block = reduction_block_rows(self.rows);
        let starts: Vec<usize> = (0..self.rows).step_by(block).collect();
        let partials: Vec<Vec<T>> = starts
            .par_iter()
            .map(|&start| {
                let end = (start + block).min(self.rows);
                let mut acc = vec![T::zero(); a_cols * b_cols];
                for i in start..end {
                    let arow = self.row(i);
                    let brow = other.row(i);
                    for (p, a) in arow.iter().enumerate() {
                        if *a == T::zero() {
                            continue;
                        }
                        let dst = &mut acc[p * b_cols..(p + 1) * b_cols];
                        for (d, b) in dst.iter_mut().zip(brow) {
                            *d += *a * *b;
                        }
                    }
                }
                acc
            })
            .collect();
        let mut out = Self::zeros(a_cols, b_cols);
        for part in partials {
            for (d, p) in out.data.iter_mut().zip(part) {
                *d += p;
            }
        }
        Ok(out)
    }

    /// `selfᵀ · self`.
    pub fn gram(&self) -> Self {
        self.t_matmul(self).expect("gram of a matrix with itself")
    }

    /// `self · otherᵀ`.
    pub fn matmul_t(&self, other: &Self) -> Result<Self> {
        self.matmul(&other.transpose())
    }

    /// Keeps the first `k` rows.
    pub fn take_rows(&self, k: usize) -> Self {
        let k = k.min(self.rows);
        Self {
            rows: k,
            cols: self.cols,
            data: self.data[..k * self.cols].to_vec(),
        }
    }

    /// Keeps the rows in `range`.
    pub fn row_range(&self, start: usize, end: usize) -> Self {
        let end = end.min(self.rows);
        let start = start.min(end);
        Self {
            rows: end - start,
            cols: self.cols,
            data: self.data[start * self.cols..end * self.cols].to_vec(),
        }
    }
}

fn reduction_block_rows(rows: usize) -> usize {
    MIN_BLOCK_ROWS.max(rows.div_ceil(MAX_BLOCKS)).max(1)
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_mul(a: &Matrix<f64>, b: &Matrix<f64>) -> Matrix<f64> {
        Matrix::from_fn(a.rows(), b.cols(), |i, j| {
            (0..a.cols()).map(|k| a[(i, k)] * b[(k, j)]).sum()
        })
    }

    #[test]
    fn products_match_naive_loops() {
        let a = Matrix::from_fn(5, 3, |i, j| (i * 3 + j) as f64 - 4.0);
        let b = Matrix::from_fn(3, 4, |i, j| (i as f64 + 1.0) * (j as f64 - 1.5));
        assert_eq!(a.matmul(&b).unwrap(), naive_mul(&a, &b));
        let c = Matrix::from_fn(5, 2, |i, j| (i + j) as f64 * 0.5);
        assert_eq!(a.t_matmul(&c).unwrap(), naive_mul(&a.transpose(), &c));
        assert!(a.matmul(&a).is_err());
    }

    #[test]
    fn blocked_reduction_spans_many_blocks() {
        let a = Matrix::from_fn(5000, 3, |i, j| ((i * 7 + j * 13) % 17) as f64 - 8.0);
        let g = a.gram();
        let expect = naive_mul(&a.transpose(), &a);
        assert!(g.max_abs_diff(&expect).unwrap() < 1e-9);
    }

    #[test]
    fn from_rows_rejects_ragged() {
        assert!(Matrix::<f64>::from_rows(&[vec![1.0, 2.0], vec![3.0]]).is_err());
    }
}
