//! Small dense row-major matrices.
//!
//! The games handled here are a handful of actions per player, so a flat
//! `Vec` with explicit loops is all that is needed.

use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(k: usize) -> Self {
        let mut m = Self::zeros(k, k);
        for i in 0..k {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Matrix { rows, cols, data }
    }

    /// Builds a matrix from nested rows. All rows must have equal, nonzero length.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.is_empty() || cols == 0 {
            return Err(Error::shape("matrix rows", "nonempty", "empty"));
        }
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(Error::shape("matrix rows", cols, bad.len()));
        }
        Ok(Matrix {
            rows: rows.len(),
            cols,
            data: rows.iter().flatten().copied().collect(),
        })
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
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> impl Iterator<Item = T> + '_ {
        (0..self.rows).map(move |r| self[(r, c)])
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = T> + '_ {
        self.data.iter().copied()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)])
    }

    pub fn scale(&self, s: T) -> Self {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| x * s).collect(),
        }
    }

    pub fn mul_vec(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.cols {
            return Err(Error::shape("matrix-vector product", self.cols, x.len()));
        }
        Ok((0..self.rows)
            .map(|r| self.row(r).iter().zip(x).map(|(&a, &b)| a * b).sum())
            .collect())
    }

    pub fn mul_mat(&self, other: &Matrix<T>) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::shape(
                "matrix product",
                format!("{} inner rows", self.cols),
                other.rows,
            ));
        }
        Ok(Self::from_fn(self.rows, other.cols, |r, c| {
            (0..self.cols).map(|k| self[(r, k)] * other[(k, c)]).sum()
        }))
    }

    /// `‖A − B‖∞` taken entrywise.
    pub fn max_abs_diff(&self, other: &Matrix<T>) -> T {
        debug_assert_eq!(self.shape(), other.shape());
        self.data
            .iter()
            .zip(&other.data)
            .fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()))
    }

    pub fn determinant(&self) -> Result<T> {
        if !self.is_square() {
            return Err(Error::shape(
                "determinant",
                "square matrix",
                format!("{}x{}", self.rows, self.cols),
            ));
        }
        let (_, det) = self.lu()?;
        Ok(det)
    }

    /// Inverse via Gauss-Jordan elimination with partial pivoting.
    ///
    /// Fails with [`Error::Singular`] when `|det| <= threshold`.
    pub fn inverse(&self, threshold: T) -> Result<Self> {
        let det = self.determinant()?;
        if !(det.abs() > threshold) {
            return Err(Error::Singular {
                det: det.as_f64(),
                threshold: threshold.as_f64(),
            });
        }
        let k = self.rows;
        let mut a = self.clone();
        let mut inv = Self::identity(k);
        for col in 0..k {
            let pivot = (col..k)
                .max_by(|&i, &j| a[(i, col)].abs().partial_cmp(&a[(j, col)].abs()).unwrap())
                .unwrap();
            a.swap_rows(col, pivot);
            inv.swap_rows(col, pivot);
            let p = a[(col, col)];
            for c in 0..k {
                a[(col, c)] /= p;
                inv[(col, c)] /= p;
            }
            for r in 0..k {
                if r == col {
                    continue;
                }
                let f = a[(r, col)];
                if f == T::zero() {
                    continue;
                }
                for c in 0..k {
                    let (ac, ic) = (a[(col, c)], inv[(col, c)]);
                    a[(r, c)] -= f * ac;
                    inv[(r, c)] -= f * ic;
                }
            }
        }
        Ok(inv)
    }

    fn swap_rows(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(i * self.cols + c, j * self.cols + c);
        }
    }

    // Returns the eliminated upper-triangular factor and the determinant.
    fn lu(&self) -> Result<(Self, T)> {
        let k = self.rows;
        let mut a = self.clone();
        let mut det = T::one();
        for col in 0..k {
            let pivot = (col..k)
                .max_by(|&i, &j| a[(i, col)].abs().partial_cmp(&a[(j, col)].abs()).unwrap())
                .unwrap();
            if pivot != col {
                a.swap_rows(col, pivot);
                det = -det;
            }
            let p = a[(col, col)];
            det *= p;
            if p == T::zero() {
                return Ok((a, T::zero()));
            }
            for r in col + 1..k {
                let f = a[(r, col)] / p;
                for c in col..k {
                    let v = a[(col, c)];
                    a[(r, c)] -= f * v;
                }
            }
        }
        Ok((a, det))
    }
}

impl<T> std::ops::Index<(usize, usize)> for Matrix<T> {
    type Output = T;

    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &T {
        &self.data[r * self.cols + c]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut T {
        &mut self.data[r * self.cols + c]
    }
}

impl<T: fmt::Debug> fmt::Debug for Matrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut list = f.debug_list();
        for r in 0..self.rows {
            list.entry(&&self.data[r * self.cols..(r + 1) * self.cols]);
        }
        list.finish()
    }
}
