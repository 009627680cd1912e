//! Dense row-major matrices for the tiny dimensions used here (≤ 16).
//!
//! Linear solves use Gaussian elimination with full pivoting so the
//! conditioning guard in the two-point solve is explicit and testable.

use serde::{Deserialize, Serialize};

use crate::scalar::Real;

/// Dense matrix, row-major storage. Most uses are square with `dim ≤ 16`;
/// rectangular shapes appear when the fundamental pair is integrated as one
/// stacked system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mat<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Mat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_rows(rows: &[&[T]]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Mat { rows: r, cols: c, data }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), rows * cols);
        Mat { rows, cols, data }
    }

    pub fn diag(entries: &[T]) -> Self {
        let n = entries.len();
        let mut m = Mat::zeros(n, n);
        for (i, &e) in entries.iter().enumerate() {
            m[(i, i)] = e;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn transpose(&self) -> Mat<T> {
        let mut out = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    pub fn add(&self, other: &Mat<T>) -> Mat<T> {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| a + b)
            .collect();
        Mat { rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, other: &Mat<T>) -> Mat<T> {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| a - b)
            .collect();
        Mat { rows: self.rows, cols: self.cols, data }
    }

    pub fn scale(&self, s: T) -> Mat<T> {
        let data = self.data.iter().map(|&a| a * s).collect();
        Mat { rows: self.rows, cols: self.cols, data }
    }

    /// `self += other * s`, the accumulation pattern of the RK4 stages.
    pub fn axpy(&mut self, s: T, other: &Mat<T>) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += b * s;
        }
    }

    pub fn matmul(&self, other: &Mat<T>) -> Mat<T> {
        assert_eq!(self.cols, other.rows, "inner dimensions must agree");
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    /// Matrix-vector product.
    pub fn matvec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(self.cols, v.len());
        let mut out = vec![T::zero(); self.rows];
        for i in 0..self.rows {
            let mut acc = T::zero();
            for j in 0..self.cols {
                acc += self[(i, j)] * v[j];
            }
            out[i] = acc;
        }
        out
    }

    /// Largest entry magnitude (the max norm used by the drift guards).
    pub fn max_abs(&self) -> T {
        self.data
            .iter()
            .fold(T::zero(), |acc, &x| acc.max(x.abs()))
    }

    pub fn frobenius(&self) -> T {
        self.data
            .iter()
            .fold(T::zero(), |acc, &x| acc + x * x)
            .sqrt()
    }

    /// Largest skew part `max |a_ij − a_ji|`; zero for exactly symmetric input.
    pub fn skew_max(&self) -> T {
        assert!(self.is_square());
        let mut worst = T::zero();
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Columns `lo..hi` as a new matrix.
    pub fn col_block(&self, lo: usize, hi: usize) -> Mat<T> {
        assert!(lo <= hi && hi <= self.cols);
        let mut out = Mat::zeros(self.rows, hi - lo);
        for i in 0..self.rows {
            for j in lo..hi {
                out[(i, j - lo)] = self[(i, j)];
            }
        }
        out
    }

    /// Horizontal concatenation `[self | other]`.
    pub fn hcat(&self, other: &Mat<T>) -> Mat<T> {
        assert_eq!(self.rows, other.rows);
        let mut out = Mat::zeros(self.rows, self.cols + other.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(i, j)] = self[(i, j)];
            }
            for j in 0..other.cols {
                out[(i, self.cols + j)] = other[(i, j)];
            }
        }
        out
    }

    pub fn trace(&self) -> T {
        assert!(self.is_square());
        (0..self.rows).fold(T::zero(), |acc, i| acc + self[(i, i)])
    }

    /// Determinant via full-pivot elimination.
    pub fn det(&self) -> T {
        assert!(self.is_square());
        let n = self.rows;
        if n == 0 {
            return T::one();
        }
        let mut a = self.clone();
        let mut det = T::one();
        for k in 0..n {
            // full pivot search over the trailing block
            let (mut pi, mut pj, mut best) = (k, k, T::zero());
            for i in k..n {
                for j in k..n {
                    let v = a[(i, j)].abs();
                    if v > best {
                        best = v;
                        pi = i;
                        pj = j;
                    }
                }
            }
            if best == T::zero() {
                return T::zero();
            }
            if pi != k {
                a.swap_rows(pi, k);
                det = -det;
            }
            if pj != k {
                a.swap_cols(pj, k);
                det = -det;
            }
            let pivot = a[(k, k)];
            det = det * pivot;
            for i in (k + 1)..n {
                let f = a[(i, k)] / pivot;
                for j in k..n {
                    let akj = a[(k, j)];
                    a[(i, j)] = a[(i, j)] - f * akj;
                }
            }
        }
        det
    }

    /// Solves `self · X = rhs` by Gaussian elimination with full pivoting.
    /// Returns `None` when a pivot vanishes (singular system).
    pub fn solve(&self, rhs: &Mat<T>) -> Option<Mat<T>> {
        assert!(self.is_square());
        assert_eq!(self.rows, rhs.rows);
        let n = self.rows;
        let m = rhs.cols;
        let mut a = self.clone();
        let mut b = rhs.clone();
        // col_perm[k] = original column index now sitting in slot k
        let mut col_perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (mut pi, mut pj, mut best) = (k, k, T::zero());
            for i in k..n {
                for j in k..n {
                    let v = a[(i, j)].abs();
                    if v > best {
                        best = v;
                        pi = i;
                        pj = j;
                    }
                }
            }
            if best == T::zero() {
                return None;
            }
            if pi != k {
                a.swap_rows(pi, k);
                b.swap_rows(pi, k);
            }
            if pj != k {
                a.swap_cols(pj, k);
                col_perm.swap(pj, k);
            }
            let pivot = a[(k, k)];
            for i in (k + 1)..n {
                let f = a[(i, k)] / pivot;
                if f == T::zero() {
                    continue;
                }
                for j in k..n {
                    let akj = a[(k, j)];
                    a[(i, j)] = a[(i, j)] - f * akj;
                }
                for j in 0..m {
                    let bkj = b[(k, j)];
                    b[(i, j)] = b[(i, j)] - f * bkj;
                }
            }
        }
        // back substitution into permuted unknowns
        let mut y = Mat::zeros(n, m);
        for j in 0..m {
            for i in (0..n).rev() {
                let mut acc = b[(i, j)];
                for k in (i + 1)..n {
                    acc = acc - a[(i, k)] * y[(k, j)];
                }
                y[(i, j)] = acc / a[(i, i)];
            }
        }
        // undo the column permutation
        let mut x = Mat::zeros(n, m);
        for slot in 0..n {
            let orig = col_perm[slot];
            for j in 0..m {
                x[(orig, j)] = y[(slot, j)];
            }
        }
        Some(x)
    }

    pub fn inverse(&self) -> Option<Mat<T>> {
        self.solve(&Mat::identity(self.rows))
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for i in 0..self.rows {
            self.data.swap(i * self.cols + a, i * self.cols + b);
        }
    }
}

impl<T> std::ops::Index<(usize, usize)> for Mat<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Mat<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}
