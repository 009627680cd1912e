//! Symmetric-operator algebra on the normal space of a unit tangent vector.
//!
//! A [`SymOp`] is a dense symmetric matrix of dimension `n − 1` (the normal
//! space of a unit vector in an `n`-manifold). Curvature operators carry
//! units 1/length², Riccati/shape operators 1/length. Spectra come from
//! cyclic Jacobi rotations: the dimensions here are tiny, so unconditional
//! stability beats asymptotic speed.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mat::Mat;
use crate::scalar::{real, rel_scale, Real};

/// Symmetry drift accepted silently and repaired by averaging.
pub const SYMMETRY_TOL: f64 = 1e-10;
/// Skew beyond this is not numerical drift; `symmetrize` rejects it.
pub const SKEW_REJECT_TOL: f64 = 1e-6;
/// Off-diagonal Frobenius mass (relative above scale one) at which the
/// Jacobi sweep terminates.
const JACOBI_OFF_TOL: f64 = 1e-14;
const JACOBI_MAX_SWEEPS: usize = 64;

#[derive(Debug, Error)]
pub enum SymOpError {
    #[error("AsymmetryError: skew {skew:.3e} exceeds {limit:.1e}")]
    Asymmetry { skew: f64, limit: f64 },
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension must be at least 1")]
    ZeroDim,
}

/// Definiteness classification against a tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Definiteness {
    /// All eigenvalues within `±tol` of zero.
    Zero,
    PositiveSemidefinite,
    NegativeSemidefinite,
    Indefinite,
}

/// Symmetric linear operator on `v^⊥`, stored dense row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymOp<T> {
    dim: usize,
    entries: Vec<T>,
}

/// Eigenvalues of a [`SymOp`] in ascending order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum<T> {
    pub dim: usize,
    pub eigenvalues: Vec<T>,
}

impl<T: Real> Spectrum<T> {
    pub fn min(&self) -> T {
        self.eigenvalues[0]
    }

    pub fn max(&self) -> T {
        self.eigenvalues[self.dim - 1]
    }

    pub fn sum(&self) -> T {
        self.eigenvalues.iter().fold(T::zero(), |a, &x| a + x)
    }

    pub fn product(&self) -> T {
        self.eigenvalues.iter().fold(T::one(), |a, &x| a * x)
    }
}

impl<T: Real> SymOp<T> {
    /// Validating constructor: square, dim ≥ 1, symmetric within [`SYMMETRY_TOL`].
    /// Entries are stored exactly symmetric (averaged).
    pub fn new(mat: &Mat<T>) -> Result<Self, SymOpError> {
        if !mat.is_square() {
            return Err(SymOpError::NotSquare { rows: mat.rows(), cols: mat.cols() });
        }
        if mat.rows() == 0 {
            return Err(SymOpError::ZeroDim);
        }
        let skew = mat.skew_max();
        if skew > real(SYMMETRY_TOL) {
            return Err(SymOpError::Asymmetry {
                skew: skew.to_f64().unwrap_or(f64::NAN),
                limit: SYMMETRY_TOL,
            });
        }
        Ok(Self::average(mat))
    }

    /// `(A + Aᵀ)/2`, rejecting skew beyond [`SKEW_REJECT_TOL`] as corruption
    /// rather than drift.
    pub fn symmetrize(mat: &Mat<T>) -> Result<Self, SymOpError> {
        if !mat.is_square() {
            return Err(SymOpError::NotSquare { rows: mat.rows(), cols: mat.cols() });
        }
        if mat.rows() == 0 {
            return Err(SymOpError::ZeroDim);
        }
        let skew = mat.skew_max();
        if skew > real(SKEW_REJECT_TOL) {
            return Err(SymOpError::Asymmetry {
                skew: skew.to_f64().unwrap_or(f64::NAN),
                limit: SKEW_REJECT_TOL,
            });
        }
        Ok(Self::average(mat))
    }

    fn average(mat: &Mat<T>) -> Self {
        let n = mat.rows();
        let half = real::<T>(0.5);
        let mut entries = vec![T::zero(); n * n];
        for i in 0..n {
            for j in 0..n {
                entries[i * n + j] = (mat[(i, j)] + mat[(j, i)]) * half;
            }
        }
        SymOp { dim: n, entries }
    }

    pub fn identity(dim: usize) -> Self {
        SymOp::from(&Mat::identity(dim))
    }

    pub fn zero(dim: usize) -> Self {
        assert!(dim >= 1);
        SymOp { dim, entries: vec![T::zero(); dim * dim] }
    }

    pub fn diag(entries: &[T]) -> Self {
        assert!(!entries.is_empty());
        SymOp::from(&Mat::diag(entries))
    }

    /// Infallible conversion for matrices known symmetric by construction.
    pub(crate) fn from(mat: &Mat<T>) -> Self {
        debug_assert!(mat.is_square() && mat.rows() >= 1);
        Self::average(mat)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.entries[i * self.dim + j]
    }

    pub fn entries(&self) -> &[T] {
        &self.entries
    }

    pub fn as_mat(&self) -> Mat<T> {
        Mat::from_vec(self.dim, self.dim, self.entries.clone())
    }

    pub fn trace(&self) -> T {
        (0..self.dim).fold(T::zero(), |a, i| a + self.get(i, i))
    }

    pub fn det(&self) -> T {
        self.as_mat().det()
    }

    pub fn add(&self, other: &SymOp<T>) -> SymOp<T> {
        assert_eq!(self.dim, other.dim);
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(&a, &b)| a + b)
            .collect();
        SymOp { dim: self.dim, entries }
    }

    pub fn sub(&self, other: &SymOp<T>) -> SymOp<T> {
        assert_eq!(self.dim, other.dim);
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(&a, &b)| a - b)
            .collect();
        SymOp { dim: self.dim, entries }
    }

    pub fn scale(&self, s: T) -> SymOp<T> {
        SymOp {
            dim: self.dim,
            entries: self.entries.iter().map(|&a| a * s).collect(),
        }
    }

    pub fn neg(&self) -> SymOp<T> {
        self.scale(-T::one())
    }

    pub fn max_abs(&self) -> T {
        self.entries.iter().fold(T::zero(), |a, &x| a.max(x.abs()))
    }

    /// Eigenvalues in ascending order by cyclic Jacobi rotations.
    pub fn spectrum(&self) -> Spectrum<T> {
        self.eigen().0
    }

    /// Eigenvalues (ascending) with matching eigenvector columns.
    pub fn eigen(&self) -> (Spectrum<T>, Mat<T>) {
        let n = self.dim;
        let mut a = self.as_mat();
        let mut v = Mat::identity(n);
        if n > 1 {
            let threshold = real::<T>(JACOBI_OFF_TOL) * rel_scale(a.frobenius());
            for _ in 0..JACOBI_MAX_SWEEPS {
                if off_norm(&a) <= threshold {
                    break;
                }
                for p in 0..n - 1 {
                    for q in p + 1..n {
                        jacobi_rotate(&mut a, &mut v, p, q);
                    }
                }
            }
        }
        let mut pairs: Vec<(T, usize)> = (0..n).map(|i| (a[(i, i)], i)).collect();
        pairs.sort_by(|x, y| x.0.partial_cmp(&y.0).expect("finite eigenvalues"));
        let eigenvalues: Vec<T> = pairs.iter().map(|&(ev, _)| ev).collect();
        let mut vecs = Mat::zeros(n, n);
        for (slot, &(_, col)) in pairs.iter().enumerate() {
            for i in 0..n {
                vecs[(i, slot)] = v[(i, col)];
            }
        }
        (Spectrum { dim: n, eigenvalues }, vecs)
    }

    /// Spectral norm `max |λ|` (exact operator norm for symmetric operators).
    pub fn operator_norm(&self) -> T {
        let s = self.spectrum();
        s.min().abs().max(s.max().abs())
    }

    /// Classifies by min/max eigenvalue against `±tol`.
    pub fn definiteness(&self, tol: T) -> Definiteness {
        assert!(tol >= T::zero());
        let s = self.spectrum();
        let (lo, hi) = (s.min(), s.max());
        if lo.abs() <= tol && hi.abs() <= tol {
            Definiteness::Zero
        } else if lo >= -tol {
            Definiteness::PositiveSemidefinite
        } else if hi <= tol {
            Definiteness::NegativeSemidefinite
        } else {
            Definiteness::Indefinite
        }
    }
}

fn off_norm<T: Real>(a: &Mat<T>) -> T {
    let n = a.rows();
    let mut acc = T::zero();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                acc += a[(i, j)] * a[(i, j)];
            }
        }
    }
    acc.sqrt()
}

/// One Jacobi rotation annihilating `a[(p, q)]`, accumulated into `v`.
fn jacobi_rotate<T: Real>(a: &mut Mat<T>, v: &mut Mat<T>, p: usize, q: usize) {
    let apq = a[(p, q)];
    if apq == T::zero() {
        return;
    }
    let half = real::<T>(0.5);
    let theta = half * (a[(q, q)] - a[(p, p)]) / apq;
    let t = {
        let mag = T::one() / (theta.abs() + (T::one() + theta * theta).sqrt());
        if theta < T::zero() {
            -mag
        } else {
            mag
        }
    };
    let c = T::one() / (T::one() + t * t).sqrt();
    let s = t * c;
    let n = a.rows();
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = c * akp - s * akq;
        a[(k, q)] = s * akp + c * akq;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = c * apk - s * aqk;
        a[(q, k)] = s * apk + c * aqk;
    }
    a[(p, q)] = T::zero();
    a[(q, p)] = T::zero();
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = c * vkp - s * vkq;
        v[(k, q)] = s * vkp + c * vkq;
    }
}
