//! Curvature-model catalog.
//!
//! Each model supplies the operator path `t ↦ R(t) = R(γ′(t),·)γ′(t)`
//! restricted to `v^⊥` along a unit-speed geodesic, as a symmetric operator
//! of dimension `n − 1`. Sign convention: the eigenvalues of `R(t)` are
//! sectional curvatures (negative for hyperbolic), matching the Jacobi
//! equation `J″ + R J = 0`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mat::Mat;
use crate::scalar::{real, Real};
use crate::symop::SymOp;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("ModelError: {0}")]
    Invalid(String),
    #[error("ModelError: curvature operator has non-finite entries at t={0}")]
    NonFinite(f64),
}

/// Geodesic direction: `Reversed` evaluates the path as `R(−t)`, realizing
/// the `−v` geodesic used to define the unstable Riccati solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    Forward,
    Reversed,
}

impl Orientation {
    fn sign<T: Real>(self) -> T {
        match self {
            Orientation::Forward => T::one(),
            Orientation::Reversed => -T::one(),
        }
    }
}

impl Serialize for Orientation {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_i8(match self {
            Orientation::Forward => 1,
            Orientation::Reversed => -1,
        })
    }
}

impl<'de> Deserialize<'de> for Orientation {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match i8::deserialize(d)? {
            1 => Ok(Orientation::Forward),
            -1 => Ok(Orientation::Reversed),
            other => Err(serde::de::Error::custom(format!(
                "orientation must be 1 or -1, got {other}"
            ))),
        }
    }
}

/// One curvature eigenvalue with its multiplicity in a time-independent
/// diagonal model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenPair<T> {
    pub eigenvalue: T,
    pub multiplicity: usize,
}

/// Constant-curvature factor of a Riemannian product.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductFactor<T> {
    pub kappa: T,
    pub dim: usize,
}

/// Finite Fourier series `constant + Σ_k cos[k−1]·cos(2πkt/P) + sin[k−1]·sin(2πkt/P)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierSeries<T> {
    pub constant: T,
    #[serde(default = "Vec::new")]
    pub cos: Vec<T>,
    #[serde(default = "Vec::new")]
    pub sin: Vec<T>,
}

impl<T: Real> FourierSeries<T> {
    pub fn constant(value: T) -> Self {
        FourierSeries { constant: value, cos: vec![], sin: vec![] }
    }

    fn eval(&self, t: T, period: T) -> T {
        let tau = real::<T>(2.0) * T::PI() / period;
        let mut acc = self.constant;
        for (k, &a) in self.cos.iter().enumerate() {
            let freq = tau * T::from_usize(k + 1).unwrap();
            acc += a * (freq * t).cos();
        }
        for (k, &b) in self.sin.iter().enumerate() {
            let freq = tau * T::from_usize(k + 1).unwrap();
            acc += b * (freq * t).sin();
        }
        acc
    }

    fn is_finite(&self) -> bool {
        self.constant.is_finite()
            && self.cos.iter().all(|x| x.is_finite())
            && self.sin.iter().all(|x| x.is_finite())
    }
}

/// Kind-specific parameters, tagged for the JSON config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params")]
pub enum ModelKind<T> {
    /// Constant sectional curvature `kappa`.
    Constant { kappa: T },
    /// Time-independent diagonal operator from symmetric-space data
    /// (complex hyperbolic space: one eigenvalue −4, and −1 with
    /// multiplicity `n − 2`).
    RankOneSymmetric { eigen_pairs: Vec<EigenPair<T>> },
    /// Product of two constant-curvature factors; `c = ‖v₁‖` splits the
    /// geodesic direction between them. Block-diagonal operator
    /// `diag(κ₁c² ×(n₁−1), κ₂(1−c²) ×(n₂−1), 0 ×1)`; the trailing zero is
    /// the mixed rotation direction in the 2-plane of `(v₁, v₂)`.
    Product { factors: [ProductFactor<T>; 2], c: T },
    /// Diagonal operator with periodic entries given as finite Fourier
    /// coefficient lists (one series per normal direction).
    PeriodicCustom { period: T, diagonal: Vec<FourierSeries<T>> },
}

fn default_orientation() -> Orientation {
    Orientation::Forward
}

fn is_forward(o: &Orientation) -> bool {
    *o == Orientation::Forward
}

fn phase_is_zero<T: num_traits::Zero>(p: &T) -> bool {
    p.is_zero()
}

/// Specification of the curvature operator path along one geodesic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "T: serde::Serialize + num_traits::Zero",
    deserialize = "T: serde::Deserialize<'de> + num_traits::Zero"
))]
pub struct CurvatureModel<T> {
    #[serde(flatten)]
    pub kind: ModelKind<T>,
    pub ambient_dim: usize,
    #[serde(default = "default_orientation", skip_serializing_if = "is_forward")]
    pub orientation: Orientation,
    /// Arc-length offset of the basepoint along the geodesic; lets the flow
    /// `φ_t` be realized as a model transformation. Only time-dependent
    /// kinds are affected.
    #[serde(default = "num_traits::Zero::zero", skip_serializing_if = "phase_is_zero")]
    pub phase: T,
}

impl<T: Real> CurvatureModel<T> {
    pub fn new(kind: ModelKind<T>, ambient_dim: usize) -> Result<Self, ModelError> {
        let model = CurvatureModel {
            kind,
            ambient_dim,
            orientation: Orientation::Forward,
            phase: T::zero(),
        };
        model.validate()?;
        Ok(model)
    }

    pub fn constant(kappa: T, ambient_dim: usize) -> Self {
        Self::new(ModelKind::Constant { kappa }, ambient_dim).expect("valid constant model")
    }

    /// Hyperbolic space of curvature −1 and dimension `n`.
    pub fn hyperbolic(n: usize) -> Self {
        Self::constant(-T::one(), n)
    }

    pub fn flat(n: usize) -> Self {
        Self::constant(T::zero(), n)
    }

    /// Round sphere of curvature +1 and dimension `n` (has conjugate points;
    /// used to exercise the detection paths).
    pub fn sphere(n: usize) -> Self {
        Self::constant(T::one(), n)
    }

    /// Complex hyperbolic space of complex dimension `m` (real dimension
    /// `2m`): curvature eigenvalues −4 (the `Jv` direction) and −1 with
    /// multiplicity `2m − 2`.
    pub fn complex_hyperbolic(m: usize) -> Result<Self, ModelError> {
        if m < 1 {
            return Err(ModelError::Invalid("complex dimension must be ≥ 1".into()));
        }
        let four = real::<T>(4.0);
        let mut eigen_pairs = vec![EigenPair { eigenvalue: -four, multiplicity: 1 }];
        if m > 1 {
            eigen_pairs.push(EigenPair { eigenvalue: -T::one(), multiplicity: 2 * m - 2 });
        }
        Self::new(ModelKind::RankOneSymmetric { eigen_pairs }, 2 * m)
    }

    /// Product of two constant-curvature factors with direction split `c`.
    pub fn product(kappa1: T, n1: usize, kappa2: T, n2: usize, c: T) -> Result<Self, ModelError> {
        Self::new(
            ModelKind::Product {
                factors: [
                    ProductFactor { kappa: kappa1, dim: n1 },
                    ProductFactor { kappa: kappa2, dim: n2 },
                ],
                c,
            },
            n1 + n2,
        )
    }

    /// Diagonal periodic model of period `period`.
    pub fn periodic(period: T, diagonal: Vec<FourierSeries<T>>) -> Result<Self, ModelError> {
        let n = diagonal.len() + 1;
        Self::new(ModelKind::PeriodicCustom { period, diagonal }, n)
    }

    /// Dimension of `v^⊥`, where all operators live.
    pub fn dim(&self) -> usize {
        self.ambient_dim - 1
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.ambient_dim < 2 {
            return Err(ModelError::Invalid(format!(
                "ambient_dim must be ≥ 2, got {}",
                self.ambient_dim
            )));
        }
        if !self.phase.is_finite() {
            return Err(ModelError::Invalid("phase must be finite".into()));
        }
        match &self.kind {
            ModelKind::Constant { kappa } => {
                if !kappa.is_finite() {
                    return Err(ModelError::Invalid("kappa must be finite".into()));
                }
            }
            ModelKind::RankOneSymmetric { eigen_pairs } => {
                let total: usize = eigen_pairs.iter().map(|p| p.multiplicity).sum();
                if total != self.dim() {
                    return Err(ModelError::Invalid(format!(
                        "eigen_pair multiplicities sum to {total}, need n−1 = {}",
                        self.dim()
                    )));
                }
                if eigen_pairs.iter().any(|p| !p.eigenvalue.is_finite()) {
                    return Err(ModelError::Invalid("eigenvalues must be finite".into()));
                }
                if eigen_pairs.iter().any(|p| p.multiplicity == 0) {
                    return Err(ModelError::Invalid("multiplicities must be ≥ 1".into()));
                }
            }
            ModelKind::Product { factors, c } => {
                if *c < T::zero() || *c > T::one() {
                    return Err(ModelError::Invalid("split c must lie in [0,1]".into()));
                }
                if factors.iter().any(|f| f.dim < 1) {
                    return Err(ModelError::Invalid("factor dimensions must be ≥ 1".into()));
                }
                if factors.iter().any(|f| !f.kappa.is_finite()) {
                    return Err(ModelError::Invalid("factor curvatures must be finite".into()));
                }
                let total = factors[0].dim + factors[1].dim;
                if total != self.ambient_dim {
                    return Err(ModelError::Invalid(format!(
                        "factor dims sum to {total}, ambient_dim is {}",
                        self.ambient_dim
                    )));
                }
            }
            ModelKind::PeriodicCustom { period, diagonal } => {
                if !(*period > T::zero()) {
                    return Err(ModelError::Invalid("period must be positive".into()));
                }
                if diagonal.len() != self.dim() {
                    return Err(ModelError::Invalid(format!(
                        "need n−1 = {} diagonal series, got {}",
                        self.dim(),
                        diagonal.len()
                    )));
                }
                if diagonal.iter().any(|f| !f.is_finite()) {
                    return Err(ModelError::Invalid(
                        "Fourier coefficients must be finite".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn is_time_independent(&self) -> bool {
        !matches!(self.kind, ModelKind::PeriodicCustom { .. })
    }

    /// Same geodesic traversed the other way (used for `U^u(v) = −U^s(−v)`).
    pub fn reversed(&self) -> Self {
        let mut m = self.clone();
        m.orientation = match self.orientation {
            Orientation::Forward => Orientation::Reversed,
            Orientation::Reversed => Orientation::Forward,
        };
        m
    }

    /// Basepoint moved along the flow: `shifted(dt)` evaluates the path of
    /// `φ_dt v`. Identity for time-independent kinds.
    pub fn shifted(&self, dt: T) -> Self {
        if self.is_time_independent() {
            return self.clone();
        }
        let mut m = self.clone();
        m.phase = self.phase + self.orientation.sign::<T>() * dt;
        m
    }

    /// Parameter time of the underlying path at geodesic time `t`.
    #[inline]
    fn path_time(&self, t: T) -> T {
        self.phase + self.orientation.sign::<T>() * t
    }

    /// Diagonal of the (always diagonal) curvature operator at time `t`.
    /// Total function; assumes a validated model.
    pub(crate) fn curvature_diag(&self, t: T) -> Vec<T> {
        match &self.kind {
            ModelKind::Constant { kappa } => vec![*kappa; self.dim()],
            ModelKind::RankOneSymmetric { eigen_pairs } => {
                let mut d = Vec::with_capacity(self.dim());
                for p in eigen_pairs {
                    for _ in 0..p.multiplicity {
                        d.push(p.eigenvalue);
                    }
                }
                d
            }
            ModelKind::Product { factors, c } => {
                let c2 = *c * *c;
                let s2 = T::one() - c2;
                let mut d = Vec::with_capacity(self.dim());
                for _ in 0..factors[0].dim - 1 {
                    d.push(factors[0].kappa * c2);
                }
                for _ in 0..factors[1].dim - 1 {
                    d.push(factors[1].kappa * s2);
                }
                d.push(T::zero());
                d
            }
            ModelKind::PeriodicCustom { period, diagonal } => {
                let s = self.path_time(t);
                diagonal.iter().map(|f| f.eval(s, *period)).collect()
            }
        }
    }

    /// The curvature operator `R(t)` on `v^⊥` as a matrix.
    pub(crate) fn curvature_mat(&self, t: T) -> Mat<T> {
        Mat::diag(&self.curvature_diag(t))
    }

    /// The curvature operator `R(t)` as a validated [`SymOp`]. Honors the
    /// orientation by evaluating the reversed path `R(−t)`.
    pub fn curvature_at(&self, t: T) -> Result<SymOp<T>, ModelError> {
        self.validate()?;
        let diag = self.curvature_diag(t);
        if diag.iter().any(|x| !x.is_finite()) {
            return Err(ModelError::NonFinite(t.to_f64().unwrap_or(f64::NAN)));
        }
        Ok(SymOp::diag(&diag))
    }

    /// Conservative bound `λ = √(max |negative part of spec R|)`, the
    /// rescaling rate for long hyperbolic integrations. Time-dependent
    /// models are sampled across one period.
    pub(crate) fn stiffness_rate(&self) -> T {
        let mut worst = T::zero();
        let probe = |t: T, worst: &mut T| {
            for x in self.curvature_diag(t) {
                if x < T::zero() {
                    *worst = worst.max(-x);
                }
            }
        };
        if self.is_time_independent() {
            probe(T::zero(), &mut worst);
        } else if let ModelKind::PeriodicCustom { period, .. } = &self.kind {
            let samples = 128;
            for k in 0..samples {
                let t = *period * T::from_usize(k).unwrap() / T::from_usize(samples).unwrap();
                probe(t, &mut worst);
            }
        }
        worst.sqrt()
    }

    /// Largest operator norm of `R` seen along the path (one period for
    /// periodic models).
    pub fn curvature_sup_norm(&self) -> T {
        let mut worst = T::zero();
        let probe = |t: T, worst: &mut T| {
            for x in self.curvature_diag(t) {
                *worst = worst.max(x.abs());
            }
        };
        if self.is_time_independent() {
            probe(T::zero(), &mut worst);
        } else if let ModelKind::PeriodicCustom { period, .. } = &self.kind {
            let samples = 128;
            for k in 0..samples {
                let t = *period * T::from_usize(k).unwrap() / T::from_usize(samples).unwrap();
                probe(t, &mut worst);
            }
        }
        worst
    }
}

/// Root datum: weight `k_α` and the linear functional `α` on the direction
/// parameters (the tuple of factor norms).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Root<T> {
    pub weight: u32,
    pub coeffs: Vec<T>,
}

/// Root system of a symmetric space, reduced to what the trace formula
/// needs: `tr U^s(v) = −Σ_α k_α |α(v)|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootSystem<T> {
    pub roots: Vec<Root<T>>,
}

impl<T: Real> RootSystem<T> {
    /// Real hyperbolic plane: single root of weight 1.
    pub fn hyperbolic_plane() -> Self {
        RootSystem {
            roots: vec![Root { weight: 1, coeffs: vec![T::one()] }],
        }
    }

    /// Real hyperbolic space H^n: one root with weight n−1.
    pub fn real_hyperbolic(n: usize) -> Self {
        RootSystem {
            roots: vec![Root { weight: (n - 1) as u32, coeffs: vec![T::one()] }],
        }
    }

    /// Complex hyperbolic space of complex dimension m: roots α (weight
    /// 2m−2) and 2α (weight 1). For m = 2: {(2, α), (1, 2α)}.
    pub fn complex_hyperbolic(m: usize) -> Self {
        let two = real::<T>(2.0);
        RootSystem {
            roots: vec![
                Root { weight: (2 * m - 2) as u32, coeffs: vec![T::one()] },
                Root { weight: 1, coeffs: vec![two] },
            ],
        }
    }

    /// H² × H²: one weight-1 root per factor, reading off that factor's norm.
    pub fn h2_x_h2() -> Self {
        RootSystem {
            roots: vec![
                Root { weight: 1, coeffs: vec![T::one(), T::zero()] },
                Root { weight: 1, coeffs: vec![T::zero(), T::one()] },
            ],
        }
    }

    /// The root-sum trace formula `−Σ_α k_α |α(v)|` at direction parameters `v`.
    pub fn root_trace(&self, v: &[T]) -> T {
        let mut acc = T::zero();
        for root in &self.roots {
            let mut alpha = T::zero();
            for (c, x) in root.coeffs.iter().zip(v) {
                alpha += *c * *x;
            }
            acc += T::from_u32(root.weight).unwrap() * alpha.abs();
        }
        -acc
    }
}

/// One catalog entry: a model with its closed-form expectations, used by the
/// CLI `catalog` listing and the verification suites.
pub struct CatalogEntry<T> {
    pub name: &'static str,
    pub model: CurvatureModel<T>,
    pub summary: &'static str,
    /// Expected stable Riccati diagonal, `None` when conjugate points make
    /// the stable solve meaningless.
    pub stable_diag: Option<Vec<T>>,
}

/// The built-in model catalog with closed-form expectations.
pub fn catalog<T: Real>() -> Vec<CatalogEntry<T>> {
    vec![
        CatalogEntry {
            name: "H2",
            model: CurvatureModel::hyperbolic(2),
            summary: "hyperbolic plane, kappa = -1: U^s = -1, alpha = 1, V = 2",
            stable_diag: Some(vec![-T::one()]),
        },
        CatalogEntry {
            name: "H3",
            model: CurvatureModel::hyperbolic(3),
            summary: "hyperbolic 3-space: U^s = -Id, alpha = 2, beta = det V = 4",
            stable_diag: Some(vec![-T::one(), -T::one()]),
        },
        CatalogEntry {
            name: "H4",
            model: CurvatureModel::hyperbolic(4),
            summary: "hyperbolic 4-space: U^s = -Id, alpha = 3, beta = 8",
            stable_diag: Some(vec![-T::one(), -T::one(), -T::one()]),
        },
        CatalogEntry {
            name: "CH2",
            model: CurvatureModel::complex_hyperbolic(2).expect("valid"),
            summary: "complex hyperbolic, m = 2: R = diag(-4,-1,-1), U^s = diag(-2,-1,-1), alpha = 4, beta = 16",
            stable_diag: Some(vec![-real::<T>(2.0), -T::one(), -T::one()]),
        },
        CatalogEntry {
            name: "flat3",
            model: CurvatureModel::flat(3),
            summary: "flat 3-space: U^s = 0 (1/T convergence), alpha = 0, verdict Flat",
            stable_diag: Some(vec![T::zero(), T::zero()]),
        },
        CatalogEntry {
            name: "H2xR",
            model: CurvatureModel::product(-T::one(), 2, T::zero(), 1, real(0.6)).expect("valid"),
            summary: "H2 x R at c = 0.6: R = diag(-0.36, 0), U^s = diag(-0.6, 0), rank 2",
            stable_diag: Some(vec![-real::<T>(0.6), T::zero()]),
        },
        CatalogEntry {
            name: "H2xH2",
            model: CurvatureModel::product(-T::one(), 2, -T::one(), 2, T::FRAC_1_SQRT_2())
                .expect("valid"),
            summary: "H2 x H2 at c = 1/sqrt(2): tr U^s = -sqrt(2), non-harmonic as a family",
            stable_diag: Some(vec![
                -T::FRAC_1_SQRT_2(),
                -(T::one() - T::FRAC_1_SQRT_2() * T::FRAC_1_SQRT_2()).sqrt(),
                T::zero(),
            ]),
        },
        CatalogEntry {
            name: "periodic",
            model: CurvatureModel::periodic(
                T::one(),
                vec![FourierSeries { constant: -T::one(), cos: vec![-real::<T>(0.3)], sin: vec![] }],
            )
            .expect("valid"),
            summary: "kappa(t) = -1 - 0.3 cos(2 pi t), n = 2: negatively curved, not asymptotically harmonic",
            stable_diag: None,
        },
        CatalogEntry {
            name: "sphere2",
            model: CurvatureModel::sphere(2),
            summary: "round 2-sphere: conjugate point at pi, Riccati limits do not exist",
            stable_diag: None,
        },
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_model_is_time_independent() {
        let m = CurvatureModel::<f64>::hyperbolic(3);
        let r0 = m.curvature_at(0.0).unwrap();
        let r7 = m.curvature_at(7.3).unwrap();
        assert_eq!(r0, r7);
        assert_eq!(r0.dim(), 2);
        assert_eq!(r0.get(0, 0), -1.0);
        assert_eq!(r0.get(1, 1), -1.0);
        assert_eq!(r0.get(0, 1), 0.0);
    }

    #[test]
    fn complex_hyperbolic_m2_diagonal() {
        // oracle: the closed-form complex-hyperbolic curvature tensor
        // R(X, v)v with the standard Kaehler structure has sectional
        // curvature -4 in the Jv direction and -1 on the rest.
        let m = CurvatureModel::<f64>::complex_hyperbolic(2).unwrap();
        let r = m.curvature_at(12.0).unwrap();
        assert_eq!(r.dim(), 3);
        let got: Vec<f64> = (0..3).map(|i| r.get(i, i)).collect();
        assert_eq!(got, vec![-4.0, -1.0, -1.0]);
    }

    #[test]
    fn product_h2_x_r_split() {
        // oracle: Jacobi-field separation of variables on the product;
        // the factor-1 block scales by c^2 and the mixed direction is flat.
        let m = CurvatureModel::product(-1.0, 2, 0.0, 1, 0.6).unwrap();
        let r = m.curvature_at(3.0).unwrap();
        assert_eq!(r.dim(), 2);
        assert!((r.get(0, 0) - (-0.36)).abs() < 1e-15);
        assert_eq!(r.get(1, 1), 0.0);
    }

    #[test]
    fn product_block_trace() {
        let (k1, n1, k2, n2) = (-1.0, 3, -2.0, 4);
        for &c in &[0.0, 0.3, 0.7071067811865476, 1.0] {
            let m = CurvatureModel::product(k1, n1, k2, n2, c).unwrap();
            let s2: f64 = 1.0 - c * c;
            let expect = k1 * c * c * (n1 - 1) as f64 + k2 * s2 * (n2 - 1) as f64;
            let got = m.curvature_at(0.0).unwrap().trace();
            assert!((got - expect).abs() < 1e-12, "c={c}: {got} vs {expect}");
        }
    }

    #[test]
    fn orientation_reversal_is_exact_time_flip() {
        let m = CurvatureModel::periodic(
            1.0,
            vec![FourierSeries { constant: -1.0, cos: vec![-0.3], sin: vec![0.1] }],
        )
        .unwrap();
        let rev = m.reversed();
        for &t in &[0.0, 0.37, 1.9, -2.4] {
            let a = rev.curvature_at(t).unwrap();
            let b = m.curvature_at(-t).unwrap();
            assert_eq!(a.entries(), b.entries());
        }
    }

    #[test]
    fn shifted_moves_the_basepoint() {
        let m = CurvatureModel::periodic(
            1.0,
            vec![FourierSeries { constant: -1.0, cos: vec![-0.3], sin: vec![] }],
        )
        .unwrap();
        let sh = m.shifted(0.25);
        for &t in &[0.0, 0.1, 0.5] {
            let a = sh.curvature_at(t).unwrap();
            let b = m.curvature_at(t + 0.25).unwrap();
            assert!((a.get(0, 0) - b.get(0, 0)).abs() < 1e-15);
        }
        // time-independent models are untouched
        let h3 = CurvatureModel::<f64>::hyperbolic(3);
        assert_eq!(h3.shifted(5.0), h3);
    }

    #[test]
    fn invalid_models_are_rejected() {
        assert!(CurvatureModel::<f64>::new(ModelKind::Constant { kappa: f64::NAN }, 3).is_err());
        assert!(CurvatureModel::product(-1.0, 2, 0.0, 1, 1.5).is_err());
        assert!(CurvatureModel::<f64>::new(
            ModelKind::RankOneSymmetric {
                eigen_pairs: vec![EigenPair { eigenvalue: -1.0, multiplicity: 1 }],
            },
            4,
        )
        .is_err());
        assert!(CurvatureModel::periodic(0.0, vec![FourierSeries::constant(-1.0)]).is_err());
    }

    #[test]
    fn root_trace_h2() {
        // oracle: stable Riccati solution of constant curvature -1 in dim 2
        let rs = RootSystem::<f64>::hyperbolic_plane();
        assert_eq!(rs.root_trace(&[1.0]), -1.0);
        assert_eq!(rs.root_trace(&[-1.0]), -1.0);
    }

    #[test]
    fn root_trace_h2_x_h2_diagonal_direction() {
        // oracle: product formula with tr U_1^s = tr U_2^s = -1
        let rs = RootSystem::<f64>::h2_x_h2();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((rs.root_trace(&[s, s]) - (-std::f64::consts::SQRT_2)).abs() < 1e-15);
    }

    #[test]
    fn root_trace_complex_hyperbolic() {
        // oracle: trace of diag(-2,-1,-1), the stable Riccati solution of
        // the rank-one symmetric model
        let rs = RootSystem::<f64>::complex_hyperbolic(2);
        assert_eq!(rs.root_trace(&[1.0]), -4.0);
    }

    #[test]
    fn rank_one_root_trace_is_direction_independent() {
        let rs = RootSystem::<f64>::complex_hyperbolic(2);
        let vals: Vec<f64> = [1.0_f64, -1.0].iter().map(|&v| rs.root_trace(&[v])).collect();
        assert!((vals[0] - vals[1]).abs() < 1e-12);
    }

    #[test]
    fn h2_x_h2_root_trace_is_non_constant() {
        let rs = RootSystem::<f64>::h2_x_h2();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for k in 0..=99 {
            let c = k as f64 / 99.0;
            let s = (1.0 - c * c).sqrt();
            let v = rs.root_trace(&[c, s]);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        assert!(hi - lo > 0.4, "spread {}", hi - lo);
    }

    #[test]
    fn catalog_models_validate_and_produce_symops() {
        for entry in catalog::<f64>() {
            entry.model.validate().unwrap();
            for &t in &[0.0, 0.5, 3.2] {
                let r = entry.model.curvature_at(t).unwrap();
                assert_eq!(r.dim(), entry.model.dim(), "{}", entry.name);
            }
        }
    }

    #[test]
    fn model_json_roundtrip() {
        let m = CurvatureModel::product(-1.0, 2, 0.0, 1, 0.6).unwrap();
        let text = serde_json::to_string(&m).unwrap();
        let back: CurvatureModel<f64> = serde_json::from_str(&text).unwrap();
        assert_eq!(m, back);
        assert!(text.contains("\"kind\":\"Product\""));
    }
}
