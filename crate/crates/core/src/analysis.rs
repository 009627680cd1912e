//! The rigidity pipeline: `V = U^u − U^s`, flow invariance of `det V`,
//! rank detection through `ker V`, bounded-Jacobi verification, the product
//! trace splitting, flatness degeneration, and the Anosov certificate with
//! its explicit constants.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::jacobi::{integrate_jacobi, JacobiError};
use crate::mat::Mat;
use crate::models::{CurvatureModel, ModelError, ModelKind};
use crate::riccati::{
    accept_unconverged, propagate_riccati, stable_riccati, unstable_riccati, RiccatiError,
};
use crate::scalar::{real, rel_scale, Real};
use crate::symop::SymOp;

/// Harmonicity gate on the spread of `−tr U^s` across samples. Exact
/// catalog models sit near 1e−9 (integration error); genuinely
/// non-harmonic families sit at 0.1 and above.
pub const HARMONICITY_GATE: f64 = 1e-6;
/// `V` must be positive semidefinite to this slack for no-focal-point models.
pub const V_PSD_TOL: f64 = 1e-8;
/// Spread allowed for `det V` across samples (Lemma-level flow invariance).
pub const BETA_SPREAD_TOL: f64 = 1e-6;
/// Growth classification threshold: `‖J(±t_max)‖` beyond `10·‖X‖` is
/// exponential.
pub const GROWTH_FACTOR: f64 = 10.0;

#[derive(Debug, Error)]
pub enum AnalysisError<T: Real> {
    #[error("SingularVError: det V changes sign along the flow near t={t}")]
    SingularV { t: f64 },
    #[error("HarmonicityError: alpha_spread {spread:.6} exceeds gate {gate:.1e}", spread = .report.alpha_spread_f64(), gate = HARMONICITY_GATE)]
    Harmonicity { report: Box<AnosovReport<T>> },
    #[error("V is not positive semidefinite: min eigenvalue {min_eig:.3e}")]
    NotPositiveSemidefinite { min_eig: f64 },
    #[error(transparent)]
    Riccati(#[from] RiccatiError<T>),
    #[error(transparent)]
    Jacobi(#[from] JacobiError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Riccati data of one geodesic: both solutions and their difference at the
/// basepoint.
#[derive(Debug, Clone, Serialize)]
pub struct FlowSample<T> {
    /// Direction parameters identifying the geodesic (product split `c`, or
    /// orbit time for single-geodesic models).
    pub direction: Vec<T>,
    pub u_stable: SymOp<T>,
    pub u_unstable: SymOp<T>,
    pub v: SymOp<T>,
    /// Raw-schedule convergence of the two Riccati solves.
    pub converged: bool,
}

/// Scale-aware kernel threshold `1e−6·max(1, |tr V|)`.
pub fn default_kernel_tol<T: Real>(v: &SymOp<T>) -> T {
    real::<T>(1e-6) * rel_scale(v.trace())
}

/// Assembles `V(v) = U^u(v) − U^s(v)` from the two Riccati limits.
///
/// Unconverged schedules are accepted in extrapolated form (recorded in the
/// sample) so that product and flat geometries, whose flat directions
/// approach the limit only like `1/T`, remain analyzable; every other
/// Riccati failure propagates. `V` is validated positive semidefinite
/// within 1e−8 (relative above scale one), the no-focal-points guarantee.
pub fn compute_v<T: Real>(
    model: &CurvatureModel<T>,
    tol: T,
    t_max: T,
    h: T,
) -> Result<FlowSample<T>, AnalysisError<T>> {
    let stable = accept_unconverged(stable_riccati(model, tol, t_max, h))?;
    let unstable = accept_unconverged(unstable_riccati(model, tol, t_max, h))?;
    let v = unstable.u.sub(&stable.u);
    let min_eig = v.spectrum().min();
    if min_eig < -real::<T>(V_PSD_TOL) * rel_scale(v.operator_norm()) {
        return Err(AnalysisError::NotPositiveSemidefinite {
            min_eig: min_eig.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(FlowSample {
        direction: Vec::new(),
        u_stable: stable.u,
        u_unstable: unstable.u,
        v,
        converged: stable.converged && unstable.converged,
    })
}

/// One row of the invariance series.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct InvarianceRow<T> {
    pub t: T,
    pub det_v: T,
    pub tr_u_s: T,
    pub tr_u_u: T,
}

/// Outcome of the `det V` flow-invariance check.
#[derive(Debug, Clone, Serialize)]
pub struct DetVInvariance<T> {
    pub det_v0: T,
    /// `det V(0) ≈ 0`: the rank ≥ 2 branch, where the first deviation is
    /// `max |det V(t)|` and the log-derivative identity is vacuous.
    pub degenerate: bool,
    /// `max_t |det V(t) − det V(0)|` (or `max_t |det V(t)|` when degenerate).
    pub max_det_deviation: T,
    /// `max_t |d/dt log det V + tr U^u + tr U^s|` by central differences;
    /// zero in the degenerate branch.
    pub max_logderiv_deviation: T,
    #[serde(skip)]
    pub series: Vec<InvarianceRow<T>>,
}

/// Transports `U^s` and `U^u` along the flow, forms `V(t)`, and measures
/// both halves of the invariance statement: constancy of `det V` (which
/// needs the harmonicity trace cancellation) and the unconditional identity
/// `d/dt log det V = −(tr U^u + tr U^s)`.
///
/// `U^u` propagates forward from 0; `U^s` is solved at `t_max` (shifted
/// model) and propagated backward, the direction in which the stable
/// solution attracts. Forward transport of `U^s` amplifies its initial
/// error by `e^{2λt}` and is avoided.
pub fn detv_flow_invariance<T: Real>(
    model: &CurvatureModel<T>,
    t_max: T,
    h: T,
    tol: T,
    t_max_riccati: T,
) -> Result<DetVInvariance<T>, AnalysisError<T>> {
    let u_u0 = accept_unconverged(unstable_riccati(model, tol, t_max_riccati, h))?.u;
    let u_s_end =
        accept_unconverged(stable_riccati(&model.shifted(t_max), tol, t_max_riccati, h))?.u;

    let path_u = propagate_riccati(model, &u_u0, T::zero(), t_max, h)?;
    let path_s = propagate_riccati(model, &u_s_end, t_max, T::zero(), h)?.ascending();
    assert_eq!(path_u.samples.len(), path_s.samples.len());

    let series: Vec<InvarianceRow<T>> = path_u
        .samples
        .iter()
        .zip(&path_s.samples)
        .map(|((t, uu), (_, us))| {
            let v = uu.sub(us);
            InvarianceRow {
                t: *t,
                det_v: v.det(),
                tr_u_s: us.trace(),
                tr_u_u: uu.trace(),
            }
        })
        .collect();

    let det_v0 = series[0].det_v;
    let v0 = path_u.samples[0].1.sub(&path_s.samples[0].1);
    let degenerate = det_v0.abs() <= default_kernel_tol(&v0);

    let mut max_det_dev = T::zero();
    for row in &series {
        let dev = if degenerate {
            row.det_v.abs()
        } else {
            (row.det_v - det_v0).abs()
        };
        max_det_dev = max_det_dev.max(dev);
        if !degenerate && row.det_v * det_v0 <= T::zero() {
            return Err(AnalysisError::SingularV {
                t: row.t.to_f64().unwrap_or(f64::NAN),
            });
        }
    }

    let mut max_logderiv_dev = T::zero();
    if !degenerate {
        let two_h = real::<T>(2.0) * path_u.step;
        for k in 1..series.len() - 1 {
            let dlog = (series[k + 1].det_v.ln() - series[k - 1].det_v.ln()) / two_h;
            let dev = (dlog + series[k].tr_u_u + series[k].tr_u_s).abs();
            max_logderiv_dev = max_logderiv_dev.max(dev);
        }
    }

    Ok(DetVInvariance {
        det_v0,
        degenerate,
        max_det_deviation: max_det_dev,
        max_logderiv_deviation: max_logderiv_dev,
        series,
    })
}

/// Rank of the geodesic: `1 + dim ker V`, with the kernel counted against
/// `kernel_tol`.
pub fn rank_estimate<T: Real>(sample: &FlowSample<T>, kernel_tol: T) -> usize {
    assert!(kernel_tol > T::zero());
    let spec = sample.v.spectrum();
    1 + spec
        .eigenvalues
        .iter()
        .filter(|l| l.abs() <= kernel_tol)
        .count()
}

/// Growth classification of a Jacobi field over `[−t_max, t_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum GrowthClass {
    Bounded,
    ExponentialGrowth,
}

/// Integrates the Jacobi field with `J(0) = X`, `J′(0) = U^s·X` both ways
/// and classifies it: bounded fields are exactly those in
/// `E^s(v) ∩ E^u(v)`, i.e. the kernel directions of `V`.
pub fn bounded_jacobi_check<T: Real>(
    model: &CurvatureModel<T>,
    x: &[T],
    t_max: T,
    h: T,
    tol: T,
    t_max_riccati: T,
) -> Result<(T, GrowthClass), AnalysisError<T>> {
    let dim = model.dim();
    assert_eq!(x.len(), dim);
    let norm_x = x.iter().fold(T::zero(), |a, &v| a + v * v).sqrt();
    assert!(
        (norm_x - T::one()).abs() < real(1e-8),
        "X must be a unit vector"
    );
    let u_s = accept_unconverged(stable_riccati(model, tol, t_max_riccati, h))?.u;
    let j0 = Mat::from_vec(dim, 1, x.to_vec());
    let jp0 = Mat::from_vec(dim, 1, u_s.as_mat().matvec(x));

    let col_norm = |m: &Mat<T>| -> T {
        (0..dim)
            .fold(T::zero(), |a, i| a + m[(i, 0)] * m[(i, 0)])
            .sqrt()
    };

    let forward = integrate_jacobi(model, &j0, &jp0, T::zero(), t_max, h)?;
    let backward = integrate_jacobi(model, &j0, &jp0, T::zero(), -t_max, h)?;
    let mut sup = T::zero();
    for s in forward.samples.iter().chain(&backward.samples) {
        sup = sup.max(col_norm(&s.j));
    }
    let threshold = real::<T>(GROWTH_FACTOR) * norm_x;
    let class = if col_norm(&forward.last().j) > threshold
        || col_norm(&backward.last().j) > threshold
    {
        GrowthClass::ExponentialGrowth
    } else {
        GrowthClass::Bounded
    };
    Ok((sup, class))
}

/// Result of the product trace splitting check.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ProductTraceCheck<T> {
    pub c: T,
    pub lhs: T,
    pub rhs: T,
    pub deviation: T,
}

/// Checks `tr U^s(v₁,v₂) = ‖v₁‖·tr U₁^s + ‖v₂‖·tr U₂^s` on the product of
/// two constant-curvature factors: the left side from the Riccati limit on
/// the product model, the right from the factor limits.
pub fn product_trace_check<T: Real>(
    kappa1: T,
    n1: usize,
    kappa2: T,
    n2: usize,
    c: T,
    tol: T,
    t_max: T,
    h: T,
) -> Result<ProductTraceCheck<T>, AnalysisError<T>> {
    let product = CurvatureModel::product(kappa1, n1, kappa2, n2, c)?;
    let lhs = accept_unconverged(stable_riccati(&product, tol, t_max, h))?
        .u
        .trace();
    let factor_trace = |kappa: T, n: usize| -> Result<T, AnalysisError<T>> {
        if n < 2 {
            // a 1-dimensional factor has an empty normal space
            return Ok(T::zero());
        }
        let m = CurvatureModel::constant(kappa, n);
        Ok(accept_unconverged(stable_riccati(&m, tol, t_max, h))?
            .u
            .trace())
    };
    let s = (T::one() - c * c).sqrt();
    let rhs = c * factor_trace(kappa1, n1)? + s * factor_trace(kappa2, n2)?;
    Ok(ProductTraceCheck { c, lhs, rhs, deviation: (lhs - rhs).abs() })
}

/// Where a flatness check stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FlatnessStatus {
    Flat,
    /// `|tr U^s|` above tolerance: the zero-trace hypothesis is not met and
    /// the degeneration chain does not apply.
    HypothesisNotMet,
    NotNegativeSemidefinite,
    OperatorNotZero,
    CurvatureNotZero,
}

/// Flatness degeneration verdict with each gate reported separately.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FlatnessReport<T> {
    pub status: FlatnessStatus,
    pub is_flat: bool,
    pub trace: T,
    pub operator_norm: T,
    pub curvature_sup: T,
}

/// The degeneration chain on a given stable solution: zero trace plus
/// negative semidefiniteness force `U^s ≡ 0`, and the Riccati equation then
/// forces `R ≡ 0`. Gates are checked in that order.
pub fn flatness_verdict<T: Real>(
    u_s: &SymOp<T>,
    curvature_sup: T,
    tol: T,
) -> FlatnessReport<T> {
    let trace = u_s.trace();
    let norm = u_s.operator_norm();
    let dim_t = T::from_usize(u_s.dim()).unwrap();
    let status = if trace.abs() > tol {
        FlatnessStatus::HypothesisNotMet
    } else if u_s.spectrum().max() > tol {
        FlatnessStatus::NotNegativeSemidefinite
    } else if norm > dim_t * tol {
        FlatnessStatus::OperatorNotZero
    } else if curvature_sup > tol {
        FlatnessStatus::CurvatureNotZero
    } else {
        FlatnessStatus::Flat
    };
    FlatnessReport {
        status,
        is_flat: status == FlatnessStatus::Flat,
        trace,
        operator_norm: norm,
        curvature_sup,
    }
}

/// Runs the stable Riccati solve and applies [`flatness_verdict`]. Flat
/// directions converge like `1/T`, so callers use flat-rate numerics (loose
/// Riccati tolerance, large `T_max`).
pub fn flatness_check<T: Real>(
    model: &CurvatureModel<T>,
    tol: T,
    riccati_tol: T,
    t_max: T,
    h: T,
) -> Result<FlatnessReport<T>, AnalysisError<T>> {
    let stable = accept_unconverged(stable_riccati(model, riccati_tol, t_max, h))?;
    Ok(flatness_verdict(&stable.u, model.curvature_sup_norm(), tol))
}

/// Certificate verdict. Precedence follows the proof structure: flat and
/// higher-rank branches dispatch before the rank-one Anosov argument.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Anosov,
    Flat,
    HigherRank,
    Indeterminate,
}

/// Per-sample dump attached to the certificate report.
#[derive(Debug, Clone, Serialize)]
pub struct SampleReport<T> {
    pub direction: Vec<T>,
    pub u_s: SymOp<T>,
    pub u_u: SymOp<T>,
    pub v: SymOp<T>,
    pub tr_u_s: T,
    pub det_v: T,
    pub min_eig_v: T,
    pub converged: bool,
}

/// The certificate scalars and verdict.
#[derive(Debug, Clone, Serialize)]
pub struct AnosovReport<T> {
    /// `α = tr U^u = −tr U^s` (1/length), averaged over samples.
    pub alpha: T,
    /// max − min of `−tr U^s` over samples.
    pub alpha_spread: T,
    /// `β = det V`, averaged over samples after a constancy check.
    pub beta: T,
    /// Operator-norm bound on `U^s` over samples.
    #[serde(rename = "K")]
    pub k: T,
    /// `β·(2α)^{1−n}`, the certified lower bound on the spectrum of `V`.
    pub delta_bound: T,
    /// The sharper `β/(2α)^{n−2}` implied by trace-positivity, recorded for
    /// comparison.
    pub delta_bound_sharp: T,
    /// Smallest eigenvalue of `V` actually observed.
    pub delta_actual: T,
    /// Ambient dimension.
    pub n: usize,
    pub verdict: Verdict,
    pub num_samples: usize,
    pub samples: Vec<SampleReport<T>>,
}

impl<T: Real> AnosovReport<T> {
    fn alpha_spread_f64(&self) -> f64 {
        self.alpha_spread.to_f64().unwrap_or(f64::NAN)
    }
}

/// Sample directions used when a config provides none: the split grid for
/// products, a handful of orbit times otherwise.
pub fn default_sample_directions<T: Real>(model: &CurvatureModel<T>) -> Vec<T> {
    match model.kind {
        ModelKind::Product { .. } => vec![real(0.2), real(0.6), T::one()],
        _ => vec![T::zero(), real(2.5), real(5.0), real(7.5), real(10.0)],
    }
}

/// The model instance for one sample direction: products reinterpret the
/// direction as the split `c`; single-geodesic models as an orbit time.
pub fn model_at_direction<T: Real>(
    model: &CurvatureModel<T>,
    direction: T,
) -> Result<CurvatureModel<T>, ModelError> {
    match &model.kind {
        ModelKind::Product { factors, .. } => {
            let mut m = model.clone();
            m.kind = ModelKind::Product { factors: factors.clone(), c: direction };
            m.validate()?;
            Ok(m)
        }
        _ => Ok(model.shifted(direction)),
    }
}

/// Assembles the Anosov certificate over the sampled directions.
///
/// Verdict order: Flat, then the harmonicity gate (a non-harmonic family
/// cannot carry a well-defined `β` and errors out), then HigherRank
/// (`β ≈ 0` with `α > tol`), then Anosov when `V` is uniformly positive.
pub fn bolton_certificate<T: Real>(
    model: &CurvatureModel<T>,
    directions: Option<&[T]>,
    tol: T,
    t_max_riccati: T,
    h: T,
) -> Result<AnosovReport<T>, AnalysisError<T>> {
    model.validate()?;
    let dirs: Vec<T> = match directions {
        Some(d) => {
            assert!(!d.is_empty(), "need at least one sample direction");
            d.to_vec()
        }
        None => default_sample_directions(model),
    };

    let flow_samples: Vec<FlowSample<T>> = dirs
        .par_iter()
        .map(|&d| -> Result<FlowSample<T>, AnalysisError<T>> {
            let m = model_at_direction(model, d)?;
            let mut s = compute_v(&m, tol, t_max_riccati, h)?;
            s.direction = vec![d];
            Ok(s)
        })
        .collect::<Result<_, _>>()?;

    let samples: Vec<SampleReport<T>> = flow_samples
        .into_iter()
        .map(|s| {
            let det_v = s.v.det();
            let min_eig_v = s.v.spectrum().min();
            SampleReport {
                direction: s.direction,
                tr_u_s: s.u_stable.trace(),
                det_v,
                min_eig_v,
                u_s: s.u_stable,
                u_u: s.u_unstable,
                v: s.v,
                converged: s.converged,
            }
        })
        .collect();

    let count = T::from_usize(samples.len()).unwrap();
    let alphas: Vec<T> = samples.iter().map(|s| -s.tr_u_s).collect();
    let alpha = alphas.iter().fold(T::zero(), |a, &x| a + x) / count;
    let alpha_spread = alphas.iter().fold(T::neg_infinity(), |a, &x| a.max(x))
        - alphas.iter().fold(T::infinity(), |a, &x| a.min(x));
    let k = samples
        .iter()
        .map(|s| s.u_s.operator_norm())
        .fold(T::zero(), |a, x| a.max(x));
    let betas: Vec<T> = samples.iter().map(|s| s.det_v).collect();
    let beta = betas.iter().fold(T::zero(), |a, &x| a + x) / count;
    let beta_spread = betas.iter().fold(T::neg_infinity(), |a, &x| a.max(x))
        - betas.iter().fold(T::infinity(), |a, &x| a.min(x));
    let delta_actual = samples
        .iter()
        .map(|s| s.min_eig_v)
        .fold(T::infinity(), |a, x| a.min(x));
    let n = model.ambient_dim;

    let mut report = AnosovReport {
        alpha,
        alpha_spread,
        beta,
        k,
        delta_bound: T::zero(),
        delta_bound_sharp: T::zero(),
        delta_actual,
        n,
        verdict: Verdict::Indeterminate,
        num_samples: samples.len(),
        samples,
    };

    // flat branch: every sample has vanishing trace and vanishing operator
    let all_flat = report
        .samples
        .iter()
        .all(|s| s.tr_u_s.abs() <= tol && s.u_s.operator_norm() <= tol);
    if all_flat {
        report.verdict = Verdict::Flat;
        return Ok(report);
    }

    if alpha_spread > real(HARMONICITY_GATE) {
        return Err(AnalysisError::Harmonicity { report: Box::new(report) });
    }

    // β is only meaningful once harmonicity holds
    let kernel_tol = real::<T>(1e-6) * rel_scale(report.samples[0].v.trace());
    if beta.abs() <= kernel_tol {
        report.verdict = Verdict::HigherRank;
        return Ok(report);
    }

    if beta_spread > real::<T>(BETA_SPREAD_TOL) * rel_scale(beta) {
        return Ok(report); // Indeterminate: det V not constant across samples
    }

    let two_alpha = real::<T>(2.0) * alpha;
    report.delta_bound = beta * two_alpha.powi(1 - n as i32);
    report.delta_bound_sharp = beta / two_alpha.powi(n as i32 - 2);
    if report.delta_actual > T::zero()
        && report.delta_actual >= report.delta_bound - real(1e-8)
    {
        report.verdict = Verdict::Anosov;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::FourierSeries;

    fn h3() -> CurvatureModel<f64> {
        CurvatureModel::hyperbolic(3)
    }

    fn ch2() -> CurvatureModel<f64> {
        CurvatureModel::complex_hyperbolic(2).unwrap()
    }

    fn h2xr(c: f64) -> CurvatureModel<f64> {
        CurvatureModel::product(-1.0, 2, 0.0, 1, c).unwrap()
    }

    #[test]
    fn compute_v_hyperbolic() {
        let s = compute_v(&h3(), 1e-9, 40.0, 1e-3).unwrap();
        assert!(s.v.sub(&SymOp::identity(2).scale(2.0)).max_abs() < 1e-8);
        assert!((s.v.det() - 4.0).abs() < 1e-7);
    }

    #[test]
    fn compute_v_flat_is_zero() {
        let s = compute_v(&CurvatureModel::flat(3), 1e-3, 2048.0, 1e-3).unwrap();
        assert!(s.v.max_abs() < 1e-10);
    }

    #[test]
    fn compute_v_complex_hyperbolic() {
        let s = compute_v(&ch2(), 1e-9, 40.0, 1e-3).unwrap();
        let expect = SymOp::diag(&[4.0, 2.0, 2.0]);
        assert!(s.v.sub(&expect).max_abs() < 1e-8);
        assert!((s.v.det() - 16.0).abs() < 1e-6);
    }

    #[test]
    fn rank_one_for_hyperbolic() {
        let s = compute_v(&h3(), 1e-9, 40.0, 1e-3).unwrap();
        let tol = default_kernel_tol(&s.v);
        assert_eq!(rank_estimate(&s, tol), 1);
    }

    #[test]
    fn rank_two_for_product() {
        let s = compute_v(&h2xr(0.6), 1e-9, 40.0, 1e-3).unwrap();
        let tol = default_kernel_tol(&s.v);
        assert_eq!(rank_estimate(&s, tol), 2);
        // V = diag(1.2, 0)
        assert!((s.v.get(0, 0) - 1.2).abs() < 1e-7);
        assert!(s.v.get(1, 1).abs() < 1e-10);
    }

    #[test]
    fn rank_full_for_flat() {
        let s = compute_v(&CurvatureModel::flat(4), 1e-3, 2048.0, 1e-3).unwrap();
        let tol = default_kernel_tol(&s.v);
        assert_eq!(rank_estimate(&s, tol), 4);
    }

    #[test]
    fn detv_invariance_hyperbolic() {
        let inv = detv_flow_invariance(&h3(), 10.0, 1e-3, 1e-9, 40.0).unwrap();
        assert!(!inv.degenerate);
        assert!((inv.det_v0 - 4.0).abs() < 1e-7);
        assert!(inv.max_det_deviation < 1e-8, "dev {}", inv.max_det_deviation);
        assert!(inv.max_logderiv_deviation < 1e-6);
    }

    #[test]
    fn detv_invariance_periodic_splits() {
        let m = CurvatureModel::periodic(
            1.0,
            vec![FourierSeries { constant: -1.0, cos: vec![-0.3], sin: vec![] }],
        )
        .unwrap();
        let inv = detv_flow_invariance(&m, 10.0, 1e-3, 1e-9, 40.0).unwrap();
        assert!(!inv.degenerate);
        // the unconditional identity holds…
        assert!(inv.max_logderiv_deviation < 1e-5, "{}", inv.max_logderiv_deviation);
        // …while det V itself oscillates
        assert!(inv.max_det_deviation > 1e-3, "{}", inv.max_det_deviation);
    }

    #[test]
    fn detv_invariance_degenerate_product() {
        let inv = detv_flow_invariance(&h2xr(0.6), 10.0, 1e-3, 1e-9, 40.0).unwrap();
        assert!(inv.degenerate);
        assert!(inv.max_det_deviation < 1e-6);
    }

    #[test]
    fn bounded_jacobi_kernel_direction_product() {
        let (sup, class) =
            bounded_jacobi_check(&h2xr(0.6), &[0.0, 1.0], 10.0, 1e-3, 1e-9, 40.0).unwrap();
        assert_eq!(class, GrowthClass::Bounded);
        assert!(sup <= 1.0 + 1e-6, "sup {sup}");
    }

    #[test]
    fn bounded_jacobi_hyperbolic_direction_grows_backward() {
        let m = CurvatureModel::hyperbolic(2);
        let (sup, class) =
            bounded_jacobi_check(&m, &[1.0], 10.0, 1e-3, 1e-9, 40.0).unwrap();
        assert_eq!(class, GrowthClass::ExponentialGrowth);
        assert!(sup > (10.0_f64).exp() * 0.9);
    }

    #[test]
    fn product_trace_pure_factor_edge() {
        let r = product_trace_check(-1.0, 2, 0.0, 1, 1.0, 1e-9, 80.0, 1e-3).unwrap();
        assert!((r.lhs + 1.0).abs() < 1e-7);
        assert!(r.deviation < 1e-6, "dev {}", r.deviation);
    }

    #[test]
    fn product_trace_h2xh2_diagonal() {
        let c = std::f64::consts::FRAC_1_SQRT_2;
        let r = product_trace_check(-1.0, 2, -1.0, 2, c, 1e-9, 80.0, 1e-3).unwrap();
        assert!((r.lhs + std::f64::consts::SQRT_2).abs() < 1e-6);
        assert!(r.deviation < 1e-6);
    }

    #[test]
    fn flatness_flat_model_passes() {
        let report = flatness_check(&CurvatureModel::flat(3), 1e-2, 1e-3, 2048.0, 1e-3).unwrap();
        assert!(report.is_flat);
    }

    #[test]
    fn flatness_hyperbolic_hypothesis_not_met() {
        let report = flatness_check(&h3(), 1e-2, 1e-9, 40.0, 1e-3).unwrap();
        assert_eq!(report.status, FlatnessStatus::HypothesisNotMet);
        assert!(!report.is_flat);
    }

    #[test]
    fn flatness_rejects_indefinite_zero_trace() {
        let u = SymOp::diag(&[-0.1, 0.1]);
        let report = flatness_verdict(&u, 0.0, 1e-2);
        assert_eq!(report.status, FlatnessStatus::NotNegativeSemidefinite);
        assert!(!report.is_flat);
    }

    #[test]
    fn bolton_h3_certificate() {
        let r = bolton_certificate(&h3(), None, 1e-9, 40.0, 1e-3).unwrap();
        assert_eq!(r.verdict, Verdict::Anosov);
        assert!((r.alpha - 2.0).abs() < 1e-6);
        assert!((r.beta - 4.0).abs() < 1e-6);
        assert!((r.k - 1.0).abs() < 1e-6);
        assert!((r.delta_bound - 0.25).abs() < 1e-6);
        assert!((r.delta_actual - 2.0).abs() < 1e-6);
    }

    #[test]
    fn bolton_flat_verdict() {
        let r = bolton_certificate(&CurvatureModel::flat(3), None, 1e-2, 1024.0, 1e-3).unwrap();
        assert_eq!(r.verdict, Verdict::Flat);
        assert!(r.alpha.abs() < 1e-2);
    }

    #[test]
    fn bolton_product_family_fails_harmonicity() {
        let err = bolton_certificate(&h2xr(0.6), Some(&[0.2, 0.6, 1.0]), 1e-9, 40.0, 1e-3)
            .unwrap_err();
        match err {
            AnalysisError::Harmonicity { report } => {
                assert!((report.alpha_spread - 0.8).abs() < 1e-6);
            }
            other => panic!("expected HarmonicityError, got {other:?}"),
        }
    }

    #[test]
    fn bolton_single_product_direction_is_higher_rank() {
        let r = bolton_certificate(&h2xr(0.6), Some(&[0.6]), 1e-9, 40.0, 1e-3).unwrap();
        assert_eq!(r.verdict, Verdict::HigherRank);
    }
}
