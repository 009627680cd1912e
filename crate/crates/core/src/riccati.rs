//! Stable and unstable Riccati solutions as monotone limits of `U_T^s`.
//!
//! The stable solution is the `T → ∞` limit of `U_T^s = E_T′(0)` over the
//! geometric schedule `T_k = 2^k` capped at `T_max`; increments are
//! validated positive semidefinite (the monotonicity that makes the limit
//! exist). Exponential-rate models converge in a handful of solves; flat
//! directions approach like `−1/T` and are reported honestly as
//! unconverged at tight tolerances. The returned operator applies one
//! Richardson step in `1/T` to the last two iterates, which removes that
//! polynomial tail exactly and perturbs exponential tails below their own
//! size; gaps and the convergence flag always refer to the raw iterates.
//!
//! The unstable side is only ever computed through orientation reversal,
//! `U^u(v) = −U^s(−v)`.

use serde::Serialize;
use thiserror::Error;

use crate::jacobi::{shoot_endpoint_lean, JacobiError};
use crate::mat::Mat;
use crate::models::{CurvatureModel, ModelError};
use crate::scalar::{real, Real};
use crate::symop::SymOp;

/// Riccati blow-up guard: an entry past this signals a conjugate point of
/// the initial data.
pub const FINITENESS_LIMIT: f64 = 1e10;
/// Increments may dip this far below PSD before it counts as a failure.
pub const MONOTONICITY_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum RiccatiError<T: Real> {
    #[error("NoConvergenceError: final gap {final_gap:.3e} above tolerance at T_max (side: {side})", final_gap = .result.final_gap_f64(), side = .result.side)]
    NoConvergence { result: Box<RiccatiResult<T>> },
    #[error("FinitenessError: Riccati entry exceeded 1e10 at t={t} (blow-up / conjugate point of the initial data)")]
    Finiteness { t: f64 },
    #[error("monotonicity violated between T={t_prev} and T={t_next}: min increment eigenvalue {min_eig:.3e}")]
    Monotonicity { t_prev: f64, t_next: f64, min_eig: f64 },
    #[error(transparent)]
    Jacobi(#[from] JacobiError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Which Riccati solution a result holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Stable,
    Unstable,
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Side::Stable => write!(f, "stable"),
            Side::Unstable => write!(f, "unstable"),
        }
    }
}

/// Converged (or honestly unconverged) Riccati solution with its
/// convergence diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct RiccatiResult<T> {
    pub side: Side,
    pub dim: usize,
    #[serde(rename = "U")]
    pub u: SymOp<T>,
    #[serde(rename = "T_schedule")]
    pub t_schedule: Vec<T>,
    /// Operator-norm gaps `‖U_{T_{k+1}} − U_{T_k}‖` along the schedule.
    pub gaps: Vec<T>,
    pub converged: bool,
    /// Raw iterates `U_T` per schedule entry (diagnostics, not serialized).
    #[serde(skip)]
    pub iterates: Vec<SymOp<T>>,
    #[serde(skip)]
    pub model: CurvatureModel<T>,
}

impl<T: Real> RiccatiResult<T> {
    fn final_gap_f64(&self) -> f64 {
        self.gaps
            .last()
            .and_then(|g| g.to_f64())
            .unwrap_or(f64::NAN)
    }
}

/// The schedule `T_k = 2^k` capped at `t_max`, which is always included as
/// the final entry.
pub fn schedule<T: Real>(t_max: T) -> Vec<T> {
    assert!(t_max > T::zero());
    let two = real::<T>(2.0);
    let mut out = Vec::new();
    let mut t = T::one();
    while t < t_max {
        out.push(t);
        t = t * two;
    }
    if out.last() != Some(&t_max) {
        out.push(t_max);
    }
    out
}

fn extrapolate<T: Real>(iterates: &[SymOp<T>], ts: &[T]) -> SymOp<T> {
    let n = iterates.len();
    if n < 2 {
        return iterates[n - 1].clone();
    }
    let (u_prev, u_last) = (&iterates[n - 2], &iterates[n - 1]);
    let (t_prev, t_last) = (ts[n - 2], ts[n - 1]);
    // u_T = u + a/T  ⇒  u = u_last + (u_last − u_prev)·t_prev/(t_last − t_prev)
    let factor = t_prev / (t_last - t_prev);
    u_last.add(&u_last.sub(u_prev).scale(factor))
}

/// Stable Riccati solution `U^s` at the basepoint of `model`.
pub fn stable_riccati<T: Real>(
    model: &CurvatureModel<T>,
    tol: T,
    t_max: T,
    h: T,
) -> Result<RiccatiResult<T>, RiccatiError<T>> {
    assert!(tol > T::zero());
    model.validate()?;
    let ts = schedule(t_max);
    let mut iterates: Vec<SymOp<T>> = Vec::with_capacity(ts.len());
    let mut gaps: Vec<T> = Vec::with_capacity(ts.len().saturating_sub(1));
    for &t_k in &ts {
        let u_t = shoot_endpoint_lean(model, t_k, h)?;
        if let Some(prev) = iterates.last() {
            let increment = u_t.sub(prev);
            let min_eig = increment.spectrum().min();
            if min_eig < -real::<T>(MONOTONICITY_TOL) {
                return Err(RiccatiError::Monotonicity {
                    t_prev: ts[iterates.len() - 1].to_f64().unwrap_or(f64::NAN),
                    t_next: t_k.to_f64().unwrap_or(f64::NAN),
                    min_eig: min_eig.to_f64().unwrap_or(f64::NAN),
                });
            }
            gaps.push(increment.operator_norm());
        }
        iterates.push(u_t);
    }
    let converged = gaps.last().map(|&g| g <= tol).unwrap_or(false);
    let u = extrapolate(&iterates, &ts);
    let result = RiccatiResult {
        side: Side::Stable,
        dim: model.dim(),
        u,
        t_schedule: ts,
        gaps,
        converged,
        iterates,
        model: model.clone(),
    };
    if converged {
        Ok(result)
    } else {
        Err(RiccatiError::NoConvergence { result: Box::new(result) })
    }
}

/// Unstable Riccati solution via `U^u(v) = −U^s(−v)`: the stable solve on
/// the orientation-reversed model, negated.
pub fn unstable_riccati<T: Real>(
    model: &CurvatureModel<T>,
    tol: T,
    t_max: T,
    h: T,
) -> Result<RiccatiResult<T>, RiccatiError<T>> {
    let negate = |mut r: Box<RiccatiResult<T>>| {
        r.side = Side::Unstable;
        r.u = r.u.neg();
        for it in &mut r.iterates {
            *it = it.neg();
        }
        r.model = model.clone();
        r
    };
    match stable_riccati(&model.reversed(), tol, t_max, h) {
        Ok(r) => Ok(*negate(Box::new(r))),
        Err(RiccatiError::NoConvergence { result }) => {
            Err(RiccatiError::NoConvergence { result: negate(result) })
        }
        Err(e) => Err(e),
    }
}

/// Accepts an unconverged schedule as a usable (extrapolated) limit; every
/// other error still propagates. Polynomial-rate directions make this the
/// intended read-out for product and flat models.
pub fn accept_unconverged<T: Real>(
    res: Result<RiccatiResult<T>, RiccatiError<T>>,
) -> Result<RiccatiResult<T>, RiccatiError<T>> {
    match res {
        Err(RiccatiError::NoConvergence { result }) => Ok(*result),
        other => other,
    }
}

/// Riccati solution transported along the flow, sampled at uniform step.
#[derive(Debug, Clone)]
pub struct RiccatiPath<T> {
    pub model: CurvatureModel<T>,
    /// Signed step (negative when the propagation ran backward).
    pub step: T,
    pub samples: Vec<(T, SymOp<T>)>,
}

impl<T: Real> RiccatiPath<T> {
    pub fn last(&self) -> &(T, SymOp<T>) {
        self.samples.last().expect("nonempty path")
    }

    /// Samples reordered to ascending time (after backward propagation).
    pub fn ascending(mut self) -> Self {
        if self.step < T::zero() {
            self.samples.reverse();
            self.step = -self.step;
        }
        self
    }
}

/// Propagates a Riccati solution along the flow: RK4 on `U′ = −U² − R(t)`,
/// each sample symmetrized. Blow-up past 1e10 is a conjugate point of the
/// initial data and surfaces as `Finiteness`.
pub fn propagate_riccati<T: Real>(
    model: &CurvatureModel<T>,
    u0: &SymOp<T>,
    t0: T,
    t1: T,
    h: T,
) -> Result<RiccatiPath<T>, RiccatiError<T>> {
    model.validate()?;
    assert!(h > T::zero());
    assert!(t1 != t0);
    let span = t1 - t0;
    let n = {
        let ratio = (span.abs() / h).to_f64().expect("finite ratio");
        ((ratio - 1e-9).ceil() as usize).max(1)
    };
    let step = span / T::from_usize(n).unwrap();
    let half = real::<T>(0.5);
    let sixth = real::<T>(1.0 / 6.0);
    let two = real::<T>(2.0);
    let limit = real::<T>(FINITENESS_LIMIT);

    let deriv = |t: T, u: &Mat<T>| -> Mat<T> {
        let mut d = u.matmul(u).scale(-T::one());
        let r = model.curvature_diag(t);
        for i in 0..d.rows() {
            d[(i, i)] -= r[i];
        }
        d
    };

    let mut samples = Vec::with_capacity(n + 1);
    let mut u = u0.as_mat();
    samples.push((t0, SymOp::from(&u)));
    for k in 0..n {
        let t = t0 + step * T::from_usize(k).unwrap();
        let k1 = deriv(t, &u);
        let mut s2 = u.clone();
        s2.axpy(half * step, &k1);
        let k2 = deriv(t + half * step, &s2);
        let mut s3 = u.clone();
        s3.axpy(half * step, &k2);
        let k3 = deriv(t + half * step, &s3);
        let mut s4 = u.clone();
        s4.axpy(step, &k3);
        let k4 = deriv(t + step, &s4);
        u.axpy(step * sixth, &k1);
        u.axpy(step * sixth * two, &k2);
        u.axpy(step * sixth * two, &k3);
        u.axpy(step * sixth, &k4);
        let t_next = t0 + step * T::from_usize(k + 1).unwrap();
        if u.max_abs() > limit || !u.is_finite() {
            return Err(RiccatiError::Finiteness {
                t: t_next.to_f64().unwrap_or(f64::NAN),
            });
        }
        let sym = SymOp::from(&u);
        u = sym.as_mat();
        samples.push((t_next, sym));
    }
    Ok(RiccatiPath { model: model.clone(), step, samples })
}

/// Max defect `‖U′ + U² + R‖` over interior samples, with `U′` from central
/// differences. A five-point stencil is used wherever both neighbours exist
/// on each side so the finite-difference truncation matches the
/// integrator's fourth order; paths shorter than five samples fall back to
/// the three-point stencil.
pub fn riccati_residual<T: Real>(path: &RiccatiPath<T>) -> T {
    let n = path.samples.len();
    assert!(n >= 3, "need at least three samples");
    let h = path.step;
    let twelve = real::<T>(12.0);
    let eight = real::<T>(8.0);
    let two = real::<T>(2.0);
    let mut worst = T::zero();
    let defect = |k: usize, du: &Mat<T>| -> T {
        let (t, u) = &path.samples[k];
        let mut resid = du.add(&u.as_mat().matmul(&u.as_mat()));
        let r = path.model.curvature_diag(*t);
        for i in 0..resid.rows() {
            resid[(i, i)] += r[i];
        }
        resid.max_abs()
    };
    if n >= 5 {
        for k in 2..n - 2 {
            let du = path.samples[k + 1]
                .1
                .as_mat()
                .scale(eight)
                .sub(&path.samples[k - 1].1.as_mat().scale(eight))
                .add(&path.samples[k - 2].1.as_mat())
                .sub(&path.samples[k + 2].1.as_mat())
                .scale((twelve * h).recip());
            worst = worst.max(defect(k, &du));
        }
    } else {
        for k in 1..n - 1 {
            let du = path.samples[k + 1]
                .1
                .as_mat()
                .sub(&path.samples[k - 1].1.as_mat())
                .scale((two * h).recip());
            worst = worst.max(defect(k, &du));
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::CurvatureModel;

    fn h3() -> CurvatureModel<f64> {
        CurvatureModel::hyperbolic(3)
    }

    #[test]
    fn schedule_caps_at_t_max() {
        assert_eq!(schedule::<f64>(40.0), vec![1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 40.0]);
        assert_eq!(schedule::<f64>(32.0), vec![1.0, 2.0, 4.0, 8.0, 16.0, 32.0]);
        assert_eq!(schedule::<f64>(1.0), vec![1.0]);
        assert_eq!(schedule::<f64>(0.5), vec![0.5]);
    }

    #[test]
    fn stable_hyperbolic_converges_to_minus_identity() {
        let r = stable_riccati(&h3(), 1e-10, 40.0, 1e-3).unwrap();
        assert!(r.converged);
        assert!(r.u.sub(&SymOp::identity(2).neg()).max_abs() < 1e-9);
        // iterates follow −coth(T)·Id
        for (u_t, &t) in r.iterates.iter().zip(&r.t_schedule) {
            let coth = 1.0 / t.tanh();
            assert!((u_t.get(0, 0) + coth).abs() < 1e-7, "T = {t}");
        }
        // gaps decay to convergence
        assert!(r.gaps.windows(2).all(|w| w[1] <= w[0] * 1.01));
    }

    #[test]
    fn flat_reports_no_convergence_with_polynomial_gap() {
        let err = stable_riccati(&CurvatureModel::<f64>::flat(4), 1e-10, 40.0, 1e-3).unwrap_err();
        match err {
            RiccatiError::NoConvergence { result } => {
                assert!(!result.converged);
                let expect = 1.0 / 32.0 - 1.0 / 40.0;
                let got = *result.gaps.last().unwrap();
                assert!((got - expect).abs() < 1e-9, "gap {got} vs {expect}");
                // extrapolated limit is exactly the flat answer
                assert!(result.u.max_abs() < 1e-12);
            }
            other => panic!("expected NoConvergence, got {other:?}"),
        }
    }

    #[test]
    fn complex_hyperbolic_stable_solution() {
        let m = CurvatureModel::complex_hyperbolic(2).unwrap();
        let r = stable_riccati(&m, 1e-10, 40.0, 1e-3).unwrap();
        let expect = SymOp::diag(&[-2.0, -1.0, -1.0]);
        assert!(r.u.sub(&expect).max_abs() < 1e-9);
    }

    #[test]
    fn unstable_is_negated_stable() {
        let r = unstable_riccati(&h3(), 1e-9, 40.0, 1e-3).unwrap();
        assert_eq!(r.side, Side::Unstable);
        assert!(r.u.sub(&SymOp::identity(2)).max_abs() < 1e-9);
    }

    #[test]
    fn unstable_product_block_oracle() {
        let m = CurvatureModel::product(-1.0, 2, 0.0, 1, 0.6).unwrap();
        let r = accept_unconverged(unstable_riccati(&m, 1e-9, 40.0, 1e-3)).unwrap();
        let expect = SymOp::diag(&[0.6, 0.0]);
        assert!(r.u.sub(&expect).max_abs() < 1e-7, "{:?}", r.u);
    }

    #[test]
    fn propagate_fixed_point_stays_put() {
        let m = CurvatureModel::hyperbolic(2);
        let u0 = SymOp::diag(&[-1.0]);
        let path = propagate_riccati(&m, &u0, 0.0, 10.0, 1e-3).unwrap();
        for (_, u) in path.samples.iter().step_by(1000) {
            assert!((u.get(0, 0) + 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn propagate_flat_matches_closed_form() {
        // u(t) = −1/(1+t) solves u′ + u² = 0
        let m = CurvatureModel::flat(2);
        let u0 = SymOp::diag(&[-1.0]);
        let path = propagate_riccati(&m, &u0, 0.0, 5.0, 1e-3).unwrap();
        for (t, u) in path.samples.iter().step_by(700) {
            assert!((u.get(0, 0) + 1.0 / (1.0 + t)).abs() < 1e-8, "t={t}");
        }
    }

    #[test]
    fn propagate_transient_follows_coth() {
        // u(t) = coth(t + c), coth(c) = 2; attracted to the unstable
        // solution +1 from above
        let m = CurvatureModel::hyperbolic(2);
        let u0 = SymOp::diag(&[2.0]);
        let path = propagate_riccati(&m, &u0, 0.0, 3.0, 1e-3).unwrap();
        let c = 0.5_f64.atanh(); // arccoth(2)
        let (t_end, u_end) = path.last();
        assert!((u_end.get(0, 0) - 1.0 / (t_end + c).tanh()).abs() < 1e-6);
        assert!(u_end.get(0, 0) > 1.0 && u_end.get(0, 0) < 2.0);
    }

    #[test]
    fn propagate_detects_blowup() {
        // initial data far below the stable solution blows up forward
        let m = CurvatureModel::hyperbolic(2);
        let u0 = SymOp::diag(&[-2.0]);
        let res = propagate_riccati(&m, &u0, 0.0, 10.0, 1e-3);
        assert!(matches!(res, Err(RiccatiError::Finiteness { .. })));
    }

    #[test]
    fn residual_fixed_point_is_tiny() {
        let m = CurvatureModel::hyperbolic(2);
        let path = propagate_riccati(&m, &SymOp::diag(&[-1.0]), 0.0, 2.0, 1e-3).unwrap();
        assert!(riccati_residual(&path) < 1e-10);
    }

    #[test]
    fn residual_flat_within_contract() {
        let m = CurvatureModel::flat(2);
        let path = propagate_riccati(&m, &SymOp::diag(&[-1.0]), 0.0, 5.0, 1e-3).unwrap();
        let res = riccati_residual(&path);
        assert!(res < 1e-6, "residual {res}");
    }

    #[test]
    fn residual_detects_corruption() {
        let m = CurvatureModel::flat(2);
        let mut path = propagate_riccati(&m, &SymOp::diag(&[-1.0]), 0.0, 5.0, 1e-3).unwrap();
        for (_, u) in &mut path.samples {
            *u = u.scale(1.1);
        }
        assert!(riccati_residual(&path) >= 0.1);
    }

    #[test]
    fn backward_crosscheck_reaches_stable_solution() {
        for model in [h3(), CurvatureModel::complex_hyperbolic(2).unwrap()] {
            let tol = 1e-9;
            let stable = stable_riccati(&model, tol, 40.0, 1e-3).unwrap();
            let norm = model.curvature_sup_norm();
            let init = SymOp::identity(model.dim()).scale(-(norm.sqrt() + 1.0));
            let path = propagate_riccati(&model, &init, 40.0, 0.0, 1e-3).unwrap();
            let (_, at_zero) = path.last();
            assert!(at_zero.sub(&stable.u).max_abs() < 10.0 * tol);
        }
    }

    #[test]
    fn squeeze_and_monotonicity_raw_iterates() {
        for model in [
            h3(),
            CurvatureModel::complex_hyperbolic(2).unwrap(),
            CurvatureModel::flat(3),
            CurvatureModel::product(-1.0, 2, 0.0, 1, 0.6).unwrap(),
        ] {
            let r = accept_unconverged(stable_riccati(&model, 1e-9, 40.0, 1e-3)).unwrap();
            for pair in r.iterates.windows(2) {
                assert!(pair[1].sub(&pair[0]).spectrum().min() >= -1e-8);
            }
            for u_t in &r.iterates {
                assert!(r.u.sub(u_t).spectrum().min() >= -1e-8);
            }
        }
    }

    #[test]
    fn norm_bounded_by_trace_for_nsd_solutions() {
        for model in [h3(), CurvatureModel::complex_hyperbolic(2).unwrap()] {
            let r = stable_riccati(&model, 1e-9, 40.0, 1e-3).unwrap();
            assert!(r.u.operator_norm() <= r.u.trace().abs() + 1e-8);
        }
    }
}
