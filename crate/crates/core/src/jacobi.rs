//! Operator Jacobi equation machinery.
//!
//! Integrates `J″ + R(t)J = 0` with a classical fixed-step 4th-order scheme,
//! builds the two-point tensors `E_T` by shooting from the fundamental pair
//! (never from the integral formula, whose integrand blows up at the left
//! endpoint — the integral form survives only as a cross-check away from 0),
//! scans for conjugate points as sign changes of `det 𝕁`, and estimates
//! volume growth from the log-derivative of `det 𝕁` under exponential
//! rescaling so long hyperbolic runs stay inside representable range.

use serde::Serialize;
use thiserror::Error;

use crate::mat::Mat;
use crate::models::{CurvatureModel, ModelError};
use crate::scalar::{real, rel_scale, Real};
use crate::symop::{SymOp, SymOpError};

/// Any state entry beyond this magnitude aborts the integration.
pub const BLOWUP_LIMIT: f64 = 1e150;
/// Wronskian drift per unit time, relative above scale one.
pub const WRONSKIAN_RATE_TOL: f64 = 1e-8;
/// Relative residual allowed for the two-point linear solve.
const SOLVE_RESIDUAL_TOL: f64 = 1e-8;
/// Relative size allowed for the reconstructed `E_T(T)`.
const ENDPOINT_ZERO_TOL: f64 = 1e-6;
/// Width to which a conjugate-point bracket is bisected.
const CONJ_REFINE_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum JacobiError {
    #[error("NumericalBlowupError: entry exceeded 1e150 at t={t}")]
    NumericalBlowup { t: f64 },
    #[error("ConjugatePointError: det of the fundamental solution changes sign near t={t}")]
    ConjugatePoint { t: f64 },
    #[error("ConditioningError: two-point solve residual {residual:.3e} exceeds {limit:.1e}")]
    Conditioning { residual: f64, limit: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Symmetry(#[from] SymOpError),
}

/// Snapshot of `(J(t), J′(t))` along a solution. `J` need not be symmetric
/// during evolution; symmetry lives in the conserved Wronskian.
#[derive(Debug, Clone, Serialize)]
pub struct JacobiState<T> {
    pub t: T,
    pub j: Mat<T>,
    pub jp: Mat<T>,
}

impl<T: Real> JacobiState<T> {
    /// The conserved form `W = Jᵀ·J′ − J′ᵀ·J`.
    pub fn wronskian(&self) -> Mat<T> {
        let a = self.j.transpose().matmul(&self.jp);
        let b = self.jp.transpose().matmul(&self.j);
        a.sub(&b)
    }
}

/// A sampled solution of the operator Jacobi equation at uniform step.
#[derive(Debug, Clone)]
pub struct JacobiPath<T> {
    pub model: CurvatureModel<T>,
    /// Signed step between consecutive samples (negative when integrating
    /// backward in time).
    pub step: T,
    pub samples: Vec<JacobiState<T>>,
    /// Worst Wronskian drift per unit time seen along the path, relative
    /// above scale one.
    pub wronskian_drift_rate: T,
}

impl<T: Real> JacobiPath<T> {
    pub fn first(&self) -> &JacobiState<T> {
        self.samples.first().expect("nonempty path")
    }

    pub fn last(&self) -> &JacobiState<T> {
        self.samples.last().expect("nonempty path")
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Max over interior samples of the second-difference Jacobi residual
    /// `‖(J_{k+1} − 2J_k + J_{k−1})/h² + R(t_k)J_k‖`, relative above scale one.
    pub fn jacobi_residual_rate(&self) -> T {
        let h2 = self.step * self.step;
        let two = real::<T>(2.0);
        let mut worst = T::zero();
        for k in 1..self.samples.len().saturating_sub(1) {
            let sk = &self.samples[k];
            let second = self.samples[k + 1]
                .j
                .sub(&sk.j.scale(two))
                .add(&self.samples[k - 1].j)
                .scale(h2.recip());
            let r = self.model.curvature_mat(sk.t);
            let resid = second.add(&r.matmul(&sk.j)).max_abs();
            worst = worst.max(resid / rel_scale(sk.j.max_abs()));
        }
        worst
    }

    /// CSV dump: `t`, entries of `J` row-major, entries of `J′` row-major.
    pub fn to_csv(&self) -> String {
        let dim = self.first().j.rows();
        let cols = self.first().j.cols();
        let mut out = String::from("t");
        for i in 0..dim {
            for j in 0..cols {
                out.push_str(&format!(",j_{i}_{j}"));
            }
        }
        for i in 0..dim {
            for j in 0..cols {
                out.push_str(&format!(",jp_{i}_{j}"));
            }
        }
        out.push('\n');
        for s in &self.samples {
            out.push_str(&format!("{}", s.t));
            for &x in s.j.data() {
                out.push_str(&format!(",{x}"));
            }
            for &x in s.jp.data() {
                out.push_str(&format!(",{x}"));
            }
            out.push('\n');
        }
        out
    }
}

/// `out = −diag(d) · m` (the curvature operators here are all diagonal).
fn neg_row_scale<T: Real>(d: &[T], m: &Mat<T>) -> Mat<T> {
    let mut out = m.clone();
    let cols = m.cols();
    for i in 0..m.rows() {
        let s = -d[i];
        for j in 0..cols {
            out[(i, j)] = s * m[(i, j)];
        }
    }
    out
}

/// Curvature diagonal source, caching the time-independent case out of the
/// hot loop.
enum DiagSource<'a, T> {
    Constant(Vec<T>),
    Path(&'a CurvatureModel<T>),
}

impl<'a, T: Real> DiagSource<'a, T> {
    fn new(model: &'a CurvatureModel<T>) -> Self {
        if model.is_time_independent() {
            DiagSource::Constant(model.curvature_diag(T::zero()))
        } else {
            DiagSource::Path(model)
        }
    }

    fn at(&self, t: T, buf: &mut Vec<T>) {
        match self {
            DiagSource::Constant(d) => {
                buf.clear();
                buf.extend_from_slice(d);
            }
            DiagSource::Path(m) => {
                *buf = m.curvature_diag(t);
            }
        }
    }
}

/// One RK4 step of `(J, J′)′ = (J′, −R(t)J)`, with an optional uniform decay
/// rate `lambda` applied to both components (the rescaled system used for
/// entropy runs; `lambda = 0` recovers the plain equation).
fn rk4_step<T: Real>(
    r: &DiagSource<T>,
    lambda: T,
    t: T,
    h: T,
    j: &Mat<T>,
    jp: &Mat<T>,
    diag_buf: &mut Vec<T>,
) -> (Mat<T>, Mat<T>) {
    let half = real::<T>(0.5);
    let sixth = real::<T>(1.0 / 6.0);
    let two = real::<T>(2.0);

    let deriv = |t: T, j: &Mat<T>, jp: &Mat<T>, buf: &mut Vec<T>| {
        r.at(t, buf);
        let mut dj = jp.clone();
        if lambda != T::zero() {
            dj.axpy(-lambda, j);
        }
        let mut djp = neg_row_scale(buf, j);
        if lambda != T::zero() {
            djp.axpy(-lambda, jp);
        }
        (dj, djp)
    };

    let (k1j, k1p) = deriv(t, j, jp, diag_buf);
    let mid = t + half * h;
    let mut aj = j.clone();
    aj.axpy(half * h, &k1j);
    let mut ap = jp.clone();
    ap.axpy(half * h, &k1p);
    let (k2j, k2p) = deriv(mid, &aj, &ap, diag_buf);

    let mut bj = j.clone();
    bj.axpy(half * h, &k2j);
    let mut bp = jp.clone();
    bp.axpy(half * h, &k2p);
    let (k3j, k3p) = deriv(mid, &bj, &bp, diag_buf);

    let mut cj = j.clone();
    cj.axpy(h, &k3j);
    let mut cp = jp.clone();
    cp.axpy(h, &k3p);
    let (k4j, k4p) = deriv(t + h, &cj, &cp, diag_buf);

    let mut nj = j.clone();
    nj.axpy(h * sixth, &k1j);
    nj.axpy(h * sixth * two, &k2j);
    nj.axpy(h * sixth * two, &k3j);
    nj.axpy(h * sixth, &k4j);

    let mut np = jp.clone();
    np.axpy(h * sixth, &k1p);
    np.axpy(h * sixth * two, &k2p);
    np.axpy(h * sixth * two, &k3p);
    np.axpy(h * sixth, &k4p);

    (nj, np)
}

fn step_count<T: Real>(span: T, h: T) -> usize {
    let ratio = (span.abs() / h).to_f64().expect("finite step ratio");
    ((ratio - 1e-9).ceil() as usize).max(1)
}

/// Core integration loop. The observer sees every state including the
/// initial one and may abort with an error.
fn integrate_with<T: Real, F>(
    model: &CurvatureModel<T>,
    j0: Mat<T>,
    jp0: Mat<T>,
    t0: T,
    t1: T,
    h: T,
    lambda: T,
    mut observe: F,
) -> Result<JacobiState<T>, JacobiError>
where
    F: FnMut(usize, &JacobiState<T>) -> Result<(), JacobiError>,
{
    model.validate()?;
    assert!(h > T::zero(), "step must be positive");
    assert!(t1 != t0, "integration span must be nonzero");
    let n = step_count(t1 - t0, h);
    let step = (t1 - t0) / T::from_usize(n).unwrap();
    let r = DiagSource::new(model);
    let limit = real::<T>(BLOWUP_LIMIT);
    let mut diag_buf: Vec<T> = Vec::new();

    let mut state = JacobiState { t: t0, j: j0, jp: jp0 };
    observe(0, &state)?;
    for k in 0..n {
        let t = t0 + step * T::from_usize(k).unwrap();
        let (nj, np) = rk4_step(&r, lambda, t, step, &state.j, &state.jp, &mut diag_buf);
        state.j = nj;
        state.jp = np;
        state.t = t0 + step * T::from_usize(k + 1).unwrap();
        if state.j.max_abs() > limit || state.jp.max_abs() > limit || !state.j.is_finite() {
            return Err(JacobiError::NumericalBlowup {
                t: state.t.to_f64().unwrap_or(f64::NAN),
            });
        }
        observe(k + 1, &state)?;
    }
    Ok(state)
}

fn recorded_path<T: Real>(
    model: &CurvatureModel<T>,
    j0: Mat<T>,
    jp0: Mat<T>,
    t0: T,
    t1: T,
    h: T,
) -> Result<JacobiPath<T>, JacobiError> {
    let mut samples: Vec<JacobiState<T>> = Vec::new();
    integrate_with(model, j0, jp0, t0, t1, h, T::zero(), |_, s| {
        samples.push(s.clone());
        Ok(())
    })?;
    let step = if samples.len() > 1 {
        samples[1].t - samples[0].t
    } else {
        h
    };
    let w0 = samples[0].wronskian();
    let mut drift = T::zero();
    for s in samples.iter().skip(1) {
        let scale = rel_scale(s.j.max_abs() * s.jp.max_abs());
        let dev = s.wronskian().sub(&w0).max_abs();
        let dt = (s.t - samples[0].t).abs();
        drift = drift.max(dev / (dt * scale));
    }
    Ok(JacobiPath {
        model: model.clone(),
        step,
        samples,
        wronskian_drift_rate: drift,
    })
}

/// Integrates `(J, J′)′ = (J′, −R(t)J)` from `t0` to `t1` (backward when
/// `t1 < t0`), recording every step. The realized step is `|t1−t0|/n` for
/// the smallest `n` with step ≤ `h`.
pub fn integrate_jacobi<T: Real>(
    model: &CurvatureModel<T>,
    j0: &Mat<T>,
    jp0: &Mat<T>,
    t0: T,
    t1: T,
    h: T,
) -> Result<JacobiPath<T>, JacobiError> {
    recorded_path(model, j0.clone(), jp0.clone(), t0, t1, h)
}

/// The fundamental pair on `[0, T]`: `A(0) = Id, A′(0) = 0` and
/// `B(0) = 0, B′(0) = Id` (`B` is the tensor usually written 𝕁).
/// Both are integrated as one stacked system so they share curvature
/// evaluations.
pub fn fundamental_pair<T: Real>(
    model: &CurvatureModel<T>,
    t_end: T,
    h: T,
) -> Result<(JacobiPath<T>, JacobiPath<T>), JacobiError> {
    assert!(t_end > T::zero(), "T must be positive");
    let dim = model.dim();
    let m0 = Mat::identity(dim).hcat(&Mat::zeros(dim, dim));
    let mp0 = Mat::zeros(dim, dim).hcat(&Mat::identity(dim));
    let stacked = recorded_path(model, m0, mp0, T::zero(), t_end, h)?;
    let split = |lo: usize, hi: usize| -> JacobiPath<T> {
        let samples: Vec<JacobiState<T>> = stacked
            .samples
            .iter()
            .map(|s| JacobiState {
                t: s.t,
                j: s.j.col_block(lo, hi),
                jp: s.jp.col_block(lo, hi),
            })
            .collect();
        let w0 = samples[0].wronskian();
        let mut drift = T::zero();
        for s in samples.iter().skip(1) {
            let scale = rel_scale(s.j.max_abs() * s.jp.max_abs());
            let dev = s.wronskian().sub(&w0).max_abs();
            drift = drift.max(dev / ((s.t - samples[0].t).abs() * scale));
        }
        JacobiPath {
            model: model.clone(),
            step: stacked.step,
            samples,
            wronskian_drift_rate: drift,
        }
    };
    Ok((split(0, dim), split(dim, 2 * dim)))
}

/// First sign change of `det B` strictly after `t = 0` among recorded
/// samples, if any. Returns the bracketing sample index.
fn det_sign_change<T: Real>(b: &JacobiPath<T>) -> Option<usize> {
    let mut prev: Option<T> = None;
    for (k, s) in b.samples.iter().enumerate().skip(1) {
        let d = s.j.det();
        if let Some(p) = prev {
            if (p > T::zero() && d < T::zero()) || (p < T::zero() && d > T::zero()) {
                return Some(k);
            }
        }
        if d != T::zero() {
            prev = Some(d);
        }
    }
    None
}

/// Builds `E_T` by shooting: `E(t) = A(t) + B(t)·C` with `C = −B(T)⁻¹A(T)`,
/// which pins `E(0) = Id` and `E(T) = 0`. Returns the sampled tensor and
/// `U_T = symmetrize(E′(0)) = symmetrize(C)`.
pub fn stable_endpoint_tensor<T: Real>(
    model: &CurvatureModel<T>,
    t_end: T,
    h: T,
) -> Result<(JacobiPath<T>, SymOp<T>), JacobiError> {
    let (a, b) = fundamental_pair(model, t_end, h)?;
    if let Some(k) = det_sign_change(&b) {
        return Err(JacobiError::ConjugatePoint {
            t: b.samples[k].t.to_f64().unwrap_or(f64::NAN),
        });
    }
    let a_t = &a.last().j;
    let b_t = &b.last().j;
    let scale = rel_scale(a_t.max_abs());
    let c = b_t
        .solve(&a_t.scale(-T::one()))
        .ok_or(JacobiError::ConjugatePoint {
            t: t_end.to_f64().unwrap_or(f64::NAN),
        })?;
    let residual = b_t.matmul(&c).add(a_t).max_abs() / scale;
    if residual > real(SOLVE_RESIDUAL_TOL) {
        return Err(JacobiError::Conditioning {
            residual: residual.to_f64().unwrap_or(f64::NAN),
            limit: SOLVE_RESIDUAL_TOL,
        });
    }

    let samples: Vec<JacobiState<T>> = a
        .samples
        .iter()
        .zip(&b.samples)
        .map(|(sa, sb)| JacobiState {
            t: sa.t,
            j: sa.j.add(&sb.j.matmul(&c)),
            jp: sa.jp.add(&sb.jp.matmul(&c)),
        })
        .collect();

    // Two-point conditions: E(0) = Id exactly (B(0) = 0), E(T) ≈ 0 up to
    // the solve residual.
    let dim = model.dim();
    debug_assert!(
        samples[0].j.sub(&Mat::identity(dim)).max_abs() <= real(1e-12),
        "E(0) must be the identity"
    );
    let end_norm = samples.last().unwrap().j.max_abs() / scale;
    if end_norm > real(ENDPOINT_ZERO_TOL) {
        return Err(JacobiError::Conditioning {
            residual: end_norm.to_f64().unwrap_or(f64::NAN),
            limit: ENDPOINT_ZERO_TOL,
        });
    }

    let u_t = SymOp::symmetrize(&c)?;
    let path = JacobiPath {
        model: model.clone(),
        step: a.step,
        samples,
        wronskian_drift_rate: a.wronskian_drift_rate.max(b.wronskian_drift_rate),
    };
    Ok((path, u_t))
}

/// Endpoint-only variant of the shooting solve used by the Riccati schedule:
/// O(1) memory, inline conjugate-point detection.
pub(crate) fn shoot_endpoint_lean<T: Real>(
    model: &CurvatureModel<T>,
    t_end: T,
    h: T,
) -> Result<SymOp<T>, JacobiError> {
    let dim = model.dim();
    let m0 = Mat::identity(dim).hcat(&Mat::zeros(dim, dim));
    let mp0 = Mat::zeros(dim, dim).hcat(&Mat::identity(dim));
    let mut prev_det: Option<T> = None;
    let final_state = integrate_with(
        model,
        m0,
        mp0,
        T::zero(),
        t_end,
        h,
        T::zero(),
        |k, s| {
            if k == 0 {
                return Ok(());
            }
            let d = s.j.col_block(dim, 2 * dim).det();
            if let Some(p) = prev_det {
                if (p > T::zero() && d < T::zero()) || (p < T::zero() && d > T::zero()) {
                    return Err(JacobiError::ConjugatePoint {
                        t: s.t.to_f64().unwrap_or(f64::NAN),
                    });
                }
            }
            if d != T::zero() {
                prev_det = Some(d);
            }
            Ok(())
        },
    )?;
    let a_t = final_state.j.col_block(0, dim);
    let b_t = final_state.j.col_block(dim, 2 * dim);
    let scale = rel_scale(a_t.max_abs());
    let c = b_t
        .solve(&a_t.scale(-T::one()))
        .ok_or(JacobiError::ConjugatePoint {
            t: t_end.to_f64().unwrap_or(f64::NAN),
        })?;
    let residual = b_t.matmul(&c).add(&a_t).max_abs() / scale;
    if residual > real(SOLVE_RESIDUAL_TOL) {
        return Err(JacobiError::Conditioning {
            residual: residual.to_f64().unwrap_or(f64::NAN),
            limit: SOLVE_RESIDUAL_TOL,
        });
    }
    Ok(SymOp::symmetrize(&c)?)
}

/// Scans `det B` for its first zero on `(0, t_max]`, refining any sign
/// change by bisection to width 1e−6. A zero of even multiplicity inside
/// one step is missed; every catalog model has a closed-form answer, so the
/// limitation is observable.
pub fn conjugate_point_scan<T: Real>(
    model: &CurvatureModel<T>,
    t_max: T,
    h: T,
) -> Result<Option<T>, JacobiError> {
    assert!(t_max > T::zero());
    let dim = model.dim();
    let mut prev_det: Option<T> = None;
    let mut prev_state: Option<JacobiState<T>> = None;
    let mut bracket: Option<(JacobiState<T>, T)> = None;
    let res = integrate_with(
        model,
        Mat::zeros(dim, dim),
        Mat::identity(dim),
        T::zero(),
        t_max,
        h,
        T::zero(),
        |k, s| {
            if k > 0 {
                let d = s.j.det();
                if let Some(p) = prev_det {
                    if (p > T::zero() && d < T::zero()) || (p < T::zero() && d > T::zero()) {
                        bracket = Some((prev_state.clone().expect("previous state"), s.t));
                        // stop the sweep: reuse the conjugate-point error as
                        // a control signal, translated below
                        return Err(JacobiError::ConjugatePoint {
                            t: s.t.to_f64().unwrap_or(f64::NAN),
                        });
                    }
                }
                if d != T::zero() {
                    prev_det = Some(d);
                }
            }
            match &mut prev_state {
                Some(ps) => {
                    ps.t = s.t;
                    ps.j.clone_from(&s.j);
                    ps.jp.clone_from(&s.jp);
                }
                None => prev_state = Some(s.clone()),
            }
            Ok(())
        },
    );
    match res {
        Ok(_) => Ok(None),
        Err(JacobiError::ConjugatePoint { .. }) => {
            let (start, t_hi) = bracket.expect("bracket recorded");
            Ok(Some(refine_zero(model, &start, t_hi, h)?))
        }
        Err(e) => Err(e),
    }
}

/// Bisection refinement of a `det J` sign change inside `[start.t, t_hi]`.
fn refine_zero<T: Real>(
    model: &CurvatureModel<T>,
    start: &JacobiState<T>,
    t_hi: T,
    h: T,
) -> Result<T, JacobiError> {
    let det_at = |t: T| -> Result<T, JacobiError> {
        if t == start.t {
            return Ok(start.j.det());
        }
        let end = integrate_with(
            model,
            start.j.clone(),
            start.jp.clone(),
            start.t,
            t,
            h,
            T::zero(),
            |_, _| Ok(()),
        )?;
        Ok(end.j.det())
    };
    let mut lo = start.t;
    let mut hi = t_hi;
    let mut f_lo = det_at(lo)?;
    let tol = real::<T>(CONJ_REFINE_TOL);
    let half = real::<T>(0.5);
    while hi - lo > tol {
        let mid = half * (lo + hi);
        let f_mid = det_at(mid)?;
        if f_mid == T::zero() {
            return Ok(mid);
        }
        if (f_lo > T::zero()) == (f_mid > T::zero()) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(half * (lo + hi))
}

/// One row of the entropy series: time, `log det 𝕁(t)`, and the growth rate
/// `d/dt log det 𝕁 = tr(𝕁′𝕁⁻¹)`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GrowthSample<T> {
    pub t: T,
    pub log_det: T,
    pub rate: T,
}

/// Volume growth rate of `det 𝕁` at `t_probe`, computed as
/// `tr(𝕁′(t)𝕁(t)⁻¹) = d/dt log det 𝕁` on the rescaled pair
/// `(𝕁·e^{−λt}, 𝕁′·e^{−λt})`, `λ = √(max |negative spectrum of R|)`.
/// The instantaneous rate converges to the entropy like the Riccati flow
/// itself, unlike the `(1/t)·log det` average, which carries an `O(log t/t)`
/// tail even in constant curvature.
pub fn volume_growth_rate<T: Real>(
    model: &CurvatureModel<T>,
    t_probe: T,
    h: T,
) -> Result<T, JacobiError> {
    let series = volume_growth_series(model, t_probe, h, usize::MAX)?;
    Ok(series.last().expect("nonempty series").rate)
}

/// Entropy series sampled every `stride` steps (the probe endpoint is always
/// included). `log det` is accumulated in log space: the rescaled
/// determinant is evaluated directly and the scale `dim·λ·t` added back.
pub fn volume_growth_series<T: Real>(
    model: &CurvatureModel<T>,
    t_probe: T,
    h: T,
    stride: usize,
) -> Result<Vec<GrowthSample<T>>, JacobiError> {
    assert!(t_probe > T::zero());
    let dim = model.dim();
    let lambda = model.stiffness_rate();
    let dim_t = T::from_usize(dim).unwrap();
    let mut out: Vec<GrowthSample<T>> = Vec::new();
    let mut prev_det: Option<T> = None;
    let total_steps = step_count(t_probe, h);
    integrate_with(
        model,
        Mat::zeros(dim, dim),
        Mat::identity(dim),
        T::zero(),
        t_probe,
        h,
        lambda,
        |k, s| {
            if k == 0 {
                return Ok(());
            }
            let d = s.j.det();
            if let Some(p) = prev_det {
                if (p > T::zero() && d < T::zero()) || (p < T::zero() && d > T::zero()) {
                    return Err(JacobiError::ConjugatePoint {
                        t: s.t.to_f64().unwrap_or(f64::NAN),
                    });
                }
            }
            if d != T::zero() {
                prev_det = Some(d);
            }
            let wanted = k == total_steps || (stride != usize::MAX && k % stride == 0);
            if wanted {
                let x = s.j.solve(&s.jp).ok_or(JacobiError::ConjugatePoint {
                    t: s.t.to_f64().unwrap_or(f64::NAN),
                })?;
                out.push(GrowthSample {
                    t: s.t,
                    log_det: d.abs().ln() + dim_t * lambda * s.t,
                    rate: x.trace(),
                });
            }
            Ok(())
        },
    )?;
    Ok(out)
}

/// Cross-check values of `E_T(t) = 𝕁(t)∫ₜᵀ 𝕁⁻¹(𝕁⁻¹)ᵀ ds` by composite
/// Simpson quadrature over the recorded `B = 𝕁` path, evaluated at the
/// requested sample indices. Only meaningful away from `t = 0`, where the
/// integrand blows up; the shooting construction is the primary route and
/// this the independent one.
pub fn integral_endpoint_values<T: Real>(
    b_path: &JacobiPath<T>,
    indices: &[usize],
) -> Result<Vec<(T, Mat<T>)>, JacobiError> {
    let n = b_path.samples.len();
    assert!(n >= 5, "path too short for quadrature");
    // integrand G(s) = B(s)⁻¹ B(s)⁻ᵀ per sample
    let mut g: Vec<Mat<T>> = Vec::with_capacity(n);
    for s in &b_path.samples {
        let inv = s.j.inverse().ok_or(JacobiError::ConjugatePoint {
            t: s.t.to_f64().unwrap_or(f64::NAN),
        })?;
        g.push(inv.matmul(&inv.transpose()));
    }
    let h = b_path.step;
    let mut out = Vec::with_capacity(indices.len());
    for &k0 in indices {
        assert!(k0 < n - 1, "quadrature start must precede the endpoint");
        let integral = simpson_suffix(&g, k0, h);
        let s = &b_path.samples[k0];
        out.push((s.t, s.j.matmul(&integral)));
    }
    Ok(out)
}

/// Composite Simpson over samples `k0..n−1`; an odd leading interval is
/// handled with one Simpson 3/8 segment.
fn simpson_suffix<T: Real>(g: &[Mat<T>], k0: usize, h: T) -> Mat<T> {
    let n = g.len();
    let dim = g[0].rows();
    let mut acc = Mat::zeros(dim, dim);
    let mut start = k0;
    let intervals = n - 1 - k0;
    if intervals == 0 {
        return acc;
    }
    if intervals % 2 == 1 {
        if intervals >= 3 {
            // Simpson 3/8 on the first three intervals
            let c = h * real::<T>(3.0 / 8.0);
            acc.axpy(c, &g[start]);
            acc.axpy(c * real(3.0), &g[start + 1]);
            acc.axpy(c * real(3.0), &g[start + 2]);
            acc.axpy(c, &g[start + 3]);
            start += 3;
        } else {
            // single trapezoid (paths this short never reach the tolerance
            // tests; exactness is not needed here)
            let c = h * real::<T>(0.5);
            acc.axpy(c, &g[start]);
            acc.axpy(c, &g[start + 1]);
            start += 1;
        }
    }
    let third = h / real::<T>(3.0);
    let mut k = start;
    while k + 2 <= n - 1 {
        acc.axpy(third, &g[k]);
        acc.axpy(third * real(4.0), &g[k + 1]);
        acc.axpy(third, &g[k + 2]);
        k += 2;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::CurvatureModel;

    fn h3() -> CurvatureModel<f64> {
        CurvatureModel::hyperbolic(3)
    }

    #[test]
    fn flat_growth_is_linear() {
        let m = CurvatureModel::flat(3);
        let path = integrate_jacobi(
            &m,
            &Mat::zeros(2, 2),
            &Mat::identity(2),
            0.0,
            5.0,
            1e-3,
        )
        .unwrap();
        let end = path.last();
        assert!(end.j.sub(&Mat::identity(2).scale(5.0)).max_abs() < 1e-10);
        assert!(end.jp.sub(&Mat::identity(2)).max_abs() < 1e-12);
    }

    #[test]
    fn hyperbolic_matches_sinh() {
        let m = CurvatureModel::hyperbolic(2);
        let path = integrate_jacobi(
            &m,
            &Mat::zeros(1, 1),
            &Mat::identity(1),
            0.0,
            2.0,
            1e-3,
        )
        .unwrap();
        let sinh2 = 2.0_f64.sinh(); // 3.626860407847...
        assert!((path.last().j[(0, 0)] - sinh2).abs() < 1e-8);
        assert!((path.last().j[(0, 0)] - 3.6268604078).abs() < 1e-8);
        assert!(path.wronskian_drift_rate < 1e-8);
    }

    #[test]
    fn sphere_matches_sin_and_det_crosses_zero() {
        let m = CurvatureModel::sphere(2);
        let path = integrate_jacobi(
            &m,
            &Mat::zeros(1, 1),
            &Mat::identity(1),
            0.0,
            4.0,
            1e-3,
        )
        .unwrap();
        for s in path.samples.iter().step_by(500) {
            assert!((s.j[(0, 0)] - s.t.sin()).abs() < 1e-9, "t={}", s.t);
        }
        assert!(det_sign_change(&isolate_b(&path)).is_some());
    }

    // identity shim: a path integrated from (0, Id) *is* the B path
    fn isolate_b(p: &JacobiPath<f64>) -> JacobiPath<f64> {
        p.clone()
    }

    #[test]
    fn fundamental_pair_flat_and_hyperbolic() {
        let flat = CurvatureModel::flat(3);
        let (a, b) = fundamental_pair(&flat, 10.0, 1e-2).unwrap();
        assert!(a.last().j.sub(&Mat::identity(2)).max_abs() < 1e-10);
        assert!(b.last().j.sub(&Mat::identity(2).scale(10.0)).max_abs() < 1e-9);

        let (a, b) = fundamental_pair(&h3(), 3.0, 1e-3).unwrap();
        let c3 = 3.0_f64.cosh();
        let s3 = 3.0_f64.sinh();
        assert!(a.last().j.sub(&Mat::identity(2).scale(c3)).max_abs() < 1e-8);
        assert!(b.last().j.sub(&Mat::identity(2).scale(s3)).max_abs() < 1e-8);
    }

    #[test]
    fn fundamental_pair_product_blocks_decouple() {
        let m = CurvatureModel::product(-1.0, 2, 0.0, 1, 1.0).unwrap();
        let (a, _) = fundamental_pair(&m, 3.0, 1e-3).unwrap();
        let end = &a.last().j;
        assert!((end[(0, 0)] - 3.0_f64.cosh()).abs() < 1e-8);
        assert!((end[(1, 1)] - 1.0).abs() < 1e-12);
        assert!(end[(0, 1)].abs() < 1e-12);
    }

    #[test]
    fn endpoint_tensor_flat_two_point() {
        let m = CurvatureModel::flat(2);
        let (e, u) = stable_endpoint_tensor(&m, 4.0, 1e-3).unwrap();
        // E(t) = (1 − t/4)·Id
        for s in e.samples.iter().step_by(800) {
            assert!((s.j[(0, 0)] - (1.0 - s.t / 4.0)).abs() < 1e-12);
        }
        assert!((u.get(0, 0) - (-0.25)).abs() < 1e-12);
    }

    #[test]
    fn endpoint_tensor_hyperbolic_coth() {
        let (e, u) = stable_endpoint_tensor(&h3(), 2.0, 1e-3).unwrap();
        let coth2 = 1.0 / 2.0_f64.tanh();
        for i in 0..2 {
            assert!((u.get(i, i) + coth2).abs() < 1e-8);
        }
        assert!((u.get(0, 0) + 1.0373147207).abs() < 1e-8);
        // closed form E_T(t) = sinh(T−t)/sinh(T)
        for s in e.samples.iter().step_by(400) {
            let expect = (2.0 - s.t).sinh() / 2.0_f64.sinh();
            assert!((s.j[(0, 0)] - expect).abs() < 1e-8);
        }
    }

    #[test]
    fn endpoint_tensor_detects_conjugate_point() {
        let m = CurvatureModel::sphere(2);
        assert!(matches!(
            stable_endpoint_tensor(&m, 4.0, 1e-3),
            Err(JacobiError::ConjugatePoint { .. })
        ));
    }

    #[test]
    fn conjugate_scan_finds_pi_on_sphere() {
        let m = CurvatureModel::sphere(2);
        let t = conjugate_point_scan(&m, 4.0, 1e-3).unwrap().unwrap();
        assert!((t - std::f64::consts::PI).abs() < 1e-6, "t = {t}");
    }

    #[test]
    fn conjugate_scan_none_for_hyperbolic_and_flat() {
        assert!(conjugate_point_scan(&CurvatureModel::<f64>::hyperbolic(2), 20.0, 1e-3)
            .unwrap()
            .is_none());
        assert!(conjugate_point_scan(&CurvatureModel::<f64>::flat(3), 10.0, 1e-3)
            .unwrap()
            .is_none());
    }

    #[test]
    fn growth_rate_hyperbolic() {
        let rate = volume_growth_rate(&h3(), 30.0, 1e-3).unwrap();
        assert!((rate - 2.0).abs() < 1e-3, "rate = {rate}");
    }

    #[test]
    fn growth_rate_flat_decays() {
        let m = CurvatureModel::flat(4);
        let r30 = volume_growth_rate(&m, 30.0, 1e-3).unwrap();
        let r45 = volume_growth_rate(&m, 45.0, 1e-3).unwrap();
        assert!(r30 < 0.15, "r30 = {r30}");
        assert!(r45 < r30);
        assert!((r30 - 0.1).abs() < 1e-6); // (n−1)/t = 3/30
    }

    #[test]
    fn time_reversal_returns_initial_state() {
        let m = CurvatureModel::hyperbolic(3);
        let j0 = Mat::from_rows(&[&[0.3, -0.1], &[0.2, 0.5]]);
        let jp0 = Mat::from_rows(&[&[1.0, 0.4], &[-0.2, 0.8]]);
        let fwd = integrate_jacobi(&m, &j0, &jp0, 0.0, 3.0, 1e-3).unwrap();
        let back = integrate_jacobi(
            &m,
            &fwd.last().j,
            &fwd.last().jp,
            3.0,
            0.0,
            1e-3,
        )
        .unwrap();
        assert!(back.last().j.sub(&j0).max_abs() < 1e-8);
        assert!(back.last().jp.sub(&jp0).max_abs() < 1e-8);
    }

    #[test]
    fn blowup_is_detected() {
        let m = CurvatureModel::hyperbolic(2);
        let res = integrate_jacobi(
            &m,
            &Mat::zeros(1, 1),
            &Mat::identity(1),
            0.0,
            400.0,
            1e-2,
        );
        assert!(matches!(res, Err(JacobiError::NumericalBlowup { .. })));
    }

    #[test]
    fn jacobi_residual_within_contract() {
        for model in [h3(), CurvatureModel::complex_hyperbolic(2).unwrap()] {
            let (_, b) = fundamental_pair(&model, 3.0, 1e-3).unwrap();
            let r_norm = model.curvature_sup_norm();
            let bound = 10.0 * 1e-6 * r_norm.powi(2).max(1.0);
            let got = b.jacobi_residual_rate();
            assert!(got <= bound, "{got} vs {bound}");
        }
    }
}
