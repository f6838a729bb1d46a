//! The steerability criterion.
//!
//! For a measurement operator `Y` and a family with conditional curve
//! `X(theta)`, the criterion matrix is
//!
//! ```text
//! C(Y) = Y rho_B Y - int_0^pi |Y X'(theta) Y| dtheta
//! ```
//!
//! `C(Y) >= 0` for some invertible `Y` certifies that the state admits a
//! local hidden state model for real projective measurements; `C(Y) <= 0`
//! with `C(Y)` nonzero certifies steerability. The integral is evaluated by
//! composite Simpson quadrature with panel doubling, plus an adaptive
//! variant for integrands with narrow features.

use crate::bloch::{BlochOp, Rp1Point, TAU, TOL_DET};
use crate::states::EllipseFamily;
use crate::{Error, Result};
use std::f64::consts::PI;

/// Eigenvalues within this of zero do not decide a verdict.
pub const TOL_PSD: f64 = 1e-8;
/// A criterion matrix below this trace norm cannot certify steerability.
pub const TOL_NONZERO: f64 = 1e-8;
/// Families must have tilt below `1 - TOL_TILT`.
pub const TOL_TILT: f64 = 1e-9;

/// Panel-doubling Simpson quadrature settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub initial_panels: usize,
    /// Stop once a doubling changes the integral by less than this in
    /// trace norm.
    pub refine_until: f64,
    pub max_panels: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Quadrature { initial_panels: 64, refine_until: 1e-10, max_panels: 1 << 16 }
    }
}

impl Quadrature {
    pub fn with_tol(tol: f64) -> Self {
        Quadrature { refine_until: tol, ..Quadrature::default() }
    }
}

/// Composite Simpson on `panels` equal panels; summed pairwise so the
/// rounding error stays logarithmic in the panel count.
fn simpson_fixed<F: Fn(f64) -> BlochOp>(f: &F, a: f64, b: f64, panels: usize) -> BlochOp {
    let h = (b - a) / panels as f64;
    let pts: Vec<BlochOp> = (0..=2 * panels)
        .map(|j| f(a + j as f64 * (h / 2.0)))
        .collect();
    let mut terms: Vec<BlochOp> = (0..panels)
        .map(|i| (pts[2 * i] + pts[2 * i + 1] * 4.0 + pts[2 * i + 2]) * (h / 6.0))
        .collect();
    pairwise_sum(&mut terms)
}

fn pairwise_sum(v: &mut [BlochOp]) -> BlochOp {
    if v.is_empty() {
        return BlochOp::ZERO;
    }
    let mut n = v.len();
    while n > 1 {
        let mut w = 0;
        let mut i = 0;
        while i + 1 < n {
            v[w] = v[i] + v[i + 1];
            w += 1;
            i += 2;
        }
        if i < n {
            v[w] = v[i];
            w += 1;
        }
        n = w;
    }
    v[0]
}

/// Double panels until two consecutive estimates agree to `refine_until`.
pub(crate) fn refine<F: Fn(f64) -> BlochOp>(
    f: &F,
    a: f64,
    b: f64,
    quad: Quadrature,
) -> Result<(BlochOp, usize)> {
    let mut panels = quad.initial_panels.max(2);
    let mut prev = simpson_fixed(f, a, b, panels);
    loop {
        if panels >= quad.max_panels {
            return Err(Error::QuadratureDiverged(panels));
        }
        panels *= 2;
        let next = simpson_fixed(f, a, b, panels);
        if (next - prev).trace_norm() < quad.refine_until {
            return Ok((next, panels));
        }
        prev = next;
    }
}

const ADAPT_MAX_DEPTH: u32 = 50;
const ADAPT_MAX_PANELS: usize = 1 << 22;

struct AdaptState<'a, F: Fn(f64) -> BlochOp> {
    f: &'a F,
    panels: usize,
}

fn adapt_step<F: Fn(f64) -> BlochOp>(
    st: &mut AdaptState<F>,
    a: f64,
    b: f64,
    fa: BlochOp,
    fm: BlochOp,
    fb: BlochOp,
    whole: BlochOp,
    tol: f64,
    depth: u32,
) -> Result<BlochOp> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = (st.f)(lm);
    let frm = (st.f)(rm);
    let left = (fa + flm * 4.0 + fm) * ((m - a) / 6.0);
    let right = (fm + frm * 4.0 + fb) * ((b - m) / 6.0);
    let delta = left + right - whole;
    if delta.trace_norm() <= 15.0 * tol || depth == 0 {
        if depth == 0 && delta.trace_norm() > 15.0 * tol {
            return Err(Error::QuadratureDiverged(st.panels));
        }
        st.panels += 2;
        if st.panels > ADAPT_MAX_PANELS {
            return Err(Error::QuadratureDiverged(st.panels));
        }
        return Ok(left + right + delta * (1.0 / 15.0));
    }
    let l = adapt_step(st, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)?;
    let r = adapt_step(st, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)?;
    Ok(l + r)
}

/// Adaptive Simpson for integrands with features far narrower than the
/// interval, where uniform panel doubling would exhaust its budget.
pub(crate) fn adaptive_simpson<F: Fn(f64) -> BlochOp>(
    f: &F,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<BlochOp> {
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = (fa + fm * 4.0 + fb) * ((b - a) / 6.0);
    let mut st = AdaptState { f, panels: 1 };
    adapt_step(&mut st, a, b, fa, fm, fb, whole, tol, ADAPT_MAX_DEPTH)
}

pub(crate) fn adaptive_simpson_scalar<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<f64> {
    // (n, 0, 0) carries the scalar; its trace norm is the absolute value.
    let wrapped = |x: f64| BlochOp::new(f(x), 0.0, 0.0);
    Ok(adaptive_simpson(&wrapped, a, b, tol)?.n)
}

/// Integration range for the steering operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThetaRange {
    /// `[0, pi]`: each projective measurement once.
    Half,
    /// `[0, 2pi]`: both parameterizations of each measurement.
    Full,
}

impl ThetaRange {
    fn upper(self) -> f64 {
        match self {
            ThetaRange::Half => PI,
            ThetaRange::Full => TAU,
        }
    }
}

/// `int |Y X'(theta) Y| dtheta` with the panel count that converged.
pub fn steering_operator_panels(
    fam: &EllipseFamily,
    y: BlochOp,
    quad: Quadrature,
    range: ThetaRange,
) -> Result<(BlochOp, usize)> {
    let f = |t: f64| y.sandwich(fam.derivative(t)).abs_op();
    refine(&f, 0.0, range.upper(), quad)
}

pub fn steering_operator(fam: &EllipseFamily, y: BlochOp, quad: Quadrature) -> Result<BlochOp> {
    Ok(steering_operator_panels(fam, y, quad, ThetaRange::Half)?.0)
}

pub fn steering_operator_full(
    fam: &EllipseFamily,
    y: BlochOp,
    quad: Quadrature,
) -> Result<BlochOp> {
    Ok(steering_operator_panels(fam, y, quad, ThetaRange::Full)?.0)
}

fn check_preconditions(fam: &EllipseFamily, y: BlochOp) -> Result<()> {
    let tilt = fam.tilt();
    if !(tilt < 1.0 - TOL_TILT) {
        return Err(Error::TiltTooLarge(tilt));
    }
    if y.det().abs() <= TOL_DET {
        return Err(Error::SingularY);
    }
    Ok(())
}

/// `C(Y) = Y rho_B Y - int_0^pi |Y X'(theta) Y| dtheta`.
pub fn criterion_matrix(fam: &EllipseFamily, y: BlochOp, quad: Quadrature) -> Result<BlochOp> {
    check_preconditions(fam, y)?;
    let sop = steering_operator(fam, y, quad)?;
    Ok(y.sandwich(fam.rho_b()) - sop)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerdictKind {
    Unsteerable,
    Steerable,
    Inconclusive,
}

impl VerdictKind {
    pub fn as_str(self) -> &'static str {
        match self {
            VerdictKind::Unsteerable => "unsteerable",
            VerdictKind::Steerable => "steerable",
            VerdictKind::Inconclusive => "inconclusive",
        }
    }
}

/// Outcome of evaluating the criterion at one `Y`.
#[derive(Debug, Clone, Copy)]
pub struct Verdict {
    pub kind: VerdictKind,
    pub matrix: BlochOp,
    pub min_eig: f64,
    pub max_eig: f64,
    /// Panels the quadrature needed to converge.
    pub panels: usize,
}

/// Evaluate the criterion at `y` and classify the sign of the result.
///
/// Positive semidefiniteness is checked first, so a criterion matrix that is
/// numerically zero counts as unsteerable; this is the correct reading
/// exactly at a steering threshold.
pub fn verdict_with(fam: &EllipseFamily, y: BlochOp, quad: Quadrature) -> Result<Verdict> {
    check_preconditions(fam, y)?;
    let (sop, panels) = steering_operator_panels(fam, y, quad, ThetaRange::Half)?;
    let matrix = y.sandwich(fam.rho_b()) - sop;
    let (min_eig, max_eig) = matrix.eig_bounds();
    let kind = if min_eig >= -TOL_PSD {
        VerdictKind::Unsteerable
    } else if max_eig <= TOL_PSD && matrix.trace_norm() > TOL_NONZERO {
        VerdictKind::Steerable
    } else {
        VerdictKind::Inconclusive
    };
    Ok(Verdict { kind, matrix, min_eig, max_eig, panels })
}

/// Trace-normalized `int_0^2pi |X'(theta)|_Y dtheta` at
/// `Y = (1 - eps) P + eps (I - P)`.
///
/// As `eps` shrinks, the average leans into the measurement direction and
/// converges to `I - P`; at `eps = 1/2` it is the plain normalized absolute
/// integral. The integrand develops a feature of width comparable to `eps`
/// near the angle of `P`, hence adaptive quadrature.
pub fn boundary_limit_probe(
    fam: &EllipseFamily,
    p: Rp1Point,
    eps: f64,
    tol: f64,
) -> Result<BlochOp> {
    if !(eps > 1e-10 && eps <= 0.5) {
        return Err(Error::Domain(format!("eps = {eps} is outside (0, 1/2]")));
    }
    let proj = p.projector();
    let y = proj * (1.0 - eps) + (BlochOp::IDENTITY - proj) * eps;
    // y has eigenvalues eps and 1 - eps, so the conjugation cannot fail.
    let f = |t: f64| fam.derivative(t).abs_op_conj(y).expect("y is positive definite");
    let integral = adaptive_simpson(&f, 0.0, TAU, tol)?;
    integral
        .normalized()
        .ok_or_else(|| Error::Domain("steering operator vanishes; probe undefined".into()))
}

/// Search for a trace-one `Y` making the steering operator proportional to
/// `Y rho_B Y`. At a steering threshold this is where the criterion matrix
/// vanishes.
///
/// Iterates the fixed point `Y -> A^{-1/2} (A^{1/2} T A^{1/2})^{1/2} A^{-1/2}`
/// with `A = rho_B` and `T` the normalized steering operator at the current
/// `Y`, damped and renormalized each round.
pub fn find_proportional_y(fam: &EllipseFamily, quad: Quadrature) -> Result<BlochOp> {
    let a = fam.rho_b();
    if !(a.tilt() < 1.0 - TOL_TILT) {
        return Err(Error::TiltTooLarge(a.tilt()));
    }
    let sm = a.sqrt_psd()?;
    let smi = sm.inverse()?;
    let mut y = BlochOp::IDENTITY * 0.5;
    let mut damp: f64 = 0.5;
    let mut best = f64::INFINITY;
    let mut resid = f64::INFINITY;
    for _ in 0..500 {
        let sop = steering_operator(fam, y, quad)?;
        if sop.trace_norm() < 1e-13 {
            // Nothing to balance against; any Y works.
            return Ok(BlochOp::IDENTITY * 0.5);
        }
        let t = sop.normalized().expect("positive trace");
        let lhs = y
            .sandwich(a)
            .normalized()
            .ok_or_else(|| Error::NoConvergence(f64::INFINITY))?;
        resid = (t - lhs).trace_norm();
        if resid < 1e-8 {
            return Ok(y);
        }
        if resid > best {
            damp = (damp * 0.7).max(0.01);
        } else {
            best = resid;
        }
        let w = sm.sandwich(t).sqrt_psd()?;
        let next = smi
            .sandwich(w)
            .normalized()
            .ok_or_else(|| Error::NoConvergence(resid))?;
        y = (y * (1.0 - damp) + next * damp).normalized().expect("trace one");
    }
    Err(Error::NoConvergence(resid))
}
