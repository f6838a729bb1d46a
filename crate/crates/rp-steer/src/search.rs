//! Certificate search and threshold bisection.
//!
//! Measurement operators are parameterized over the open unit disc as
//! `Y(r1, r3) = I + r1 s1 + r3 s3`, which is exactly the positive definite
//! cone up to scale; the criterion verdict is scale invariant, so the disc
//! loses nothing. A projected gradient ascent maximizes the smallest (or
//! minimizes the largest) eigenvalue of the criterion matrix, exploration
//! runs on a loosened quadrature, and every candidate certificate is
//! re-evaluated at the strict tolerance before it counts.

use crate::bloch::BlochOp;
use crate::criterion::{criterion_matrix, Quadrature, TOL_PSD, TOL_TILT};
use crate::states::EllipseFamily;
use crate::{map_ordered, Result};
use std::f64::consts::FRAC_PI_4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchConfig {
    pub initial_step: f64,
    pub min_step: f64,
    pub decay: f64,
    pub bisect_iters: usize,
    pub n_starts: usize,
    /// Quadrature tolerance during exploration; certificates are always
    /// confirmed at the strict tolerance.
    pub explore_tol: f64,
    pub max_ascent_iters: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            initial_step: 0.1,
            min_step: 1e-7,
            decay: 0.5,
            bisect_iters: 40,
            n_starts: 9,
            explore_tol: 1e-7,
            max_ascent_iters: 500,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Objective {
    /// Maximize the smallest eigenvalue: positive certifies unsteerable.
    FloorUp,
    /// Maximize the negated largest eigenvalue: positive certifies steerable.
    CeilDown,
}

fn y_at(r: [f64; 2]) -> BlochOp {
    BlochOp::new(2.0, 2.0 * r[0], 2.0 * r[1])
}

fn disc_coords(y: BlochOp) -> Option<[f64; 2]> {
    if y.n <= 0.0 || y.tilt() >= 1.0 {
        return None;
    }
    Some([y.r1 / y.n, y.r3 / y.n])
}

const MAX_RADIUS: f64 = 1.0 - 1e-9;

fn clamp_disc(mut r: [f64; 2]) -> [f64; 2] {
    let len = r[0].hypot(r[1]);
    if len > MAX_RADIUS {
        r[0] *= MAX_RADIUS / len;
        r[1] *= MAX_RADIUS / len;
    }
    r
}

fn objective_value(
    fam: &EllipseFamily,
    obj: Objective,
    r: [f64; 2],
    quad: Quadrature,
) -> f64 {
    match criterion_matrix(fam, y_at(r), quad) {
        Ok(c) => {
            let (lo, hi) = c.eig_bounds();
            match obj {
                Objective::FloorUp => lo,
                Objective::CeilDown => -hi,
            }
        }
        // Failed quadrature or preconditions: worst value, the ascent
        // simply avoids this Y.
        Err(_) => f64::NEG_INFINITY,
    }
}

const GRAD_H: f64 = 1e-6;
/// Loose quadrature error leaks into eigenvalues at this scale.
const EXPLORE_MARGIN: f64 = 1e-6;

/// Gradient ascent from one start; returns the best loose value and point.
fn ascend(
    fam: &EllipseFamily,
    obj: Objective,
    cfg: &SearchConfig,
    start: [f64; 2],
    loose: Quadrature,
) -> (f64, [f64; 2]) {
    let mut x = clamp_disc(start);
    let mut fx = objective_value(fam, obj, x, loose);
    let mut step = cfg.initial_step;
    let mut grad: Option<[f64; 2]> = None;
    let mut iters = 0;
    while step >= cfg.min_step && iters < cfg.max_ascent_iters {
        iters += 1;
        if fx > TOL_PSD + EXPLORE_MARGIN {
            break; // already deep enough to confirm strictly
        }
        let g = match grad {
            Some(g) => g,
            None => {
                let mut g = [0.0; 2];
                for i in 0..2 {
                    let mut p = x;
                    let mut m = x;
                    p[i] += GRAD_H;
                    m[i] -= GRAD_H;
                    let fp = objective_value(fam, obj, clamp_disc(p), loose);
                    let fm = objective_value(fam, obj, clamp_disc(m), loose);
                    g[i] = (fp - fm) / (2.0 * GRAD_H);
                }
                if !g[0].is_finite() || !g[1].is_finite() {
                    break;
                }
                grad = Some(g);
                g
            }
        };
        let glen = g[0].hypot(g[1]);
        if glen < 1e-14 {
            break;
        }
        let cand = clamp_disc([x[0] + step * g[0] / glen, x[1] + step * g[1] / glen]);
        let fc = objective_value(fam, obj, cand, loose);
        if fc > fx {
            x = cand;
            fx = fc;
            grad = None;
        } else {
            step *= cfg.decay;
        }
    }
    (fx, x)
}

/// Best strictly-evaluated certificate value over all starts.
///
/// Stops at the first start whose strict value clears `TOL_PSD`. When no
/// start looks promising on the loose pass, the single best loose point is
/// still strictly evaluated so the returned value is always a strict one.
fn best_certificate(
    fam: &EllipseFamily,
    obj: Objective,
    cfg: &SearchConfig,
    strict: Quadrature,
    warm: &[BlochOp],
) -> (f64, BlochOp) {
    let loose = Quadrature { refine_until: cfg.explore_tol, ..strict };
    let mut starts: Vec<[f64; 2]> = warm.iter().filter_map(|&y| disc_coords(y)).collect();
    starts.push([0.0, 0.0]);
    let ring = cfg.n_starts.saturating_sub(1).max(0);
    for k in 0..ring {
        let ang = std::f64::consts::TAU * k as f64 / ring.max(1) as f64;
        starts.push([0.5 * ang.sin(), 0.5 * ang.cos()]);
    }

    let mut best_strict = f64::NEG_INFINITY;
    let mut best_strict_y = BlochOp::IDENTITY;
    let mut best_loose = f64::NEG_INFINITY;
    let mut best_loose_r = [0.0; 2];
    for &s in &starts {
        let (fx, x) = ascend(fam, obj, cfg, s, loose);
        if fx > best_loose {
            best_loose = fx;
            best_loose_r = x;
        }
        if fx > TOL_PSD - EXPLORE_MARGIN {
            let sv = objective_value(fam, obj, x, strict);
            if sv > best_strict {
                best_strict = sv;
                best_strict_y = y_at(x);
            }
            if sv > TOL_PSD {
                return (sv, y_at(x));
            }
        }
    }
    if best_strict.is_finite() {
        (best_strict, best_strict_y)
    } else {
        let sv = objective_value(fam, obj, best_loose_r, strict);
        (sv, y_at(best_loose_r))
    }
}

/// Maximize the smallest criterion eigenvalue; a value above `TOL_PSD`
/// certifies the family unsteerable at the returned `Y`.
pub fn search_unsteerable(
    fam: &EllipseFamily,
    cfg: &SearchConfig,
    quad: Quadrature,
) -> (f64, BlochOp) {
    best_certificate(fam, Objective::FloorUp, cfg, quad, &[])
}

/// Minimize the largest criterion eigenvalue; returns its negation, so a
/// value above `TOL_PSD` certifies the family steerable at the returned `Y`.
pub fn search_steerable(
    fam: &EllipseFamily,
    cfg: &SearchConfig,
    quad: Quadrature,
) -> (f64, BlochOp) {
    best_certificate(fam, Objective::CeilDown, cfg, quad, &[])
}

fn certified(
    fam: &EllipseFamily,
    obj: Objective,
    cfg: &SearchConfig,
    quad: Quadrature,
    warm: &[BlochOp],
) -> Option<BlochOp> {
    if !(fam.tilt() < 1.0 - TOL_TILT) {
        return None; // criterion silent here, not a hard error
    }
    let (value, y) = best_certificate(fam, obj, cfg, quad, warm);
    (value > TOL_PSD).then_some(y)
}

/// Largest noise parameter certified unsteerable, found by bisection on
/// `[0, 1]`, with the certifying measurement operator.
///
/// The previous certificate seeds the next search, which only adds a
/// candidate start and cannot weaken the result.
pub fn eta_lower<F>(
    ctor: &F,
    cfg: &SearchConfig,
    quad: Quadrature,
) -> Result<(f64, Option<BlochOp>)>
where
    F: Fn(f64) -> Result<EllipseFamily>,
{
    let mut warm: Vec<BlochOp> = Vec::new();
    if let Some(y) = certified(&ctor(1.0)?, Objective::FloorUp, cfg, quad, &warm) {
        return Ok((1.0, Some(y)));
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut y_lo = None;
    for _ in 0..cfg.bisect_iters {
        let mid = 0.5 * (lo + hi);
        match certified(&ctor(mid)?, Objective::FloorUp, cfg, quad, &warm) {
            Some(y) => {
                lo = mid;
                y_lo = Some(y);
                warm = vec![y];
            }
            None => hi = mid,
        }
    }
    Ok((lo, y_lo))
}

/// Smallest noise parameter certified steerable, with its certificate.
/// Returns `(1.0, None)` when even the noiseless state cannot be certified.
pub fn eta_upper<F>(
    ctor: &F,
    cfg: &SearchConfig,
    quad: Quadrature,
) -> Result<(f64, Option<BlochOp>)>
where
    F: Fn(f64) -> Result<EllipseFamily>,
{
    let mut warm: Vec<BlochOp> = Vec::new();
    let mut y_hi = match certified(&ctor(1.0)?, Objective::CeilDown, cfg, quad, &warm) {
        Some(y) => {
            warm = vec![y];
            y
        }
        None => return Ok((1.0, None)),
    };
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..cfg.bisect_iters {
        let mid = 0.5 * (lo + hi);
        match certified(&ctor(mid)?, Objective::CeilDown, cfg, quad, &warm) {
            Some(y) => {
                hi = mid;
                y_hi = y;
                warm = vec![y];
            }
            None => lo = mid,
        }
    }
    Ok((hi, Some(y_hi)))
}

/// One row of a boundary sweep: certified noise bounds at a fixed `alpha`.
#[derive(Debug, Clone, Copy)]
pub struct BoundaryPoint {
    pub alpha: f64,
    pub eta_lower: f64,
    pub eta_upper: f64,
    /// Whether the two bounds are certificate-backed and bracket a
    /// threshold; shortcut and unreachable rows clear this.
    pub valid: bool,
    pub y_lower: Option<BlochOp>,
    pub y_upper: Option<BlochOp>,
}

/// Evenly spaced `alpha` grid on `[0, pi/4]`, endpoints included.
pub fn default_alpha_grid(n: usize) -> Vec<f64> {
    let n = n.max(2);
    (0..n).map(|k| FRAC_PI_4 * k as f64 / (n - 1) as f64).collect()
}

fn separable_row(alpha: f64) -> BoundaryPoint {
    BoundaryPoint {
        alpha,
        eta_lower: 1.0,
        eta_upper: 1.0,
        valid: false,
        y_lower: None,
        y_upper: None,
    }
}

fn pure_mixed_point(alpha: f64, cfg: &SearchConfig, quad: Quadrature) -> Result<BoundaryPoint> {
    if alpha < 1e-12 {
        // Mixtures of |00> with white noise are separable at every eta.
        return Ok(separable_row(alpha));
    }
    let ctor = |eta: f64| EllipseFamily::pure_mixed(alpha, eta);
    let (el, yl) = eta_lower(&ctor, cfg, quad)?;
    if el >= 1.0 {
        return Ok(BoundaryPoint {
            alpha,
            eta_lower: 1.0,
            eta_upper: 1.0,
            valid: yl.is_some(),
            y_lower: yl,
            y_upper: None,
        });
    }
    let (eu, yu) = eta_upper(&ctor, cfg, quad)?;
    let valid = yl.is_some() && yu.is_some() && el <= eu + 1e-9;
    Ok(BoundaryPoint { alpha, eta_lower: el, eta_upper: eu, valid, y_lower: yl, y_upper: yu })
}

/// Certified steerability bounds for `eta |phi_alpha><phi_alpha| +
/// (1 - eta) I/4` across an `alpha` grid.
pub fn boundary_curve(
    alphas: &[f64],
    cfg: &SearchConfig,
    quad: Quadrature,
) -> Result<Vec<BoundaryPoint>> {
    map_ordered(alphas, |&alpha| pure_mixed_point(alpha, cfg, quad))
        .into_iter()
        .collect()
}

/// Relative margin kept above the tilt validity line `eta_b = cos(2 alpha)`;
/// quadrature cost diverges as the line is approached.
const TILT_MARGIN: f64 = 1.05;

fn depolarized_point(
    alpha: f64,
    eta_a: f64,
    cfg: &SearchConfig,
    quad: Quadrature,
) -> Result<BoundaryPoint> {
    if alpha < 1e-12 {
        // |00> through local depolarizing noise is a product state.
        return Ok(separable_row(alpha));
    }
    let c2a = (2.0 * alpha).cos();
    let probe = c2a * TILT_MARGIN;
    if probe >= 1.0 {
        // The whole eta_b range sits inside the tilt margin.
        return Ok(BoundaryPoint {
            alpha,
            eta_lower: 0.0,
            eta_upper: 1.0,
            valid: false,
            y_lower: None,
            y_upper: None,
        });
    }
    let ctor = |eb: f64| EllipseFamily::depolarized(alpha, eta_a, eb);
    let mut warm: Vec<BlochOp> = Vec::new();

    if let Some(y) = certified(&ctor(1.0)?, Objective::FloorUp, cfg, quad, &warm) {
        // Unsteerable with no noise at all; extra channel noise can only
        // keep it that way.
        return Ok(BoundaryPoint {
            alpha,
            eta_lower: 1.0,
            eta_upper: 1.0,
            valid: true,
            y_lower: Some(y),
            y_upper: None,
        });
    }

    let at_probe = certified(&ctor(probe)?, Objective::FloorUp, cfg, quad, &warm);
    if let Some(y0) = at_probe {
        // Certified at the probe; a local channel on the steered side turns
        // any hidden state model into one for stronger noise, so everything
        // below the probe, validity line included, is covered.
        warm = vec![y0];
        let (mut lo, mut hi) = (probe, 1.0f64);
        let mut y_lo = Some(y0);
        for _ in 0..cfg.bisect_iters {
            let mid = 0.5 * (lo + hi);
            match certified(&ctor(mid)?, Objective::FloorUp, cfg, quad, &warm) {
                Some(y) => {
                    lo = mid;
                    y_lo = Some(y);
                    warm = vec![y];
                }
                None => hi = mid,
            }
        }
        // Steerable side of the transition.
        let mut steer_warm: Vec<BlochOp> = Vec::new();
        let mut y_up = certified(&ctor(1.0)?, Objective::CeilDown, cfg, quad, &steer_warm);
        let (eta_upper, y_upper) = if let Some(y1) = y_up {
            steer_warm = vec![y1];
            let (mut slo, mut shi) = (lo, 1.0f64);
            for _ in 0..cfg.bisect_iters {
                let mid = 0.5 * (slo + shi);
                match certified(&ctor(mid)?, Objective::CeilDown, cfg, quad, &steer_warm) {
                    Some(y) => {
                        shi = mid;
                        y_up = Some(y);
                        steer_warm = vec![y];
                    }
                    None => slo = mid,
                }
            }
            (shi, y_up)
        } else {
            (1.0, None)
        };
        return Ok(BoundaryPoint {
            alpha,
            eta_lower: lo,
            eta_upper,
            valid: y_lo.is_some() && y_upper.is_some(),
            y_lower: y_lo,
            y_upper,
        });
    }

    // Not certifiable even right above the validity line: the transition, if
    // any, is hidden in the margin band. Report only a steerable bound.
    let steer_probe = certified(&ctor(probe)?, Objective::CeilDown, cfg, quad, &warm);
    let (eta_upper, y_upper) = if let Some(y) = steer_probe {
        (probe, Some(y))
    } else {
        let mut steer_warm: Vec<BlochOp> = Vec::new();
        match certified(&ctor(1.0)?, Objective::CeilDown, cfg, quad, &steer_warm) {
            Some(y1) => {
                steer_warm = vec![y1];
                let (mut slo, mut shi) = (probe, 1.0f64);
                let mut y_up = Some(y1);
                for _ in 0..cfg.bisect_iters {
                    let mid = 0.5 * (slo + shi);
                    match certified(&ctor(mid)?, Objective::CeilDown, cfg, quad, &steer_warm)
                    {
                        Some(y) => {
                            shi = mid;
                            y_up = Some(y);
                            steer_warm = vec![y];
                        }
                        None => slo = mid,
                    }
                }
                (shi, y_up)
            }
            None => (1.0, None),
        }
    };
    Ok(BoundaryPoint {
        alpha,
        eta_lower: 0.0,
        eta_upper,
        valid: false,
        y_lower: None,
        y_upper,
    })
}

/// For each `alpha`, certified bounds in the channel visibility `eta_b` for
/// `|phi_alpha>` sent through depolarizing channels of visibility `eta_a`
/// and `eta_b`. The criterion only applies above the tilt line
/// `eta_b = cos(2 alpha)`, so bounds keep a margin above it and rows whose
/// whole range falls inside the margin come back invalid.
pub fn depolarizing_region(
    alphas: &[f64],
    eta_a: f64,
    cfg: &SearchConfig,
    quad: Quadrature,
) -> Result<Vec<BoundaryPoint>> {
    map_ordered(alphas, |&alpha| depolarized_point(alpha, eta_a, cfg, quad))
        .into_iter()
        .collect()
}

/// Fixed CSV schema shared by the boundary and depolarizing sweeps. The `Y`
/// columns carry the unsteerability certificate when there is one, else the
/// identity.
pub fn boundary_csv(points: &[BoundaryPoint]) -> String {
    let mut out = String::from("alpha,eta_lower,eta_upper,valid,Y_n,Y_r1,Y_r3\n");
    for p in points {
        let y = p.y_lower.unwrap_or(BlochOp::IDENTITY);
        out.push_str(&format!(
            "{:.11e},{:.11e},{:.11e},{},{:.11e},{:.11e},{:.11e}\n",
            p.alpha, p.eta_lower, p.eta_upper, p.valid, y.n, y.r1, y.r3
        ));
    }
    out
}
