//! Two-qubit real states and the operator ellipses they steer.
//!
//! Measuring the first qubit with the rank-one projector at angle `theta`
//! leaves the second qubit in the subnormalized conditional operator
//! `X(theta) = Tr_A[(P(theta) ox I) rho]`. As `theta` sweeps the projective
//! line this traces an ellipse in the three-dimensional space of real
//! symmetric operators, centered at half the reduced state. Everything the
//! steerability criterion needs is this curve, its derivative, and the tilt
//! of the plane it spans.

use nalgebra::{Matrix2, Matrix4, Vector4};

use crate::bloch::BlochOp;
use crate::{Error, Result};

const TOL_STATE: f64 = 1e-9;

/// A real, symmetric, unit-trace, positive semidefinite 4x4 density matrix
/// in the product basis `|00>, |01>, |10>, |11>` (first factor is the
/// steering party).
#[derive(Debug, Clone, PartialEq)]
pub struct TwoQubitRealState {
    rho: Matrix4<f64>,
}

impl TwoQubitRealState {
    pub fn new(rho: Matrix4<f64>) -> Result<Self> {
        let asym = (rho - rho.transpose()).abs().max();
        if asym > TOL_STATE {
            return Err(Error::InvalidState(format!(
                "matrix is not symmetric (max asymmetry {asym:.3e})"
            )));
        }
        let rho = (rho + rho.transpose()) * 0.5;
        let tr: f64 = rho.trace();
        if (tr - 1.0).abs() > TOL_STATE {
            return Err(Error::InvalidState(format!("trace is {tr}, expected 1")));
        }
        let min_eig = rho
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .fold(f64::INFINITY, |a, &b| a.min(b));
        if min_eig < -TOL_STATE {
            return Err(Error::InvalidState(format!(
                "matrix has negative eigenvalue {min_eig:.3e}"
            )));
        }
        Ok(TwoQubitRealState { rho })
    }

    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.rho
    }

    /// Parse 16 whitespace-separated entries, row major.
    pub fn parse_text(text: &str) -> Result<Self> {
        let vals: Vec<f64> = text
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| Error::InvalidState(format!("bad number {t:?}")))
            })
            .collect::<Result<_>>()?;
        if vals.len() != 16 {
            return Err(Error::InvalidState(format!(
                "expected 16 matrix entries, got {}",
                vals.len()
            )));
        }
        TwoQubitRealState::new(Matrix4::from_row_slice(&vals))
    }

    /// `Tr_A[(M ox I) rho]` as a Bloch operator on the second qubit.
    pub fn conditional(&self, m: &Matrix2<f64>) -> BlochOp {
        let mut r = [[0.0f64; 2]; 2];
        for b in 0..2 {
            for bp in 0..2 {
                for a in 0..2 {
                    for c in 0..2 {
                        r[b][bp] += m[(a, c)] * self.rho[(2 * c + b, 2 * a + bp)];
                    }
                }
            }
        }
        BlochOp::from_entries(r[0][0], (r[0][1] + r[1][0]) / 2.0, r[1][1])
    }

    /// Reduced state of the second qubit.
    pub fn rho_b(&self) -> BlochOp {
        self.conditional(&Matrix2::identity())
    }

    /// Reduced state of the first qubit.
    pub fn rho_a(&self) -> BlochOp {
        let m = &self.rho;
        let tl = m[(0, 0)] + m[(1, 1)];
        let br = m[(2, 2)] + m[(3, 3)];
        let off = (m[(0, 2)] + m[(1, 3)] + m[(2, 0)] + m[(3, 1)]) / 2.0;
        BlochOp::from_entries(tl, off, br)
    }

    /// Local filtering on the second qubit: `(I ox Y) rho (I ox Y)`,
    /// renormalized to unit trace.
    pub fn conjugate_b(&self, y: BlochOp) -> Result<Self> {
        let ye = y.entries();
        let ym = Matrix2::new(ye[0][0], ye[0][1], ye[1][0], ye[1][1]);
        let full = Matrix2::identity().kronecker(&ym);
        let out = full * self.rho * full.transpose();
        let tr = out.trace();
        if tr.abs() < 1e-14 {
            return Err(Error::Domain("filtered state has zero trace".into()));
        }
        TwoQubitRealState::new(out / tr)
    }
}

/// Rank-one projector at angle `theta` as a dense 2x2 matrix.
fn projector_mat(theta: f64) -> Matrix2<f64> {
    let (s, c) = theta.sin_cos();
    Matrix2::new((1.0 + c) / 2.0, s / 2.0, s / 2.0, (1.0 - c) / 2.0)
}

/// Derivative of `projector_mat` in `theta`.
fn projector_mat_deriv(theta: f64) -> Matrix2<f64> {
    let (s, c) = theta.sin_cos();
    Matrix2::new(-s / 2.0, c / 2.0, c / 2.0, s / 2.0)
}

fn tr_a(rho: &Matrix4<f64>) -> Matrix2<f64> {
    let mut out = Matrix2::zeros();
    for a in 0..2 {
        for b in 0..2 {
            for bp in 0..2 {
                out[(b, bp)] += rho[(2 * a + b, 2 * a + bp)];
            }
        }
    }
    out
}

fn tr_b(rho: &Matrix4<f64>) -> Matrix2<f64> {
    let mut out = Matrix2::zeros();
    for b in 0..2 {
        for a in 0..2 {
            for ap in 0..2 {
                out[(a, ap)] += rho[(2 * a + b, 2 * ap + b)];
            }
        }
    }
    out
}

/// The curve of conditional operators of a state, with closed forms for the
/// named families and partial traces for everything else.
#[derive(Debug, Clone)]
pub struct EllipseFamily {
    kind: FamilyKind,
}

#[derive(Debug, Clone)]
enum FamilyKind {
    /// `eta * |phi+><phi+| + (1 - eta) * I/4`.
    Werner { eta: f64 },
    /// `eta * |phi_alpha><phi_alpha| + (1 - eta) * I/4` with
    /// `|phi_alpha> = cos(alpha)|00> + sin(alpha)|11>`.
    PureMixed { alpha: f64, eta: f64 },
    /// `|phi_alpha>` through independent depolarizing channels of
    /// visibility `eta_a` and `eta_b` on the two sides.
    Depolarized { alpha: f64, eta_a: f64, eta_b: f64 },
    General { state: TwoQubitRealState },
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::Domain(format!("{name} = {v} is outside [0, 1]")));
    }
    Ok(())
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.0..=std::f64::consts::FRAC_PI_2).contains(&alpha) {
        return Err(Error::Domain(format!("alpha = {alpha} is outside [0, pi/2]")));
    }
    Ok(())
}

impl EllipseFamily {
    pub fn werner(eta: f64) -> Result<Self> {
        check_unit("eta", eta)?;
        Ok(EllipseFamily { kind: FamilyKind::Werner { eta } })
    }

    pub fn pure_mixed(alpha: f64, eta: f64) -> Result<Self> {
        check_alpha(alpha)?;
        check_unit("eta", eta)?;
        Ok(EllipseFamily { kind: FamilyKind::PureMixed { alpha, eta } })
    }

    pub fn depolarized(alpha: f64, eta_a: f64, eta_b: f64) -> Result<Self> {
        check_alpha(alpha)?;
        check_unit("eta_a", eta_a)?;
        check_unit("eta_b", eta_b)?;
        Ok(EllipseFamily { kind: FamilyKind::Depolarized { alpha, eta_a, eta_b } })
    }

    pub fn from_state(state: TwoQubitRealState) -> Self {
        EllipseFamily { kind: FamilyKind::General { state } }
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            FamilyKind::Werner { .. } => "werner",
            FamilyKind::PureMixed { .. } => "pure-mixed",
            FamilyKind::Depolarized { .. } => "depolarized",
            FamilyKind::General { .. } => "state",
        }
    }

    pub fn params(&self) -> Vec<(&'static str, f64)> {
        match self.kind {
            FamilyKind::Werner { eta } => vec![("eta", eta)],
            FamilyKind::PureMixed { alpha, eta } => vec![("alpha", alpha), ("eta", eta)],
            FamilyKind::Depolarized { alpha, eta_a, eta_b } => {
                vec![("alpha", alpha), ("eta_a", eta_a), ("eta_b", eta_b)]
            }
            FamilyKind::General { .. } => vec![],
        }
    }

    /// Conditional operator `X(theta)`.
    pub fn point(&self, theta: f64) -> BlochOp {
        let (s, c) = theta.sin_cos();
        match &self.kind {
            FamilyKind::Werner { eta } => BlochOp::new(0.5, eta / 2.0 * s, eta / 2.0 * c),
            FamilyKind::PureMixed { alpha, eta } => {
                let (s2a, c2a) = (2.0 * alpha).sin_cos();
                BlochOp::new(
                    0.5 * (1.0 + eta * c2a * c),
                    eta / 2.0 * s2a * s,
                    eta / 2.0 * (c2a + c),
                )
            }
            FamilyKind::Depolarized { alpha, eta_a, eta_b } => {
                let (s2a, c2a) = (2.0 * alpha).sin_cos();
                BlochOp::new(
                    0.5 * (1.0 + eta_a * c2a * c),
                    eta_a * eta_b / 2.0 * s2a * s,
                    eta_b / 2.0 * (eta_a * c + c2a),
                )
            }
            FamilyKind::General { state } => state.conditional(&projector_mat(theta)),
        }
    }

    /// `dX/dtheta`, exact for every kind: the projector is the only
    /// `theta`-dependence, so the general case differentiates it under the
    /// partial trace.
    pub fn derivative(&self, theta: f64) -> BlochOp {
        let (s, c) = theta.sin_cos();
        match &self.kind {
            FamilyKind::Werner { eta } => BlochOp::new(0.0, eta / 2.0 * c, -eta / 2.0 * s),
            FamilyKind::PureMixed { alpha, eta } => {
                let (s2a, c2a) = (2.0 * alpha).sin_cos();
                BlochOp::new(-eta / 2.0 * c2a * s, eta / 2.0 * s2a * c, -eta / 2.0 * s)
            }
            FamilyKind::Depolarized { alpha, eta_a, eta_b } => {
                let (s2a, c2a) = (2.0 * alpha).sin_cos();
                BlochOp::new(
                    -eta_a / 2.0 * c2a * s,
                    eta_a * eta_b / 2.0 * s2a * c,
                    -eta_a * eta_b / 2.0 * s,
                )
            }
            FamilyKind::General { state } => state.conditional(&projector_mat_deriv(theta)),
        }
    }

    /// Reduced state of the steered qubit; equals `X(t) + X(t + pi)` for
    /// every `t`.
    pub fn rho_b(&self) -> BlochOp {
        match &self.kind {
            FamilyKind::Werner { .. } => BlochOp::new(1.0, 0.0, 0.0),
            FamilyKind::PureMixed { alpha, eta } => {
                BlochOp::new(1.0, 0.0, eta * (2.0 * alpha).cos())
            }
            FamilyKind::Depolarized { alpha, eta_b, .. } => {
                BlochOp::new(1.0, 0.0, eta_b * (2.0 * alpha).cos())
            }
            FamilyKind::General { state } => state.rho_b(),
        }
    }

    /// Normal of the plane spanned by the ellipse, scaled to unit trace
    /// component when possible. `Tr(normal * X(theta))` is constant.
    ///
    /// Degenerate curves pick the flattest plane containing them: a point
    /// lies in a trace slice (normal `I/2`), a segment gets the minimum-tilt
    /// normal orthogonal to its direction.
    pub fn plane_normal(&self) -> BlochOp {
        match &self.kind {
            FamilyKind::Werner { .. } => BlochOp::new(1.0, 0.0, 0.0),
            FamilyKind::PureMixed { alpha, .. } => {
                BlochOp::new(1.0, 0.0, -(2.0 * alpha).cos())
            }
            FamilyKind::Depolarized { alpha, eta_b, .. } => {
                if *eta_b == 0.0 {
                    // Plane degenerates; the curve is a horizontal segment
                    // in the trace coordinate only when eta_a > 0.
                    return self.general_plane_normal();
                }
                BlochOp::new(1.0, 0.0, -(2.0 * alpha).cos() / eta_b)
            }
            FamilyKind::General { .. } => self.general_plane_normal(),
        }
    }

    /// `X(theta)` is a first order trig polynomial, so the centered curve is
    /// spanned exactly by its values at `theta = 0` and `theta = pi/2`.
    fn general_plane_normal(&self) -> BlochOp {
        let center = self.rho_b() * 0.5;
        let a = self.point(0.0) - center;
        let b = self.point(std::f64::consts::FRAC_PI_2) - center;
        let va = [a.n, a.r1, a.r3];
        let vb = [b.n, b.r1, b.r3];
        let cross = [
            va[1] * vb[2] - va[2] * vb[1],
            va[2] * vb[0] - va[0] * vb[2],
            va[0] * vb[1] - va[1] * vb[0],
        ];
        let na = (va[0].powi(2) + va[1].powi(2) + va[2].powi(2)).sqrt();
        let nb = (vb[0].powi(2) + vb[1].powi(2) + vb[2].powi(2)).sqrt();
        let ncross = (cross[0].powi(2) + cross[1].powi(2) + cross[2].powi(2)).sqrt();
        let scale = na.max(nb);
        if scale < 1e-12 {
            // Point: any plane works, take the flattest.
            return BlochOp::new(1.0, 0.0, 0.0);
        }
        if ncross / (scale * scale) < 1e-10 {
            // Segment along d: minimum tilt normal orthogonal to d.
            let d = if na >= nb { va } else { vb };
            let rad2 = d[1] * d[1] + d[2] * d[2];
            if rad2 / (d[0] * d[0] + rad2) < 1e-20 {
                // Direction is the identity; every containing plane is
                // traceless, so the tilt is infinite.
                return BlochOp::new(0.0, 0.0, 1.0);
            }
            return BlochOp::new(1.0, -d[0] * d[1] / rad2, -d[0] * d[2] / rad2);
        }
        if cross[0].abs() / ncross < 1e-12 {
            // Vertical plane, no trace component to scale by.
            return BlochOp::new(0.0, cross[1] / ncross, cross[2] / ncross);
        }
        BlochOp::new(1.0, cross[1] / cross[0], cross[2] / cross[0])
    }

    /// Tilt of the ellipse plane. Finite values below one admit the change
    /// of variables the steerability criterion is built on.
    pub fn tilt(&self) -> f64 {
        match &self.kind {
            FamilyKind::Werner { .. } => 0.0,
            FamilyKind::PureMixed { alpha, .. } => (2.0 * alpha).cos(),
            FamilyKind::Depolarized { alpha, eta_b, .. } => {
                if *eta_b == 0.0 {
                    let c2a = (2.0 * alpha).cos();
                    if c2a == 0.0 {
                        // Curve collapses to the point I/2.
                        0.0
                    } else {
                        f64::INFINITY
                    }
                } else {
                    (2.0 * alpha).cos() / eta_b
                }
            }
            FamilyKind::General { .. } => self.plane_normal().tilt(),
        }
    }

    /// Materialize the density matrix of this family.
    pub fn to_state(&self) -> Result<TwoQubitRealState> {
        let mat = match &self.kind {
            FamilyKind::Werner { eta } => {
                mixed_pure_matrix(std::f64::consts::FRAC_PI_4, *eta)
            }
            FamilyKind::PureMixed { alpha, eta } => mixed_pure_matrix(*alpha, *eta),
            FamilyKind::Depolarized { alpha, eta_a, eta_b } => {
                let pure = mixed_pure_matrix(*alpha, 1.0);
                let half = Matrix2::identity() * 0.5;
                let after_a = pure * *eta_a + half.kronecker(&tr_a(&pure)) * (1.0 - eta_a);
                after_a * *eta_b + tr_b(&after_a).kronecker(&half) * (1.0 - eta_b)
            }
            FamilyKind::General { state } => return Ok(state.clone()),
        };
        TwoQubitRealState::new(mat)
    }
}

fn mixed_pure_matrix(alpha: f64, eta: f64) -> Matrix4<f64> {
    let (s, c) = alpha.sin_cos();
    let psi = Vector4::new(c, 0.0, 0.0, s);
    (psi * psi.transpose()) * eta + Matrix4::identity() * ((1.0 - eta) / 4.0)
}
