//! Real symmetric 2x2 operators in Bloch coordinates.
//!
//! An operator is stored as the triple `(n, r1, r3)` meaning
//! `X = (n*I + r1*s1 + r3*s3) / 2` where `s1 = [[0,1],[1,0]]` and
//! `s3 = [[1,0],[0,-1]]`. Every real symmetric 2x2 matrix is of this form,
//! `n` is the trace, and the eigenvalues are `(n -+ sqrt(r1^2+r3^2)) / 2`.
//! All operator algebra used elsewhere in the crate (adjugates, absolute
//! values, conjugated absolute values, positive parts) closes over these
//! three numbers, so no general matrix type is needed.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Determinants and eigenvalues below this magnitude count as singular.
pub const TOL_DET: f64 = 1e-12;

pub const TAU: f64 = 2.0 * std::f64::consts::PI;

/// Real symmetric 2x2 operator `(n*I + r1*s1 + r3*s3) / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochOp {
    pub n: f64,
    pub r1: f64,
    pub r3: f64,
}

impl BlochOp {
    pub const ZERO: BlochOp = BlochOp { n: 0.0, r1: 0.0, r3: 0.0 };
    /// The identity matrix, `(n, r1, r3) = (2, 0, 0)`.
    pub const IDENTITY: BlochOp = BlochOp { n: 2.0, r1: 0.0, r3: 0.0 };

    pub fn new(n: f64, r1: f64, r3: f64) -> Self {
        BlochOp { n, r1, r3 }
    }

    /// Build from matrix entries `[[tl, off], [off, br]]`.
    pub fn from_entries(tl: f64, off: f64, br: f64) -> Self {
        BlochOp { n: tl + br, r1: 2.0 * off, r3: tl - br }
    }

    /// Matrix entries `[[tl, off], [off, br]]`, for display and I/O.
    pub fn entries(&self) -> [[f64; 2]; 2] {
        let tl = (self.n + self.r3) / 2.0;
        let br = (self.n - self.r3) / 2.0;
        let off = self.r1 / 2.0;
        [[tl, off], [off, br]]
    }

    pub fn trace(&self) -> f64 {
        self.n
    }

    pub fn det(&self) -> f64 {
        (self.n * self.n - self.r1 * self.r1 - self.r3 * self.r3) / 4.0
    }

    /// Euclidean length of the Bloch part `(r1, r3)`.
    pub fn bloch_radius(&self) -> f64 {
        self.r1.hypot(self.r3)
    }

    /// `sqrt(r1^2 + r3^2) / |n|`; infinite for traceless operators.
    ///
    /// Tilt < 1 is positive definiteness up to sign of the trace, tilt > 1
    /// is indefiniteness, tilt = 1 is a singular operator.
    pub fn tilt(&self) -> f64 {
        if self.n == 0.0 {
            f64::INFINITY
        } else {
            self.bloch_radius() / self.n.abs()
        }
    }

    /// `(min_eig, max_eig)` in closed form.
    pub fn eig_bounds(&self) -> (f64, f64) {
        let r = self.bloch_radius();
        ((self.n - r) / 2.0, (self.n + r) / 2.0)
    }

    pub fn min_eig(&self) -> f64 {
        self.eig_bounds().0
    }

    pub fn is_psd(&self, tol: f64) -> bool {
        self.min_eig() >= -tol
    }

    /// Adjugate: `(n, -r1, -r3)`. Satisfies `X * adj(X) = det(X) * I`.
    pub fn adjugate(&self) -> Self {
        BlochOp { n: self.n, r1: -self.r1, r3: -self.r3 }
    }

    /// Sum of absolute eigenvalues, `max(|n|, sqrt(r1^2 + r3^2))`.
    pub fn trace_norm(&self) -> f64 {
        self.n.abs().max(self.bloch_radius())
    }

    /// `X^2 = ((n^2 + r^2)/2, n*r1, n*r3)` where `r^2 = r1^2 + r3^2`.
    pub fn square(&self) -> Self {
        let r2 = self.r1 * self.r1 + self.r3 * self.r3;
        BlochOp {
            n: (self.n * self.n + r2) / 2.0,
            r1: self.n * self.r1,
            r3: self.n * self.r3,
        }
    }

    /// `self * inner * self`, symmetric because `self` and `inner` are.
    pub fn sandwich(&self, inner: BlochOp) -> Self {
        let [[a, b], _] = self.entries();
        let c = (self.n - self.r3) / 2.0;
        let [[d, e], _] = inner.entries();
        let f = (inner.n - inner.r3) / 2.0;
        let tl = a * a * d + 2.0 * a * b * e + b * b * f;
        let off = a * b * d + (b * b + a * c) * e + b * c * f;
        let br = b * b * d + 2.0 * b * c * e + c * c * f;
        BlochOp::from_entries(tl, off, br)
    }

    /// Operator absolute value `|X| = sqrt(X^2)`.
    ///
    /// Semidefinite operators return `+-X` directly; indefinite ones use the
    /// closed form `(X^2 - X*adj(X)) / ||X||_1`, which in Bloch coordinates
    /// is `(r, n*r1/r, n*r3/r)`.
    pub fn abs_op(&self) -> Self {
        if self.det() < 0.0 {
            let r = self.bloch_radius();
            if r < 1e-14 {
                return self.apply_to_eigs(f64::abs);
            }
            BlochOp { n: r, r1: self.n * self.r1 / r, r3: self.n * self.r3 / r }
        } else if self.n >= 0.0 {
            *self
        } else {
            -*self
        }
    }

    /// Conjugated absolute value `|X|_Y = Y^-1 |Y X Y| Y^-1`.
    ///
    /// For indefinite `X` this is `(X Y^2 X - det(X) adj(Y)^2) / ||Y X Y||_1`,
    /// which needs no inversion; semidefinite `X` gives back `+-X` for any
    /// invertible `Y`.
    pub fn abs_op_conj(&self, y: BlochOp) -> Result<Self> {
        if y.det().abs() <= TOL_DET {
            return Err(Error::SingularY);
        }
        if self.det() < 0.0 {
            let denom = y.sandwich(*self).trace_norm();
            if denom < 1e-14 {
                // Essentially the zero operator; conjugate the eigenvalue route.
                let inner_abs = y.sandwich(*self).apply_to_eigs(f64::abs);
                let y_inv = y.inverse()?;
                return Ok(y_inv.sandwich(inner_abs));
            }
            let num = self.sandwich(y.square()) - y.adjugate().square() * self.det();
            Ok(num * (1.0 / denom))
        } else if self.n >= 0.0 {
            Ok(*self)
        } else {
            Ok(-*self)
        }
    }

    /// `(|X| + X) / 2`, the projection onto the positive eigenspace scaled
    /// by the positive eigenvalues.
    pub fn pos_part(&self) -> Self {
        (self.abs_op() + *self) * 0.5
    }

    /// `(|X| - X) / 2`.
    pub fn neg_part(&self) -> Self {
        (self.abs_op() - *self) * 0.5
    }

    pub fn inverse(&self) -> Result<Self> {
        let d = self.det();
        if d.abs() <= TOL_DET {
            return Err(Error::SingularY);
        }
        Ok(self.adjugate() * (1.0 / d))
    }

    /// Square root of a positive semidefinite operator; eigenvalues within
    /// `-1e-10` of zero are clamped to zero.
    pub fn sqrt_psd(&self) -> Result<Self> {
        if self.min_eig() < -1e-10 {
            return Err(Error::Domain(format!(
                "sqrt of an operator with negative eigenvalue {:.3e}",
                self.min_eig()
            )));
        }
        Ok(self.apply_to_eigs(|l| l.max(0.0).sqrt()))
    }

    /// Apply `f` to both eigenvalues, keeping the eigenbasis.
    fn apply_to_eigs(&self, f: impl Fn(f64) -> f64) -> Self {
        let r = self.bloch_radius();
        let (lo, hi) = self.eig_bounds();
        let (flo, fhi) = (f(lo), f(hi));
        if r < 1e-300 {
            return BlochOp { n: flo + fhi, r1: 0.0, r3: 0.0 };
        }
        let scale = (fhi - flo) / r;
        BlochOp { n: flo + fhi, r1: scale * self.r1, r3: scale * self.r3 }
    }

    /// Trace inner product `Tr(X Y) = (n n' + r1 r1' + r3 r3') / 2`.
    pub fn inner(&self, other: BlochOp) -> f64 {
        (self.n * other.n + self.r1 * other.r1 + self.r3 * other.r3) / 2.0
    }

    /// Divide by the trace. `None` when the trace is too small to normalize.
    pub fn normalized(&self) -> Option<Self> {
        if self.n.abs() < 1e-300 {
            None
        } else {
            Some(*self * (1.0 / self.n))
        }
    }
}

impl std::ops::Add for BlochOp {
    type Output = BlochOp;
    fn add(self, o: BlochOp) -> BlochOp {
        BlochOp { n: self.n + o.n, r1: self.r1 + o.r1, r3: self.r3 + o.r3 }
    }
}

impl std::ops::Sub for BlochOp {
    type Output = BlochOp;
    fn sub(self, o: BlochOp) -> BlochOp {
        BlochOp { n: self.n - o.n, r1: self.r1 - o.r1, r3: self.r3 - o.r3 }
    }
}

impl std::ops::Mul<f64> for BlochOp {
    type Output = BlochOp;
    fn mul(self, s: f64) -> BlochOp {
        BlochOp { n: self.n * s, r1: self.r1 * s, r3: self.r3 * s }
    }
}

impl std::ops::Neg for BlochOp {
    type Output = BlochOp;
    fn neg(self) -> BlochOp {
        BlochOp { n: -self.n, r1: -self.r1, r3: -self.r3 }
    }
}

/// A point of the real projective line, parameterized by `phi` in `[0, 2pi)`
/// with projector `(I + sin(phi) s1 + cos(phi) s3) / 2`.
///
/// `phi = 0` is the projector onto `|0>`; `phi` and `phi + pi` are the two
/// antipodal rank-one projectors summing to the identity. Clockwise order
/// means decreasing `phi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rp1Point {
    phi: f64,
}

impl Rp1Point {
    pub fn new(phi: f64) -> Self {
        Rp1Point { phi: phi.rem_euclid(TAU) }
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    /// The rank-one projector `(1, sin(phi), cos(phi))`.
    pub fn projector(&self) -> BlochOp {
        BlochOp { n: 1.0, r1: self.phi.sin(), r3: self.phi.cos() }
    }

    pub fn antipode(&self) -> Self {
        Rp1Point::new(self.phi + std::f64::consts::PI)
    }

    /// Arc length traveled going clockwise (decreasing `phi`) from `self`
    /// to `other`; in `[0, 2pi)`.
    pub fn cw_arc_to(&self, other: Rp1Point) -> f64 {
        (self.phi - other.phi).rem_euclid(TAU)
    }

    /// Whether `a, b, c` occur in clockwise order; ties count as clockwise.
    pub fn clockwise(a: Rp1Point, b: Rp1Point, c: Rp1Point) -> bool {
        a.cw_arc_to(b) <= a.cw_arc_to(c)
    }

    /// Membership in the open arc `(x, y)`: the points reached going
    /// clockwise from `y`, strictly before arriving at `x`. Equivalently,
    /// the `z` with `x, y, z` in strict clockwise order. Empty when
    /// `x == y`.
    pub fn in_open_arc(&self, x: Rp1Point, y: Rp1Point) -> bool {
        let span = y.cw_arc_to(x);
        let d = y.cw_arc_to(*self);
        d > 0.0 && d < span
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EPS: f64 = 1e-12;

    fn close(a: BlochOp, b: BlochOp, tol: f64) -> bool {
        (a - b).trace_norm() <= tol
    }

    #[test]
    fn adjugate_of_diag() {
        // diag(2, 1/2) = (5/2, 0, 3/2); adjugate swaps the diagonal.
        let x = BlochOp::from_entries(2.0, 0.0, 0.5);
        let a = x.adjugate();
        assert_eq!(a.entries()[0][0], 0.5);
        assert_eq!(a.entries()[1][1], 2.0);
        // X * adj(X) = det(X) * I for diagonal X.
        assert!((x.det() - 2.0 * 0.5).abs() < EPS);
    }

    #[test]
    fn trace_norm_cases() {
        // s1 has eigenvalues +-1.
        let s1 = BlochOp::new(0.0, 2.0, 0.0);
        assert!((s1.trace_norm() - 2.0).abs() < EPS);
        // A PSD operator's trace norm is its trace.
        let x = BlochOp::new(3.0, 1.0, 1.0);
        assert!(x.tilt() < 1.0);
        assert!((x.trace_norm() - 3.0).abs() < EPS);
    }

    #[test]
    fn abs_of_s1_is_identity() {
        let s1 = BlochOp::new(0.0, 2.0, 0.0);
        assert!(close(s1.abs_op(), BlochOp::IDENTITY, EPS));
    }

    #[test]
    fn abs_semidefinite_passthrough() {
        let x = BlochOp::new(3.0, 1.0, 1.0);
        assert!(close(x.abs_op(), x, EPS));
        assert!(close((-x).abs_op(), x, EPS));
    }

    #[test]
    fn tilt_values() {
        assert_eq!(BlochOp::IDENTITY.tilt(), 0.0);
        let x = BlochOp::new(1.0, 1.0, 0.0);
        assert!((x.tilt() - 1.0).abs() < EPS);
        assert!(BlochOp::new(0.0, 1.0, 0.0).tilt().is_infinite());
        // The zero operator is traceless, so its tilt is infinite too.
        assert!(BlochOp::ZERO.tilt().is_infinite());
    }

    #[test]
    fn pos_neg_parts_of_s3() {
        let s3 = BlochOp::new(0.0, 0.0, 2.0);
        let p = s3.pos_part();
        let m = s3.neg_part();
        assert!(close(p, BlochOp::from_entries(1.0, 0.0, 0.0), EPS)); // |0><0|
        assert!(close(m, BlochOp::from_entries(0.0, 0.0, 1.0), EPS)); // |1><1|
        assert!(close(p - m, s3, EPS));
        assert!(close(p + m, s3.abs_op(), EPS));
    }

    #[test]
    fn eig_bounds_closed_form() {
        let x = BlochOp::new(2.0, 3.0, 4.0);
        let (lo, hi) = x.eig_bounds();
        assert!((lo - (2.0 - 5.0) / 2.0).abs() < EPS);
        assert!((hi - (2.0 + 5.0) / 2.0).abs() < EPS);
    }

    #[test]
    fn sandwich_matches_entrywise_product() {
        let y = BlochOp::new(1.7, 0.3, -0.4);
        let x = BlochOp::new(0.2, 1.1, 0.5);
        let got = y.sandwich(x);
        // Reference: multiply the 2x2 entry matrices directly.
        let ye = y.entries();
        let xe = x.entries();
        let mut yx = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    yx[i][j] += ye[i][k] * xe[k][j];
                }
            }
        }
        let mut yxy = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    yxy[i][j] += yx[i][k] * ye[k][j];
                }
            }
        }
        let want = BlochOp::from_entries(yxy[0][0], yxy[0][1], yxy[1][1]);
        assert!(close(got, want, 1e-12));
    }

    #[test]
    fn conjugated_abs_identity_reduces_to_abs() {
        let x = BlochOp::new(0.3, 1.4, -0.8);
        let got = x.abs_op_conj(BlochOp::IDENTITY).unwrap();
        assert!(close(got, x.abs_op(), 1e-12));
    }

    #[test]
    fn conjugated_abs_rejects_singular_y() {
        let x = BlochOp::new(0.0, 1.0, 0.0);
        let y = BlochOp::new(1.0, 1.0, 0.0); // det = 0
        assert!(matches!(x.abs_op_conj(y), Err(Error::SingularY)));
    }

    #[test]
    fn rp1_projector_at_zero_is_ket0() {
        let p = Rp1Point::new(0.0).projector();
        assert!(close(p, BlochOp::from_entries(1.0, 0.0, 0.0), EPS));
        let q = Rp1Point::new(std::f64::consts::PI).projector();
        assert!(close(p + q, BlochOp::IDENTITY, EPS));
    }

    #[test]
    fn clockwise_is_decreasing_phi() {
        let a = Rp1Point::new(1.0);
        let b = Rp1Point::new(0.5);
        let c = Rp1Point::new(0.1);
        assert!(Rp1Point::clockwise(a, b, c));
        assert!(!Rp1Point::clockwise(c, b, a) || a.phi() == c.phi());
        // Ties count as clockwise.
        assert!(Rp1Point::clockwise(a, a, c));
    }

    #[test]
    fn open_arc_membership() {
        let x = Rp1Point::new(1.0);
        let y = Rp1Point::new(0.2);
        // (x, y) leaves y clockwise (through phi = 0) and ends at x.
        assert!(Rp1Point::new(1.5).in_open_arc(x, y));
        assert!(!Rp1Point::new(0.6).in_open_arc(x, y));
        assert!(!x.in_open_arc(x, y));
        assert!(!y.in_open_arc(x, y));
        assert!(Rp1Point::new(0.6).in_open_arc(y, x));
        assert!(!Rp1Point::new(0.6).in_open_arc(y, y));
    }
}
