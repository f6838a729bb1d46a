//! Local hidden-state models built from keyring measures.
//!
//! A keyring model carries a positive operator density `sigma(lambda)` on
//! the circle together with a fixed response rule: for a measurement at
//! angle `theta` in `[0, pi)` the `+` outcome fires exactly on the open arc
//! `(theta + pi, theta + 2pi)` of increasing angle. Reproducing a family
//! means `int over that arc of sigma = X(theta)` for every `theta`.
//!
//! The second half of the module is the finite-support geometry: boxes
//! (zonotopes) spanned by weighted projector directions, membership tests,
//! and decompositions of box points into two-step response functions.

use serde::{Deserialize, Serialize};

use crate::bloch::{BlochOp, Rp1Point, TAU};
use crate::criterion::{adaptive_simpson_scalar, steering_operator, Quadrature, TOL_PSD};
use crate::states::EllipseFamily;
use crate::{Error, Result};
use std::f64::consts::PI;

/// Arc length of the steering curve, `int_0^2pi ||X'(theta)||_1 dtheta`.
pub fn circumference(fam: &EllipseFamily, tol: f64) -> Result<f64> {
    adaptive_simpson_scalar(&|t| fam.derivative(t).trace_norm(), 0.0, TAU, tol)
}

/// Circumference of the curve conjugated by `y` and renormalized to unit
/// reduced trace. Bounded by 2 whenever the criterion matrix at `y` is
/// positive semidefinite: trace the operator inequality.
pub fn conjugated_circumference(fam: &EllipseFamily, y: BlochOp, tol: f64) -> Result<f64> {
    let norm = y.sandwich(fam.rho_b()).trace();
    if norm <= 0.0 {
        return Err(Error::Domain("conjugated reduced state has no trace".into()));
    }
    let len = adaptive_simpson_scalar(
        &|t| y.sandwich(fam.derivative(t)).trace_norm(),
        0.0,
        TAU,
        tol * norm,
    )?;
    Ok(len / norm)
}

/// Probability of the `+` outcome at measurement angle `theta` for ring
/// position `lambda`: zero on the closed increasing arc
/// `[theta, theta + pi]`, one on the rest. Angles in `[pi, 2pi)` name the
/// same measurement with outcomes swapped.
pub fn keyring_response(theta: f64, lambda: f64) -> f64 {
    let theta = theta.rem_euclid(TAU);
    if theta >= PI {
        return 1.0 - keyring_response(theta - PI, lambda);
    }
    let d = (lambda - theta).rem_euclid(TAU);
    if d <= PI {
        0.0
    } else {
        1.0
    }
}

pub const DEFAULT_GRID_N: usize = 4096;

/// Format tag for serialized models; names the response rule above so a
/// model cannot be silently replayed under a different convention.
pub const THETA_SWITCH_CONVENTION: &str = "zero-on-increasing-arc-theta-to-theta-plus-pi";

#[derive(Debug, Clone)]
struct SigmaSpec {
    fam: EllipseFamily,
    noise: BlochOp,
    /// Conjugations applied after the base density, innermost first.
    chain: Vec<(BlochOp, f64)>,
}

impl SigmaSpec {
    fn sigma(&self, lambda: f64) -> BlochOp {
        let mut s = self.fam.derivative(lambda).pos_part() + self.noise;
        for &(y_inv, scale) in &self.chain {
            s = y_inv.sandwich(s) * scale;
        }
        s
    }
}

/// A hidden-state density sampled on an angular grid, with the closed form
/// kept alongside when the model was built in process.
///
/// Everything observable (verification, totals, transforms) works off the
/// grid, so a model loaded from disk behaves identically to a freshly
/// constructed one.
#[derive(Debug, Clone)]
pub struct KeyringModel {
    lambdas: Vec<f64>,
    sigmas: Vec<BlochOp>,
    spec: Option<SigmaSpec>,
}

impl KeyringModel {
    pub fn grid_n(&self) -> usize {
        self.lambdas.len()
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn sigmas(&self) -> &[BlochOp] {
        &self.sigmas
    }

    /// Closed-form density, available when the model was built in process.
    pub fn sigma_exact(&self, lambda: f64) -> Option<BlochOp> {
        self.spec.as_ref().map(|s| s.sigma(lambda))
    }

    /// `int_0^2pi sigma(lambda) dlambda` of the grid interpolant; equals
    /// the modeled reduced state.
    pub fn total(&self) -> BlochOp {
        GridInterp::new(&self.lambdas, &self.sigmas).total
    }

    pub fn to_json(&self) -> String {
        let file = ModelFile {
            grid_n: self.grid_n(),
            theta_switch_convention: THETA_SWITCH_CONVENTION.to_string(),
            lambda: self.lambdas.clone(),
            sigma_bloch: self.sigmas.iter().map(|s| [s.n, s.r1, s.r3]).collect(),
        };
        let mut out = serde_json::to_string_pretty(&file).expect("plain data serializes");
        out.push('\n');
        out
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile =
            serde_json::from_str(text).map_err(|e| Error::ModelFormat(e.to_string()))?;
        if file.theta_switch_convention != THETA_SWITCH_CONVENTION {
            return Err(Error::ModelFormat(format!(
                "unknown response convention {:?}",
                file.theta_switch_convention
            )));
        }
        if file.lambda.len() != file.grid_n || file.sigma_bloch.len() != file.grid_n {
            return Err(Error::ModelFormat(format!(
                "grid_n = {} but {} angles and {} densities",
                file.grid_n,
                file.lambda.len(),
                file.sigma_bloch.len()
            )));
        }
        if file.grid_n < 4 {
            return Err(Error::ModelFormat("grid too small".into()));
        }
        for w in file.lambda.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::ModelFormat("angles must be strictly increasing".into()));
            }
        }
        if file.lambda[0] < 0.0 || *file.lambda.last().unwrap() >= TAU {
            return Err(Error::ModelFormat("angles must lie in [0, 2pi)".into()));
        }
        let sigmas: Vec<BlochOp> = file
            .sigma_bloch
            .iter()
            .map(|&[n, r1, r3]| BlochOp::new(n, r1, r3))
            .collect();
        for (i, s) in sigmas.iter().enumerate() {
            if s.min_eig() < -TOL_PSD {
                return Err(Error::ModelFormat(format!(
                    "density at index {i} has negative eigenvalue {:.3e}",
                    s.min_eig()
                )));
            }
        }
        Ok(KeyringModel { lambdas: file.lambda, sigmas, spec: None })
    }
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    grid_n: usize,
    theta_switch_convention: String,
    lambda: Vec<f64>,
    sigma_bloch: Vec<[f64; 3]>,
}

/// Build the direct keyring model
/// `sigma(lambda) = pos_part(X'(lambda)) + (rho_B - rho') / 2pi`
/// with `rho' = int_0^pi |X'|`. Requires the criterion matrix at the
/// identity to be positive semidefinite, which is exactly what makes the
/// flat noise term a state.
pub fn construct_case1(
    fam: &EllipseFamily,
    quad: Quadrature,
    grid_n: usize,
) -> Result<KeyringModel> {
    let rho_prime = steering_operator(fam, BlochOp::IDENTITY, quad)?;
    let slack = fam.rho_b() - rho_prime;
    if slack.min_eig() < -TOL_PSD {
        return Err(Error::PreconditionFailed(format!(
            "criterion matrix at the identity has eigenvalue {:.6e}; \
             conjugate the family by a certifying operator first",
            slack.min_eig()
        )));
    }
    let noise = slack * (1.0 / TAU);
    let spec = SigmaSpec { fam: fam.clone(), noise, chain: Vec::new() };
    let n = grid_n.max(4);
    let lambdas: Vec<f64> = (0..n).map(|j| TAU * j as f64 / n as f64).collect();
    let sigmas: Vec<BlochOp> = lambdas.iter().map(|&l| spec.sigma(l)).collect();
    Ok(KeyringModel { lambdas, sigmas, spec: Some(spec) })
}

/// Rewrite a model of the conjugated family as a model of the original:
/// `sigma -> Y^-1 sigma Y^-1 / Tr(Y^-2 rho_bar)` where `rho_bar` is the
/// model's own total. The scale is read off the model so no reference to
/// the pre-conjugation family is needed.
pub fn transform_model(model: &KeyringModel, y: BlochOp) -> Result<KeyringModel> {
    let y_inv = y.inverse()?;
    let denom = y_inv.square().inner(model.total());
    if denom <= 0.0 {
        return Err(Error::Domain("model total is degenerate".into()));
    }
    let scale = 1.0 / denom;
    let sigmas = model.sigmas.iter().map(|&s| y_inv.sandwich(s) * scale).collect();
    let spec = model.spec.clone().map(|mut sp| {
        sp.chain.push((y_inv, scale));
        sp
    });
    Ok(KeyringModel { lambdas: model.lambdas.clone(), sigmas, spec })
}

/// Piecewise-linear periodic interpolant with exact arc integrals.
struct GridInterp<'a> {
    lam: &'a [f64],
    sig: &'a [BlochOp],
    /// prefix[j] integrates from lam[0] to lam[j]; the last entry closes
    /// the wrap segment back to lam[0] + 2pi.
    prefix: Vec<BlochOp>,
    total: BlochOp,
}

impl<'a> GridInterp<'a> {
    fn new(lam: &'a [f64], sig: &'a [BlochOp]) -> Self {
        let n = lam.len();
        let mut prefix = Vec::with_capacity(n + 1);
        let mut acc = BlochOp::ZERO;
        prefix.push(acc);
        for j in 0..n {
            let (l0, s0) = (lam[j], sig[j]);
            let (l1, s1) = if j + 1 < n { (lam[j + 1], sig[j + 1]) } else { (lam[0] + TAU, sig[0]) };
            acc = acc + (s0 + s1) * (0.5 * (l1 - l0));
            prefix.push(acc);
        }
        GridInterp { lam, sig, prefix, total: acc }
    }

    fn node(&self, j: usize) -> (f64, BlochOp) {
        let n = self.lam.len();
        if j < n {
            (self.lam[j], self.sig[j])
        } else {
            (self.lam[0] + TAU, self.sig[0])
        }
    }

    /// Integral from lam[0] to x, for x in [lam[0], lam[0] + 2pi].
    fn from_start(&self, x: f64) -> BlochOp {
        let n = self.lam.len();
        // Last segment index with lam[j] <= x.
        let j = self.lam.partition_point(|&l| l <= x).saturating_sub(1).min(n - 1);
        let (l0, s0) = self.node(j);
        let (l1, s1) = self.node(j + 1);
        let h = l1 - l0;
        let d = (x - l0).clamp(0.0, h);
        let partial = s0 * d + (s1 - s0) * (d * d / (2.0 * h));
        self.prefix[j] + partial
    }

    /// Integral over the increasing arc of length `len` starting at `a`.
    fn arc(&self, a: f64, len: f64) -> BlochOp {
        let base = self.lam[0];
        let a = base + (a - base).rem_euclid(TAU);
        let end = a + len;
        if end <= base + TAU {
            self.from_start(end) - self.from_start(a)
        } else {
            self.total - self.from_start(a) + self.from_start(end - TAU)
        }
    }
}

/// Worst reconstruction error of the model against the family over the
/// given measurement angles: the trace-norm gap between the arc integral
/// of the grid interpolant and the family's conditional operator, plus the
/// gap between the model total and the reduced state.
///
/// Always evaluated from the grid, never from the closed form, so imported
/// and constructed models are held to the same standard.
pub fn verify_model(model: &KeyringModel, fam: &EllipseFamily, thetas: &[f64]) -> f64 {
    let interp = GridInterp::new(&model.lambdas, &model.sigmas);
    let mut worst = (interp.total - fam.rho_b()).trace_norm();
    for &theta in thetas {
        let t = theta.rem_euclid(TAU);
        let rec = if t < PI {
            interp.arc(t + PI, PI)
        } else {
            interp.total - interp.arc(t, PI)
        };
        worst = worst.max((rec - fam.point(t)).trace_norm());
    }
    worst
}

fn edot(a: BlochOp, b: BlochOp) -> f64 {
    a.n * b.n + a.r1 * b.r1 + a.r3 * b.r3
}

fn enorm(a: BlochOp) -> f64 {
    edot(a, a).sqrt()
}

fn ecross(a: BlochOp, b: BlochOp) -> BlochOp {
    BlochOp {
        n: a.r1 * b.r3 - a.r3 * b.r1,
        r1: a.r3 * b.n - a.n * b.r3,
        r3: a.n * b.r1 - a.r1 * b.n,
    }
}

const BOX_TOL: f64 = 1e-9;

/// A finitely supported probability measure on the circle of projector
/// angles, atoms kept in clockwise order starting from `phi = 0`.
#[derive(Debug, Clone)]
pub struct DiscreteMeasure {
    atoms: Vec<(Rp1Point, f64)>,
}

impl DiscreteMeasure {
    /// Sorts clockwise from `phi = 0`, merges duplicate angles, drops zero
    /// weights, and normalizes the total weight to one.
    pub fn new(atoms: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        let mut keyed: Vec<(f64, f64, f64)> = atoms
            .into_iter()
            .map(|(phi, w)| {
                let phi = phi.rem_euclid(TAU);
                ((-phi).rem_euclid(TAU), phi, w)
            })
            .collect();
        for &(_, phi, w) in &keyed {
            if !(w >= 0.0) {
                return Err(Error::Domain(format!("weight {w} at angle {phi} is negative")));
            }
        }
        keyed.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64, f64)> = Vec::with_capacity(keyed.len());
        for (key, phi, w) in keyed {
            match merged.last_mut() {
                Some(last) if (key - last.0).abs() < 1e-12 => last.2 += w,
                _ => merged.push((key, phi, w)),
            }
        }
        // A first atom at phi = 0 and a last one just below 2pi are the
        // same direction.
        if merged.len() > 1 {
            let last_key = merged.last().unwrap().0;
            if (TAU - last_key).abs() < 1e-12 && merged[0].0 < 1e-12 {
                let (_, _, w) = merged.pop().unwrap();
                merged[0].2 += w;
            }
        }
        let total: f64 = merged.iter().map(|m| m.2).sum();
        if total <= 0.0 {
            return Err(Error::Domain("measure has no weight".into()));
        }
        let atoms: Vec<(Rp1Point, f64)> = merged
            .into_iter()
            .filter(|m| m.2 / total > 1e-15)
            .map(|(_, phi, w)| (Rp1Point::new(phi), w / total))
            .collect();
        if atoms.is_empty() {
            return Err(Error::Domain("measure has no weight".into()));
        }
        Ok(DiscreteMeasure { atoms })
    }

    pub fn atoms(&self) -> &[(Rp1Point, f64)] {
        &self.atoms
    }

    fn direction(&self, i: usize) -> BlochOp {
        self.atoms[i].0.projector()
    }

    fn generator(&self, i: usize) -> BlochOp {
        self.direction(i) * self.atoms[i].1
    }

    /// Sum of all generators; the reachable operator with every response
    /// equal to one.
    pub fn total(&self) -> BlochOp {
        let mut t = BlochOp::ZERO;
        for i in 0..self.atoms.len() {
            t = t + self.generator(i);
        }
        t
    }

    /// Parse `phi,weight` CSV.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        match lines.next() {
            Some(h) if h.trim() == "phi,weight" => {}
            other => {
                return Err(Error::ModelFormat(format!(
                    "expected header \"phi,weight\", got {:?}",
                    other.unwrap_or_default()
                )))
            }
        }
        let mut atoms = Vec::new();
        for line in lines {
            let mut cells = line.trim().split(',');
            let phi = cells.next().and_then(|c| c.trim().parse::<f64>().ok());
            let w = cells.next().and_then(|c| c.trim().parse::<f64>().ok());
            match (phi, w, cells.next()) {
                (Some(phi), Some(w), None) => atoms.push((phi, w)),
                _ => return Err(Error::ModelFormat(format!("bad measure row {line:?}"))),
            }
        }
        DiscreteMeasure::new(atoms)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("phi,weight\n");
        for &(p, w) in &self.atoms {
            out.push_str(&format!("{:.17e},{:.17e}\n", p.phi(), w));
        }
        out
    }

    /// All outward facet-normal candidates of the box with their support
    /// margins against `z`; rank-3 boxes only (three or more atoms).
    fn facet_margins(&self, z: BlochOp) -> Vec<(BlochOp, f64)> {
        let n = self.atoms.len();
        let mut out = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                let raw = ecross(self.direction(i), self.direction(j));
                let len = enorm(raw);
                if len < 1e-12 {
                    continue;
                }
                let unit = raw * (1.0 / len);
                for u in [unit, -unit] {
                    let support: f64 =
                        (0..n).map(|k| edot(u, self.generator(k)).max(0.0)).sum();
                    out.push((u, support - edot(u, z)));
                }
            }
        }
        out
    }

    /// Whether `z` lies in the box `{sum_k t_k w_k P_k : t_k in [0, 1]}`.
    pub fn box_contains(&self, z: BlochOp) -> bool {
        match self.atoms.len() {
            1 => {
                let g = self.generator(0);
                let t = (edot(z, g) / edot(g, g)).clamp(0.0, 1.0);
                enorm(z - g * t) <= BOX_TOL
            }
            2 => match self.solve_two(z) {
                Some((t0, t1)) => {
                    (-BOX_TOL..=1.0 + BOX_TOL).contains(&t0)
                        && (-BOX_TOL..=1.0 + BOX_TOL).contains(&t1)
                }
                None => false,
            },
            _ => self.facet_margins(z).iter().all(|&(_, m)| m >= -BOX_TOL),
        }
    }

    /// Exact coefficients for a two-atom box, `None` off the spanned plane.
    fn solve_two(&self, z: BlochOp) -> Option<(f64, f64)> {
        let (g0, g1) = (self.generator(0), self.generator(1));
        let (a, b, c) = (edot(g0, g0), edot(g0, g1), edot(g1, g1));
        let det = a * c - b * b;
        let (r0, r1) = (edot(z, g0), edot(z, g1));
        let t0 = (c * r0 - b * r1) / det;
        let t1 = (a * r1 - b * r0) / det;
        (enorm(z - g0 * t0 - g1 * t1) <= BOX_TOL).then_some((t0, t1))
    }
}

/// A response function with at most two plateau values: `1 - q` on the
/// open increasing arc `(x, y)`, `q` on `(y, x)`, and free values at the
/// two endpoints. `x == y` encodes the everywhere-`q` function with one
/// exceptional point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoStepFunction {
    pub x: Rp1Point,
    pub y: Rp1Point,
    pub q: f64,
    pub fx: f64,
    pub fy: f64,
}

impl TwoStepFunction {
    pub fn evaluate(&self, p: Rp1Point) -> f64 {
        if p.phi() == self.x.phi() {
            return self.fx;
        }
        if p.phi() == self.y.phi() {
            return self.fy;
        }
        if p.in_open_arc(self.x, self.y) {
            1.0 - self.q
        } else {
            self.q
        }
    }

    /// `sum_k g(phi_k) w_k P_k` over the atoms of `mu`.
    pub fn reconstruct(&self, mu: &DiscreteMeasure) -> BlochOp {
        let mut acc = BlochOp::ZERO;
        for i in 0..mu.atoms().len() {
            acc = acc + mu.generator(i) * self.evaluate(mu.atoms()[i].0);
        }
        acc
    }
}

fn constant_two_step(anchor: Rp1Point, q: f64) -> TwoStepFunction {
    TwoStepFunction { x: anchor, y: anchor, q, fx: q, fy: q }
}

/// Largest atom-free clockwise gap: returns `(i, j)` where the gap runs
/// clockwise from atom `i` to the next atom `j`.
fn largest_gap(atoms: &[(Rp1Point, f64)]) -> (usize, usize) {
    let n = atoms.len();
    let mut best = (0usize, 0.0f64);
    for i in 0..n {
        let j = (i + 1) % n;
        let gap = if n == 1 { TAU } else { atoms[i].0.cw_arc_to(atoms[j].0) };
        if gap > best.1 {
            best = (i, gap);
        }
    }
    (best.0, (best.0 + 1) % atoms.len())
}

/// Solve `sum A_k t_k = r` for a handful of generators in the least-squares
/// sense via normal equations, Gaussian elimination with partial pivoting.
fn solve_small(cols: &[BlochOp], r: BlochOp) -> Vec<f64> {
    let m = cols.len();
    let mut mat = vec![vec![0.0f64; m + 1]; m];
    for i in 0..m {
        for j in 0..m {
            mat[i][j] = edot(cols[i], cols[j]);
        }
        mat[i][m] = edot(cols[i], r);
    }
    for p in 0..m {
        let piv = (p..m).max_by(|&a, &b| mat[a][p].abs().total_cmp(&mat[b][p].abs())).unwrap();
        mat.swap(p, piv);
        if mat[p][p].abs() < 1e-300 {
            continue;
        }
        for i in 0..m {
            if i != p {
                let f = mat[i][p] / mat[p][p];
                for j in p..=m {
                    mat[i][j] -= f * mat[p][j];
                }
            }
        }
    }
    (0..m)
        .map(|i| if mat[i][i].abs() < 1e-300 { 0.0 } else { mat[i][m] / mat[i][i] })
        .collect()
}

const FREE_TOL: f64 = 1e-9;

/// Decomposition of a boundary point supported by the facet normal `u`:
/// responses follow the sign of the atom direction against `u`, the at
/// most two atoms on the supporting plane keep fractional values.
fn boundary_two_step(mu: &DiscreteMeasure, z: BlochOp, u: BlochOp) -> TwoStepFunction {
    let atoms = mu.atoms();
    let n = atoms.len();
    let ells: Vec<f64> = (0..n).map(|k| edot(u, mu.direction(k))).collect();
    let radius = u.r1.hypot(u.r3);

    // Signature of phi -> u . P(phi) = u.n + radius * cos(phi - psi).
    enum Shape {
        Constant,
        SingleZero(Rp1Point),
        TwoZeros([Rp1Point; 2]),
    }
    let mut shape = if radius < 1e-12 {
        Shape::Constant
    } else {
        let ratio = -u.n / radius;
        let psi = f64::atan2(u.r1, u.r3);
        if ratio > -1.0 + 1e-12 && ratio < 1.0 - 1e-12 {
            let a = ratio.acos();
            Shape::TwoZeros([Rp1Point::new(psi - a), Rp1Point::new(psi + a)])
        } else if (ratio.abs() - 1.0).abs() <= 1e-12 {
            Shape::SingleZero(if ratio > 0.0 {
                Rp1Point::new(psi)
            } else {
                Rp1Point::new(psi + PI)
            })
        } else {
            Shape::Constant
        }
    };

    // Snap zeros to the free atoms sitting on them.
    let free: Vec<usize> = (0..n).filter(|&k| ells[k].abs() <= FREE_TOL).collect();
    let mut endpoint_atoms: [Option<usize>; 2] = [None, None];
    match &mut shape {
        Shape::TwoZeros(zeros) => {
            for &k in &free {
                let p = atoms[k].0;
                let dists = zeros.map(|zp| {
                    let d = (p.phi() - zp.phi()).rem_euclid(TAU);
                    d.min(TAU - d)
                });
                let side = if dists[0] <= dists[1] { 0 } else { 1 };
                let side = if endpoint_atoms[side].is_none() { side } else { 1 - side };
                if endpoint_atoms[side].is_none() {
                    endpoint_atoms[side] = Some(k);
                    zeros[side] = p;
                }
            }
        }
        Shape::SingleZero(zero) => {
            if let Some(&k) = free.first() {
                *zero = atoms[k].0;
                endpoint_atoms = [Some(k), Some(k)];
            }
        }
        Shape::Constant => {}
    }

    let base = match shape {
        Shape::TwoZeros([x, y]) => {
            // Positive strictly inside the increasing arc (x, y).
            TwoStepFunction { x, y, q: 0.0, fx: 0.5, fy: 0.5 }
        }
        Shape::SingleZero(x) => {
            // Rank-one support: one zero, constant sign elsewhere.
            let q = if u.n > 0.0 { 1.0 } else { 0.0 };
            TwoStepFunction { x, y: x, q, fx: 0.5, fy: 0.5 }
        }
        Shape::Constant => {
            // No zeros: everything 1 (or 0), encoded around the largest
            // atom-free gap so the arcs have somewhere to live.
            let (i, j) = largest_gap(atoms);
            if ells[0] > 0.0 {
                TwoStepFunction { x: atoms[i].0, y: atoms[j].0, q: 0.0, fx: 1.0, fy: 1.0 }
            } else {
                TwoStepFunction { x: atoms[j].0, y: atoms[i].0, q: 0.0, fx: 0.0, fy: 0.0 }
            }
        }
    };

    // Values of every non-endpoint atom are now fixed; solve the endpoint
    // coefficients from what is left of z.
    let mut g = base;
    let solve_idx: Vec<usize> = {
        let mut v: Vec<usize> = endpoint_atoms.iter().flatten().copied().collect();
        v.dedup();
        v
    };
    let mut rest = z;
    for k in 0..n {
        if solve_idx.contains(&k) {
            continue;
        }
        rest = rest - mu.generator(k) * base.evaluate(atoms[k].0);
    }
    if !solve_idx.is_empty() {
        let cols: Vec<BlochOp> = solve_idx.iter().map(|&k| mu.generator(k)).collect();
        let ts = solve_small(&cols, rest);
        for (pos, &k) in solve_idx.iter().enumerate() {
            let t = ts[pos].clamp(0.0, 1.0);
            if Some(k) == endpoint_atoms[0] {
                g.fx = t;
            }
            if Some(k) == endpoint_atoms[1] {
                g.fy = t;
            }
        }
        if g.x.phi() == g.y.phi() {
            g.fy = g.fx;
        }
    }
    g
}

/// Decompose a box point into a two-step response function `g` with
/// `sum_k g(phi_k) w_k P_k = z`.
///
/// Boundary points read their structure off the supporting facet; interior
/// points shoot a ray from the box center through `z` to the boundary and
/// mix that decomposition with the constant half.
pub fn two_step_decompose(mu: &DiscreteMeasure, z: BlochOp) -> Result<TwoStepFunction> {
    let atoms = mu.atoms();
    let anchor = atoms[0].0;
    match atoms.len() {
        1 => {
            let g0 = mu.generator(0);
            let t = (edot(z, g0) / edot(g0, g0)).clamp(0.0, 1.0);
            if enorm(z - g0 * t) > BOX_TOL {
                return Err(Error::NotInBox);
            }
            return Ok(TwoStepFunction { x: anchor, y: anchor, q: 0.5, fx: t, fy: t });
        }
        2 => {
            let (t0, t1) = mu.solve_two(z).ok_or(Error::NotInBox)?;
            if !(-BOX_TOL..=1.0 + BOX_TOL).contains(&t0)
                || !(-BOX_TOL..=1.0 + BOX_TOL).contains(&t1)
            {
                return Err(Error::NotInBox);
            }
            return Ok(TwoStepFunction {
                x: atoms[0].0,
                y: atoms[1].0,
                q: 0.5,
                fx: t0.clamp(0.0, 1.0),
                fy: t1.clamp(0.0, 1.0),
            });
        }
        _ => {}
    }

    let margins = mu.facet_margins(z);
    let mut min_margin = f64::INFINITY;
    let mut support = BlochOp::ZERO;
    for &(u, m) in &margins {
        if m < min_margin {
            min_margin = m;
            support = u;
        }
    }
    if min_margin < -BOX_TOL {
        return Err(Error::NotInBox);
    }
    if min_margin <= BOX_TOL {
        return Ok(boundary_two_step(mu, z, support));
    }

    // Interior: mix the center with a boundary point on the ray through z.
    let center = mu.total() * 0.5;
    let dir = z - center;
    if enorm(dir) < 1e-12 {
        return Ok(constant_two_step(anchor, 0.5));
    }
    // The ray bisects on the exact margin sign, not the slackened
    // membership test, so the boundary point lands at machine precision
    // and the final reconstruction inherits none of the slack.
    let inside = |s: f64| {
        mu.facet_margins(center + dir * s).iter().all(|&(_, m)| m >= 0.0)
    };
    let mut s_lo = 1.0f64;
    let mut s_hi = 2.0f64;
    let mut doublings = 0;
    while inside(s_hi) {
        s_lo = s_hi;
        s_hi *= 2.0;
        doublings += 1;
        if doublings > 60 {
            return Err(Error::Domain("ray escape not found".into()));
        }
    }
    for _ in 0..60 {
        let mid = 0.5 * (s_lo + s_hi);
        if inside(mid) {
            s_lo = mid;
        } else {
            s_hi = mid;
        }
    }
    let s_star = s_lo;
    let b = center + dir * s_star;
    let t = 1.0 - 1.0 / s_star;

    let b_margins = mu.facet_margins(b);
    let (mut bm, mut bu) = (f64::INFINITY, BlochOp::ZERO);
    for &(u, m) in &b_margins {
        if m < bm {
            bm = m;
            bu = u;
        }
    }
    let gb = boundary_two_step(mu, b, bu);
    Ok(TwoStepFunction {
        x: gb.x,
        y: gb.y,
        q: t / 2.0 + (1.0 - t) * gb.q,
        fx: t / 2.0 + (1.0 - t) * gb.fx,
        fy: t / 2.0 + (1.0 - t) * gb.fy,
    })
}

/// Extreme points of the half-level slice of the box in the direction of a
/// positive definite `h`.
///
/// Atoms are filled clockwise; `G(t)` applies a sliding window holding
/// exactly half the total `h`-mass, starting at fill level `t`. Returns
/// `n` samples at evenly spaced levels and the trace-norm length of the
/// closed polyline through them, which stays below 2.
pub fn boundary_slice_curve(
    mu: &DiscreteMeasure,
    h: BlochOp,
    n: usize,
) -> Result<(Vec<BlochOp>, f64)> {
    if h.min_eig() <= 0.0 {
        return Err(Error::Domain("slice direction must be positive definite".into()));
    }
    if n < 3 {
        return Err(Error::Domain("need at least three samples".into()));
    }
    let atoms = mu.atoms();
    let masses: Vec<f64> = (0..atoms.len()).map(|k| mu.generator(k).inner(h)).collect();
    let u: f64 = masses.iter().sum();
    let mut cum = Vec::with_capacity(atoms.len());
    let mut acc = 0.0;
    for &m in &masses {
        cum.push(acc);
        acc += m;
    }
    let fill = |s: f64, k: usize| ((s - cum[k]) / masses[k]).clamp(0.0, 1.0);
    let sample = |t: f64| {
        let mut g = BlochOp::ZERO;
        for k in 0..atoms.len() {
            let frac = if t < u / 2.0 {
                fill(t + u / 2.0, k) - fill(t, k)
            } else {
                1.0 - fill(t, k) + fill(t - u / 2.0, k)
            };
            g = g + mu.generator(k) * frac;
        }
        g
    };
    let points: Vec<BlochOp> = (0..n).map(|j| sample(u * j as f64 / n as f64)).collect();
    let mut len = 0.0;
    for j in 0..n {
        len += (points[(j + 1) % n] - points[j]).trace_norm();
    }
    Ok((points, len))
}
