//! Reference implementations the integration suites check against.
//!
//! Everything here works on raw matrix entries through explicit spectral
//! decompositions, deliberately sharing no code path with the crate.

#![allow(dead_code)]

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rp_steer::bloch::BlochOp;

pub type Mat2 = [[f64; 2]; 2];
pub type Mat4 = [[f64; 4]; 4];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn mat2_of(op: BlochOp) -> Mat2 {
    op.entries()
}

pub fn op_of(m: Mat2) -> BlochOp {
    BlochOp::from_entries(m[0][0], 0.5 * (m[0][1] + m[1][0]), m[1][1])
}

pub fn mat2_mul(a: Mat2, b: Mat2) -> Mat2 {
    let mut c = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

pub fn mat2_add(a: Mat2, b: Mat2) -> Mat2 {
    [[a[0][0] + b[0][0], a[0][1] + b[0][1]], [a[1][0] + b[1][0], a[1][1] + b[1][1]]]
}

pub fn mat2_scale(a: Mat2, s: f64) -> Mat2 {
    [[a[0][0] * s, a[0][1] * s], [a[1][0] * s, a[1][1] * s]]
}

pub fn mat2_sub(a: Mat2, b: Mat2) -> Mat2 {
    mat2_add(a, mat2_scale(b, -1.0))
}

pub fn mat2_det(a: Mat2) -> f64 {
    a[0][0] * a[1][1] - a[0][1] * a[1][0]
}

pub fn mat2_inv(a: Mat2) -> Mat2 {
    let d = mat2_det(a);
    [[a[1][1] / d, -a[0][1] / d], [-a[1][0] / d, a[0][0] / d]]
}

pub fn mat2_max_abs_diff(a: Mat2, b: Mat2) -> f64 {
    let mut m: f64 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            m = m.max((a[i][j] - b[i][j]).abs());
        }
    }
    m
}

/// Eigenvalues of a symmetric 2x2 matrix, ascending.
pub fn sym_eigs(m: Mat2) -> (f64, f64) {
    let tr = m[0][0] + m[1][1];
    let disc = ((m[0][0] - m[1][1]).powi(2) + 4.0 * m[0][1] * m[1][0]).sqrt();
    ((tr - disc) / 2.0, (tr + disc) / 2.0)
}

/// Apply a scalar function to a symmetric matrix through its spectral
/// decomposition. Near-degenerate spectra collapse to f(lambda) I, which is
/// exact in the limit.
pub fn sym_apply(m: Mat2, f: impl Fn(f64) -> f64) -> Mat2 {
    let (lo, hi) = sym_eigs(m);
    if hi - lo < 1e-14 {
        let v = f(0.5 * (lo + hi));
        return [[v, 0.0], [0.0, v]];
    }
    // Eigenvector for hi: pick the better-conditioned column of (M - lo I).
    let c0 = [m[0][0] - lo, m[1][0]];
    let c1 = [m[0][1], m[1][1] - lo];
    let pick = if c0[0].hypot(c0[1]) >= c1[0].hypot(c1[1]) { c0 } else { c1 };
    let norm = pick[0].hypot(pick[1]);
    let v = [pick[0] / norm, pick[1] / norm];
    let w = [-v[1], v[0]]; // eigenvector for lo
    let (fh, fl) = (f(hi), f(lo));
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = fh * v[i] * v[j] + fl * w[i] * w[j];
        }
    }
    out
}

pub fn oracle_abs(m: Mat2) -> Mat2 {
    sym_apply(m, f64::abs)
}

pub fn oracle_trace_norm(m: Mat2) -> f64 {
    let (lo, hi) = sym_eigs(m);
    lo.abs() + hi.abs()
}

pub fn oracle_pos_part(m: Mat2) -> Mat2 {
    sym_apply(m, |l| l.max(0.0))
}

pub fn oracle_neg_part(m: Mat2) -> Mat2 {
    sym_apply(m, |l| (-l).max(0.0))
}

/// Random operator with entries of order one.
pub fn random_op(rng: &mut ChaCha8Rng) -> BlochOp {
    BlochOp::new(
        rng.gen_range(-2.0..2.0),
        rng.gen_range(-2.0..2.0),
        rng.gen_range(-2.0..2.0),
    )
}

/// Random well-conditioned positive definite operator.
pub fn random_pd(rng: &mut ChaCha8Rng) -> BlochOp {
    let n = rng.gen_range(1.5..2.5);
    let r = rng.gen_range(0.0..0.5) * n;
    let ang = rng.gen_range(0.0..std::f64::consts::TAU);
    BlochOp::new(n, r * ang.sin(), r * ang.cos())
}

// 4x4 density-matrix helpers; index (a, b) -> 2a + b with a Alice's bit.

pub fn mat4_zero() -> Mat4 {
    [[0.0; 4]; 4]
}

pub fn mat4_add_scaled(into: &mut Mat4, m: Mat4, s: f64) {
    for i in 0..4 {
        for j in 0..4 {
            into[i][j] += s * m[i][j];
        }
    }
}

/// |v><v| for a real 4-vector.
pub fn outer4(v: [f64; 4]) -> Mat4 {
    let mut m = mat4_zero();
    for i in 0..4 {
        for j in 0..4 {
            m[i][j] = v[i] * v[j];
        }
    }
    m
}

pub fn mat4_identity_scaled(s: f64) -> Mat4 {
    let mut m = mat4_zero();
    for i in 0..4 {
        m[i][i] = s;
    }
    m
}

/// Bob's subnormalized conditional state Tr_A[(P ⊗ I) rho].
pub fn oracle_conditional(rho: &Mat4, p: Mat2) -> Mat2 {
    let mut out = [[0.0; 2]; 2];
    for b in 0..2 {
        for bp in 0..2 {
            for a in 0..2 {
                for c in 0..2 {
                    // <a b| (P ⊗ I) rho |a b'> = P[a][c] rho[(c,b),(a,b')]
                    out[b][bp] += p[a][c] * rho[2 * c + b][2 * a + bp];
                }
            }
        }
    }
    out
}

pub fn oracle_rho_b(rho: &Mat4) -> Mat2 {
    oracle_conditional(rho, [[1.0, 0.0], [0.0, 1.0]])
}

pub fn projector_entries(theta: f64) -> Mat2 {
    let (s, c) = theta.sin_cos();
    [[(1.0 + c) / 2.0, s / 2.0], [s / 2.0, (1.0 - c) / 2.0]]
}

/// rho of the Werner-like mixture eta |phi_alpha><phi_alpha| + (1-eta) I/4.
pub fn oracle_pure_mixed(alpha: f64, eta: f64) -> Mat4 {
    let v = [alpha.cos(), 0.0, 0.0, alpha.sin()];
    let mut m = mat4_identity_scaled((1.0 - eta) / 4.0);
    mat4_add_scaled(&mut m, outer4(v), eta);
    m
}

pub fn oracle_werner(eta: f64) -> Mat4 {
    oracle_pure_mixed(std::f64::consts::FRAC_PI_4, eta)
}

/// Depolarizing channel with visibility eta on one side of a two-qubit
/// state: rho -> eta rho + (1 - eta) I/2 ⊗ Tr_side rho.
pub fn oracle_depolarize(rho: &Mat4, eta_a: f64, eta_b: f64) -> Mat4 {
    // Channel on Alice.
    let mut after_a = mat4_zero();
    mat4_add_scaled(&mut after_a, *rho, eta_a);
    // I/2 ⊗ rho_B: rho_B[b][b'] = sum_a rho[(a,b),(a,b')]
    for a in 0..2 {
        for b in 0..2 {
            for bp in 0..2 {
                let mut tr = 0.0;
                for ap in 0..2 {
                    tr += rho[2 * ap + b][2 * ap + bp];
                }
                after_a[2 * a + b][2 * a + bp] += (1.0 - eta_a) * 0.5 * tr;
            }
        }
    }
    // Channel on Bob.
    let mut out = mat4_zero();
    mat4_add_scaled(&mut out, after_a, eta_b);
    for b in 0..2 {
        for a in 0..2 {
            for ap in 0..2 {
                let mut tr = 0.0;
                for bp in 0..2 {
                    tr += after_a[2 * a + bp][2 * ap + bp];
                }
                out[2 * a + b][2 * ap + b] += (1.0 - eta_b) * 0.5 * tr;
            }
        }
    }
    out
}

pub fn oracle_depolarized_family(alpha: f64, eta_a: f64, eta_b: f64) -> Mat4 {
    let v = [alpha.cos(), 0.0, 0.0, alpha.sin()];
    oracle_depolarize(&outer4(v), eta_a, eta_b)
}

/// Plain composite Simpson over [a, b] on matrix entries.
pub fn simpson_mat2(f: impl Fn(f64) -> Mat2, a: f64, b: f64, panels: usize) -> Mat2 {
    let h = (b - a) / panels as f64;
    let mut acc = [[0.0; 2]; 2];
    for k in 0..panels {
        let x0 = a + k as f64 * h;
        let m0 = f(x0);
        let m1 = f(x0 + h / 2.0);
        let m2 = f(x0 + h);
        for i in 0..2 {
            for j in 0..2 {
                acc[i][j] += (m0[i][j] + 4.0 * m1[i][j] + m2[i][j]) * h / 6.0;
            }
        }
    }
    acc
}
