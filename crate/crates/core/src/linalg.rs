//! Small fixed-size complex matrix helpers, a general 4×4 eigenvalue solver
//! (Householder Hessenberg reduction + Wilkinson-shifted QR), and Jacobi
//! routines for Hermitian eigenproblems and singular values.

#![allow(clippy::needless_range_loop)]

use crate::error::{Error, Result};
use crate::qstate::C64;

pub type Mat4 = [[C64; 4]; 4];

pub const MAX_QR_ITERATIONS: usize = 1000;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

pub fn zeros() -> Mat4 {
    [[ZERO; 4]; 4]
}

pub fn identity() -> Mat4 {
    let mut m = zeros();
    (0..4).for_each(|i| m[i][i] = ONE);
    m
}

pub fn diag(d: [C64; 4]) -> Mat4 {
    let mut m = zeros();
    (0..4).for_each(|i| m[i][i] = d[i]);
    m
}

pub fn mul(a: &Mat4, b: &Mat4) -> Mat4 {
    let mut out = zeros();
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = (0..4).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

pub fn adjoint(a: &Mat4) -> Mat4 {
    let mut out = zeros();
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = a[j][i].conj();
        }
    }
    out
}

pub fn conj(a: &Mat4) -> Mat4 {
    a.map(|row| row.map(|x| x.conj()))
}

pub fn trace(a: &Mat4) -> C64 {
    (0..4).map(|i| a[i][i]).sum()
}

pub fn frobenius(a: &Mat4) -> f64 {
    a.iter().flatten().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Kronecker product of two 2×2 matrices; the first factor is the high bit.
pub fn kron2(a: &[[C64; 2]; 2], b: &[[C64; 2]; 2]) -> Mat4 {
    let mut out = zeros();
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = a[i >> 1][j >> 1] * b[i & 1][j & 1];
        }
    }
    out
}

/// |ψ⟩⟨ψ|
pub fn outer(psi: &[C64; 4]) -> Mat4 {
    let mut out = zeros();
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = psi[i] * psi[j].conj();
        }
    }
    out
}

fn hessenberg(m: &Mat4) -> Mat4 {
    let mut h = *m;
    let n = 4;
    for k in 0..n - 2 {
        let norm = (k + 1..n).map(|i| h[i][k].norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let x0 = h[k + 1][k];
        let phase = if x0.norm() == 0.0 {
            ONE
        } else {
            x0 / x0.norm()
        };
        let alpha = -phase * norm;
        let mut v = [ZERO; 4];
        for i in k + 1..n {
            v[i] = h[i][k];
        }
        v[k + 1] -= alpha;
        let vnorm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if vnorm == 0.0 {
            continue;
        }
        v.iter_mut().for_each(|x| *x /= vnorm);
        // H ← (I − 2vv†) H
        for j in 0..n {
            let s: C64 = (k + 1..n).map(|i| v[i].conj() * h[i][j]).sum();
            for i in k + 1..n {
                h[i][j] -= 2.0 * v[i] * s;
            }
        }
        // H ← H (I − 2vv†)
        for i in 0..n {
            let s: C64 = (k + 1..n).map(|j| h[i][j] * v[j]).sum();
            for j in k + 1..n {
                h[i][j] -= 2.0 * s * v[j].conj();
            }
        }
        for i in k + 2..n {
            h[i][k] = ZERO;
        }
    }
    h
}

/// Eigenvalue of the 2×2 block [[a, b], [c, d]] closest to `d`.
fn wilkinson_shift(a: C64, b: C64, c: C64, d: C64) -> C64 {
    let half_tr = (a + d) * 0.5;
    let disc = ((a - d) * 0.5).powu(2) + b * c;
    let root = disc.sqrt();
    let (l1, l2) = (half_tr + root, half_tr - root);
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

/// All four eigenvalues of a general complex 4×4 matrix, in deflation order.
pub fn eigenvalues_4x4(m: &Mat4) -> Result<[C64; 4]> {
    if m.iter()
        .flatten()
        .any(|x| !(x.re.is_finite() && x.im.is_finite()))
    {
        return Err(Error::NonFinite);
    }
    let scale = frobenius(m);
    if scale == 0.0 {
        return Ok([ZERO; 4]);
    }
    let mut h = hessenberg(m);
    let floor = f64::EPSILON * scale;
    let mut eig = [ZERO; 4];
    let mut hi = 3usize;
    let mut iterations = 0;
    let mut since_deflation = 0;

    loop {
        if hi == 0 {
            eig[0] = h[0][0];
            break;
        }
        // find the start of the unreduced block ending at `hi`
        let mut lo = hi;
        while lo > 0 {
            let sub = h[lo][lo - 1].norm();
            let local = h[lo][lo].norm() + h[lo - 1][lo - 1].norm();
            if sub <= f64::EPSILON * local || sub <= floor {
                h[lo][lo - 1] = ZERO;
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            eig[hi] = h[hi][hi];
            hi -= 1;
            since_deflation = 0;
            continue;
        }
        if iterations >= MAX_QR_ITERATIONS {
            return Err(Error::NumericalFailure(format!(
                "QR iteration did not converge within {MAX_QR_ITERATIONS} steps"
            )));
        }
        iterations += 1;
        since_deflation += 1;

        let mut mu = wilkinson_shift(h[hi - 1][hi - 1], h[hi - 1][hi], h[hi][hi - 1], h[hi][hi]);
        if since_deflation % 11 == 0 {
            // exceptional shift to break cycles
            mu = h[hi][hi] + C64::new(h[hi][hi - 1].norm(), 0.0) * 0.75;
        }

        for i in lo..=hi {
            h[i][i] -= mu;
        }
        let mut rotations = Vec::with_capacity(hi - lo);
        for k in lo..hi {
            let (a, b) = (h[k][k], h[k + 1][k]);
            let r = (a.norm_sqr() + b.norm_sqr()).sqrt();
            let (c, s) = if r == 0.0 {
                (ONE, ZERO)
            } else {
                (a / r, b / r)
            };
            for j in k..=hi {
                let (x, y) = (h[k][j], h[k + 1][j]);
                h[k][j] = c.conj() * x + s.conj() * y;
                h[k + 1][j] = -s * x + c * y;
            }
            rotations.push((k, c, s));
        }
        for (k, c, s) in rotations {
            for i in lo..=(k + 2).min(hi) {
                let (x, y) = (h[i][k], h[i][k + 1]);
                h[i][k] = x * c + y * s;
                h[i][k + 1] = -x * s.conj() + y * c.conj();
            }
        }
        for i in lo..=hi {
            h[i][i] += mu;
        }
    }
    Ok(eig)
}

/// Maximum number of Jacobi sweeps before giving up.
pub const MAX_JACOBI_SWEEPS: usize = 100;

/// Angle of the real Jacobi rotation that zeroes the coupling `g` between
/// diagonal entries `a` and `b`.
fn jacobi_cs(a: f64, b: f64, g: f64) -> (f64, f64) {
    let zeta = (b - a) / (2.0 * g);
    let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
    let c = 1.0 / (1.0 + t * t).sqrt();
    (c, t * c)
}

/// Eigen-decomposition of a Hermitian 4×4 matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in descending order and the matching eigenvectors as
/// the columns of the second matrix.
pub fn hermitian_eigen(m: &Mat4) -> Result<([f64; 4], Mat4)> {
    if m.iter()
        .flatten()
        .any(|x| !(x.re.is_finite() && x.im.is_finite()))
    {
        return Err(Error::NonFinite);
    }
    let mut a = *m;
    let mut v = identity();
    let scale = frobenius(m);
    let mut converged = scale == 0.0;
    for _ in 0..MAX_JACOBI_SWEEPS {
        if converged {
            break;
        }
        let off: f64 = (0..4)
            .flat_map(|i| (0..4).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= f64::EPSILON * f64::EPSILON * scale {
            converged = true;
            break;
        }
        for p in 0..3 {
            for q in p + 1..4 {
                let g = a[p][q].norm();
                if g == 0.0 {
                    continue;
                }
                let e = a[p][q] / g;
                let (c, s) = jacobi_cs(a[p][p].re, a[q][q].re, g);
                // J = diag(1, ē) · [[c, s], [−s, c]] on the (p, q) plane
                let (jpp, jpq, jqp, jqq) =
                    (C64::from(c), C64::from(s), e.conj() * -s, e.conj() * c);
                for k in 0..4 {
                    let (x, y) = (a[k][p], a[k][q]);
                    a[k][p] = x * jpp + y * jqp;
                    a[k][q] = x * jpq + y * jqq;
                    let (x, y) = (v[k][p], v[k][q]);
                    v[k][p] = x * jpp + y * jqp;
                    v[k][q] = x * jpq + y * jqq;
                }
                for k in 0..4 {
                    let (x, y) = (a[p][k], a[q][k]);
                    a[p][k] = jpp.conj() * x + jqp.conj() * y;
                    a[q][k] = jpq.conj() * x + jqq.conj() * y;
                }
                a[p][q] = ZERO;
                a[q][p] = ZERO;
            }
        }
    }
    if !converged {
        return Err(Error::NumericalFailure(format!(
            "Jacobi eigen-solver did not converge within {MAX_JACOBI_SWEEPS} sweeps"
        )));
    }
    let mut order = [0, 1, 2, 3];
    order.sort_by(|&i, &j| a[j][j].re.total_cmp(&a[i][i].re));
    let mut values = [0.0; 4];
    let mut vectors = zeros();
    for (col, &i) in order.iter().enumerate() {
        values[col] = a[i][i].re;
        for k in 0..4 {
            vectors[k][col] = v[k][i];
        }
    }
    Ok((values, vectors))
}

/// Singular values of a complex 4×4 matrix, descending, by one-sided Jacobi.
///
/// Small singular values come out with absolute accuracy near ε‖m‖, which
/// squaring into m†m would destroy.
pub fn singular_values(m: &Mat4) -> Result<[f64; 4]> {
    if m.iter()
        .flatten()
        .any(|x| !(x.re.is_finite() && x.im.is_finite()))
    {
        return Err(Error::NonFinite);
    }
    let mut a = *m;
    let mut converged = false;
    for _ in 0..MAX_JACOBI_SWEEPS {
        let mut rotated = false;
        for p in 0..3 {
            for q in p + 1..4 {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, ZERO);
                for k in 0..4 {
                    alpha += a[k][p].norm_sqr();
                    beta += a[k][q].norm_sqr();
                    gamma += a[k][p].conj() * a[k][q];
                }
                let g = gamma.norm();
                if g == 0.0 || g <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let e = gamma / g;
                let (c, s) = jacobi_cs(alpha, beta, g);
                for row in a.iter_mut() {
                    let (x, y) = (row[p], row[q] * e.conj());
                    row[p] = x * c - y * s;
                    row[q] = x * s + y * c;
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NumericalFailure(format!(
            "Jacobi SVD did not converge within {MAX_JACOBI_SWEEPS} sweeps"
        )));
    }
    let mut sv = [0.0; 4];
    for (j, s) in sv.iter_mut().enumerate() {
        *s = (0..4).map(|k| a[k][j].norm_sqr()).sum::<f64>().sqrt();
    }
    sv.sort_by(|x, y| y.total_cmp(x));
    Ok(sv)
}
