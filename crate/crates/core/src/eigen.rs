//! Dense Hermitian eigensolver.
//!
//! Householder reduction to a Hermitian tridiagonal matrix, a diagonal phase
//! similarity that makes the off-diagonal real and non-negative, then the
//! implicit QL iteration with Wilkinson shifts on the resulting real
//! symmetric tridiagonal matrix.

use num_complex::Complex64;

use crate::error::{GramError, Result};

const MAX_SWEEPS: usize = 60;

/// Eigenvalues (ascending) and optionally the column-major unitary of
/// eigenvectors of the `n x n` row-major Hermitian matrix `a`.
///
/// Only the lower triangle of `a` is read.
pub(crate) fn eigh(
    a: &[Complex64],
    n: usize,
    want_vectors: bool,
) -> Result<(Vec<f64>, Option<Vec<Complex64>>)> {
    debug_assert_eq!(a.len(), n * n);
    if n == 0 {
        return Ok((Vec::new(), want_vectors.then(Vec::new)));
    }
    let mut work = a.to_vec();
    // Mirror the lower triangle so the trailing updates can read full rows.
    for i in 0..n {
        work[i * n + i] = Complex64::new(work[i * n + i].re, 0.0);
        for j in 0..i {
            work[j * n + i] = work[i * n + j].conj();
        }
    }
    let mut q = want_vectors.then(|| identity(n));
    tridiagonalize(&mut work, n, q.as_deref_mut());

    let diag: Vec<f64> = (0..n).map(|i| work[i * n + i].re).collect();
    let mut off = vec![0.0; n];
    let mut phases = vec![Complex64::new(1.0, 0.0); n];
    for i in 0..n.saturating_sub(1) {
        let e = work[(i + 1) * n + i];
        let r = e.norm();
        off[i] = r;
        phases[i + 1] = if r > 0.0 {
            phases[i] * (e / r)
        } else {
            phases[i]
        };
    }

    let mut values = diag;
    let mut z = want_vectors.then(|| {
        let mut z = vec![0.0; n * n];
        for i in 0..n {
            z[i * n + i] = 1.0;
        }
        z
    });
    tql_implicit(&mut values, &mut off, z.as_deref_mut(), n)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let sorted: Vec<f64> = order.iter().map(|&i| values[i]).collect();

    let vectors = match (q, z) {
        (Some(q), Some(z)) => {
            // V = Q * diag(phases) * Z, stored column-major in sorted order.
            let mut v = vec![Complex64::new(0.0, 0.0); n * n];
            for (col, &src) in order.iter().enumerate() {
                for r in 0..n {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for c in 0..n {
                        acc += q[r * n + c] * phases[c] * z[c * n + src];
                    }
                    v[col * n + r] = acc;
                }
            }
            Some(v)
        }
        _ => None,
    };
    Ok((sorted, vectors))
}

fn identity(n: usize) -> Vec<Complex64> {
    let mut m = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        m[i * n + i] = Complex64::new(1.0, 0.0);
    }
    m
}

/// In-place reduction `A <- H A H` column by column. On return the
/// tridiagonal part of `a` holds the reduced matrix and `q` (if given) the
/// accumulated product of reflectors, so that `A = Q T Q^H`.
fn tridiagonalize(a: &mut [Complex64], n: usize, mut q: Option<&mut [Complex64]>) {
    let zero = Complex64::new(0.0, 0.0);
    let mut v = vec![zero; n];
    let mut p = vec![zero; n];
    for k in 0..n.saturating_sub(2) {
        let m = n - k - 1;
        // Work with the column scaled by its largest entry so the reflector
        // stays finite when the trailing block is pure roundoff.
        let scale = (k + 1..n).map(|i| a[i * n + k].norm()).fold(0.0, f64::max);
        if scale == 0.0 {
            continue;
        }
        for (j, i) in (k + 1..n).enumerate() {
            v[j] = a[i * n + k] / scale;
        }
        let norm = v[..m].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let x0_abs = v[0].norm();
        let phase = if x0_abs > 0.0 {
            v[0] / x0_abs
        } else {
            Complex64::new(1.0, 0.0)
        };
        v[0] += phase * norm;
        let alpha = -phase * norm * scale;
        let tau = 1.0 / (norm * (norm + x0_abs));

        a[(k + 1) * n + k] = alpha;
        a[k * n + k + 1] = alpha.conj();
        for i in k + 2..n {
            a[i * n + k] = zero;
            a[k * n + i] = zero;
        }

        // p = tau * B v on the trailing block B = a[k+1.., k+1..].
        for r in 0..m {
            let row = &a[(k + 1 + r) * n + k + 1..(k + 1 + r) * n + n];
            let mut acc = zero;
            for (b, vc) in row.iter().zip(&v[..m]) {
                acc += b * vc;
            }
            p[r] = acc * tau;
        }
        let vp: f64 = v[..m]
            .iter()
            .zip(&p[..m])
            .map(|(vi, pi)| (vi.conj() * pi).re)
            .sum();
        let shift = 0.5 * tau * vp;
        for r in 0..m {
            p[r] -= v[r] * shift;
        }
        for r in 0..m {
            let (vr, wr) = (v[r], p[r]);
            let row = &mut a[(k + 1 + r) * n + k + 1..(k + 1 + r) * n + n];
            for (c, b) in row.iter_mut().enumerate() {
                *b -= vr * p[c].conj() + wr * v[c].conj();
            }
        }

        if let Some(q) = q.as_deref_mut() {
            for r in 0..n {
                let row = &mut q[r * n + k + 1..r * n + n];
                let s: Complex64 = row.iter().zip(&v[..m]).map(|(qv, vc)| qv * vc).sum();
                let s = s * tau;
                for (qv, vc) in row.iter_mut().zip(&v[..m]) {
                    *qv -= s * vc.conj();
                }
            }
        }
    }
}

/// Implicit QL on the symmetric tridiagonal matrix with diagonal `d` and
/// sub-diagonal `e` (`e[i]` couples rows `i` and `i + 1`, `e[n-1]` unused).
/// Rotations are accumulated into the row-major `z` when given.
fn tql_implicit(d: &mut [f64], e: &mut [f64], mut z: Option<&mut [f64]>, n: usize) -> Result<()> {
    if n < 2 {
        return Ok(());
    }
    e[n - 1] = 0.0;
    // Absolute deflation floor; without it clusters of zero eigenvalues,
    // where |d[m]| + |d[m+1]| is itself tiny, never deflate.
    let scale = (0..n).map(|i| d[i].abs() + e[i].abs()).fold(0.0, f64::max);
    let floor = f64::EPSILON * scale;
    for l in 0..n {
        let mut sweeps = 0;
        loop {
            let mut m = l;
            while m < n - 1 {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd || e[m].abs() <= floor {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            sweeps += 1;
            if sweeps > MAX_SWEEPS {
                return Err(GramError::NoConvergence);
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if let Some(z) = z.as_deref_mut() {
                    for k in 0..n {
                        let f = z[k * n + i + 1];
                        z[k * n + i + 1] = s * z[k * n + i] + c * f;
                        z[k * n + i] = c * z[k * n + i] - s * f;
                    }
                }
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}
