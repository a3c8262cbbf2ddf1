//! Eigenvalues of dense complex matrices: diagonal balancing, Householder
//! reduction to upper Hessenberg form, then single-shift implicit QR with
//! Wilkinson shifts and deflation.

use num_complex::Complex64;

use super::householder::Reflector;
use crate::error::{Result, WeylError};
use crate::matrix::{cabs1, CMatrix, ZERO};

/// Default relative deflation threshold.
pub const DEFAULT_EIG_TOL: f64 = 1e-14;

/// QR is abandoned after `SWEEPS_PER_ROW * n` sweeps in total.
const SWEEPS_PER_ROW: usize = 30;

/// Diagonal similarity scaling by powers of two so that row and column
/// norms are comparable. The spectrum is unchanged exactly.
pub fn balance(a: &mut CMatrix) -> Vec<f64> {
    const RADIX: f64 = 2.0;
    const FACTOR: f64 = 0.95;
    let n = a.nrows();
    let mut scale = vec![1.0; n];
    let mut converged = false;
    let mut rounds = 0;
    while !converged && rounds < 64 {
        converged = true;
        rounds += 1;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in (0..n).filter(|&j| j != i) {
                c += cabs1(a[(j, i)]);
                r += cabs1(a[(i, j)]);
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            // c tracks the column sum times f^2 so that (c + r) / f is the
            // balanced row-plus-column sum.
            while c < r / RADIX {
                f *= RADIX;
                c *= RADIX * RADIX;
            }
            while c >= r * RADIX {
                f /= RADIX;
                c /= RADIX * RADIX;
            }
            if (c + r) / f >= FACTOR * s {
                continue;
            }
            converged = false;
            scale[i] *= f;
            for x in a.row_mut(i) {
                *x /= f;
            }
            for j in 0..n {
                a[(j, i)] *= f;
            }
        }
    }
    scale
}

/// Unitary reduction `A <- U^* A U` to upper Hessenberg form, in place.
pub fn hessenberg(a: &mut CMatrix) {
    let n = a.nrows();
    for k in 0..n.saturating_sub(2) {
        let x: Vec<Complex64> = (k + 1..n).map(|i| a[(i, k)]).collect();
        let (h, alpha) = Reflector::annihilate(&x);
        if h.is_identity() {
            continue;
        }
        h.apply_left(a, k + 1, k, n);
        h.apply_right(a, 0, n, k + 1);
        a[(k + 1, k)] = alpha;
        for i in k + 2..n {
            a[(i, k)] = ZERO;
        }
    }
}

/// Complex Givens rotation `G = [[c, s], [-conj(s), c]]` with
/// `G [a; b] = [r; 0]`.
#[inline]
pub(crate) fn givens(a: Complex64, b: Complex64) -> (f64, Complex64, Complex64) {
    if b == ZERO {
        return (1.0, ZERO, a);
    }
    let bn = b.norm();
    if a == ZERO {
        return (0.0, b.conj() / bn, Complex64::new(bn, 0.0));
    }
    let an = a.norm();
    let norm = an.hypot(bn);
    let phase = a / an;
    (an / norm, phase * b.conj() / norm, phase * norm)
}

#[inline]
fn rotate_rows(h: &mut CMatrix, k: usize, c: f64, s: Complex64, c0: usize, c1: usize) {
    let (rk, rk1) = h.two_rows_mut(k, k + 1);
    let sc = s.conj();
    for (x, y) in rk[c0..c1].iter_mut().zip(&mut rk1[c0..c1]) {
        let (u, v) = (*x, *y);
        *x = u * c + s * v;
        *y = v * c - sc * u;
    }
}

#[inline]
fn rotate_cols(h: &mut CMatrix, k: usize, c: f64, s: Complex64, r0: usize, r1: usize) {
    let sc = s.conj();
    let n = h.ncols();
    let data = h.as_mut_slice();
    for i in r0..r1 {
        let base = i * n + k;
        let (u, v) = (data[base], data[base + 1]);
        data[base] = u * c + v * sc;
        data[base + 1] = v * c - u * s;
    }
}

/// Eigenvalue of the trailing 2x2 block closest to its last diagonal entry.
fn wilkinson_shift(h: &CMatrix, hi: usize) -> Complex64 {
    let a = h[(hi - 1, hi - 1)];
    let b = h[(hi - 1, hi)];
    let c = h[(hi, hi - 1)];
    let d = h[(hi, hi)];
    let half = (a - d) * 0.5;
    let bc = b * c;
    let disc = (half * half + bc).sqrt();
    let (p, m) = (half + disc, half - disc);
    let den = if p.norm() >= m.norm() { p } else { m };
    if den == ZERO {
        d
    } else {
        d - bc / den
    }
}

/// One implicit single-shift QR sweep on the active window `l..=hi`.
/// Only the window is updated, which suffices for eigenvalues.
fn qr_sweep(h: &mut CMatrix, l: usize, hi: usize, shift: Complex64) {
    let mut x = h[(l, l)] - shift;
    let mut y = h[(l + 1, l)];
    for k in l..hi {
        if k > l {
            x = h[(k, k - 1)];
            y = h[(k + 1, k - 1)];
        }
        let (c, s, r) = givens(x, y);
        let first_col = if k > l {
            h[(k, k - 1)] = r;
            h[(k + 1, k - 1)] = ZERO;
            k
        } else {
            l
        };
        rotate_rows(h, k, c, s, first_col, hi + 1);
        rotate_cols(h, k, c, s, l, (k + 2).min(hi) + 1);
    }
}

/// Eigenvalues of an upper Hessenberg matrix; `h` is destroyed.
pub fn hessenberg_eigenvalues(h: &mut CMatrix, tol: f64) -> Result<Vec<Complex64>> {
    let n = h.nrows();
    let mut eig = vec![ZERO; n];
    if n == 0 {
        return Ok(eig);
    }
    let smlnum = f64::MIN_POSITIVE * (n as f64 / f64::EPSILON);
    let max_sweeps = SWEEPS_PER_ROW * n;
    let mut sweeps = 0usize;
    let mut since_deflation = 0usize;
    let mut hi = n - 1;
    loop {
        let mut l = hi;
        while l > 0 {
            let sub = cabs1(h[(l, l - 1)]);
            if sub <= smlnum {
                break;
            }
            let mut tst = cabs1(h[(l - 1, l - 1)]) + cabs1(h[(l, l)]);
            if tst == 0.0 {
                if l >= 2 {
                    tst += cabs1(h[(l - 1, l - 2)]);
                }
                if l < hi {
                    tst += cabs1(h[(l + 1, l)]);
                }
            }
            if sub <= tol * tst {
                break;
            }
            l -= 1;
        }
        if l > 0 {
            h[(l, l - 1)] = ZERO;
        }
        if l == hi {
            eig[hi] = h[(hi, hi)];
            since_deflation = 0;
            if hi == 0 {
                break;
            }
            hi -= 1;
            continue;
        }
        sweeps += 1;
        since_deflation += 1;
        if sweeps > max_sweeps {
            return Err(WeylError::NoConvergence("Hessenberg QR", sweeps));
        }
        let shift = match since_deflation % 20 {
            10 => h[(l, l)] + 0.75 * h[(l + 1, l)].re.abs(),
            0 => h[(hi, hi)] + 0.75 * h[(hi, hi - 1)].re.abs(),
            _ => wilkinson_shift(h, hi),
        };
        qr_sweep(h, l, hi, shift);
    }
    Ok(eig)
}

/// Eigenvalues of a square complex matrix.
///
/// `tol` is the relative deflation threshold: a subdiagonal entry is zeroed
/// once `|h[k+1][k]| <= tol * (|h[k][k]| + |h[k+1][k+1]|)`.
pub fn eigenvalues(a: &CMatrix, tol: f64) -> Result<Vec<Complex64>> {
    if !a.is_square() {
        return Err(WeylError::DimensionMismatch(format!(
            "eigenvalues of a {}x{} matrix",
            a.nrows(),
            a.ncols()
        )));
    }
    if !(1e-14..=1e-6).contains(&tol) {
        return Err(WeylError::InvalidParameter(format!(
            "eigenvalue tolerance {tol:e} outside [1e-14, 1e-6]"
        )));
    }
    if a.as_slice()
        .iter()
        .any(|z| !z.re.is_finite() || !z.im.is_finite())
    {
        return Err(WeylError::InvalidParameter(
            "matrix has non-finite entries".into(),
        ));
    }
    let mut h = a.clone();
    balance(&mut h);
    hessenberg(&mut h);
    hessenberg_eigenvalues(&mut h, tol)
}
