//! Singular value decomposition of square complex matrices:
//! Householder bidiagonalization followed by implicit QR on the real
//! bidiagonal (Wilkinson-type shift, or zero shift when the shift is
//! negligible).

use num_complex::Complex64;

use super::householder::Reflector;
use crate::error::{Result, WeylError};
use crate::matrix::CMatrix;

/// Default relative threshold for neglecting bidiagonal superdiagonal entries.
pub const DEFAULT_SVD_TOL: f64 = 10.0 * f64::EPSILON;

/// `A = U diag(values) V^*`, values descending.
#[derive(Clone, Debug)]
pub struct Svd {
    pub values: Vec<f64>,
    pub u: Option<CMatrix>,
    pub v: Option<CMatrix>,
}

/// Plane rotation `x' = c x + s y`, `y' = -s x + c y` with `r = hypot(f, g)`.
#[inline]
fn rot(f: f64, g: f64) -> (f64, f64, f64) {
    if g == 0.0 {
        (1.0, 0.0, f)
    } else if f == 0.0 {
        (0.0, 1.0, g)
    } else {
        let r = f.hypot(g);
        (f / r, g / r, r)
    }
}

/// Rotates rows `k` and `l` of `m` (rows of `m` are columns of U or V).
#[inline]
fn rotate_pair(m: &mut Option<CMatrix>, k: usize, l: usize, c: f64, s: f64) {
    if let Some(m) = m.as_mut() {
        let (a, b) = m.two_rows_mut(k, l);
        for (x, y) in a.iter_mut().zip(b.iter_mut()) {
            let (u, v) = (*x, *y);
            *x = u * c + v * s;
            *y = v * c - u * s;
        }
    }
}

/// Smallest singular value of `[[f, g], [0, h]]`.
fn smallest_sv_2x2(f: f64, g: f64, h: f64) -> f64 {
    let (fa, ga, ha) = (f.abs(), g.abs(), h.abs());
    let big = 0.5 * (((fa + ha).powi(2) + ga * ga).sqrt() + ((fa - ha).powi(2) + ga * ga).sqrt());
    if big == 0.0 {
        0.0
    } else {
        fa * ha / big
    }
}

/// Real bidiagonal state; `ut`/`vt` hold the columns of U and V as rows.
struct Bidiagonal {
    d: Vec<f64>,
    e: Vec<f64>,
    ut: Option<CMatrix>,
    vt: Option<CMatrix>,
}

impl Bidiagonal {
    /// Zero `d[i] == 0`'s superdiagonal with left rotations chased to `q`.
    fn chase_row(&mut self, i: usize, q: usize) {
        let mut f = self.e[i];
        self.e[i] = 0.0;
        for j in i + 1..=q {
            let (c, s, r) = rot(self.d[j], f);
            self.d[j] = r;
            if j < q {
                f = -s * self.e[j];
                self.e[j] *= c;
            }
            rotate_pair(&mut self.ut, j, i, c, s);
        }
    }

    /// `d[q] == 0`: chase `e[q-1]` upward with right rotations on columns.
    fn chase_col(&mut self, p: usize, q: usize) {
        let mut f = self.e[q - 1];
        self.e[q - 1] = 0.0;
        for k in (p..q).rev() {
            let (c, s, r) = rot(self.d[k], f);
            self.d[k] = r;
            if k > p {
                f = -s * self.e[k - 1];
                self.e[k - 1] *= c;
            }
            rotate_pair(&mut self.vt, k, q, c, s);
        }
    }

    /// Implicitly shifted QR sweep on rows `p..=q`, shift `sigma` (a singular
    /// value estimate).
    fn shifted_step(&mut self, p: usize, q: usize, sigma: f64) {
        let d = &mut self.d;
        let e = &mut self.e;
        // First column of B^T B - sigma^2, scaled by 1/d_p (d_p != 0 here).
        let mut y = (d[p].abs() - sigma) * (d[p].signum() + sigma / d[p]);
        let mut z = e[p];
        for k in p..q {
            let (c, s, r) = rot(y, z);
            if k > p {
                e[k - 1] = r;
            }
            let f = c * d[k] + s * e[k];
            e[k] = c * e[k] - s * d[k];
            let g = s * d[k + 1];
            d[k + 1] *= c;
            rotate_pair(&mut self.vt, k, k + 1, c, s);

            let (c, s, r) = rot(f, g);
            d[k] = r;
            let ek = c * e[k] + s * d[k + 1];
            d[k + 1] = c * d[k + 1] - s * e[k];
            e[k] = ek;
            rotate_pair(&mut self.ut, k, k + 1, c, s);
            if k + 1 < q {
                y = e[k];
                z = s * e[k + 1];
                e[k + 1] *= c;
            }
        }
    }

    /// Demmel-Kahan zero-shift sweep; preserves high relative accuracy of
    /// tiny singular values.
    fn zero_shift_step(&mut self, p: usize, q: usize) {
        let d = &mut self.d;
        let e = &mut self.e;
        let mut cs = 1.0;
        let mut oldcs = 1.0;
        let mut oldsn = 0.0;
        for i in p..q {
            let (c, s, r) = rot(d[i] * cs, e[i]);
            cs = c;
            if i > p {
                e[i - 1] = oldsn * r;
            }
            let (oc, os, dr) = rot(oldcs * r, d[i + 1] * s);
            oldcs = oc;
            oldsn = os;
            d[i] = dr;
            rotate_pair(&mut self.vt, i, i + 1, c, s);
            rotate_pair(&mut self.ut, i, i + 1, oc, os);
        }
        let h = d[q] * cs;
        d[q] = h * oldcs;
        e[q - 1] = h * oldsn;
    }

    fn solve(&mut self, tol: f64) -> Result<()> {
        let n = self.d.len();
        if n <= 1 {
            return Ok(());
        }
        let bnorm = self
            .d
            .iter()
            .chain(&self.e)
            .fold(0.0f64, |m, x| m.max(x.abs()));
        if bnorm == 0.0 {
            return Ok(());
        }
        let floor = f64::MIN_POSITIVE * n as f64 / f64::EPSILON;
        let max_sweeps = 30 * n * n + 100;
        let mut sweeps = 0;
        loop {
            for i in 0..n - 1 {
                let ei = self.e[i].abs();
                if ei <= floor || ei <= tol * (self.d[i].abs() + self.d[i + 1].abs()) {
                    self.e[i] = 0.0;
                }
            }
            let mut q = n - 1;
            while q > 0 && self.e[q - 1] == 0.0 {
                q -= 1;
            }
            if q == 0 {
                return Ok(());
            }
            let mut p = q - 1;
            while p > 0 && self.e[p - 1] != 0.0 {
                p -= 1;
            }
            sweeps += 1;
            if sweeps > max_sweeps {
                return Err(WeylError::NoConvergence("bidiagonal QR", sweeps));
            }
            if let Some(i) = (p..q).find(|&i| self.d[i] == 0.0) {
                self.chase_row(i, q);
                continue;
            }
            if self.d[q] == 0.0 {
                self.chase_col(p, q);
                continue;
            }
            let sigma = smallest_sv_2x2(self.d[q - 1], self.e[q - 1], self.d[q]);
            let dmax = (p..=q).map(|i| self.d[i].abs()).fold(0.0, f64::max);
            if (sigma / dmax).powi(2) <= f64::EPSILON {
                self.zero_shift_step(p, q);
            } else {
                self.shifted_step(p, q, sigma);
            }
        }
    }
}

/// Singular values (descending) and optionally the singular vectors of a
/// square matrix.
pub fn svd(a: &CMatrix, tol: f64, want_vectors: bool) -> Result<Svd> {
    if !a.is_square() {
        return Err(WeylError::DimensionMismatch(format!(
            "svd of a {}x{} matrix (square only)",
            a.nrows(),
            a.ncols()
        )));
    }
    if !(tol > 0.0 && tol < 1.0) {
        return Err(WeylError::InvalidParameter(format!(
            "svd tolerance {tol:e}"
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
    let n = a.nrows();
    let mut b = a.clone();
    let mut left = Vec::with_capacity(n);
    let mut right = Vec::with_capacity(n);
    for k in 0..n {
        let x: Vec<Complex64> = (k..n).map(|i| b[(i, k)]).collect();
        let (h, alpha) = Reflector::annihilate(&x);
        h.apply_left(&mut b, k, k + 1, n);
        b[(k, k)] = alpha;
        left.push(h);
        if k + 1 < n {
            let x: Vec<Complex64> = (k + 1..n).map(|j| b[(k, j)].conj()).collect();
            let (g, alpha) = Reflector::annihilate(&x);
            g.apply_right(&mut b, k + 1, n, k + 1);
            b[(k, k + 1)] = alpha.conj();
            right.push(g);
        }
    }
    let dc: Vec<Complex64> = (0..n).map(|k| b[(k, k)]).collect();
    let ec: Vec<Complex64> = (0..n.saturating_sub(1)).map(|k| b[(k, k + 1)]).collect();

    let (mut u, mut v) = if want_vectors {
        let mut u = CMatrix::identity(n);
        for (k, h) in left.iter().enumerate().rev() {
            h.apply_left(&mut u, k, k, n);
        }
        let mut v = CMatrix::identity(n);
        for (k, g) in right.iter().enumerate().rev() {
            g.apply_left(&mut v, k + 1, k + 1, n);
        }
        (Some(u.transpose()), Some(v.transpose()))
    } else {
        (None, None)
    };

    // Diagonal unitary scalings turn the complex bidiagonal into a real
    // nonnegative one: row k by conj(phase d_k), column k+1 by the phase
    // that makes e_k real.
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n.saturating_sub(1)];
    let mut carry = Complex64::new(1.0, 0.0);
    for k in 0..n {
        let dk = dc[k] * carry;
        let mag = dk.norm();
        let ph = if mag > 0.0 {
            dk / mag
        } else {
            Complex64::new(1.0, 0.0)
        };
        d[k] = mag;
        if let Some(u) = u.as_mut() {
            for x in u.row_mut(k) {
                *x *= ph;
            }
        }
        if k + 1 < n {
            let ek = ec[k] * ph.conj();
            let m = ek.norm();
            let psi = if m > 0.0 {
                ek.conj() / m
            } else {
                Complex64::new(1.0, 0.0)
            };
            e[k] = m;
            carry = psi;
            if let Some(v) = v.as_mut() {
                for x in v.row_mut(k + 1) {
                    *x *= psi;
                }
            }
        }
    }

    let mut bd = Bidiagonal {
        d,
        e,
        ut: u.take(),
        vt: v.take(),
    };
    bd.solve(tol)?;
    let Bidiagonal {
        mut d, ut, mut vt, ..
    } = bd;
    for (i, di) in d.iter_mut().enumerate() {
        if *di < 0.0 {
            *di = -*di;
            if let Some(vt) = vt.as_mut() {
                for x in vt.row_mut(i) {
                    *x = -*x;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[j].partial_cmp(&d[i]).unwrap());
    let values = order.iter().map(|&i| d[i]).collect();
    let gather = |m: Option<CMatrix>| m.map(|m| CMatrix::from_fn(n, n, |r, c| m[(order[c], r)]));
    Ok(Svd {
        values,
        u: gather(ut),
        v: gather(vt),
    })
}

/// Singular values only, descending.
pub fn singular_values(a: &CMatrix) -> Result<Vec<f64>> {
    Ok(svd(a, DEFAULT_SVD_TOL, false)?.values)
}

/// `s_min(A)`; zero for an exactly singular bidiagonal.
pub fn smallest_singular_value(a: &CMatrix) -> Result<f64> {
    Ok(singular_values(a)?.last().copied().unwrap_or(0.0))
}
