//! Hermitian Householder reflectors `H = I - beta v v^*`.

use num_complex::Complex64;

use crate::matrix::{vec_norm, CMatrix, ONE, ZERO};

#[derive(Clone, Debug)]
pub struct Reflector {
    pub v: Vec<Complex64>,
    pub beta: f64,
}

impl Reflector {
    /// Reflector with `H x = alpha e_1`; returns `(H, alpha)`.
    ///
    /// When the tail of `x` already vanishes the identity is returned and
    /// `alpha = x[0]`.
    pub fn annihilate(x: &[Complex64]) -> (Self, Complex64) {
        let tail: f64 = x[1..].iter().map(|z| z.norm_sqr()).sum();
        if tail == 0.0 {
            return (
                Self {
                    v: vec![ZERO; x.len()],
                    beta: 0.0,
                },
                x[0],
            );
        }
        let norm = vec_norm(x);
        let a0 = x[0].norm();
        let phase = if a0 == 0.0 { ONE } else { x[0] / a0 };
        let mut v = x.to_vec();
        v[0] = x[0] + phase * norm;
        let beta = 1.0 / (norm * (norm + a0));
        (Self { v, beta }, -phase * norm)
    }

    #[inline]
    pub fn is_identity(&self) -> bool {
        self.beta == 0.0
    }

    /// `A[r0.., c0..c1] <- H A[r0.., c0..c1]` where `H` acts on rows `r0..r0+len`.
    pub fn apply_left(&self, a: &mut CMatrix, r0: usize, c0: usize, c1: usize) {
        if self.is_identity() || c0 >= c1 {
            return;
        }
        let mut w = vec![ZERO; c1 - c0];
        for (i, vi) in self.v.iter().enumerate() {
            let vc = vi.conj();
            for (wj, &aij) in w.iter_mut().zip(&a.row(r0 + i)[c0..c1]) {
                *wj += vc * aij;
            }
        }
        for (i, &vi) in self.v.iter().enumerate() {
            let f = vi * self.beta;
            for (aij, &wj) in a.row_mut(r0 + i)[c0..c1].iter_mut().zip(&w) {
                *aij -= f * wj;
            }
        }
    }

    /// `A[r0..r1, c0..] <- A[r0..r1, c0..] H` where `H` acts on columns `c0..c0+len`.
    pub fn apply_right(&self, a: &mut CMatrix, r0: usize, r1: usize, c0: usize) {
        if self.is_identity() {
            return;
        }
        let len = self.v.len();
        for i in r0..r1 {
            let row = &mut a.row_mut(i)[c0..c0 + len];
            let s: Complex64 = row.iter().zip(&self.v).map(|(&x, &v)| x * v).sum();
            let f = s * self.beta;
            for (x, v) in row.iter_mut().zip(&self.v) {
                *x -= f * v.conj();
            }
        }
    }
}

/// Householder QR, `A = Q R` with `Q` unitary and `R` upper triangular.
///
/// The diagonal of `R` is made real nonnegative, which makes the factorization
/// unique for invertible `A` (and `Q` Haar distributed when `A` is Ginibre).
pub fn qr(a: &CMatrix) -> (CMatrix, CMatrix) {
    let (m, n) = (a.nrows(), a.ncols());
    let mut r = a.clone();
    let mut reflectors = Vec::new();
    for k in 0..n.min(m) {
        let x: Vec<Complex64> = (k..m).map(|i| r[(i, k)]).collect();
        let (h, _) = Reflector::annihilate(&x);
        h.apply_left(&mut r, k, k, n);
        for i in k + 1..m {
            r[(i, k)] = ZERO;
        }
        reflectors.push(h);
    }
    let mut q = CMatrix::identity(m);
    for (k, h) in reflectors.iter().enumerate().rev() {
        h.apply_left(&mut q, k, k, m);
    }
    for k in 0..n.min(m) {
        let d = r[(k, k)];
        let mag = d.norm();
        if mag > 0.0 {
            let ph = d / mag;
            for j in k..n {
                r[(k, j)] *= ph.conj();
            }
            for i in 0..m {
                q[(i, k)] *= ph;
            }
        }
    }
    (q, r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reflector_maps_to_multiple_of_e1() {
        let x = vec![
            Complex64::new(0.3, -1.0),
            Complex64::new(2.0, 0.5),
            Complex64::new(-1.0, 1.0),
        ];
        let (h, alpha) = Reflector::annihilate(&x);
        let mut m = CMatrix::from_fn(3, 1, |i, _| x[i]);
        h.apply_left(&mut m, 0, 0, 1);
        assert!((m[(0, 0)] - alpha).norm() < 1e-14);
        assert!(m[(1, 0)].norm() < 1e-14 && m[(2, 0)].norm() < 1e-14);
        assert!((alpha.norm() - vec_norm(&x)).abs() < 1e-14);
    }

    #[test]
    fn qr_reconstructs() {
        let a = CMatrix::from_fn(4, 4, |i, j| {
            Complex64::new((i * 3 + j) as f64 % 5.0 - 2.0, (i + 2 * j) as f64 % 3.0)
        });
        let (q, r) = qr(&a);
        let back = q.matmul(&r).unwrap();
        assert!(back.max_abs_diff(&a).unwrap() < 1e-12);
        let qq = q.adjoint().matmul(&q).unwrap();
        assert!(qq.max_abs_diff(&CMatrix::identity(4)).unwrap() < 1e-12);
        for i in 0..4 {
            for j in 0..i {
                assert_eq!(r[(i, j)], ZERO);
            }
        }
    }
}
