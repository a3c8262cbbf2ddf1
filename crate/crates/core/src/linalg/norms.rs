//! Operator norms and resolvent norms.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use super::lu::Lu;
use super::svd::smallest_singular_value;
use crate::error::{Result, WeylError};
use crate::matrix::{vec_norm, CMatrix};

pub const POWER_MAX_ITER: usize = 20_000;

fn start_vector(n: usize) -> Vec<Complex64> {
    let mut rng = ChaCha20Rng::seed_from_u64(0x005e_ed0f_5eed);
    let mut v: Vec<Complex64> = (0..n)
        .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
        .collect();
    let nv = vec_norm(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    v
}

/// Largest singular value by power iteration on `A^* A`.
///
/// Stops when two successive estimates of `||A v||` agree to relative `tol`.
pub fn operator_norm(a: &CMatrix, tol: f64) -> Result<f64> {
    if !(tol > 0.0 && tol <= 1e-2) {
        return Err(WeylError::InvalidParameter(format!(
            "operator norm tolerance {tol:e} outside (0, 1e-2]"
        )));
    }
    let n = a.ncols();
    if n == 0 || a.nrows() == 0 {
        return Ok(0.0);
    }
    let mut v = start_vector(n);
    let mut prev = 0.0;
    for _ in 0..POWER_MAX_ITER {
        let w = a.matvec(&v);
        let sigma = vec_norm(&w);
        if sigma == 0.0 {
            // v in the kernel; restart from a coordinate direction would be
            // needed only for the zero matrix in practice.
            if a.max_abs() == 0.0 {
                return Ok(0.0);
            }
            v = start_vector(n).iter().rev().copied().collect();
            continue;
        }
        let x = a.adjoint_matvec(&w);
        let nx = vec_norm(&x);
        v = x.into_iter().map(|z| z / nx).collect();
        if (sigma - prev).abs() <= tol * sigma {
            // one more half step: ||A^* A v|| / ||A v|| >= ||A v||
            return Ok((nx / sigma).max(sigma));
        }
        prev = sigma;
    }
    Err(WeylError::NoConvergence("power iteration", POWER_MAX_ITER))
}

/// `||(A - z)^{-1}||`, or the infinite flag when `A - z` is singular.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResolventNorm {
    Finite(f64),
    Infinite,
}

impl ResolventNorm {
    pub fn finite(&self) -> Option<f64> {
        match *self {
            ResolventNorm::Finite(x) => Some(x),
            ResolventNorm::Infinite => None,
        }
    }
}

/// `1 / s_min(A - z I)` from the full SVD.
pub fn resolvent_norm(a: &CMatrix, z: Complex64) -> Result<ResolventNorm> {
    let smin = smallest_singular_value(&a.shifted(z))?;
    if smin == 0.0 || smin < f64::MIN_POSITIVE {
        Ok(ResolventNorm::Infinite)
    } else {
        Ok(ResolventNorm::Finite(1.0 / smin))
    }
}

/// `s_min(A - z I)` by inverse iteration on `((A - z)^*(A - z))^{-1}`.
///
/// Fast path: one LU, then two triangular solves per step. Converges to
/// relative `tol` on the estimate.
pub fn smallest_sv_inverse_iteration(a: &CMatrix, z: Complex64, tol: f64) -> Result<f64> {
    let lu = Lu::new(&a.shifted(z))?;
    if lu.is_singular() {
        return Ok(0.0);
    }
    let n = a.nrows();
    let mut v = start_vector(n);
    let mut prev = 0.0;
    for _ in 0..POWER_MAX_ITER {
        let y = lu.solve_adjoint(&v)?;
        let x = lu.solve(&y)?;
        let nx = vec_norm(&x);
        // ||M^{-1} v|| for unit v approximates 1 / s_min^2.
        let est = 1.0 / nx.sqrt();
        v = x.into_iter().map(|c| c / nx).collect();
        if (est - prev).abs() <= tol * est {
            return Ok(est);
        }
        prev = est;
    }
    Err(WeylError::NoConvergence(
        "inverse iteration",
        POWER_MAX_ITER,
    ))
}

/// Resolvent norm with a cross-check between SVD and inverse iteration.
/// Returns `(svd_value, inverse_iteration_value, agree)`.
pub fn resolvent_norm_checked(
    a: &CMatrix,
    z: Complex64,
    tol: f64,
) -> Result<(ResolventNorm, f64, bool)> {
    let full = resolvent_norm(a, z)?;
    let smin = smallest_sv_inverse_iteration(a, z, tol)?;
    let fast = if smin > 0.0 {
        1.0 / smin
    } else {
        f64::INFINITY
    };
    let agree = match full {
        ResolventNorm::Finite(x) => ((x - fast) / x).abs() <= 1e3 * tol.max(1e-12),
        ResolventNorm::Infinite => !fast.is_finite() || fast > 1e15,
    };
    Ok((full, fast, agree))
}
