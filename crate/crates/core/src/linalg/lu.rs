//! LU factorization with partial pivoting, `log|det|` and linear solves.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, WeylError};
use crate::matrix::{CMatrix, ZERO};

/// `log|det A|`, with a zero determinant carried as an explicit flag.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogAbsDet {
    Finite(f64),
    NegInfinity,
}

impl LogAbsDet {
    pub fn from_value(x: f64) -> Self {
        if x == f64::NEG_INFINITY {
            LogAbsDet::NegInfinity
        } else {
            LogAbsDet::Finite(x)
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, LogAbsDet::Finite(_))
    }

    pub fn finite(&self) -> Option<f64> {
        match *self {
            LogAbsDet::Finite(x) => Some(x),
            LogAbsDet::NegInfinity => None,
        }
    }

    /// `log|det(AB)| = log|det A| + log|det B|`.
    pub fn plus(self, other: LogAbsDet) -> LogAbsDet {
        match (self, other) {
            (LogAbsDet::Finite(a), LogAbsDet::Finite(b)) => LogAbsDet::Finite(a + b),
            _ => LogAbsDet::NegInfinity,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Lu {
    lu: CMatrix,
    perm: Vec<usize>,
    singular: bool,
}

impl Lu {
    pub fn new(a: &CMatrix) -> Result<Self> {
        if !a.is_square() {
            return Err(WeylError::DimensionMismatch(format!(
                "LU of a {}x{} matrix",
                a.nrows(),
                a.ncols()
            )));
        }
        let n = a.nrows();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut singular = false;
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, lu[(i, k)].norm()))
                .fold(
                    (k, -1.0),
                    |best, cur| if cur.1 > best.1 { cur } else { best },
                );
            if pmax == 0.0 {
                singular = true;
                continue;
            }
            if p != k {
                let (rk, rp) = lu.two_rows_mut(k, p);
                rk.swap_with_slice(rp);
                perm.swap(k, p);
            }
            let inv = 1.0 / lu[(k, k)];
            for i in k + 1..n {
                let f = lu[(i, k)] * inv;
                if f == ZERO {
                    continue;
                }
                lu[(i, k)] = f;
                let (rk, ri) = lu.two_rows_mut(k, i);
                for (x, &y) in ri[k + 1..].iter_mut().zip(&rk[k + 1..]) {
                    *x -= f * y;
                }
            }
        }
        Ok(Self { lu, perm, singular })
    }

    pub fn is_singular(&self) -> bool {
        self.singular
    }

    pub fn log_abs_det(&self) -> LogAbsDet {
        if self.singular {
            return LogAbsDet::NegInfinity;
        }
        let n = self.lu.nrows();
        LogAbsDet::Finite((0..n).map(|i| self.lu[(i, i)].norm().ln()).sum())
    }

    pub fn solve(&self, b: &[Complex64]) -> Result<Vec<Complex64>> {
        let n = self.lu.nrows();
        if b.len() != n {
            return Err(WeylError::DimensionMismatch(format!(
                "rhs of length {} for n = {n}",
                b.len()
            )));
        }
        if self.singular {
            return Err(WeylError::Singular);
        }
        let mut x: Vec<Complex64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = self.lu.row(i);
            let s: Complex64 = row[..i].iter().zip(&x[..i]).map(|(&l, &y)| l * y).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let row = self.lu.row(i);
            let s: Complex64 = row[i + 1..]
                .iter()
                .zip(&x[i + 1..])
                .map(|(&u, &y)| u * y)
                .sum();
            x[i] = (x[i] - s) / row[i];
        }
        Ok(x)
    }

    /// Solves `A^* x = b`.
    pub fn solve_adjoint(&self, b: &[Complex64]) -> Result<Vec<Complex64>> {
        let n = self.lu.nrows();
        if b.len() != n {
            return Err(WeylError::DimensionMismatch(format!(
                "rhs of length {} for n = {n}",
                b.len()
            )));
        }
        if self.singular {
            return Err(WeylError::Singular);
        }
        // A = P^T L U, so A^* = U^* L^* P.
        let mut y = b.to_vec();
        for i in 0..n {
            let s: Complex64 = (0..i).map(|k| self.lu[(k, i)].conj() * y[k]).sum();
            y[i] = (y[i] - s) / self.lu[(i, i)].conj();
        }
        for i in (0..n).rev() {
            let s: Complex64 = (i + 1..n).map(|k| self.lu[(k, i)].conj() * y[k]).sum();
            y[i] -= s;
        }
        let mut x = vec![ZERO; n];
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = y[i];
        }
        Ok(x)
    }

    /// Solves `A X = B` column by column.
    pub fn solve_matrix(&self, b: &CMatrix) -> Result<CMatrix> {
        let n = self.lu.nrows();
        let mut out = CMatrix::zeros(n, b.ncols());
        for j in 0..b.ncols() {
            let x = self.solve(&b.col(j))?;
            for (i, xi) in x.into_iter().enumerate() {
                out[(i, j)] = xi;
            }
        }
        Ok(out)
    }

    pub fn inverse(&self) -> Result<CMatrix> {
        self.solve_matrix(&CMatrix::identity(self.lu.nrows()))
    }
}

/// `sum log|u_ii|` from partial-pivoting LU.
pub fn log_abs_det(a: &CMatrix) -> Result<LogAbsDet> {
    Ok(Lu::new(a)?.log_abs_det())
}
