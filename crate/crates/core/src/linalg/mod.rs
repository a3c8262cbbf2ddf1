//! Dense complex linear algebra.
//!
//! Everything here is self-contained: eigenvalues by balancing, Householder
//! Hessenberg reduction and shifted QR; singular values by Householder
//! bidiagonalization and bidiagonal QR; `log|det|` and solves by LU with
//! partial pivoting. Factorizations are sequential and deterministic.

pub mod eigen;
pub mod householder;
pub mod lu;
pub mod matching;
pub mod norms;
pub mod svd;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use eigen::{eigenvalues, DEFAULT_EIG_TOL};
pub use lu::{log_abs_det, LogAbsDet, Lu};
pub use matching::{greedy_matching, multiset_distance};
pub use norms::{operator_norm, resolvent_norm, resolvent_norm_checked, ResolventNorm};
pub use svd::{singular_values, smallest_singular_value, svd, Svd, DEFAULT_SVD_TOL};

use crate::error::Result;
use crate::matrix::CMatrix;

/// Where a [`SpectralData`] came from.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SpectralSource {
    pub operator: String,
    pub shift: Complex64,
    pub seed: Option<u64>,
}

/// Spectrum, singular values and `log|det|` of one operator instance.
///
/// Singular values are descending: `s_1 >= ... >= s_n`, so the ascending
/// `t_i` used by the Grushin construction is `t_i = s_{n-i+1}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralData {
    pub eigenvalues: Vec<Complex64>,
    pub singular_values: Option<Vec<f64>>,
    pub log_abs_det: LogAbsDet,
    pub source: SpectralSource,
}

/// Residuals of the cross-consistency identities of a [`SpectralData`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralInvariants {
    /// `|sum eigenvalues - trace|`.
    pub trace_residual: f64,
    /// `|sum log s_i - log|det||`, when both are finite.
    pub logdet_residual: Option<f64>,
    pub singular_values_sorted: bool,
}

impl SpectralData {
    /// Spectral data of `a - source.shift`.
    pub fn compute(
        a: &CMatrix,
        source: SpectralSource,
        with_singular_values: bool,
    ) -> Result<Self> {
        let shifted = a.shifted(source.shift);
        let eigenvalues = eigenvalues(&shifted, DEFAULT_EIG_TOL)?;
        let singular_values = if with_singular_values {
            Some(singular_values(&shifted)?)
        } else {
            None
        };
        let log_abs_det = log_abs_det(&shifted)?;
        Ok(Self {
            eigenvalues,
            singular_values,
            log_abs_det,
            source,
        })
    }

    /// Checks against the matrix the data was computed from (unshifted).
    pub fn invariants(&self, a: &CMatrix) -> SpectralInvariants {
        let tr = a.shifted(self.source.shift).trace();
        let sum: Complex64 = self.eigenvalues.iter().sum();
        let logdet_residual = match (&self.singular_values, self.log_abs_det) {
            (Some(s), LogAbsDet::Finite(ld)) if s.iter().all(|&x| x > 0.0) => {
                Some((s.iter().map(|x| x.ln()).sum::<f64>() - ld).abs())
            }
            _ => None,
        };
        let sorted = self
            .singular_values
            .as_ref()
            .map(|s| s.windows(2).all(|w| w[0] >= w[1]) && s.iter().all(|&x| x >= 0.0))
            .unwrap_or(true);
        SpectralInvariants {
            trace_residual: (sum - tr).norm(),
            logdet_residual,
            singular_values_sorted: sorted,
        }
    }
}
