//! Counts `M(N, alpha) = #{t_i^2 <= alpha}` of small singular values of
//! `p_N - z` and their log-log slopes in `alpha` and in `N`.
//!
//! The counts are small integers that move in steps of two or four, so a
//! slope through three values at one fixed level is mostly lattice noise.
//! The reported slopes come from one joint fit
//! `log M = a log N + b log alpha + c` over the whole table; the per-level
//! fits are kept as diagnostics.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::weyl::KAPPA_THRESHOLDS;
use super::{check_desk_scale, default_dim, fmt_f64, CsvRecord, ExperimentReport, SymbolSpec};
use crate::error::{Result, WeylError};
use crate::linalg::singular_values;
use crate::quantize::quantize;
use crate::stats::{linear_fit, plane_fit};
use crate::symbols::volume_profile;

/// Fewest positive counts accepted by a slope fit.
pub const MIN_FIT_POINTS: usize = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmallSvConfig {
    #[serde(default)]
    pub symbol: SymbolSpec,
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(rename = "N")]
    pub ns: Vec<usize>,
    pub z: Complex64,
    #[serde(default = "default_alphas")]
    pub alphas: Vec<f64>,
    #[serde(default = "default_thresholds")]
    pub kappa_thresholds: Vec<f64>,
    #[serde(default = "default_kappa_resolution")]
    pub kappa_resolution: usize,
    #[serde(default = "default_alpha_tol")]
    pub alpha_slope_tol: f64,
    #[serde(default = "default_n_tol")]
    pub n_slope_tol: f64,
    #[serde(default)]
    pub allow_large: bool,
}

fn default_thresholds() -> Vec<f64> {
    KAPPA_THRESHOLDS.to_vec()
}

/// `0.3 * 2^{-j/2}` for `j = 0..5`: the sublevel disc of radius `sqrt(alpha)`
/// stays inside the flag's range around `0.3+0.2i`, and the smallest value is
/// above `C_alpha / 64`.
pub fn default_alphas() -> Vec<f64> {
    (0..5).map(|j| 0.3 * 2f64.powf(-(j as f64) / 2.0)).collect()
}

fn default_kappa_resolution() -> usize {
    1024
}

fn default_alpha_tol() -> f64 {
    0.25
}

fn default_n_tol() -> f64 {
    0.15
}

impl SmallSvConfig {
    pub fn new(ns: Vec<usize>, z: Complex64, alphas: Vec<f64>) -> Self {
        Self {
            symbol: SymbolSpec::default(),
            dim: 1,
            ns,
            z,
            alphas,
            kappa_thresholds: default_thresholds(),
            kappa_resolution: default_kappa_resolution(),
            alpha_slope_tol: default_alpha_tol(),
            n_slope_tol: default_n_tol(),
            allow_large: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmallSvRecord {
    #[serde(rename = "N")]
    pub n: usize,
    pub alpha: f64,
    #[serde(rename = "M")]
    pub m: usize,
}

impl CsvRecord for SmallSvRecord {
    fn header() -> Vec<&'static str> {
        vec!["N", "alpha", "M"]
    }

    fn row(&self) -> Vec<String> {
        vec![self.n.to_string(), fmt_f64(self.alpha), self.m.to_string()]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub at: f64,
    pub slope: Option<f64>,
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmallSvAggregate {
    pub kappa_hat: f64,
    pub kappa_fit_points: usize,
    /// `b` in the joint fit `log M = a log N + b log alpha + c`.
    pub alpha_slope: f64,
    /// `a` in the joint fit.
    pub n_slope: f64,
    /// Table entries with `M > 0` used by the joint fit.
    pub fit_points: usize,
    pub fit_rms_residual: f64,
    pub alpha_slope_ok: bool,
    pub n_slope_ok: bool,
    /// The same fits at every `N` (resp. every `alpha`), where possible.
    pub alpha_slopes_by_n: Vec<SlopeFit>,
    pub n_slopes_by_alpha: Vec<SlopeFit>,
}

pub type SmallSvReport = ExperimentReport<SmallSvConfig, SmallSvRecord, SmallSvAggregate>;

fn log_slope(points: &[(f64, usize)]) -> (Option<f64>, usize) {
    let (xs, ys): (Vec<f64>, Vec<f64>) = points
        .iter()
        .filter(|(_, m)| *m > 0)
        .map(|&(x, m)| (x.ln(), (m as f64).ln()))
        .unzip();
    if xs.len() < MIN_FIT_POINTS {
        return (None, xs.len());
    }
    (linear_fit(&xs, &ys).ok().map(|f| f.slope), xs.len())
}

pub fn small_sv_count(cfg: &SmallSvConfig) -> Result<SmallSvReport> {
    if cfg.ns.is_empty() || cfg.alphas.is_empty() {
        return Err(WeylError::InvalidParameter(
            "small_sv_count needs N and alpha lists".into(),
        ));
    }
    if cfg.alphas.iter().any(|&a| !(a > 0.0)) {
        return Err(WeylError::InvalidParameter(
            "alpha values must be positive".into(),
        ));
    }
    let symbol = cfg.symbol.resolve(cfg.dim)?;
    let profile = volume_profile(&symbol, cfg.z, &cfg.kappa_thresholds, cfg.kappa_resolution)?;
    let kappa_hat = profile.kappa.ok_or_else(|| {
        WeylError::Precondition(format!("no volume exponent fit at z = {}", cfg.z))
    })?;

    let mut records = Vec::new();
    for &n in &cfg.ns {
        check_desk_scale(n, cfg.dim, cfg.allow_large)?;
        let p = quantize(&symbol, n, None)?;
        let t = singular_values(&p.matrix.shifted(cfg.z))?;
        for &alpha in &cfg.alphas {
            records.push(SmallSvRecord {
                n,
                alpha,
                m: t.iter().filter(|&&ti| ti * ti <= alpha).count(),
            });
        }
    }
    let alpha_slopes_by_n: Vec<SlopeFit> = cfg
        .ns
        .iter()
        .map(|&n| {
            let pts: Vec<(f64, usize)> = records
                .iter()
                .filter(|r| r.n == n)
                .map(|r| (r.alpha, r.m))
                .collect();
            let (slope, points) = log_slope(&pts);
            SlopeFit {
                at: n as f64,
                slope,
                points,
            }
        })
        .collect();
    let n_slopes_by_alpha: Vec<SlopeFit> = cfg
        .alphas
        .iter()
        .map(|&a| {
            let pts: Vec<(f64, usize)> = records
                .iter()
                .filter(|r| r.alpha == a)
                .map(|r| (r.n as f64, r.m))
                .collect();
            let (slope, points) = log_slope(&pts);
            SlopeFit {
                at: a,
                slope,
                points,
            }
        })
        .collect();

    let (mut us, mut vs, mut ys) = (Vec::new(), Vec::new(), Vec::new());
    for r in records.iter().filter(|r| r.m > 0) {
        us.push((r.n as f64).ln());
        vs.push(r.alpha.ln());
        ys.push((r.m as f64).ln());
    }
    if ys.len() < MIN_FIT_POINTS {
        return Err(WeylError::DegenerateRegression(format!(
            "{} positive count(s)",
            ys.len()
        )));
    }
    let joint = plane_fit(&us, &vs, &ys)?;
    let (n_slope, alpha_slope) = (joint.slope_u, joint.slope_v);
    let aggregate = SmallSvAggregate {
        kappa_hat,
        kappa_fit_points: profile.fit_points,
        alpha_slope,
        n_slope,
        fit_points: joint.points,
        fit_rms_residual: joint.rms_residual,
        alpha_slope_ok: (alpha_slope - kappa_hat).abs() <= cfg.alpha_slope_tol,
        n_slope_ok: (n_slope - cfg.dim as f64).abs() <= cfg.n_slope_tol,
        alpha_slopes_by_n,
        n_slopes_by_alpha,
    };
    Ok(ExperimentReport::new(
        "small-sv",
        cfg.clone(),
        records,
        Vec::new(),
        aggregate,
    ))
}
