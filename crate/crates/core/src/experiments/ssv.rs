//! Tail of the smallest singular value of `X0 + delta Q`, normalized as
//! `P(s_min < delta t) / (N t^2)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::weyl::default_ensemble;
use super::{
    check_desk_scale, default_dim, default_seed, fmt_f64, run_trials, CsvRecord, ExperimentReport,
    SymbolSpec,
};
use crate::error::{Result, WeylError};
use crate::linalg::smallest_singular_value;
use crate::matrix::CMatrix;
use crate::quantize::quantize;
use crate::random::{Ensemble, PerturbationSpec};
use crate::stats::empirical_cdf;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum X0Spec {
    /// `X0 = 0`.
    Zero,
    /// `X0 = p_N - z`.
    Symbol {
        symbol: SymbolSpec,
        #[serde(default = "default_dim")]
        dim: usize,
        z: Complex64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SsvConfig {
    pub x0: X0Spec,
    /// Levels `N`; the matrix side is `N^d` (`N` itself for `X0 = 0`).
    #[serde(rename = "N")]
    pub sizes: Vec<usize>,
    pub delta: f64,
    pub t_grid: Vec<f64>,
    #[serde(default = "default_ssv_trials")]
    pub trials: u64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_ensemble")]
    pub ensemble: Ensemble,
    /// Optional ceiling asserted for every fitted constant.
    #[serde(default)]
    pub c_max: Option<f64>,
    #[serde(default)]
    pub allow_large: bool,
}

fn default_ssv_trials() -> u64 {
    10_000
}

impl SsvConfig {
    pub fn zero(sizes: Vec<usize>, t_grid: Vec<f64>, trials: u64) -> Self {
        Self {
            x0: X0Spec::Zero,
            sizes,
            delta: 1.0,
            t_grid,
            trials,
            seed: default_seed(),
            ensemble: default_ensemble(),
            c_max: None,
            allow_large: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SsvRecord {
    pub trial: u64,
    pub seed: u64,
    /// Matrix side.
    #[serde(rename = "N")]
    pub n: usize,
    pub delta: f64,
    /// `s_min(X0 + delta Q) / delta`.
    pub ratio: f64,
}

impl CsvRecord for SsvRecord {
    fn header() -> Vec<&'static str> {
        vec!["trial", "seed", "N", "delta", "ratio"]
    }

    fn row(&self) -> Vec<String> {
        vec![
            self.trial.to_string(),
            self.seed.to_string(),
            self.n.to_string(),
            fmt_f64(self.delta),
            fmt_f64(self.ratio),
        ]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SsvSizeSummary {
    #[serde(rename = "N")]
    pub n: usize,
    pub trials: usize,
    /// Empirical `P(s_min / delta < t)` on `t_grid`.
    pub probabilities: Vec<f64>,
    /// `P / (N t^2)`; absent at `t = 0`.
    pub normalized: Vec<Option<f64>>,
    /// `max_t P / (N t^2)`.
    pub c_hat: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SsvAggregate {
    pub sizes: Vec<SsvSizeSummary>,
    pub c_min: f64,
    pub c_max_observed: f64,
    /// `(max - min) / min` of `c_hat` over sizes.
    pub c_variation: f64,
    pub bounded: Option<bool>,
}

pub type SsvReport = ExperimentReport<SsvConfig, SsvRecord, SsvAggregate>;

fn base_matrix(x0: &X0Spec, n: usize, allow_large: bool) -> Result<CMatrix> {
    match x0 {
        X0Spec::Zero => {
            check_desk_scale(n, 1, allow_large)?;
            Ok(CMatrix::zeros(n, n))
        }
        X0Spec::Symbol { symbol, dim, z } => {
            check_desk_scale(n, *dim, allow_large)?;
            Ok(quantize(&symbol.resolve(*dim)?, n, None)?
                .matrix
                .shifted(*z))
        }
    }
}

pub fn ssv_tail(cfg: &SsvConfig) -> Result<SsvReport> {
    if cfg.sizes.is_empty() || cfg.t_grid.is_empty() || cfg.trials == 0 {
        return Err(WeylError::InvalidParameter(
            "ssv_tail needs sizes, a t grid and trials".into(),
        ));
    }
    if !(cfg.delta > 0.0) || cfg.t_grid.iter().any(|&t| !(t >= 0.0)) {
        return Err(WeylError::InvalidParameter(
            "delta must be positive and t values nonnegative".into(),
        ));
    }
    let mut records = Vec::new();
    let mut failures = Vec::new();
    let mut sizes = Vec::new();
    for (k, &n) in cfg.sizes.iter().enumerate() {
        let x0 = base_matrix(&cfg.x0, n, cfg.allow_large)?;
        let side = x0.nrows();
        let start = k as u64 * cfg.trials;
        let (ok, failed) = run_trials(cfg.seed, start..start + cfg.trials, |_, seed| {
            let spec = PerturbationSpec::new(cfg.ensemble, cfg.delta, seed)?;
            let (m, _) = spec.apply(&x0)?;
            Ok(smallest_singular_value(&m)? / cfg.delta)
        })?;
        failures.extend(failed);
        let ratios: Vec<f64> = ok.iter().map(|(_, _, r)| *r).collect();
        let probabilities: Vec<f64> = cfg
            .t_grid
            .iter()
            .map(|&t| empirical_cdf(&ratios, t))
            .collect();
        let normalized: Vec<Option<f64>> = cfg
            .t_grid
            .iter()
            .zip(&probabilities)
            .map(|(&t, &p)| (t > 0.0).then(|| p / (side as f64 * t * t)))
            .collect();
        let c_hat = normalized.iter().flatten().copied().fold(0.0, f64::max);
        sizes.push(SsvSizeSummary {
            n: side,
            trials: ratios.len(),
            probabilities,
            normalized,
            c_hat,
        });
        records.extend(ok.into_iter().map(|(trial, seed, ratio)| SsvRecord {
            trial,
            seed,
            n: side,
            delta: cfg.delta,
            ratio,
        }));
    }
    let c_min = sizes.iter().map(|s| s.c_hat).fold(f64::INFINITY, f64::min);
    let c_max_observed = sizes.iter().map(|s| s.c_hat).fold(0.0, f64::max);
    let aggregate = SsvAggregate {
        c_variation: (c_max_observed - c_min) / c_min,
        bounded: cfg.c_max.map(|cap| c_max_observed <= cap),
        c_min,
        c_max_observed,
        sizes,
    };
    Ok(ExperimentReport::new(
        "ssv-tail",
        cfg.clone(),
        records,
        failures,
        aggregate,
    ))
}
