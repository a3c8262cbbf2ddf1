//! `(1/N^d) log|det(P^delta - z)|` against the logarithmic potential, and the
//! deterministic regularized determinant `sum log max(t_i^2, alpha)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::weyl::{default_c_alpha, default_ensemble};
use super::{
    check_coupling, check_desk_scale, default_c1, default_dim, default_seed, fmt_f64, run_trials,
    CsvRecord, ExperimentReport, SymbolSpec,
};
use crate::error::{Result, WeylError};
use crate::linalg::{singular_values, Lu};
use crate::quantize::quantize;
use crate::random::{Ensemble, PerturbationSpec};
use crate::stats::{mean, pairwise_sum, std_dev};
use crate::symbols::log_potential;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogdetConfig {
    #[serde(default)]
    pub symbol: SymbolSpec,
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub z_list: Vec<Complex64>,
    #[serde(default = "default_ensemble")]
    pub ensemble: Ensemble,
    pub delta: f64,
    #[serde(default = "default_logdet_trials")]
    pub trials: u64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_potential_resolution")]
    pub potential_resolution: usize,
    /// Points for the regularized check; defaults to `z_list`.
    #[serde(default)]
    pub regularized_z: Option<Vec<Complex64>>,
    #[serde(default = "default_alphas")]
    pub alphas: Vec<f64>,
    /// Allowed `|mean - phi|` per point.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_c_alpha")]
    pub c_alpha: f64,
    #[serde(default = "default_c1")]
    pub c1: f64,
    #[serde(default)]
    pub allow_large: bool,
}

fn default_logdet_trials() -> u64 {
    20
}

fn default_potential_resolution() -> usize {
    1024
}

fn default_alphas() -> Vec<f64> {
    vec![0.1, 0.05, 0.02, 0.01]
}

fn default_tolerance() -> f64 {
    1e-2
}

impl LogdetConfig {
    pub fn new(n: usize, z_list: Vec<Complex64>, delta: f64) -> Self {
        Self {
            symbol: SymbolSpec::default(),
            dim: 1,
            n,
            z_list,
            ensemble: default_ensemble(),
            delta,
            trials: default_logdet_trials(),
            seed: default_seed(),
            potential_resolution: default_potential_resolution(),
            regularized_z: None,
            alphas: default_alphas(),
            tolerance: default_tolerance(),
            c_alpha: default_c_alpha(),
            c1: default_c1(),
            allow_large: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogdetRecord {
    pub trial: u64,
    pub seed: u64,
    #[serde(rename = "N")]
    pub n: usize,
    pub delta: f64,
    pub z: Complex64,
    /// `(1/N^d) log|det(P^delta - z)|`; absent for a singular matrix.
    pub value: Option<f64>,
}

impl CsvRecord for LogdetRecord {
    fn header() -> Vec<&'static str> {
        vec!["trial", "seed", "N", "delta", "z_re", "z_im", "value"]
    }

    fn row(&self) -> Vec<String> {
        vec![
            self.trial.to_string(),
            self.seed.to_string(),
            self.n.to_string(),
            fmt_f64(self.delta),
            fmt_f64(self.z.re),
            fmt_f64(self.z.im),
            self.value.map(fmt_f64).unwrap_or_else(|| "-inf".into()),
        ]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZSummary {
    pub z: Complex64,
    /// Midpoint-rule `int log|p - z|`.
    pub phi: f64,
    pub mean: f64,
    pub std: f64,
    /// `mean - phi`.
    pub bias: f64,
    pub max_abs_deviation: f64,
    pub singular_trials: usize,
    pub within_tolerance: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularizedPoint {
    pub alpha: f64,
    /// `(1/N^d) sum log max(t_i^2, alpha)`.
    pub regularized: f64,
    /// `|regularized - 2 phi|`.
    pub discrepancy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularizedSummary {
    pub z: Complex64,
    /// `int log|p - z|^2 = 2 phi`.
    pub target: f64,
    pub points: Vec<RegularizedPoint>,
    /// Discrepancy at the smallest alpha is below the one at the largest.
    pub improves: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogdetAggregate {
    pub per_z: Vec<ZSummary>,
    pub regularized: Vec<RegularizedSummary>,
    pub coupling: f64,
}

pub type LogdetReport = ExperimentReport<LogdetConfig, LogdetRecord, LogdetAggregate>;

pub fn logdet_concentration(cfg: &LogdetConfig) -> Result<LogdetReport> {
    if cfg.z_list.is_empty() {
        return Err(WeylError::InvalidParameter(
            "logdet needs at least one z".into(),
        ));
    }
    if cfg.alphas.iter().any(|&a| !(a > 0.0)) {
        return Err(WeylError::InvalidParameter(
            "alpha values must be positive".into(),
        ));
    }
    check_desk_scale(cfg.n, cfg.dim, cfg.allow_large)?;
    let coupling = check_coupling(
        cfg.delta,
        cfg.n,
        cfg.dim,
        cfg.c_alpha / cfg.n as f64,
        cfg.c1,
    )?;
    let symbol = cfg.symbol.resolve(cfg.dim)?;
    let p = quantize(&symbol, cfg.n, None)?;
    let size = p.size() as f64;

    let (ok, failures) = run_trials(cfg.seed, 0..cfg.trials, |_, seed| {
        let spec = PerturbationSpec::new(cfg.ensemble, cfg.delta, seed)?;
        let (pd, _) = spec.apply(&p.matrix)?;
        cfg.z_list
            .iter()
            .map(|&z| {
                Ok(Lu::new(&pd.shifted(z))?
                    .log_abs_det()
                    .finite()
                    .map(|v| v / size))
            })
            .collect::<Result<Vec<Option<f64>>>>()
    })?;
    let mut records = Vec::new();
    for (trial, seed, values) in &ok {
        for (&z, &value) in cfg.z_list.iter().zip(values) {
            records.push(LogdetRecord {
                trial: *trial,
                seed: *seed,
                n: cfg.n,
                delta: cfg.delta,
                z,
                value,
            });
        }
    }

    let mut per_z = Vec::new();
    for (k, &z) in cfg.z_list.iter().enumerate() {
        let phi = log_potential(&symbol, z, cfg.potential_resolution)?;
        let vals: Vec<f64> = ok.iter().filter_map(|(_, _, v)| v[k]).collect();
        let m = mean(&vals);
        let max_abs_deviation = vals.iter().map(|v| (v - phi).abs()).fold(0.0, f64::max);
        per_z.push(ZSummary {
            z,
            phi,
            mean: m,
            std: std_dev(&vals),
            bias: m - phi,
            max_abs_deviation,
            singular_trials: ok.len() - vals.len(),
            within_tolerance: (m - phi).abs() <= cfg.tolerance,
        });
    }

    let reg_points = cfg
        .regularized_z
        .clone()
        .unwrap_or_else(|| cfg.z_list.clone());
    let mut regularized = Vec::new();
    for z in reg_points {
        let target = 2.0 * log_potential(&symbol, z, cfg.potential_resolution)?;
        let t = singular_values(&p.matrix.shifted(z))?;
        let points: Vec<RegularizedPoint> = cfg
            .alphas
            .iter()
            .map(|&alpha| {
                let terms: Vec<f64> = t.iter().map(|&ti| (ti * ti).max(alpha).ln()).collect();
                let regularized = pairwise_sum(&terms) / size;
                RegularizedPoint {
                    alpha,
                    regularized,
                    discrepancy: (regularized - target).abs(),
                }
            })
            .collect();
        let smallest = points
            .iter()
            .min_by(|a, b| a.alpha.total_cmp(&b.alpha))
            .expect("nonempty");
        let largest = points
            .iter()
            .max_by(|a, b| a.alpha.total_cmp(&b.alpha))
            .expect("nonempty");
        regularized.push(RegularizedSummary {
            z,
            target,
            improves: smallest.discrepancy < largest.discrepancy,
            points,
        });
    }
    let aggregate = LogdetAggregate {
        per_z,
        regularized,
        coupling,
    };
    Ok(ExperimentReport::new(
        "logdet",
        cfg.clone(),
        records,
        failures,
        aggregate,
    ))
}
