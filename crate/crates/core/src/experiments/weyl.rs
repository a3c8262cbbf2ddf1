//! Eigenvalue counts of `p_N + delta Q` in a region against the phase-space
//! volume `N^d vol(p^{-1}(Omega))`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{
    check_coupling, check_desk_scale, default_c1, default_dim, default_seed, fmt_f64, run_trials,
    CsvRecord, ExperimentReport, Region, SymbolSpec,
};
use crate::error::Result;
use crate::linalg::{eigenvalues, DEFAULT_EIG_TOL};
use crate::quantize::quantize;
use crate::random::{Ensemble, PerturbationSpec};
use crate::stats::{mean, std_dev};
use crate::symbols::{sample_fraction, volume_profile, Symbol};

/// Thresholds for the boundary `kappa` fit.
pub(crate) const KAPPA_THRESHOLDS: [f64; 10] =
    [1e-4, 2e-4, 5e-4, 1e-3, 2e-3, 5e-3, 1e-2, 2e-2, 5e-2, 0.1];
/// Boundary points used for the `kappa` estimate.
const KAPPA_SAMPLE_POINTS: usize = 16;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeylConfig {
    #[serde(default)]
    pub symbol: SymbolSpec,
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub region: Region,
    #[serde(default = "default_ensemble")]
    pub ensemble: Ensemble,
    pub delta: f64,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// `alpha`; defaults to `c_alpha / N`.
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default = "default_c_alpha")]
    pub c_alpha: f64,
    #[serde(default = "default_c1")]
    pub c1: f64,
    /// Constant `C` inside the logarithm of the default `epsilon`.
    #[serde(default = "default_c_log")]
    pub c_log: f64,
    /// Error parameter; defaults to ten times
    /// `alpha^kappa log(C N^{d/2} / (delta alpha^2)) + delta N^{d/2} alpha^{-1/2}`.
    #[serde(default)]
    pub epsilon: Option<f64>,
    /// Midpoint grid per torus axis for the phase-space volumes.
    #[serde(default)]
    pub grid_resolution: Option<usize>,
    #[serde(default = "default_kappa_resolution")]
    pub kappa_resolution: usize,
    #[serde(default)]
    pub allow_large: bool,
}

pub(crate) fn default_trials() -> u64 {
    10
}

pub(crate) fn default_ensemble() -> Ensemble {
    Ensemble::Ginibre
}

pub(crate) fn default_c_alpha() -> f64 {
    4.0
}

pub(crate) fn default_c_log() -> f64 {
    10.0
}

fn default_kappa_resolution() -> usize {
    256
}

/// Grid per axis giving a few million samples.
pub(crate) fn default_grid(d: usize) -> usize {
    match d {
        1 => 2048,
        2 => 40,
        _ => 12,
    }
}

impl WeylConfig {
    pub fn new(n: usize, region: Region, delta: f64) -> Self {
        Self {
            symbol: SymbolSpec::default(),
            dim: 1,
            n,
            region,
            ensemble: default_ensemble(),
            delta,
            trials: default_trials(),
            seed: default_seed(),
            alpha: None,
            c_alpha: default_c_alpha(),
            c1: default_c1(),
            c_log: default_c_log(),
            epsilon: None,
            grid_resolution: None,
            kappa_resolution: default_kappa_resolution(),
            allow_large: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeylRecord {
    pub trial: u64,
    pub seed: u64,
    #[serde(rename = "N")]
    pub n: usize,
    pub delta: f64,
    pub count: usize,
    pub predicted: f64,
    pub residual: f64,
}

impl CsvRecord for WeylRecord {
    fn header() -> Vec<&'static str> {
        vec![
            "trial",
            "seed",
            "N",
            "delta",
            "count",
            "predicted",
            "residual",
        ]
    }

    fn row(&self) -> Vec<String> {
        vec![
            self.trial.to_string(),
            self.seed.to_string(),
            self.n.to_string(),
            fmt_f64(self.delta),
            self.count.to_string(),
            fmt_f64(self.predicted),
            fmt_f64(self.residual),
        ]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeylAggregate {
    /// `N^d vol(p^{-1}(closure Omega))` from the midpoint grid.
    pub predicted: f64,
    pub mean_count: f64,
    pub std_count: f64,
    /// `|mean - predicted| / predicted`.
    pub relative_deviation: f64,
    pub successful_trials: usize,
    pub failed_trials: usize,
    pub alpha: f64,
    /// `delta C_1 N^{d/2} alpha^{-1/2}`.
    pub coupling: f64,
    /// Smallest fitted exponent over sampled boundary points.
    pub kappa_hat: Option<f64>,
    pub epsilon: Option<f64>,
    pub margin: f64,
    pub boundary_points: usize,
    pub boundary_spacing: f64,
    /// `vol(p^{-1}(boundary + D(0, r)))`.
    pub thickened_boundary_mass: f64,
    /// `N^d (vol(thickened boundary) + epsilon / r + r^kappa)`, unit constant.
    pub error_budget: Option<f64>,
}

pub type WeylReport = ExperimentReport<WeylConfig, WeylRecord, WeylAggregate>;

/// Smallest `kappa_hat` over up to [`KAPPA_SAMPLE_POINTS`] boundary points.
pub fn boundary_kappa(symbol: &Symbol, region: &Region, resolution: usize) -> Result<Option<f64>> {
    let pts = region.boundary_points();
    let stride = pts.len().div_ceil(KAPPA_SAMPLE_POINTS).max(1);
    let mut best: Option<f64> = None;
    for z in pts.iter().step_by(stride) {
        if let Some(k) = volume_profile(symbol, *z, &KAPPA_THRESHOLDS, resolution)?.kappa {
            best = Some(best.map_or(k, |b: f64| b.min(k)));
        }
    }
    Ok(best)
}

/// Default error parameter: ten times the lower bound.
pub(crate) fn default_epsilon(
    kappa: f64,
    n: usize,
    d: usize,
    delta: f64,
    alpha: f64,
    c_log: f64,
) -> Option<f64> {
    if !(delta > 0.0) {
        return None;
    }
    let half = (n as f64).powf(d as f64 / 2.0);
    let bound = alpha.powf(kappa) * (c_log * half / (delta * alpha * alpha)).ln()
        + delta * half / alpha.sqrt();
    Some(10.0 * bound)
}

pub fn weyl_count(cfg: &WeylConfig) -> Result<WeylReport> {
    cfg.region.validate()?;
    check_desk_scale(cfg.n, cfg.dim, cfg.allow_large)?;
    let symbol = cfg.symbol.resolve(cfg.dim)?;
    let n_d = cfg.n.pow(cfg.dim as u32);
    let alpha = cfg.alpha.unwrap_or(cfg.c_alpha / cfg.n as f64);
    let coupling = check_coupling(cfg.delta, cfg.n, cfg.dim, alpha, cfg.c1)?;
    let p = quantize(&symbol, cfg.n, None)?;

    let grid = cfg.grid_resolution.unwrap_or_else(|| default_grid(cfg.dim));
    let region = &cfg.region;
    let predicted = n_d as f64 * sample_fraction(&symbol, grid, |w| region.contains(w))?;
    let r = region.margin;
    let thickened = sample_fraction(&symbol, grid, |w| region.distance_to_boundary(w) < r)?;
    let kappa_hat = boundary_kappa(&symbol, region, cfg.kappa_resolution)?;
    let epsilon = cfg.epsilon.or_else(|| {
        default_epsilon(
            kappa_hat.unwrap_or(1.0),
            cfg.n,
            cfg.dim,
            cfg.delta,
            alpha,
            cfg.c_log,
        )
    });
    let error_budget = match (kappa_hat, epsilon) {
        (Some(k), Some(e)) => Some(n_d as f64 * (thickened + e / r + r.powf(k))),
        _ => None,
    };

    let (ok, failures) = run_trials(cfg.seed, 0..cfg.trials, |_, seed| {
        let spec = PerturbationSpec::new(cfg.ensemble, cfg.delta, seed)?;
        let (pd, _) = spec.apply(&p.matrix)?;
        let ev = eigenvalues(&pd, DEFAULT_EIG_TOL)?;
        Ok(ev.iter().filter(|&&z| region.contains(z)).count())
    })?;
    let records: Vec<WeylRecord> = ok
        .into_iter()
        .map(|(trial, seed, count)| WeylRecord {
            trial,
            seed,
            n: cfg.n,
            delta: cfg.delta,
            count,
            predicted,
            residual: count as f64 - predicted,
        })
        .collect();
    let counts: Vec<f64> = records.iter().map(|r| r.count as f64).collect();
    let mean_count = mean(&counts);
    let aggregate = WeylAggregate {
        predicted,
        mean_count,
        std_count: std_dev(&counts),
        relative_deviation: (mean_count - predicted).abs() / predicted,
        successful_trials: records.len(),
        failed_trials: failures.len(),
        alpha,
        coupling,
        kappa_hat,
        epsilon,
        margin: r,
        boundary_points: region.boundary_points().len(),
        boundary_spacing: region.boundary_spacing(),
        thickened_boundary_mass: thickened,
        error_budget,
    };
    Ok(ExperimentReport::new(
        "weyl-count",
        cfg.clone(),
        records,
        failures,
        aggregate,
    ))
}

/// Counts in each region of a partition, per trial (used to check that the
/// counts over a cover of the spectrum add up to `N^d`).
pub fn partition_counts(matrix_eigenvalues: &[Complex64], regions: &[Region]) -> Vec<usize> {
    regions
        .iter()
        .map(|r| {
            matrix_eigenvalues
                .iter()
                .filter(|&&z| r.contains(z))
                .count()
        })
        .collect()
}
