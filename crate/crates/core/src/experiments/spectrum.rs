//! Eigenvalues of one perturbed instance `p_N + delta Q`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::measure::range_box;
use super::weyl::default_ensemble;
use super::{
    check_desk_scale, default_dim, default_seed, fmt_f64, CsvRecord, ExperimentReport, SymbolSpec,
};
use crate::error::Result;
use crate::linalg::{LogAbsDet, SpectralData, SpectralSource};
use crate::quantize::quantize;
use crate::random::{derive_trial_seed, Ensemble, PerturbationSpec};

/// Grid resolution for the range bounding box.
const RANGE_RESOLUTION: usize = 256;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumConfig {
    #[serde(default)]
    pub symbol: SymbolSpec,
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(default = "default_ensemble")]
    pub ensemble: Ensemble,
    #[serde(default)]
    pub delta: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub singular_values: bool,
    #[serde(default)]
    pub allow_large: bool,
}

impl SpectrumConfig {
    pub fn new(n: usize, delta: f64) -> Self {
        Self {
            symbol: SymbolSpec::default(),
            dim: 1,
            n,
            ensemble: default_ensemble(),
            delta,
            seed: default_seed(),
            singular_values: false,
            allow_large: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenvalueRecord {
    pub index: usize,
    pub re: f64,
    pub im: f64,
}

impl CsvRecord for EigenvalueRecord {
    fn header() -> Vec<&'static str> {
        vec!["index", "re", "im"]
    }

    fn row(&self) -> Vec<String> {
        vec![self.index.to_string(), fmt_f64(self.re), fmt_f64(self.im)]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumAggregate {
    /// Seed of the perturbation actually drawn (trial 0 of the master seed).
    pub trial_seed: u64,
    pub log_abs_det: LogAbsDet,
    pub singular_values: Option<Vec<f64>>,
    /// `|sum lambda - tr(P)|`.
    pub trace_residual: f64,
    /// Bounding box of the symbol's range, `[re_min, re_max, im_min, im_max]`.
    pub range_box: [f64; 4],
    /// Largest distance from an eigenvalue to the range box.
    pub max_outside_distance: f64,
}

pub type SpectrumReport = ExperimentReport<SpectrumConfig, EigenvalueRecord, SpectrumAggregate>;

pub fn spectrum(cfg: &SpectrumConfig) -> Result<SpectrumReport> {
    check_desk_scale(cfg.n, cfg.dim, cfg.allow_large)?;
    let symbol = cfg.symbol.resolve(cfg.dim)?;
    let p = quantize(&symbol, cfg.n, None)?;
    let trial_seed = derive_trial_seed(cfg.seed, 0);
    let (m, _) = PerturbationSpec::new(cfg.ensemble, cfg.delta, trial_seed)?.apply(&p.matrix)?;
    let source = SpectralSource {
        operator: symbol.label().to_string(),
        shift: Complex64::new(0.0, 0.0),
        seed: Some(trial_seed),
    };
    let data = SpectralData::compute(&m, source, cfg.singular_values)?;
    let inv = data.invariants(&m);
    let ((re_min, re_max), (im_min, im_max)) = range_box(&symbol, RANGE_RESOLUTION)?;
    let outside = |w: &Complex64| {
        let dx = (re_min - w.re).max(w.re - re_max).max(0.0);
        let dy = (im_min - w.im).max(w.im - im_max).max(0.0);
        dx.hypot(dy)
    };
    let max_outside_distance = data.eigenvalues.iter().map(outside).fold(0.0, f64::max);
    let records = data
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(index, w)| EigenvalueRecord {
            index,
            re: w.re,
            im: w.im,
        })
        .collect();
    let aggregate = SpectrumAggregate {
        trial_seed,
        log_abs_det: data.log_abs_det,
        singular_values: data.singular_values,
        trace_residual: inv.trace_residual,
        range_box: [re_min, re_max, im_min, im_max],
        max_outside_distance,
    };
    Ok(ExperimentReport::new(
        "spectrum",
        cfg.clone(),
        records,
        Vec::new(),
        aggregate,
    ))
}
