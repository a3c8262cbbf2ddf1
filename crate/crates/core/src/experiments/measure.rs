//! Empirical eigenvalue measures of `p_N + delta Q` against the pushforward
//! `p_*(drho)`, with `delta = N^{-d/2 - delta0} / C`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::weyl::{default_c_alpha, default_ensemble, default_grid, default_trials};
use super::{
    check_coupling, check_desk_scale, default_c1, default_dim, default_seed, fmt_f64, run_trials,
    CsvRecord, ExperimentReport, SymbolSpec,
};
use crate::error::{Result, WeylError};
use crate::linalg::{eigenvalues, DEFAULT_EIG_TOL};
use crate::quantize::quantize;
use crate::random::{Ensemble, PerturbationSpec};
use crate::stats::{linear_fit, mean, pairwise_sum};
use crate::symbols::{pushforward, CellGrid, GridSampler, Symbol};

/// Bounded Lipschitz test functions on `C`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestFunction {
    Constant {
        value: f64,
    },
    /// `max(0, 1 - |w - center| / radius)`.
    Tent {
        center: Complex64,
        radius: f64,
    },
}

impl TestFunction {
    pub fn eval(&self, w: Complex64) -> f64 {
        match *self {
            TestFunction::Constant { value } => value,
            TestFunction::Tent { center, radius } => (1.0 - (w - center).norm() / radius).max(0.0),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureConfig {
    #[serde(default)]
    pub symbol: SymbolSpec,
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(rename = "N")]
    pub ns: Vec<usize>,
    #[serde(default = "default_delta0")]
    pub delta0: f64,
    /// Constant `C` in `delta = N^{-d/2 - delta0} / C`.
    #[serde(default = "default_c")]
    pub c: f64,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_ensemble")]
    pub ensemble: Ensemble,
    /// Cell family; defaults to 4 x 4 cells over the bounding box of the range.
    #[serde(default)]
    pub cells: Option<CellGrid>,
    /// Defaults to the constant 1 plus tents on a 3 x 3 grid of the box.
    #[serde(default)]
    pub test_functions: Option<Vec<TestFunction>>,
    #[serde(default)]
    pub grid_resolution: Option<usize>,
    #[serde(default = "default_c_alpha")]
    pub c_alpha: f64,
    #[serde(default = "default_c1")]
    pub c1: f64,
    #[serde(default)]
    pub allow_large: bool,
}

fn default_delta0() -> f64 {
    2.0
}

fn default_c() -> f64 {
    10.0
}

impl MeasureConfig {
    pub fn new(ns: Vec<usize>) -> Self {
        Self {
            symbol: SymbolSpec::default(),
            dim: 1,
            ns,
            delta0: default_delta0(),
            c: default_c(),
            trials: default_trials(),
            seed: default_seed(),
            ensemble: default_ensemble(),
            cells: None,
            test_functions: None,
            grid_resolution: None,
            c_alpha: default_c_alpha(),
            c1: default_c1(),
            allow_large: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureRecord {
    pub trial: u64,
    pub seed: u64,
    #[serde(rename = "N")]
    pub n: usize,
    pub delta: f64,
    /// `max_cell |mu_N(cell) - mu(cell)|`.
    pub cell_distance: f64,
    /// `max_f |int f dmu_N - int f dmu|`.
    pub bl_distance: f64,
    /// `int 1 dmu_N`.
    pub total_mass: f64,
    pub cell_deviations: Vec<f64>,
}

impl CsvRecord for MeasureRecord {
    fn header() -> Vec<&'static str> {
        vec![
            "trial",
            "seed",
            "N",
            "delta",
            "cell_distance",
            "bl_distance",
            "total_mass",
        ]
    }

    fn row(&self) -> Vec<String> {
        vec![
            self.trial.to_string(),
            self.seed.to_string(),
            self.n.to_string(),
            fmt_f64(self.delta),
            fmt_f64(self.cell_distance),
            fmt_f64(self.bl_distance),
            fmt_f64(self.total_mass),
        ]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureSizeSummary {
    #[serde(rename = "N")]
    pub n: usize,
    pub delta: f64,
    pub coupling: f64,
    pub mean_cell_distance: f64,
    pub mean_bl_distance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureAggregate {
    pub cells: CellGrid,
    pub test_functions: Vec<TestFunction>,
    pub reference_cell_masses: Vec<f64>,
    pub sizes: Vec<MeasureSizeSummary>,
    /// Fraction of (cell, trial) pairs whose deviation is smaller at the
    /// largest `N` than at the smallest.
    pub decrease_fraction: Option<f64>,
    /// Slope of `log mean cell distance` against `log N`.
    pub cell_distance_slope: Option<f64>,
}

pub type MeasureReport = ExperimentReport<MeasureConfig, MeasureRecord, MeasureAggregate>;

pub(crate) fn range_box(symbol: &Symbol, resolution: usize) -> Result<((f64, f64), (f64, f64))> {
    let sampler = GridSampler::new(symbol, resolution)?;
    let rows = sampler.fold_rows(
        || {
            [
                f64::INFINITY,
                f64::NEG_INFINITY,
                f64::INFINITY,
                f64::NEG_INFINITY,
            ]
        },
        |b, _, w| {
            b[0] = b[0].min(w.re);
            b[1] = b[1].max(w.re);
            b[2] = b[2].min(w.im);
            b[3] = b[3].max(w.im);
        },
    );
    let b = rows.into_iter().fold(
        [
            f64::INFINITY,
            f64::NEG_INFINITY,
            f64::INFINITY,
            f64::NEG_INFINITY,
        ],
        |a, r| {
            [
                a[0].min(r[0]),
                a[1].max(r[1]),
                a[2].min(r[2]),
                a[3].max(r[3]),
            ]
        },
    );
    // a degenerate side (e.g. a real or constant symbol) gets unit width
    let widen = |lo: f64, hi: f64| {
        if hi - lo > 1e-9 {
            (lo, hi)
        } else {
            (lo - 0.5, hi + 0.5)
        }
    };
    Ok((widen(b[0], b[1]), widen(b[2], b[3])))
}

fn default_test_functions(cells: &CellGrid) -> Vec<TestFunction> {
    let mut out = vec![TestFunction::Constant { value: 1.0 }];
    let (w, h) = (cells.re_max - cells.re_min, cells.im_max - cells.im_min);
    let radius = w.min(h) / 3.0;
    for iy in 0..3 {
        for ix in 0..3 {
            let center = Complex64::new(
                cells.re_min + (ix as f64 + 0.5) * w / 3.0,
                cells.im_min + (iy as f64 + 0.5) * h / 3.0,
            );
            out.push(TestFunction::Tent { center, radius });
        }
    }
    out
}

fn reference_integral(symbol: &Symbol, resolution: usize, f: &TestFunction) -> Result<f64> {
    let sampler = GridSampler::new(symbol, resolution)?;
    let rows = sampler.fold_rows(|| 0.0, |acc, _, w| *acc += f.eval(w));
    Ok(pairwise_sum(&rows) / sampler.num_points() as f64)
}

pub fn measure_convergence(cfg: &MeasureConfig) -> Result<MeasureReport> {
    if cfg.ns.is_empty() || cfg.trials == 0 {
        return Err(WeylError::InvalidParameter(
            "measure needs N values and trials".into(),
        ));
    }
    let symbol = cfg.symbol.resolve(cfg.dim)?;
    let grid = cfg.grid_resolution.unwrap_or_else(|| default_grid(cfg.dim));
    let cells = match &cfg.cells {
        Some(c) => c.clone(),
        None => {
            let (re, im) = range_box(&symbol, grid)?;
            CellGrid::new(re, im, 4, 4)?
        }
    };
    let tests = cfg
        .test_functions
        .clone()
        .unwrap_or_else(|| default_test_functions(&cells));
    let reference = pushforward(&symbol, grid, &cells)?;
    let ref_integrals: Vec<f64> = tests
        .iter()
        .map(|f| reference_integral(&symbol, grid, f))
        .collect::<Result<_>>()?;

    let mut records = Vec::new();
    let mut failures = Vec::new();
    let mut sizes = Vec::new();
    for (k, &n) in cfg.ns.iter().enumerate() {
        check_desk_scale(n, cfg.dim, cfg.allow_large)?;
        let delta = (n as f64).powf(-(cfg.dim as f64) / 2.0 - cfg.delta0) / cfg.c;
        let coupling = check_coupling(delta, n, cfg.dim, cfg.c_alpha / n as f64, cfg.c1)?;
        let p = quantize(&symbol, n, None)?;
        let weight = 1.0 / p.size() as f64;
        let start = k as u64 * cfg.trials;
        let (ok, failed) = run_trials(cfg.seed, start..start + cfg.trials, |_, seed| {
            let spec = PerturbationSpec::new(cfg.ensemble, delta, seed)?;
            let (pd, _) = spec.apply(&p.matrix)?;
            let ev = eigenvalues(&pd, DEFAULT_EIG_TOL)?;
            let mut counts = vec![0usize; cells.len()];
            for &z in &ev {
                if let Some(c) = cells.cell_of(z) {
                    counts[c] += 1;
                }
            }
            let deviations: Vec<f64> = counts
                .iter()
                .zip(&reference.masses)
                .map(|(&c, &m)| (c as f64 * weight - m).abs())
                .collect();
            let integrals: Vec<f64> = tests
                .iter()
                .map(|f| pairwise_sum(&ev.iter().map(|&z| f.eval(z)).collect::<Vec<_>>()) * weight)
                .collect();
            let bl = integrals
                .iter()
                .zip(&ref_integrals)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            Ok((deviations, bl, ev.len() as f64 * weight))
        })?;
        failures.extend(failed);
        for (trial, seed, (deviations, bl, total)) in ok {
            records.push(MeasureRecord {
                trial,
                seed,
                n,
                delta,
                cell_distance: deviations.iter().copied().fold(0.0, f64::max),
                bl_distance: bl,
                total_mass: total,
                cell_deviations: deviations,
            });
        }
        let mine: Vec<&MeasureRecord> = records.iter().filter(|r| r.n == n).collect();
        sizes.push(MeasureSizeSummary {
            n,
            delta,
            coupling,
            mean_cell_distance: mean(&mine.iter().map(|r| r.cell_distance).collect::<Vec<_>>()),
            mean_bl_distance: mean(&mine.iter().map(|r| r.bl_distance).collect::<Vec<_>>()),
        });
    }

    let n_min = *cfg.ns.iter().min().expect("nonempty");
    let n_max = *cfg.ns.iter().max().expect("nonempty");
    let decrease_fraction = (n_min != n_max).then(|| {
        let offset =
            |n: usize| cfg.ns.iter().position(|&m| m == n).expect("listed") as u64 * cfg.trials;
        let (lo, hi) = (offset(n_min), offset(n_max));
        let mut pairs = 0usize;
        let mut decreased = 0usize;
        for i in 0..cfg.trials {
            let a = records.iter().find(|r| r.n == n_min && r.trial == lo + i);
            let b = records.iter().find(|r| r.n == n_max && r.trial == hi + i);
            if let (Some(a), Some(b)) = (a, b) {
                for (x, y) in a.cell_deviations.iter().zip(&b.cell_deviations) {
                    pairs += 1;
                    if y < x {
                        decreased += 1;
                    }
                }
            }
        }
        decreased as f64 / pairs.max(1) as f64
    });
    let (xs, ys): (Vec<f64>, Vec<f64>) = sizes
        .iter()
        .filter(|s| s.mean_cell_distance > 0.0)
        .map(|s| ((s.n as f64).ln(), s.mean_cell_distance.ln()))
        .unzip();
    let cell_distance_slope = linear_fit(&xs, &ys).ok().map(|f| f.slope);
    let aggregate = MeasureAggregate {
        cells,
        test_functions: tests,
        reference_cell_masses: reference.masses,
        sizes,
        decrease_fraction,
        cell_distance_slope,
    };
    Ok(ExperimentReport::new(
        "measure",
        cfg.clone(),
        records,
        failures,
        aggregate,
    ))
}
