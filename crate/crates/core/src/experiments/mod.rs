//! Seeded Monte Carlo experiments on perturbed quantizations.
//!
//! Every experiment takes a serializable config and returns an
//! [`ExperimentReport`] whose numeric content is a pure function of that
//! config: trial `i` draws from `derive_trial_seed(seed, i)`, trials run in
//! parallel and are collected in index order, and wall-clock time is only
//! attached on request.

mod logdet;
mod measure;
mod presets;
mod resolvent;
mod small_sv;
mod spectrum;
mod ssv;
mod weyl;

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, WeylError};
use crate::random::{derive_trial_seed, GENERATOR};
use crate::symbols::Symbol;

pub use logdet::{
    logdet_concentration, LogdetAggregate, LogdetConfig, LogdetRecord, LogdetReport,
    RegularizedPoint, RegularizedSummary, ZSummary,
};
pub use measure::{
    measure_convergence, MeasureAggregate, MeasureConfig, MeasureRecord, MeasureReport,
    MeasureSizeSummary, TestFunction,
};
pub use presets::{corollary_presets, PresetParams, ResolvedPreset, PRESET_NAMES};
pub use resolvent::{
    resolvent_growth, ResolventAggregate, ResolventConfig, ResolventRecord, ResolventReport, ZClass,
};
pub use small_sv::{
    default_alphas, small_sv_count, SlopeFit, SmallSvAggregate, SmallSvConfig, SmallSvRecord,
    SmallSvReport, MIN_FIT_POINTS,
};
pub use spectrum::{spectrum, EigenvalueRecord, SpectrumAggregate, SpectrumConfig, SpectrumReport};
pub use ssv::{ssv_tail, SsvAggregate, SsvConfig, SsvRecord, SsvReport, SsvSizeSummary, X0Spec};
pub use weyl::{
    boundary_kappa, partition_counts, weyl_count, WeylAggregate, WeylConfig, WeylRecord, WeylReport,
};

/// Largest matrix side `N^d` run without `allow_large`.
pub const DESK_SCALE_LIMIT: usize = 1024;
pub const DEFAULT_SEED: u64 = 20_240_601;
/// Default `C_1` in `||Q|| <= C_1 N^{d/2}` for the coupling precondition.
pub const DEFAULT_C1: f64 = 2.5;

/// A symbol given by built-in name or as an inline coefficient document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SymbolSpec {
    Name(String),
    Inline(Symbol),
}

impl SymbolSpec {
    pub fn resolve(&self, dim: usize) -> Result<Symbol> {
        match self {
            SymbolSpec::Name(name) => Symbol::named(name, dim),
            SymbolSpec::Inline(s) => {
                if s.dim() != dim {
                    return Err(WeylError::DimensionMismatch(format!(
                        "inline symbol has d = {}, config says d = {dim}",
                        s.dim()
                    )));
                }
                Ok(s.clone())
            }
        }
    }
}

impl Default for SymbolSpec {
    fn default() -> Self {
        SymbolSpec::Name("scottish-flag".into())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Shape {
    Rect {
        re_min: f64,
        re_max: f64,
        im_min: f64,
        im_max: f64,
    },
    Disc {
        center: Complex64,
        radius: f64,
    },
}

/// Open region `Omega` with boundary margin `r`. Counting uses the closure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Region {
    #[serde(flatten)]
    pub shape: Shape,
    pub margin: f64,
}

impl Region {
    pub fn rect(re: (f64, f64), im: (f64, f64), margin: f64) -> Result<Self> {
        let r = Region {
            shape: Shape::Rect {
                re_min: re.0,
                re_max: re.1,
                im_min: im.0,
                im_max: im.1,
            },
            margin,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn disc(center: Complex64, radius: f64, margin: f64) -> Result<Self> {
        let r = Region {
            shape: Shape::Disc { center, radius },
            margin,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self.shape {
            Shape::Rect {
                re_min,
                re_max,
                im_min,
                im_max,
            } => re_min < re_max && im_min < im_max,
            Shape::Disc { radius, .. } => radius > 0.0,
        };
        if !ok || !(self.margin > 0.0) {
            return Err(WeylError::InvalidParameter(format!(
                "degenerate region {self:?}"
            )));
        }
        Ok(())
    }

    /// Closed-region membership.
    pub fn contains(&self, w: Complex64) -> bool {
        match self.shape {
            Shape::Rect {
                re_min,
                re_max,
                im_min,
                im_max,
            } => w.re >= re_min && w.re <= re_max && w.im >= im_min && w.im <= im_max,
            Shape::Disc { center, radius } => (w - center).norm() <= radius,
        }
    }

    pub fn distance_to_boundary(&self, w: Complex64) -> f64 {
        match self.shape {
            Shape::Rect {
                re_min,
                re_max,
                im_min,
                im_max,
            } => {
                let dx = (re_min - w.re).max(w.re - re_max);
                let dy = (im_min - w.im).max(w.im - im_max);
                if dx <= 0.0 && dy <= 0.0 {
                    (-dx).min(-dy)
                } else {
                    dx.max(0.0).hypot(dy.max(0.0))
                }
            }
            Shape::Disc { center, radius } => ((w - center).norm() - radius).abs(),
        }
    }

    pub fn perimeter(&self) -> f64 {
        match self.shape {
            Shape::Rect {
                re_min,
                re_max,
                im_min,
                im_max,
            } => 2.0 * (re_max - re_min + im_max - im_min),
            Shape::Disc { radius, .. } => 2.0 * PI * radius,
        }
    }

    /// Point at arc length `s` along the boundary, counterclockwise from
    /// the lower-left corner (rectangle) or the rightmost point (disc).
    pub fn boundary_point(&self, s: f64) -> Complex64 {
        match self.shape {
            Shape::Rect {
                re_min,
                re_max,
                im_min,
                im_max,
            } => {
                let (w, h) = (re_max - re_min, im_max - im_min);
                let s = s.rem_euclid(self.perimeter());
                if s < w {
                    Complex64::new(re_min + s, im_min)
                } else if s < w + h {
                    Complex64::new(re_max, im_min + s - w)
                } else if s < 2.0 * w + h {
                    Complex64::new(re_max - (s - w - h), im_max)
                } else {
                    Complex64::new(re_min, im_max - (s - 2.0 * w - h))
                }
            }
            Shape::Disc { center, radius } => center + Complex64::from_polar(radius, s / radius),
        }
    }

    /// Boundary points `z_j` at equal arc-length spacing as close as possible
    /// to `r/3`; the spacing always lies in `[r/4, r/2]` once the boundary is
    /// longer than `r/2`.
    pub fn boundary_points(&self) -> Vec<Complex64> {
        let l = self.perimeter();
        let k = ((3.0 * l / self.margin).round() as usize).max(2);
        (0..k)
            .map(|j| self.boundary_point(l * j as f64 / k as f64))
            .collect()
    }

    pub fn boundary_spacing(&self) -> f64 {
        self.perimeter() / self.boundary_points().len() as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialFailure {
    pub trial: u64,
    pub seed: u64,
    pub error: String,
}

/// Common envelope: config echo, per-trial records, aggregate statistics.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentReport<C, R, A> {
    pub experiment: String,
    pub version: String,
    pub generator: String,
    pub config: C,
    pub records: Vec<R>,
    pub failures: Vec<TrialFailure>,
    pub aggregate: A,
    /// Only set when timing is requested, so default reports are byte-stable.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_clock_seconds: Option<f64>,
}

impl<C, R, A> ExperimentReport<C, R, A> {
    fn new(
        experiment: &str,
        config: C,
        records: Vec<R>,
        failures: Vec<TrialFailure>,
        aggregate: A,
    ) -> Self {
        Self {
            experiment: experiment.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            generator: GENERATOR.to_string(),
            config,
            records,
            failures,
            aggregate,
            wall_clock_seconds: None,
        }
    }
}

impl<C: Serialize, R: Serialize, A: Serialize> ExperimentReport<C, R, A> {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

impl<C, R: CsvRecord, A> ExperimentReport<C, R, A> {
    pub fn to_csv(&self) -> String {
        to_csv(&self.records)
    }
}

/// Flat per-trial rows for CSV export.
pub trait CsvRecord {
    fn header() -> Vec<&'static str>;
    fn row(&self) -> Vec<String>;
}

pub fn to_csv<R: CsvRecord>(records: &[R]) -> String {
    let mut out = R::header().join(",");
    out.push('\n');
    for r in records {
        out.push_str(&r.row().join(","));
        out.push('\n');
    }
    out
}

/// `{}` formatting of an f64 is the shortest round-trip form, so CSV is as
/// reproducible as JSON.
pub(crate) fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

pub(crate) fn check_desk_scale(n: usize, d: usize, allow_large: bool) -> Result<()> {
    if n == 0 {
        return Err(WeylError::InvalidParameter("N must be at least 1".into()));
    }
    let size = (n as u128).pow(d as u32);
    if size > DESK_SCALE_LIMIT as u128 && !allow_large {
        return Err(WeylError::InvalidParameter(format!(
            "N^d = {size} exceeds the desk-scale limit {DESK_SCALE_LIMIT}; set allow_large to override"
        )));
    }
    Ok(())
}

/// `delta C_1 N^{d/2} alpha^{-1/2}`, required to be at most `1/2`.
pub(crate) fn check_coupling(delta: f64, n: usize, d: usize, alpha: f64, c1: f64) -> Result<f64> {
    if !(delta >= 0.0) || !delta.is_finite() {
        return Err(WeylError::InvalidParameter(format!(
            "delta must be finite and >= 0, got {delta}"
        )));
    }
    let value = delta * c1 * (n as f64).powf(d as f64 / 2.0) / alpha.sqrt();
    if value > 0.5 {
        return Err(WeylError::Precondition(format!(
            "delta C1 N^(d/2) alpha^(-1/2) = {value:.3e} > 1/2 (delta = {delta:e}, alpha = {alpha:e})"
        )));
    }
    Ok(value)
}

/// Successful `(trial, seed, value)` triples and the collected failures.
pub(crate) type TrialResults<T> = (Vec<(u64, u64, T)>, Vec<TrialFailure>);

/// Runs `f(trial, seed)` for `trials` in parallel, in index order. Numerical
/// failures are collected; any other error aborts.
pub(crate) fn run_trials<T, F>(
    master: u64,
    trials: std::ops::Range<u64>,
    f: F,
) -> Result<TrialResults<T>>
where
    T: Send,
    F: Fn(u64, u64) -> Result<T> + Sync,
{
    let results: Vec<(u64, u64, Result<T>)> = trials
        .into_par_iter()
        .map(|i| {
            let seed = derive_trial_seed(master, i);
            (i, seed, f(i, seed))
        })
        .collect();
    let mut ok = Vec::with_capacity(results.len());
    let mut failed = Vec::new();
    for (i, seed, r) in results {
        match r {
            Ok(v) => ok.push((i, seed, v)),
            Err(e) if e.is_numerical() => failed.push(TrialFailure {
                trial: i,
                seed,
                error: e.to_string(),
            }),
            Err(e) => return Err(e),
        }
    }
    Ok((ok, failed))
}

fn default_dim() -> usize {
    1
}

fn default_c1() -> f64 {
    DEFAULT_C1
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}
