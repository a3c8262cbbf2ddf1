//! Growth of `||(p_N - z0)^{-1}||` in `N`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{check_desk_scale, default_dim, fmt_f64, CsvRecord, ExperimentReport, SymbolSpec};
use crate::error::{Result, WeylError};
use crate::linalg::{resolvent_norm, ResolventNorm};
use crate::quantize::quantize;
use crate::stats::linear_fit;
use crate::symbols::{poisson_bracket, GridSampler, Symbol};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResolventConfig {
    #[serde(default)]
    pub symbol: SymbolSpec,
    #[serde(default = "default_dim")]
    pub dim: usize,
    pub z0: Complex64,
    #[serde(rename = "N")]
    pub ns: Vec<usize>,
    #[serde(default = "default_grid")]
    pub grid_resolution: usize,
    /// `|{p, conj p}|` below this counts as vanishing.
    #[serde(default = "default_bracket_tol")]
    pub bracket_tol: f64,
    /// Required norm ratio per doubling for interior points.
    #[serde(default = "default_growth_factor")]
    pub growth_factor: f64,
    /// Growth is checked between consecutive `N` from this level on.
    #[serde(default = "default_growth_from")]
    pub growth_from: usize,
    /// Allowed max/min norm ratio for points outside the range.
    #[serde(default = "default_outside_ratio")]
    pub outside_ratio: f64,
    #[serde(default)]
    pub allow_large: bool,
}

fn default_grid() -> usize {
    512
}

fn default_bracket_tol() -> f64 {
    1e-6
}

fn default_growth_factor() -> f64 {
    10.0
}

fn default_growth_from() -> usize {
    64
}

fn default_outside_ratio() -> f64 {
    2.0
}

impl ResolventConfig {
    pub fn new(z0: Complex64, ns: Vec<usize>) -> Self {
        Self {
            symbol: SymbolSpec::default(),
            dim: 1,
            z0,
            ns,
            grid_resolution: default_grid(),
            bracket_tol: default_bracket_tol(),
            growth_factor: default_growth_factor(),
            growth_from: default_growth_from(),
            outside_ratio: default_outside_ratio(),
            allow_large: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZClass {
    /// Grid preimages exist and the bracket is nonzero on some of them.
    Interior,
    /// No grid sample maps within the sampling error of `z0`.
    Outside,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResolventRecord {
    #[serde(rename = "N")]
    pub n: usize,
    pub norm: ResolventNorm,
    pub log10_norm: f64,
}

impl CsvRecord for ResolventRecord {
    fn header() -> Vec<&'static str> {
        vec!["N", "norm", "log10_norm"]
    }

    fn row(&self) -> Vec<String> {
        let norm = self
            .norm
            .finite()
            .map(fmt_f64)
            .unwrap_or_else(|| "inf".into());
        vec![self.n.to_string(), norm, fmt_f64(self.log10_norm)]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResolventAggregate {
    pub class: ZClass,
    /// `min |p - z0|` over the grid.
    pub distance_estimate: f64,
    pub preimage_samples: usize,
    pub max_bracket_on_preimage: f64,
    /// `norm(N_{k+1}) / norm(N_k)` for consecutive entries.
    pub ratios: Vec<f64>,
    /// Slope of `log norm` against `log N`.
    pub log_slope: Option<f64>,
    /// Interior: slope above 3 over a span `N_max / N_min >= 4`.
    pub superpolynomial: Option<bool>,
    /// Interior: every ratio from `growth_from` on is at least `growth_factor`.
    /// Outside: max/min norm within `outside_ratio`.
    pub trend_ok: bool,
    /// Outside: `norm * distance_estimate` per `N` (close to 1 for normal matrices).
    pub distance_products: Vec<f64>,
}

pub type ResolventReport = ExperimentReport<ResolventConfig, ResolventRecord, ResolventAggregate>;

/// Scans the grid around `z0`: returns (min distance, preimage samples,
/// max bracket on them).
fn preimage_scan(symbol: &Symbol, z0: Complex64, resolution: usize) -> Result<(f64, usize, f64)> {
    let bracket = poisson_bracket(symbol, &symbol.conj())?;
    // |grad p| <= 2 pi sum |p̂| |freq|_1; the nearest sample is within half a
    // cell diagonal of any preimage point
    let lipschitz: f64 = symbol
        .coeffs()
        .iter()
        .map(|(f, c)| {
            2.0 * std::f64::consts::PI
                * c.norm()
                * f.n.iter().chain(&f.m).map(|k| k.abs() as f64).sum::<f64>()
        })
        .sum();
    let axes = 2 * symbol.dim();
    let eta = lipschitz * (axes as f64).sqrt() / (2.0 * resolution as f64);
    let sampler = GridSampler::new(symbol, resolution)?;
    let d = symbol.dim();
    let rows = sampler.fold_rows(
        || (f64::INFINITY, 0usize, 0.0f64),
        |acc, idx, w| {
            let dist = (w - z0).norm();
            acc.0 = acc.0.min(dist);
            if dist <= eta {
                acc.1 += 1;
                let x: Vec<f64> = idx[..d].iter().map(|&k| sampler.coordinate(k)).collect();
                let xi: Vec<f64> = idx[d..].iter().map(|&k| sampler.coordinate(k)).collect();
                acc.2 = acc.2.max(bracket.evaluate(&x, &xi).norm());
            }
        },
    );
    Ok(rows.into_iter().fold((f64::INFINITY, 0, 0.0), |a, r| {
        (a.0.min(r.0), a.1 + r.1, a.2.max(r.2))
    }))
}

pub fn resolvent_growth(cfg: &ResolventConfig) -> Result<ResolventReport> {
    if cfg.ns.is_empty() {
        return Err(WeylError::InvalidParameter(
            "resolvent needs N values".into(),
        ));
    }
    let symbol = cfg.symbol.resolve(cfg.dim)?;
    let (distance_estimate, preimage_samples, max_bracket) =
        preimage_scan(&symbol, cfg.z0, cfg.grid_resolution)?;
    let class = if preimage_samples == 0 {
        ZClass::Outside
    } else if max_bracket > cfg.bracket_tol {
        ZClass::Interior
    } else {
        return Err(WeylError::Precondition(format!(
            "the bracket {{p, conj p}} vanishes on all {preimage_samples} grid preimages of {}",
            cfg.z0
        )));
    };

    let mut ns = cfg.ns.clone();
    ns.sort_unstable();
    ns.dedup();
    let mut records = Vec::new();
    for &n in &ns {
        check_desk_scale(n, cfg.dim, cfg.allow_large)?;
        let p = quantize(&symbol, n, None)?;
        let norm = resolvent_norm(&p.matrix, cfg.z0)?;
        let log10_norm = norm.finite().map_or(f64::INFINITY, f64::log10);
        records.push(ResolventRecord {
            n,
            norm,
            log10_norm,
        });
    }
    let values: Vec<f64> = records
        .iter()
        .map(|r| r.norm.finite().unwrap_or(f64::INFINITY))
        .collect();
    let ratios: Vec<f64> = values.windows(2).map(|w| w[1] / w[0]).collect();
    let finite: Vec<(f64, f64)> = records
        .iter()
        .filter_map(|r| r.norm.finite().map(|v| ((r.n as f64).ln(), v.ln())))
        .collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = finite.into_iter().unzip();
    let log_slope = linear_fit(&xs, &ys).ok().map(|f| f.slope);
    let span = *ns.last().expect("nonempty") as f64 / ns[0] as f64;
    let (superpolynomial, trend_ok) = match class {
        ZClass::Interior => {
            let sup = (span >= 4.0).then(|| log_slope.is_some_and(|s| s > 3.0));
            let growth = ns
                .windows(2)
                .zip(&ratios)
                .filter(|(w, _)| w[0] >= cfg.growth_from)
                .all(|(_, &r)| r >= cfg.growth_factor);
            (sup, growth)
        }
        ZClass::Outside => {
            let hi = values.iter().copied().fold(0.0, f64::max);
            let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
            (None, hi / lo <= cfg.outside_ratio)
        }
    };
    let distance_products = match class {
        ZClass::Outside => values.iter().map(|v| v * distance_estimate).collect(),
        ZClass::Interior => Vec::new(),
    };
    let aggregate = ResolventAggregate {
        class,
        distance_estimate,
        preimage_samples,
        max_bracket_on_preimage: max_bracket,
        ratios,
        log_slope,
        superpolynomial,
        trend_ok,
        distance_products,
    };
    Ok(ExperimentReport::new(
        "resolvent",
        cfg.clone(),
        records,
        Vec::new(),
        aggregate,
    ))
}
