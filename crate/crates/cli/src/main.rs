mod args;
mod parse;
mod svg;

use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::Parser;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use weyl_lab_core::experiments::{
    boundary_kappa, corollary_presets, logdet_concentration, measure_convergence, resolvent_growth,
    small_sv_count, spectrum, ssv_tail, weyl_count, CsvRecord, ExperimentReport, LogdetConfig,
    MeasureConfig, PresetParams, Region, ResolventConfig, SmallSvConfig, SpectrumConfig, SsvConfig,
    SymbolSpec, WeylConfig, DEFAULT_SEED,
};
use weyl_lab_core::grushin::{check_factorization, perturbed_effective_matrix, GrushinProblem};
use weyl_lab_core::quantize::quantize;
use weyl_lab_core::random::derive_trial_seed;
use weyl_lab_core::{Complex64, ConstructionPath, Ensemble, PerturbationSpec, WeylError};

use args::{Cli, Command, Common};
use parse::{parse_symbol, RegionArg};

const SEED_ENV: &str = "WEYL_LAB_SEED";
const DEFAULT_MARGIN: f64 = 0.1;
const DEFAULT_T_GRID: [f64; 6] = [0.05, 0.1, 0.15, 0.2, 0.3, 0.5];

/// Run finished, but some part of the numerics failed.
#[derive(Debug)]
struct NumericalFailure(String);

impl std::fmt::Display for NumericalFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for NumericalFailure {}

fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<NumericalFailure>().is_some() {
        return 2;
    }
    match e.downcast_ref::<WeylError>() {
        Some(w) if w.is_numerical() => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// Which shared flags a subcommand understands, and the shape of its `N` key.
struct Accepts {
    n: NShape,
    symbol: bool,
    ensemble: bool,
    delta: bool,
    trials: bool,
    seed: bool,
}

#[derive(PartialEq)]
enum NShape {
    Single,
    List,
}

fn accepts(cmd: &Command) -> Accepts {
    let all = Accepts {
        n: NShape::Single,
        symbol: true,
        ensemble: true,
        delta: true,
        trials: true,
        seed: true,
    };
    match cmd {
        Command::Quantize { .. } => Accepts {
            ensemble: false,
            delta: false,
            trials: false,
            seed: false,
            ..all
        },
        Command::Spectrum { .. } => Accepts {
            trials: false,
            ..all
        },
        Command::WeylCount { .. } | Command::Logdet { .. } => all,
        Command::SsvTail { .. } => Accepts {
            n: NShape::List,
            ..all
        },
        Command::SmallSv { .. } | Command::Resolvent { .. } => Accepts {
            n: NShape::List,
            ensemble: false,
            delta: false,
            trials: false,
            seed: false,
            ..all
        },
        Command::Measure { .. } => Accepts {
            n: NShape::List,
            delta: false,
            ..all
        },
        Command::GrushinCheck { .. } => Accepts {
            trials: false,
            ..all
        },
    }
}

fn set(doc: &mut Map<String, Value>, key: &str, value: impl Serialize) -> Result<()> {
    doc.insert(key.to_string(), serde_json::to_value(value)?);
    Ok(())
}

fn load_doc(path: Option<&Path>) -> Result<Map<String, Value>> {
    let Some(path) = path else {
        return Ok(Map::new());
    };
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    match serde_json::from_str::<Value>(&text)
        .with_context(|| format!("parsing config {}", path.display()))?
    {
        Value::Object(map) => Ok(map),
        _ => bail!("config {} must be a JSON object", path.display()),
    }
}

fn env_seed() -> Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(s) => {
            Ok(Some(s.trim().parse().with_context(|| {
                format!("{SEED_ENV}={s:?} is not a u64")
            })?))
        }
        Err(_) => Ok(None),
    }
}

/// Config document: the `--config` file with the shared flags laid over it.
fn base_doc(common: &Common, cmd: &Command) -> Result<Map<String, Value>> {
    let acc = accepts(cmd);
    let name = cmd.name();
    let mut doc = load_doc(common.config.as_deref())?;
    let reject = |flag: &str| anyhow!("--{flag} does not apply to {name}");
    if let Some(s) = &common.symbol {
        if !acc.symbol {
            return Err(reject("symbol"));
        }
        let spec = parse_symbol(s)?;
        if let (SymbolSpec::Inline(sym), None) = (&spec, common.dim) {
            set(&mut doc, "dim", sym.dim())?;
        }
        set(&mut doc, "symbol", spec)?;
    }
    if let Some(d) = common.dim {
        set(&mut doc, "dim", d)?;
    }
    if !common.n.is_empty() {
        if acc.n == NShape::Single {
            if common.n.len() != 1 {
                bail!("{name} takes a single --N, got {:?}", common.n);
            }
            set(&mut doc, "N", common.n[0])?;
        } else {
            set(&mut doc, "N", &common.n)?;
        }
    }
    if let Some(e) = &common.ensemble {
        if !acc.ensemble {
            return Err(reject("ensemble"));
        }
        set(&mut doc, "ensemble", e.parse::<Ensemble>()?)?;
    }
    if let Some(delta) = common.delta {
        if !acc.delta {
            return Err(reject("delta"));
        }
        set(&mut doc, "delta", delta)?;
    }
    if let Some(t) = common.trials {
        if !acc.trials {
            return Err(reject("trials"));
        }
        set(&mut doc, "trials", t)?;
    }
    let seed = match common.seed {
        Some(s) => Some(s),
        None => env_seed()?,
    };
    if let Some(seed) = seed {
        if !acc.seed {
            return Err(reject("seed"));
        }
        set(&mut doc, "seed", seed)?;
    }
    if common.allow_large {
        set(&mut doc, "allow_large", true)?;
    }
    Ok(doc)
}

fn build<T: DeserializeOwned>(doc: Map<String, Value>, what: &str) -> Result<T> {
    serde_json::from_value(Value::Object(doc)).with_context(|| format!("invalid {what} config"))
}

fn region_value(arg: &RegionArg, margin: f64) -> Result<Region> {
    Ok(match *arg {
        RegionArg::Rect([a, b, c, d]) => Region::rect((a, b), (c, d), margin)?,
        RegionArg::Disc([x, y, r]) => Region::disc(Complex64::new(x, y), r, margin)?,
    })
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            println!("{}", text.trim_end());
            Ok(())
        }
    }
}

fn emit<C: Serialize, R: Serialize + CsvRecord, A: Serialize>(
    mut report: ExperimentReport<C, R, A>,
    common: &Common,
    started: Instant,
) -> Result<()> {
    if common.timing {
        let secs = started.elapsed().as_secs_f64();
        report.wall_clock_seconds = Some(secs);
        eprintln!("{}: {secs:.3} s", report.experiment);
    }
    write_output(common.out.as_deref(), &report.to_json()?)?;
    if let Some(p) = &common.csv {
        std::fs::write(p, report.to_csv()).with_context(|| format!("writing {}", p.display()))?;
    }
    if !report.failures.is_empty() {
        return Err(NumericalFailure(format!(
            "{} trial(s) failed numerically; see the report's failures",
            report.failures.len()
        ))
        .into());
    }
    Ok(())
}

fn default_symbol() -> SymbolSpec {
    SymbolSpec::default()
}

fn default_dim() -> usize {
    1
}

fn default_ensemble() -> Ensemble {
    Ensemble::Ginibre
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

#[derive(Debug, Serialize, Deserialize)]
struct QuantizeConfig {
    #[serde(default = "default_symbol")]
    symbol: SymbolSpec,
    #[serde(default = "default_dim")]
    dim: usize,
    #[serde(rename = "N")]
    n: usize,
    #[serde(default)]
    path: Option<ConstructionPath>,
    #[serde(default)]
    allow_large: bool,
}

#[derive(Debug, Serialize, Deserialize)]
struct GrushinConfig {
    #[serde(default = "default_symbol")]
    symbol: SymbolSpec,
    #[serde(default = "default_dim")]
    dim: usize,
    #[serde(rename = "N")]
    n: usize,
    z: Complex64,
    alpha: f64,
    #[serde(default)]
    delta: f64,
    #[serde(default = "default_ensemble")]
    ensemble: Ensemble,
    #[serde(default = "default_seed")]
    seed: u64,
    #[serde(default)]
    allow_large: bool,
}

fn check_side(n: usize, dim: usize, allow_large: bool) -> Result<()> {
    if n == 0 {
        return Err(WeylError::InvalidParameter("N must be at least 1".into()).into());
    }
    let side = (n as u128).pow(dim as u32);
    if side > weyl_lab_core::experiments::DESK_SCALE_LIMIT as u128 && !allow_large {
        return Err(WeylError::InvalidParameter(format!(
            "N^d = {side} exceeds the desk-scale limit; pass --allow-large to override"
        ))
        .into());
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let common = &cli.common;
    if let Some(t) = common.threads {
        if t == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()?;
    }
    let mut doc = base_doc(common, &cli.command)?;
    let started = Instant::now();
    match &cli.command {
        Command::Quantize { path } => {
            if let Some(p) = path {
                set(&mut doc, "path", p)?;
            }
            let cfg: QuantizeConfig = build(doc, "quantize")?;
            check_side(cfg.n, cfg.dim, cfg.allow_large)?;
            let symbol = cfg.symbol.resolve(cfg.dim)?;
            let q = quantize(&symbol, cfg.n, cfg.path)?;
            write_output(common.out.as_deref(), &q.to_json()?)?;
            if let Some(p) = &common.csv {
                let mut out = String::from("row,col,re,im\n");
                for i in 0..q.size() {
                    for (j, v) in q.matrix.row(i).iter().enumerate() {
                        out.push_str(&format!("{i},{j},{},{}\n", v.re, v.im));
                    }
                }
                std::fs::write(p, out).with_context(|| format!("writing {}", p.display()))?;
            }
            Ok(())
        }
        Command::Spectrum {
            plot,
            region,
            singular_values,
        } => {
            if *singular_values {
                set(&mut doc, "singular_values", true)?;
            }
            if !doc.contains_key("delta") {
                set(&mut doc, "delta", 0.0)?;
            }
            let cfg: SpectrumConfig = build(doc, "spectrum")?;
            let report = spectrum(&cfg)?;
            if let Some(path) = plot {
                let overlay = region
                    .as_ref()
                    .map(|r| region_value(r, DEFAULT_MARGIN))
                    .transpose()?;
                let points: Vec<Complex64> = report
                    .records
                    .iter()
                    .map(|e| Complex64::new(e.re, e.im))
                    .collect();
                let view = svg::Viewport::around(report.aggregate.range_box, 0.1);
                let meta = serde_json::to_string(&json!({
                    "experiment": "spectrum",
                    "version": report.version,
                    "config": report.config,
                }))?;
                std::fs::write(path, svg::scatter(&points, view, overlay.as_ref(), &meta))
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            emit(report, common, started)
        }
        Command::WeylCount {
            region,
            margin,
            alpha,
            epsilon,
            grid,
            preset,
        } => {
            match (region, margin) {
                (Some(r), m) => set(
                    &mut doc,
                    "region",
                    region_value(r, m.unwrap_or(DEFAULT_MARGIN))?,
                )?,
                (None, Some(m)) => match doc.get_mut("region") {
                    Some(Value::Object(r)) => set(r, "margin", m)?,
                    _ => bail!("--margin needs a region from --region or the config"),
                },
                (None, None) => {}
            }
            if let Some(a) = alpha {
                set(&mut doc, "alpha", a)?;
            }
            if let Some(e) = epsilon {
                set(&mut doc, "epsilon", e)?;
            }
            if let Some(g) = grid {
                set(&mut doc, "grid_resolution", g)?;
            }
            if preset.is_some() && !doc.contains_key("delta") {
                // replaced below by the preset's value
                set(&mut doc, "delta", 0.0)?;
            }
            let mut cfg: WeylConfig = build(doc, "weyl-count")?;
            if let Some(name) = preset {
                let symbol = cfg.symbol.resolve(cfg.dim)?;
                let kappa = boundary_kappa(&symbol, &cfg.region, cfg.kappa_resolution)?
                    .ok_or_else(|| {
                        WeylError::Precondition(
                            "no volume exponent could be fitted on the region boundary".into(),
                        )
                    })?;
                let params = PresetParams {
                    name: name.clone(),
                    dim: cfg.dim,
                    n: cfg.n,
                    kappa,
                    c_alpha: cfg.c_alpha,
                    c1: cfg.c1,
                    c_log: cfg.c_log,
                    trials: cfg.trials,
                    ..PresetParams::default()
                };
                let resolved = corollary_presets(&params)?;
                eprintln!("preset {}", serde_json::to_string(&resolved)?);
                cfg.delta = resolved.delta;
                cfg.alpha = Some(resolved.alpha);
                cfg.epsilon = Some(resolved.epsilon);
                cfg.trials = resolved.trials;
            }
            emit(weyl_count(&cfg)?, common, started)
        }
        Command::SsvTail { t_grid, z } => {
            if let Some(z) = z {
                let symbol = doc
                    .remove("symbol")
                    .unwrap_or(serde_json::to_value(SymbolSpec::default())?);
                let dim = doc.remove("dim").unwrap_or(json!(1));
                set(
                    &mut doc,
                    "x0",
                    json!({ "kind": "symbol", "symbol": symbol, "dim": dim, "z": z }),
                )?;
            } else if !doc.contains_key("x0") {
                if doc.contains_key("symbol") {
                    bail!("ssv-tail uses --symbol only together with --z");
                }
                set(&mut doc, "x0", json!({ "kind": "zero" }))?;
            }
            if !t_grid.is_empty() {
                set(&mut doc, "t_grid", t_grid)?;
            } else if !doc.contains_key("t_grid") {
                set(&mut doc, "t_grid", DEFAULT_T_GRID)?;
            }
            if !doc.contains_key("delta") {
                set(&mut doc, "delta", 1.0)?;
            }
            let cfg: SsvConfig = build(doc, "ssv-tail")?;
            emit(ssv_tail(&cfg)?, common, started)
        }
        Command::SmallSv { z, alphas } => {
            if let Some(z) = z {
                set(&mut doc, "z", z)?;
            }
            if !alphas.is_empty() {
                set(&mut doc, "alphas", alphas)?;
            }
            let cfg: SmallSvConfig = build(doc, "small-sv")?;
            emit(small_sv_count(&cfg)?, common, started)
        }
        Command::Logdet {
            z,
            regularized_z,
            alphas,
            tolerance,
        } => {
            if !z.is_empty() {
                set(&mut doc, "z_list", z)?;
            }
            if !regularized_z.is_empty() {
                set(&mut doc, "regularized_z", regularized_z)?;
            }
            if !alphas.is_empty() {
                set(&mut doc, "alphas", alphas)?;
            }
            if let Some(t) = tolerance {
                set(&mut doc, "tolerance", t)?;
            }
            let cfg: LogdetConfig = build(doc, "logdet")?;
            emit(logdet_concentration(&cfg)?, common, started)
        }
        Command::Measure { delta0, c } => {
            if let Some(d) = delta0 {
                set(&mut doc, "delta0", d)?;
            }
            if let Some(c) = c {
                set(&mut doc, "c", c)?;
            }
            let cfg: MeasureConfig = build(doc, "measure")?;
            emit(measure_convergence(&cfg)?, common, started)
        }
        Command::Resolvent { z } => {
            if let Some(z) = z {
                set(&mut doc, "z0", z)?;
            }
            let cfg: ResolventConfig = build(doc, "resolvent")?;
            emit(resolvent_growth(&cfg)?, common, started)
        }
        Command::GrushinCheck { z, alpha } => {
            if let Some(z) = z {
                set(&mut doc, "z", z)?;
            }
            if let Some(a) = alpha {
                set(&mut doc, "alpha", a)?;
            }
            let cfg: GrushinConfig = build(doc, "grushin-check")?;
            grushin_check(&cfg, common, started)
        }
    }
}

fn grushin_check(cfg: &GrushinConfig, common: &Common, started: Instant) -> Result<()> {
    check_side(cfg.n, cfg.dim, cfg.allow_large)?;
    let symbol = cfg.symbol.resolve(cfg.dim)?;
    let p = quantize(&symbol, cfg.n, None)?.matrix;
    let g = GrushinProblem::build(&p, cfg.z, cfg.alpha)?;
    let factorization = check_factorization(&g, &p)?;
    let tol = 1e-6 * p.nrows() as f64;
    let mut passes = factorization.passes(tol);
    let perturbed = if cfg.delta > 0.0 {
        let q = PerturbationSpec::new(cfg.ensemble, 1.0, derive_trial_seed(cfg.seed, 0))?
            .sample(p.nrows());
        let (_, rep) = perturbed_effective_matrix(&g, &p, &q, cfg.delta)?;
        passes &= rep.bound_holds;
        Some(rep)
    } else {
        None
    };
    let mut report = json!({
        "experiment": "grushin-check",
        "version": env!("CARGO_PKG_VERSION"),
        "config": cfg,
        "summary": g.summary(),
        "factorization": factorization,
        "perturbed": perturbed,
        "residual_tolerance": tol,
        "passes": passes,
    });
    if common.timing {
        report["wall_clock_seconds"] = json!(started.elapsed().as_secs_f64());
    }
    write_output(
        common.out.as_deref(),
        &serde_json::to_string_pretty(&report)?,
    )?;
    if common.csv.is_some() {
        eprintln!("grushin-check has no per-record rows; --csv ignored");
    }
    if !passes {
        return Err(
            NumericalFailure("Grushin identities did not hold within tolerance".into()).into(),
        );
    }
    Ok(())
}
