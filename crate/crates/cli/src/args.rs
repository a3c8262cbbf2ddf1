use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use weyl_lab_core::Complex64;

use crate::parse::{parse_complex, parse_region, RegionArg};

#[derive(Debug, Parser)]
#[command(
    name = "weyl-lab",
    version,
    about = "Spectra of randomly perturbed quantized torus symbols"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

/// Flags shared by every subcommand. Each one overrides the matching key of
/// the `--config` document.
#[derive(Debug, Args)]
pub struct Common {
    /// JSON config for the experiment; flags override its keys.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Also write per-record rows as CSV.
    #[arg(long, global = true)]
    pub csv: Option<PathBuf>,
    /// Master seed. Falls back to WEYL_LAB_SEED, then the config, then the default.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for trial parallelism.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Record wall-clock time in the report.
    #[arg(long, global = true)]
    pub timing: bool,
    /// Lift the desk-scale limit on the matrix side.
    #[arg(long, global = true)]
    pub allow_large: bool,
    /// Built-in symbol name, inline JSON document, or @file.json.
    #[arg(long, global = true)]
    pub symbol: Option<String>,
    /// Torus dimension d.
    #[arg(long, global = true)]
    pub dim: Option<usize>,
    /// Level(s) N, comma separated where a list is accepted.
    #[arg(long = "N", global = true, value_delimiter = ',')]
    pub n: Vec<usize>,
    #[arg(long, global = true)]
    pub ensemble: Option<String>,
    /// Perturbation size delta.
    #[arg(long, global = true)]
    pub delta: Option<f64>,
    #[arg(long, global = true)]
    pub trials: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the quantization matrix of a symbol.
    Quantize {
        /// general or separable; picked automatically when omitted.
        #[arg(long)]
        path: Option<String>,
    },
    /// Eigenvalues of one perturbed instance, optionally as an SVG scatter.
    Spectrum {
        #[arg(long)]
        plot: Option<PathBuf>,
        /// Region outline drawn over the scatter, e.g. rect:-0.5,0.5,-0.5,0.5.
        #[arg(long, value_parser = parse_region)]
        region: Option<RegionArg>,
        #[arg(long)]
        singular_values: bool,
    },
    /// Eigenvalue counts in a region against the phase-space volume.
    WeylCount {
        /// rect:re_min,re_max,im_min,im_max or disc:re,im,radius.
        #[arg(long, value_parser = parse_region)]
        region: Option<RegionArg>,
        /// Boundary margin r.
        #[arg(long)]
        margin: Option<f64>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        grid: Option<usize>,
        /// Take delta, alpha, epsilon and trials from a named parameter regime.
        #[arg(long)]
        preset: Option<String>,
    },
    /// Tail of the smallest singular value of X0 + delta Q.
    SsvTail {
        /// Thresholds t, comma separated.
        #[arg(long = "t", value_delimiter = ',')]
        t_grid: Vec<f64>,
        /// Use X0 = p_N - z instead of X0 = 0.
        #[arg(long, value_parser = parse_complex)]
        z: Option<Complex64>,
    },
    /// Counts of small singular values of p_N - z and their scaling.
    SmallSv {
        #[arg(long, value_parser = parse_complex)]
        z: Option<Complex64>,
        #[arg(long, value_delimiter = ',')]
        alphas: Vec<f64>,
    },
    /// Concentration of (1/N^d) log|det(P^delta - z)|.
    Logdet {
        #[arg(long, value_parser = parse_complex, value_delimiter = ',')]
        z: Vec<Complex64>,
        #[arg(long, value_parser = parse_complex, value_delimiter = ',')]
        regularized_z: Vec<Complex64>,
        #[arg(long, value_delimiter = ',')]
        alphas: Vec<f64>,
        #[arg(long)]
        tolerance: Option<f64>,
    },
    /// Empirical spectral measure against the push-forward of Lebesgue measure.
    Measure {
        #[arg(long)]
        delta0: Option<f64>,
        /// Constant C in delta = N^{-d/2 - delta0} / C.
        #[arg(long)]
        c: Option<f64>,
    },
    /// Growth of the resolvent norm at a point as N increases.
    Resolvent {
        #[arg(long, value_parser = parse_complex)]
        z: Option<Complex64>,
    },
    /// Grushin determinant identities, and the perturbed bound when delta > 0.
    GrushinCheck {
        #[arg(long, value_parser = parse_complex)]
        z: Option<Complex64>,
        #[arg(long)]
        alpha: Option<f64>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Quantize { .. } => "quantize",
            Command::Spectrum { .. } => "spectrum",
            Command::WeylCount { .. } => "weyl-count",
            Command::SsvTail { .. } => "ssv-tail",
            Command::SmallSv { .. } => "small-sv",
            Command::Logdet { .. } => "logdet",
            Command::Measure { .. } => "measure",
            Command::Resolvent { .. } => "resolvent",
            Command::GrushinCheck { .. } => "grushin-check",
        }
    }
}
