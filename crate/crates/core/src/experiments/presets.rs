//! Parameter regimes `(delta, alpha, epsilon, r)` as functions of `N`.

use serde::{Deserialize, Serialize};

use super::weyl::default_epsilon;
use super::{check_coupling, DEFAULT_C1};
use crate::error::{Result, WeylError};

pub const PRESET_NAMES: [&str; 5] = ["cor2", "cor2.2", "cor2.1", "cor3", "thm2"];

/// Inputs of a preset. `kappa` is the measured boundary exponent `kappa_hat`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PresetParams {
    pub name: String,
    pub dim: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub kappa: f64,
    /// `delta = exp(-N^beta)` in "cor2.1".
    pub beta: f64,
    /// Extra decay `N^{-delta0}` in "thm2".
    pub delta0: f64,
    /// Exponent `tau` in "thm2".
    pub tau: f64,
    /// Extra decay `N^{-p0}` in "cor2.2".
    pub p0: f64,
    /// Exponent in `delta = N^{-p} / C` for "cor2" and "cor3"; defaults to
    /// `(d+1)/2 + kappa` and `d/2 + 1`.
    pub p: Option<f64>,
    pub c: f64,
    pub c_alpha: f64,
    pub c0: f64,
    pub c1: f64,
    pub c_log: f64,
    pub trials: u64,
}

impl Default for PresetParams {
    fn default() -> Self {
        Self {
            name: "cor2".into(),
            dim: 1,
            n: 256,
            kappa: 1.0,
            beta: 0.5,
            delta0: 2.0,
            tau: 0.5,
            p0: 0.5,
            p: None,
            c: 10.0,
            c_alpha: 4.0,
            c0: 1.0,
            c1: DEFAULT_C1,
            c_log: 10.0,
            trials: 10,
        }
    }
}

impl PresetParams {
    pub fn new(name: &str, n: usize) -> Self {
        Self {
            name: name.into(),
            n,
            ..Self::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResolvedPreset {
    pub name: String,
    #[serde(rename = "N")]
    pub n: usize,
    pub dim: usize,
    pub delta: f64,
    pub alpha: f64,
    pub epsilon: f64,
    /// `epsilon^{1/(2 kappa)}`.
    pub r: f64,
    pub trials: u64,
    /// `delta C_1 N^{d/2} alpha^{-1/2}`, at most 1/2 by construction.
    pub coupling: f64,
}

pub fn corollary_presets(params: &PresetParams) -> Result<ResolvedPreset> {
    let PresetParams {
        dim,
        n,
        kappa,
        c,
        c_alpha,
        c0,
        ..
    } = *params;
    if n < 2 {
        return Err(WeylError::InvalidParameter(format!(
            "presets need N >= 2, got {n}"
        )));
    }
    if !(kappa > 0.0) {
        return Err(WeylError::InvalidParameter(format!(
            "kappa must be positive, got {kappa}"
        )));
    }
    let nf = n as f64;
    let d = dim as f64;
    let log_n = nf.ln();
    let (delta, alpha, epsilon) = match params.name.as_str() {
        "cor2" => {
            let p = params.p.unwrap_or((d + 1.0) / 2.0 + kappa);
            if p < (d + 1.0) / 2.0 + kappa {
                return Err(WeylError::Precondition(format!(
                    "cor2 needs p >= (d+1)/2 + kappa, got p = {p}"
                )));
            }
            (
                nf.powf(-p) / c,
                c_alpha / nf,
                c0 * nf.powf(-kappa) * log_n * log_n,
            )
        }
        "cor2.2" => {
            let p0 = params.p0;
            let delta = nf.powf(-(d + 1.0) / 2.0 - p0) / c;
            (
                delta,
                c_alpha * nf.powf(-p0 / kappa),
                c0 * nf.powf(-p0) * log_n * log_n,
            )
        }
        "cor2.1" => {
            let beta = params.beta;
            if !(beta > 0.0 && beta < kappa) {
                return Err(WeylError::Precondition(format!(
                    "cor2.1 needs 0 < beta < kappa, got beta = {beta}"
                )));
            }
            (
                (-nf.powf(beta)).exp(),
                c_alpha / nf,
                c0 * nf.powf(beta - kappa),
            )
        }
        "cor3" => {
            let p = params.p.unwrap_or(d / 2.0 + 1.0);
            if p <= d / 2.0 {
                return Err(WeylError::Precondition(format!(
                    "cor3 needs p > d/2, got p = {p}"
                )));
            }
            let delta = nf.powf(-p) / c;
            let alpha = c_alpha / nf;
            let eps =
                default_epsilon(kappa, n, dim, delta, alpha, params.c_log).expect("delta > 0");
            (delta, alpha, eps)
        }
        "thm2" => {
            let (delta0, tau) = (params.delta0, params.tau);
            if !(delta0 > 0.0 && tau > 0.0 && tau < 1.0) {
                return Err(WeylError::Precondition(format!(
                    "thm2 needs delta0 > 0 and 0 < tau < 1, got delta0 = {delta0}, tau = {tau}"
                )));
            }
            let m = delta0.min(1.0);
            let delta = nf.powf(-d / 2.0 - delta0) / c;
            let eps = nf.powf(-m * tau * kappa) * log_n + nf.powf(-tau * delta0 / 2.0);
            (delta, nf.powf(-m * tau), eps)
        }
        other => {
            return Err(WeylError::Unknown {
                kind: "preset",
                name: other.to_string(),
            })
        }
    };
    let coupling = check_coupling(delta, n, dim, alpha, params.c1)?;
    Ok(ResolvedPreset {
        name: params.name.clone(),
        n,
        dim,
        delta,
        alpha,
        epsilon,
        r: epsilon.powf(1.0 / (2.0 * kappa)),
        trials: params.trials,
        coupling,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        ((a - b) / b).abs() < 1e-12
    }

    #[test]
    fn cor2_at_256() {
        let r = corollary_presets(&PresetParams::new("cor2", 256)).unwrap();
        assert!(close(r.delta, 256f64.powi(-2) / 10.0));
        assert!(close(r.alpha, 4.0 / 256.0));
        let eps = 256f64.ln().powi(2) / 256.0;
        assert!(close(r.epsilon, eps));
        assert!(close(r.r, eps.sqrt()));
        assert!(r.coupling <= 0.5);
    }

    #[test]
    fn cor2_1_at_256() {
        let r = corollary_presets(&PresetParams::new("cor2.1", 256)).unwrap();
        assert!(close(r.delta, (-16f64).exp()));
        assert!(close(r.epsilon, 256f64.powf(-0.5)));
    }

    #[test]
    fn thm2_at_256() {
        let r = corollary_presets(&PresetParams::new("thm2", 256)).unwrap();
        assert!(close(r.delta, 256f64.powf(-2.5) / 10.0));
        assert!(close(r.alpha, 256f64.powf(-0.5)));
        let eps = 256f64.powf(-0.5) * 256f64.ln() + 256f64.powf(-0.5);
        assert!(close(r.epsilon, eps));
    }

    #[test]
    fn every_preset_resolves_and_unknown_fails() {
        for name in PRESET_NAMES {
            for n in [16, 64, 1000] {
                let r = corollary_presets(&PresetParams::new(name, n)).unwrap();
                assert!(
                    r.delta > 0.0 && r.alpha > 0.0 && r.epsilon > 0.0,
                    "{name} {n}"
                );
                assert!(r.coupling <= 0.5);
            }
        }
        assert!(matches!(
            corollary_presets(&PresetParams::new("cor9", 64)),
            Err(WeylError::Unknown { .. })
        ));
    }

    #[test]
    fn violated_coupling_aborts() {
        let mut p = PresetParams::new("cor3", 64);
        p.c = 1e-6;
        assert!(matches!(
            corollary_presets(&p),
            Err(WeylError::Precondition(_))
        ));
        p.c = 10.0;
        p.p = Some(0.4);
        assert!(matches!(
            corollary_presets(&p),
            Err(WeylError::Precondition(_))
        ));
    }
}
