//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Statistical checks use fixed seeds, so the output is the same on
//! every run.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use weyl_lab_core::experiments::{
    default_alphas, logdet_concentration, measure_convergence, resolvent_growth, small_sv_count,
    spectrum, ssv_tail, weyl_count, LogdetConfig, MeasureConfig, Region, ResolventConfig,
    SmallSvConfig, SpectrumConfig, SsvConfig, WeylConfig, ZClass,
};
use weyl_lab_core::grushin::{check_factorization, perturbed_effective_matrix, GrushinProblem};
use weyl_lab_core::linalg::{
    eigenvalues, log_abs_det, multiset_distance, operator_norm, svd, LogAbsDet, DEFAULT_EIG_TOL,
    DEFAULT_SVD_TOL,
};
use weyl_lab_core::quantize::{dft_matrix, quantize, quantize_general, quantize_separable};
use weyl_lab_core::random::{derive_trial_seed, rng_from_seed};
use weyl_lab_core::symbols::{Frequency, NAMED_SYMBOLS};
use weyl_lab_core::{CMatrix, Complex64, Ensemble, PerturbationSpec, Symbol, WeylError};

type Outcome = Result<String, String>;
type Run = Box<dyn Fn() -> weyl_lab_core::Result<String> + Sync>;
type Criterion = (&'static str, fn() -> Outcome);

const MASTER: u64 = 0x5eed_acce_97ab_1e00;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Uniform in `[0, 1)` from the top 53 bits of a derived seed.
fn unit(master: u64, i: u64) -> f64 {
    (derive_trial_seed(master, i) >> 11) as f64 / (1u64 << 53) as f64
}

fn flag(dim: usize) -> Symbol {
    Symbol::named("scottish-flag", dim).unwrap()
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn fail(e: WeylError) -> String {
    format!("error: {e}")
}

/// Band-limited symbol with seeded coefficients, `|n_k|, |m_k| <= band`.
fn random_symbol(dim: usize, band: i64, master: u64, real: bool) -> Symbol {
    let mut terms = Vec::new();
    let mut k = 0;
    let width = (2 * band + 1) as u64;
    for code in 0..width.pow(2 * dim as u32) {
        let mut rest = code;
        let mut digits = Vec::new();
        for _ in 0..2 * dim {
            digits.push((rest % width) as i64 - band);
            rest /= width;
        }
        let f = Frequency::new(digits[..dim].to_vec(), digits[dim..].to_vec());
        let v = c(unit(master, k) - 0.5, unit(master, k + 1) - 0.5);
        k += 2;
        terms.push((f.clone(), v));
        if real {
            terms.push((f.neg(), v.conj()));
        }
    }
    Symbol::new(dim, terms).unwrap()
}

fn pathway_equivalence() -> Outcome {
    let start = Instant::now();
    let sym = flag(1);
    let mut worst = 0.0f64;
    for n in [4, 8, 64, 256] {
        let g = quantize_general(&sym, n).map_err(fail)?;
        let s = quantize_separable(&sym, n).map_err(fail)?;
        worst = worst.max(g.max_abs_diff(&s).map_err(fail)?);
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        worst <= 1e-10 && secs < 10.0,
        format!("max entry gap {worst:.2e} (<= 1e-10), {secs:.2} s (< 10 s)"),
    )
}

fn trace_identity() -> Outcome {
    let mut worst = 0.0f64;
    let mut cases = 0;
    let mut symbols: Vec<Symbol> = Vec::new();
    for dim in [1, 2] {
        for name in NAMED_SYMBOLS {
            symbols.push(Symbol::named(name, dim).unwrap());
        }
        symbols.push(random_symbol(dim, 2, 17 + dim as u64, false));
    }
    for sym in &symbols {
        let ns: &[usize] = if sym.dim() == 1 {
            &[4, 8, 64, 256]
        } else {
            &[4, 8, 16]
        };
        for &n in ns {
            if sym.bandwidth() >= n as i64 {
                continue;
            }
            let p = quantize(sym, n, None).map_err(fail)?;
            let nd = p.size() as f64;
            let err = (p.trace() - sym.mean() * nd).norm() / nd;
            worst = worst.max(err);
            cases += 1;
        }
    }
    check(
        worst <= 1e-10,
        format!("{cases} cases, max |tr - N^d p(0,0)| / N^d = {worst:.2e} (<= 1e-10)"),
    )
}

fn unitarity_and_adjointness() -> Outcome {
    let f = dft_matrix(64, 1).map_err(fail)?;
    let unitary = f
        .matmul(&f.adjoint())
        .map_err(fail)?
        .max_abs_diff(&CMatrix::identity(64))
        .map_err(fail)?;
    let mut reals = vec![
        Symbol::named("cos-x", 1).unwrap(),
        Symbol::named("cos-xi", 1).unwrap(),
        flag(1).real_part(),
        flag(2).imag_part(),
        random_symbol(1, 3, 5, true),
        random_symbol(2, 1, 6, true),
    ];
    reals.push(flag(1).mul(&flag(1).conj()).unwrap());
    let mut adj = 0.0f64;
    for sym in &reals {
        let n = if sym.dim() == 1 { 64 } else { 8 };
        let p = quantize(sym, n, None).map_err(fail)?;
        adj = adj.max(p.matrix.max_abs_diff(&p.matrix.adjoint()).map_err(fail)?);
    }
    check(
        unitary <= 1e-12 && adj <= 1e-12,
        format!("||F F* - I||max = {unitary:.2e}, max ||P - P*||max = {adj:.2e} over {} real symbols (<= 1e-12)", reals.len()),
    )
}

fn grushin_identity() -> Outcome {
    let sym = flag(1);
    let mut worst_scaled = 0.0f64;
    let mut sandwich_ok = true;
    let mut nonzero_m = 0;
    for i in 0..20u64 {
        let n = if i % 2 == 0 { 16 } else { 64 };
        let alpha = if (i / 2) % 2 == 0 { 0.2 } else { 0.05 };
        let z = c(
            2.0 * unit(MASTER ^ 4, 2 * i) - 1.0,
            2.0 * unit(MASTER ^ 4, 2 * i + 1) - 1.0,
        );
        let p = quantize(&sym, n, None).map_err(fail)?;
        let spec = PerturbationSpec::new(Ensemble::Ginibre, 1e-6, derive_trial_seed(MASTER, i))
            .map_err(fail)?;
        let (pd, _) = spec.apply(&p.matrix).map_err(fail)?;
        let g = GrushinProblem::build(&pd, z, alpha).map_err(fail)?;
        let rep = check_factorization(&g, &pd).map_err(fail)?;
        worst_scaled = worst_scaled.max(rep.residual / n as f64);
        sandwich_ok &= rep.sandwich.holds;
        if rep.m > 0 {
            nonzero_m += 1;
        }
    }
    check(
        worst_scaled <= 1e-6 && sandwich_ok,
        format!(
            "20 instances ({nonzero_m} with M > 0), max residual / N = {worst_scaled:.2e} (<= 1e-6), sandwich {}",
            if sandwich_ok { "holds" } else { "violated" }
        ),
    )
}

fn perturbed_bound() -> Outcome {
    let sym = flag(1);
    let mut worst_ratio = 0.0f64;
    let mut all_hold = true;
    for i in 0..10u64 {
        let n = 64;
        let alpha = 0.05;
        let z = c(
            2.0 * unit(MASTER ^ 5, 2 * i) - 1.0,
            2.0 * unit(MASTER ^ 5, 2 * i + 1) - 1.0,
        );
        let p = quantize(&sym, n, None).map_err(fail)?.matrix;
        let g = GrushinProblem::build(&p, z, alpha).map_err(fail)?;
        let seed = derive_trial_seed(MASTER ^ 5, 100 + i);
        let q = PerturbationSpec::new(Ensemble::Ginibre, 1.0, seed)
            .map_err(fail)?
            .sample(n);
        let delta = [1e-3, 1e-5][i as usize % 2];
        let (_, rep) = perturbed_effective_matrix(&g, &p, &q, delta).map_err(fail)?;
        worst_ratio = worst_ratio.max(rep.deviation / rep.bound);
        all_hold &= rep.bound_holds && rep.precondition <= 0.5;
    }
    // the coupling precondition must be enforced, not just reported
    let p = quantize(&sym, 64, None).map_err(fail)?.matrix;
    let g = GrushinProblem::build(&p, c(0.1, 0.1), 0.05).map_err(fail)?;
    let q = PerturbationSpec::new(Ensemble::Ginibre, 1.0, 9)
        .map_err(fail)?
        .sample(64);
    let refused = matches!(
        perturbed_effective_matrix(&g, &p, &q, 1.0),
        Err(WeylError::Precondition(_))
    );
    check(
        all_hold && refused,
        format!(
            "10 instances, max ||dE_-+|| / (2 delta ||Q||) = {worst_ratio:.3} (<= 1), oversized delta {}",
            if refused { "refused" } else { "NOT refused" }
        ),
    )
}

fn weyl_law() -> Outcome {
    let omega = Region::rect((-0.5, 0.5), (-0.5, 0.5), 0.1).map_err(fail)?;
    let mut lines = Vec::new();
    let mut ok = true;
    for (n, tol, budget) in [(256usize, 0.20, 60.0), (1000, 0.15, 900.0)] {
        let start = Instant::now();
        let mut cfg = WeylConfig::new(n, omega.clone(), 1e-12);
        cfg.trials = 10;
        cfg.seed = MASTER;
        let rep = weyl_count(&cfg).map_err(fail)?;
        let secs = start.elapsed().as_secs_f64();
        let oracle = n as f64 / 9.0;
        let dev = (rep.aggregate.mean_count - oracle).abs() / oracle;
        let pass = dev <= tol && secs <= budget && rep.aggregate.failed_trials == 0;
        ok &= pass;
        lines.push(format!(
            "N={n}: mean {:.1} vs {oracle:.1} ({:.1}% <= {:.0}%), std {:.1}, {secs:.0} s",
            rep.aggregate.mean_count,
            100.0 * dev,
            100.0 * tol,
            rep.aggregate.std_count
        ));
    }
    check(ok, lines.join("; "))
}

fn small_sv_scaling() -> Outcome {
    let cfg = SmallSvConfig::new(vec![64, 128, 256], c(0.3, 0.2), default_alphas());
    let rep = small_sv_count(&cfg).map_err(fail)?;
    let a = &rep.aggregate;
    check(
        a.alpha_slope_ok && a.n_slope_ok,
        format!(
            "kappa_hat {:.3}, alpha slope {:.3} (+-0.25), N slope {:.3} (1 +- 0.15), {} points",
            a.kappa_hat, a.alpha_slope, a.n_slope, a.fit_points
        ),
    )
}

fn ssv_tail_bound() -> Outcome {
    let t_grid = vec![0.05, 0.1, 0.15, 0.2, 0.3, 0.5];
    let mut cfg = SsvConfig::zero(vec![16, 32, 64], t_grid, 10_000);
    cfg.seed = MASTER;
    let rep = ssv_tail(&cfg).map_err(fail)?;
    let a = &rep.aggregate;
    let cs: Vec<String> = a.sizes.iter().map(|s| format!("{:.3}", s.c_hat)).collect();
    let finite = a.sizes.iter().all(|s| s.c_hat.is_finite() && s.c_hat > 0.0);
    check(
        finite && a.c_variation <= 0.5,
        format!(
            "C_hat = [{}] for N = 16, 32, 64, variation {:.1}% (<= 50%)",
            cs.join(", "),
            100.0 * a.c_variation
        ),
    )
}

/// `int log|p - z|` for the flag at real `z`, integrating out `xi` in closed
/// form: `int_0^1 log|a + i cos 2 pi xi| dxi = log((|a| + sqrt(a^2 + 1)) / 2)`.
fn flag_potential_oracle(z: f64) -> f64 {
    let k = 1 << 14;
    let sum: f64 = (0..k)
        .map(|j| {
            let a = ((2.0 * PI * (j as f64 + 0.5) / k as f64).cos() - z).abs();
            ((a + (a * a + 1.0).sqrt()) / 2.0).ln()
        })
        .sum();
    sum / k as f64
}

fn logdet_concentration_check() -> Outcome {
    let oracle = flag_potential_oracle(3.0);
    let mut cfg = LogdetConfig::new(256, vec![c(3.0, 0.0)], 1e-8);
    cfg.trials = 20;
    cfg.seed = MASTER;
    cfg.regularized_z = Some(vec![c(0.3, 0.2)]);
    let rep = logdet_concentration(&cfg).map_err(fail)?;
    let zs = &rep.aggregate.per_z[0];
    let worst = rep
        .records
        .iter()
        .map(|r| r.value.map_or(f64::INFINITY, |v| (v - oracle).abs()))
        .fold(0.0, f64::max);
    let reg = &rep.aggregate.regularized[0];
    let first = &reg
        .points
        .iter()
        .find(|p| p.alpha == 0.1)
        .ok_or("alpha 0.1 missing")?;
    let last = &reg
        .points
        .iter()
        .find(|p| p.alpha == 0.01)
        .ok_or("alpha 0.01 missing")?;
    let improves = last.discrepancy < first.discrepancy;
    check(
        worst <= 1e-2 && improves,
        format!(
            "phi(3) oracle {oracle:.7}, mean {:.7}, worst trial gap {worst:.2e} (<= 1e-2); regularized gap {:.4} at alpha 0.1 -> {:.4} at 0.01",
            zs.mean, first.discrepancy, last.discrepancy
        ),
    )
}

fn resolvent_growth_check() -> Outcome {
    let ns = vec![32, 64, 128, 256];
    let inside = resolvent_growth(&ResolventConfig::new(c(0.5, 0.5), ns.clone())).map_err(fail)?;
    let outside = resolvent_growth(&ResolventConfig::new(c(10.0, 0.0), ns)).map_err(fail)?;
    let norms = |r: &weyl_lab_core::experiments::ResolventReport| {
        r.records
            .iter()
            .map(|x| x.norm.finite().map_or("inf".into(), |v| format!("{v:.3e}")))
            .collect::<Vec<_>>()
            .join(", ")
    };
    let ok = inside.aggregate.class == ZClass::Interior
        && inside.aggregate.trend_ok
        && outside.aggregate.class == ZClass::Outside
        && outside.aggregate.trend_ok;
    check(
        ok,
        format!(
            "z=0.5+0.5i norms [{}] (>= 10x per doubling from N=64); z=10 norms [{}] (within 2x)",
            norms(&inside),
            norms(&outside)
        ),
    )
}

fn determinism() -> Outcome {
    let runs: Vec<(&str, Run)> = vec![
        (
            "weyl-count",
            Box::new(|| {
                let mut cfg =
                    WeylConfig::new(48, Region::rect((-0.5, 0.5), (-0.5, 0.5), 0.1)?, 1e-10);
                cfg.trials = 4;
                weyl_count(&cfg)?.to_json()
            }),
        ),
        (
            "ssv-tail",
            Box::new(|| ssv_tail(&SsvConfig::zero(vec![8, 16], vec![0.1, 0.3], 200))?.to_json()),
        ),
        (
            "logdet",
            Box::new(|| {
                let mut cfg = LogdetConfig::new(32, vec![c(3.0, 0.0), c(0.2, 0.1)], 1e-8);
                cfg.trials = 4;
                logdet_concentration(&cfg)?.to_json()
            }),
        ),
        (
            "measure",
            Box::new(|| {
                let mut cfg = MeasureConfig::new(vec![16, 32]);
                cfg.trials = 3;
                measure_convergence(&cfg)?.to_json()
            }),
        ),
        (
            "spectrum",
            Box::new(|| spectrum(&SpectrumConfig::new(40, 1e-9))?.to_json()),
        ),
    ];
    let mut bad = Vec::new();
    for (name, run) in &runs {
        let a = run().map_err(fail)?;
        let b = run().map_err(fail)?;
        let serial = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .map_err(|e| e.to_string())?
            .install(run)
            .map_err(fail)?;
        let wide = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .map_err(|e| e.to_string())?
            .install(run)
            .map_err(fail)?;
        if a != b || a != serial || a != wide {
            bad.push(*name);
        }
    }
    check(
        bad.is_empty(),
        format!(
            "{} experiments re-run 4x (1 and 4 threads), mismatches: [{}]",
            runs.len(),
            bad.join(", ")
        ),
    )
}

fn linalg_oracles() -> Outcome {
    let mut worst = [0.0f64; 6];
    let ensembles = Ensemble::ALL;
    for i in 0..50u64 {
        let n = 2 + (i as usize * 37) % 63;
        let seed = derive_trial_seed(MASTER ^ 12, i);
        let mut a =
            ensembles[i as usize % ensembles.len()].sample_matrix(n, &mut rng_from_seed(seed));
        // every fifth matrix is made upper triangular: eigenvalues are then
        // known exactly and the matrix is far from normal
        let triangular = i % 5 == 4;
        if triangular {
            for r in 0..n {
                for col in 0..r {
                    a[(r, col)] = c(0.0, 0.0);
                }
                a[(r, r)] += c(3.0 * (r as f64 / n as f64), 0.0);
            }
        }
        let scale = a.frobenius_norm();
        let eig = eigenvalues(&a, DEFAULT_EIG_TOL).map_err(fail)?;
        let dec = svd(&a, DEFAULT_SVD_TOL, true).map_err(fail)?;
        let (u, v) = (dec.u.as_ref().unwrap(), dec.v.as_ref().unwrap());
        let s = &dec.values;
        let sigma = CMatrix::from_diag(&s.iter().map(|&x| c(x, 0.0)).collect::<Vec<_>>());
        let recon = u
            .matmul(&sigma)
            .map_err(fail)?
            .matmul(&v.adjoint())
            .map_err(fail)?;
        let recon_err = recon.max_abs_diff(&a).map_err(fail)? / scale;
        let orth = u
            .adjoint()
            .matmul(u)
            .map_err(fail)?
            .max_abs_diff(&CMatrix::identity(n))
            .map_err(fail)?
            .max(
                v.adjoint()
                    .matmul(v)
                    .map_err(fail)?
                    .max_abs_diff(&CMatrix::identity(n))
                    .map_err(fail)?,
            );
        let trace_err = (eig.iter().sum::<Complex64>() - a.trace()).norm() / scale;
        let ld = match log_abs_det(&a).map_err(fail)? {
            LogAbsDet::Finite(x) => x,
            LogAbsDet::NegInfinity => return Err(format!("matrix {i} reported singular")),
        };
        let sv_ld: f64 = s.iter().map(|x| x.ln()).sum();
        let eig_ld: f64 = eig.iter().map(|l| l.norm().ln()).sum();
        let ld_err = (sv_ld - ld).abs().max((eig_ld - ld).abs()) / n as f64;
        let frob_err = (s.iter().map(|x| x * x).sum::<f64>().sqrt() - scale).abs() / scale;
        let norm_err = (operator_norm(&a, 1e-13).map_err(fail)? - s[0]).abs() / s[0];
        let diag_err = if triangular {
            multiset_distance(&eig, &a.diag()) / scale
        } else {
            0.0
        };
        for (w, e) in worst.iter_mut().zip([
            recon_err,
            orth,
            trace_err,
            ld_err,
            frob_err.max(norm_err),
            diag_err,
        ]) {
            *w = w.max(e);
        }
    }
    let tol = [1e-12, 1e-12, 1e-12, 1e-9, 1e-9, 1e-10];
    let ok = worst.iter().zip(&tol).all(|(w, t)| w <= t);
    check(
        ok,
        format!(
            "50 matrices: reconstruction {:.1e}, orthonormality {:.1e}, trace {:.1e}, log-det {:.1e}, norms {:.1e}, triangular spectra {:.1e}",
            worst[0], worst[1], worst[2], worst[3], worst[4], worst[5]
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 12] = [
        ("quantization pathway equivalence", pathway_equivalence),
        ("exact trace identity", trace_identity),
        (
            "DFT unitarity and self-adjointness",
            unitarity_and_adjointness,
        ),
        ("Grushin determinant identity", grushin_identity),
        ("perturbed Grushin bound", perturbed_bound),
        ("Weyl law", weyl_law),
        ("small singular value scaling", small_sv_scaling),
        ("smallest singular value tail", ssv_tail_bound),
        ("log-det concentration", logdet_concentration_check),
        ("resolvent growth", resolvent_growth_check),
        ("determinism", determinism),
        ("linear algebra oracles", linalg_oracles),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{secs:.1} s]", k + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail} [{secs:.1} s]", k + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
