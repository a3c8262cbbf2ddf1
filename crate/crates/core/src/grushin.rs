//! Grushin problem for `P - z` built from its singular pairs.
//!
//! With `(P - z) e_i = t_i f_i`, `t_1 <= t_2 <= ...`, and `M = #{t_i^2 <= alpha}`,
//! the bordered operator `[[P - z, R_-], [R_+, 0]]` has rows `e_i^*` in `R_+`
//! and columns `f_i` in `R_-` (`i <= M`). Its inverse is
//! `[[E, E_+], [E_-, E_-+]]` with `E = sum_{i>M} t_i^{-1} e_i f_i^*`,
//! `E_+` the columns `e_i`, `E_-` the rows `f_i^*` and `E_-+ = -diag(t_i)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, WeylError};
use crate::linalg::{svd, LogAbsDet, Lu, DEFAULT_SVD_TOL};
use crate::matrix::{CMatrix, ZERO};

/// Slack on the norm bounds of the inverse blocks.
pub const NORM_SLACK: f64 = 1e-6;
/// Tolerance for orthonormality of `R_+` rows and `R_-` columns.
pub const ORTHONORMAL_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct GrushinProblem {
    pub z: Complex64,
    pub alpha: f64,
    pub m: usize,
    /// Singular values of `P - z`, ascending.
    pub t: Vec<f64>,
    /// Columns are the right singular vectors `e_i`, ascending order.
    pub e: CMatrix,
    /// Columns are the left singular vectors `f_i`.
    pub f: CMatrix,
    pub r_plus: CMatrix,
    pub r_minus: CMatrix,
    pub e_minus_plus: CMatrix,
    pub log_det_calp: f64,
}

/// Scalar summary suitable for reports.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GrushinSummary {
    pub z: Complex64,
    pub alpha: f64,
    #[serde(rename = "M")]
    pub m: usize,
    pub size: usize,
    pub small_singular_values: Vec<f64>,
    pub log_det_calp: f64,
}

fn largest_sv(a: &CMatrix) -> Result<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Ok(0.0);
    }
    if a.is_square() {
        return Ok(svd(a, DEFAULT_SVD_TOL, false)?.values[0]);
    }
    // ||A|| = sqrt(||A A^*||) on the smaller Gram matrix
    let gram = if a.nrows() <= a.ncols() {
        a.matmul(&a.adjoint())?
    } else {
        a.adjoint().matmul(a)?
    };
    Ok(svd(&gram, DEFAULT_SVD_TOL, false)?.values[0].sqrt())
}

/// `||A A^* - I||_max` (rows) or `||A^* A - I||_max` (columns).
fn orthonormality_residual(a: &CMatrix, rows: bool) -> Result<f64> {
    let g = if rows {
        a.matmul(&a.adjoint())?
    } else {
        a.adjoint().matmul(a)?
    };
    g.max_abs_diff(&CMatrix::identity(g.nrows()))
}

impl GrushinProblem {
    pub fn build(p: &CMatrix, z: Complex64, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(WeylError::InvalidParameter(format!(
                "alpha must lie in (0, 1), got {alpha}"
            )));
        }
        if !p.is_square() {
            return Err(WeylError::DimensionMismatch(
                "Grushin problem of a non-square matrix".into(),
            ));
        }
        let n = p.nrows();
        let dec = svd(&p.shifted(z), DEFAULT_SVD_TOL, true)?;
        let (u, v) = (
            dec.u.expect("vectors requested"),
            dec.v.expect("vectors requested"),
        );
        let mut t = dec.values;
        t.reverse();
        let mut e = CMatrix::zeros(n, n);
        let mut f = CMatrix::zeros(n, n);
        for i in 0..n {
            let src = n - 1 - i;
            // phase: largest-magnitude entry of e_i real positive (first on ties)
            let mut best = 0;
            for r in 1..n {
                if v[(r, src)].norm() > v[(best, src)].norm() {
                    best = r;
                }
            }
            let pivot = v[(best, src)];
            let phase = if pivot.norm() > 0.0 {
                pivot.conj() / pivot.norm()
            } else {
                Complex64::new(1.0, 0.0)
            };
            for r in 0..n {
                e[(r, i)] = v[(r, src)] * phase;
                f[(r, i)] = u[(r, src)] * phase;
            }
        }
        let m = t.iter().take_while(|&&ti| ti * ti <= alpha).count();
        let r_plus = CMatrix::from_fn(m, n, |i, j| e[(j, i)].conj());
        let r_minus = CMatrix::from_fn(n, m, |i, j| f[(i, j)]);
        let e_minus_plus = CMatrix::from_fn(m, m, |i, j| {
            if i == j {
                Complex64::new(-t[i], 0.0)
            } else {
                ZERO
            }
        });
        let log_det_calp = 0.5
            * (t.iter().map(|&ti| (ti * ti).max(alpha).ln()).sum::<f64>() - m as f64 * alpha.ln());
        Ok(Self {
            z,
            alpha,
            m,
            t,
            e,
            f,
            r_plus,
            r_minus,
            e_minus_plus,
            log_det_calp,
        })
    }

    pub fn size(&self) -> usize {
        self.t.len()
    }

    pub fn summary(&self) -> GrushinSummary {
        GrushinSummary {
            z: self.z,
            alpha: self.alpha,
            m: self.m,
            size: self.size(),
            small_singular_values: self.t[..self.m].to_vec(),
            log_det_calp: self.log_det_calp,
        }
    }

    /// `[[A - z, R_-], [R_+, 0]]`.
    pub fn bordered(&self, a: &CMatrix) -> Result<CMatrix> {
        CMatrix::from_blocks(
            &a.shifted(self.z),
            &self.r_minus,
            &self.r_plus,
            &CMatrix::zeros(self.m, self.m),
        )
    }

    /// `sum_{i>M} t_i^{-1} e_i f_i^*`.
    pub fn e_block(&self) -> CMatrix {
        let n = self.size();
        let mut out = CMatrix::zeros(n, n);
        for i in self.m..n {
            let w = 1.0 / self.t[i];
            for r in 0..n {
                let er = self.e[(r, i)] * w;
                for c in 0..n {
                    out[(r, c)] += er * self.f[(c, i)].conj();
                }
            }
        }
        out
    }

    /// `log|det E_-+| = sum_{i<=M} log t_i`.
    pub fn log_det_e_minus_plus(&self) -> LogAbsDet {
        LogAbsDet::from_value(self.t[..self.m].iter().map(|t| t.ln()).sum())
    }
}

/// Block norms of an inverse `[[E, E_+], [E_-, E_-+]]`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BlockNorms {
    pub e: f64,
    pub e_plus: f64,
    pub e_minus: f64,
    pub e_minus_plus: f64,
}

impl BlockNorms {
    fn of(inv: &CMatrix, n: usize) -> Result<(Self, CMatrix)> {
        let total = inv.nrows();
        let emp = inv.block(n, total, n, total);
        Ok((
            Self {
                e: largest_sv(&inv.block(0, n, 0, n))?,
                e_plus: largest_sv(&inv.block(0, n, n, total))?,
                e_minus: largest_sv(&inv.block(n, total, 0, n))?,
                e_minus_plus: largest_sv(&emp)?,
            },
            emp,
        ))
    }
}

/// Singular-value sandwich
/// `t_k(E_-+) / (||E|| t_k(E_-+) + ||E_-|| ||E_+||) <= t_k(A - z) <= ||R_+|| ||R_-|| t_k(E_-+)`
/// for `k <= M`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SandwichCheck {
    pub holds: bool,
    /// Smallest relative margin over both sides and all `k`; negative when violated.
    pub worst_margin: f64,
    pub checked: usize,
}

/// Margins are relative to `max(t_k, floor)`; `floor` absorbs the rounding
/// of the bordered inverse when `t_k` is far below machine precision.
fn sandwich(
    t_op: &[f64],
    emp: &CMatrix,
    norms: &BlockNorms,
    r_norm: f64,
    rel_tol: f64,
    floor: f64,
) -> Result<SandwichCheck> {
    let m = emp.nrows();
    if m == 0 {
        return Ok(SandwichCheck {
            holds: true,
            worst_margin: f64::INFINITY,
            checked: 0,
        });
    }
    let mut s = svd(emp, DEFAULT_SVD_TOL, false)?.values;
    s.reverse();
    let mut worst = f64::INFINITY;
    for k in 0..m {
        let lower = s[k] / (norms.e * s[k] + norms.e_minus * norms.e_plus);
        let upper = r_norm * s[k];
        let scale = t_op[k].max(floor).max(f64::MIN_POSITIVE);
        worst = worst
            .min((t_op[k] - lower) / scale)
            .min((upper - t_op[k]) / scale);
    }
    Ok(SandwichCheck {
        holds: worst >= -rel_tol,
        worst_margin: worst,
        checked: m,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FactorizationReport {
    pub z: Complex64,
    pub alpha: f64,
    #[serde(rename = "M")]
    pub m: usize,
    /// `log|det(P - z)|` by LU.
    pub log_abs_det_direct: LogAbsDet,
    /// `log|det P(z)|` from the clamped singular values.
    pub log_det_calp_formula: f64,
    /// `log|det P(z)|` by LU of the bordered matrix.
    pub log_det_calp_bordered: LogAbsDet,
    pub log_det_e_minus_plus: LogAbsDet,
    /// Largest pairwise gap among the three evaluations of `log|det(P - z)|`;
    /// zero when all three are `-inf`.
    pub residual: f64,
    pub neg_infinite: bool,
    /// `|2 log|det P(z)|_LU - (sum log max(t^2, alpha) - M log alpha)|`.
    pub calp_identity_residual: f64,
    /// Bordered-inverse `E_-+` block against `-diag(t_i)`.
    pub e_minus_plus_residual: f64,
    /// Bordered-inverse `E` block against `sum t_i^{-1} e_i f_i^*`.
    pub e_residual: f64,
    pub r_plus_orthonormality: f64,
    pub r_minus_orthonormality: f64,
    pub norms: BlockNorms,
    pub norm_bounds_hold: bool,
    pub sandwich: SandwichCheck,
}

impl FactorizationReport {
    /// All exact identities within the stated tolerances.
    pub fn passes(&self, residual_tol: f64) -> bool {
        self.residual <= residual_tol
            && self.e_minus_plus_residual <= 1e-8 * self.alpha.sqrt()
            && self.r_plus_orthonormality <= ORTHONORMAL_TOL
            && self.r_minus_orthonormality <= ORTHONORMAL_TOL
            && self.norm_bounds_hold
            && self.sandwich.holds
    }
}

/// Reconciles an LU determinant with the singular values: LU may miss or
/// report a numerically zero pivot that the SVD resolves differently.
fn coherent(lu: LogAbsDet, t: &[f64]) -> Result<LogAbsDet> {
    let svd_side = LogAbsDet::from_value(t.iter().map(|x| x.ln()).sum());
    match (lu.is_finite(), svd_side.is_finite()) {
        (true, true) | (false, false) => Ok(lu),
        _ => {
            let tmax = t.last().copied().unwrap_or(0.0);
            let numerically_zero = t
                .first()
                .is_some_and(|&t1| t1 <= t.len() as f64 * f64::EPSILON * tmax);
            if numerically_zero {
                Ok(LogAbsDet::NegInfinity)
            } else {
                Err(WeylError::InconsistentFlags(format!(
                    "LU gives {lu:?} while the smallest singular value is {:e}",
                    t[0]
                )))
            }
        }
    }
}

fn rounding_floor(t: &[f64], alpha: f64) -> f64 {
    let tmax = t.last().copied().unwrap_or(1.0).max(1.0);
    10.0 * t.len() as f64 * f64::EPSILON * tmax / alpha.sqrt()
}

fn gap(a: LogAbsDet, b: LogAbsDet) -> f64 {
    match (a, b) {
        (LogAbsDet::Finite(x), LogAbsDet::Finite(y)) => (x - y).abs(),
        (LogAbsDet::NegInfinity, LogAbsDet::NegInfinity) => 0.0,
        _ => f64::INFINITY,
    }
}

/// Checks `log|det(P - z)| = log|det P(z)| + log|det E_-+|` three ways, plus
/// the block structure of the bordered inverse.
pub fn check_factorization(g: &GrushinProblem, p: &CMatrix) -> Result<FactorizationReport> {
    let n = g.size();
    if p.nrows() != n || !p.is_square() {
        return Err(WeylError::DimensionMismatch(
            "matrix does not match the Grushin problem".into(),
        ));
    }
    let direct = coherent(Lu::new(&p.shifted(g.z))?.log_abs_det(), &g.t)?;
    let bordered = g.bordered(p)?;
    let blu = Lu::new(&bordered)?;
    if blu.is_singular() {
        return Err(WeylError::Singular);
    }
    let calp_lu = blu.log_abs_det();
    let emp = g.log_det_e_minus_plus();
    let via_formula = LogAbsDet::Finite(g.log_det_calp).plus(emp);
    let via_bordered = calp_lu.plus(emp);
    let residual = gap(direct, via_formula)
        .max(gap(direct, via_bordered))
        .max(gap(via_formula, via_bordered));

    let full_formula: f64 =
        g.t.iter()
            .map(|&ti| (ti * ti).max(g.alpha).ln())
            .sum::<f64>()
            - g.m as f64 * g.alpha.ln();
    let calp_identity_residual =
        (2.0 * calp_lu.finite().unwrap_or(f64::NEG_INFINITY) - full_formula).abs();

    let inv = blu.inverse()?;
    let (norms, emp_block) = BlockNorms::of(&inv, n)?;
    let e_minus_plus_residual = emp_block.max_abs_diff(&g.e_minus_plus)?;
    let e_residual = inv.block(0, n, 0, n).max_abs_diff(&g.e_block())?;
    let block_norm_one = |x: f64| {
        if g.m == 0 {
            x == 0.0
        } else {
            (x - 1.0).abs() <= NORM_SLACK
        }
    };
    let norm_bounds_hold = norms.e <= g.alpha.powf(-0.5) + NORM_SLACK
        && block_norm_one(norms.e_plus)
        && block_norm_one(norms.e_minus)
        && norms.e_minus_plus <= g.alpha.sqrt() + NORM_SLACK;
    let r_norm = largest_sv(&g.r_plus)? * largest_sv(&g.r_minus)?;
    let sandwich = sandwich(
        &g.t,
        &emp_block,
        &norms,
        r_norm,
        1e-8,
        rounding_floor(&g.t, g.alpha),
    )?;

    Ok(FactorizationReport {
        z: g.z,
        alpha: g.alpha,
        m: g.m,
        log_abs_det_direct: direct,
        log_det_calp_formula: g.log_det_calp,
        log_det_calp_bordered: calp_lu,
        log_det_e_minus_plus: emp,
        residual,
        neg_infinite: !direct.is_finite(),
        calp_identity_residual,
        e_minus_plus_residual,
        e_residual,
        r_plus_orthonormality: if g.m == 0 {
            0.0
        } else {
            orthonormality_residual(&g.r_plus, true)?
        },
        r_minus_orthonormality: if g.m == 0 {
            0.0
        } else {
            orthonormality_residual(&g.r_minus, false)?
        },
        norms,
        norm_bounds_hold,
        sandwich,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PerturbedReport {
    pub delta: f64,
    pub q_norm: f64,
    /// `delta ||Q|| alpha^{-1/2}`; must not exceed `1/2`.
    pub precondition: f64,
    /// `||E^delta_-+ - E_-+||`.
    pub deviation: f64,
    /// `2 delta ||Q||`.
    pub bound: f64,
    pub bound_holds: bool,
    /// `||E^delta_-+ - E_-+ + delta E_- Q E_+||`, the part beyond first order.
    pub second_order_residual: f64,
    /// `(delta ||Q||)^2 alpha^{-1/2} / (1 - delta ||Q|| alpha^{-1/2})`.
    pub second_order_bound: f64,
    /// `log|det(P^delta - z)| - log|det P^delta(z)| - log|det E^delta_-+|`.
    pub determinant_residual: f64,
    pub norms: BlockNorms,
    pub sandwich: SandwichCheck,
}

/// `E^delta_-+` for `P^delta = P + delta Q` with the borders of `g`, by LU of
/// the bordered matrix. Refuses when `delta ||Q|| alpha^{-1/2} > 1/2`.
pub fn perturbed_effective_matrix(
    g: &GrushinProblem,
    p: &CMatrix,
    q: &CMatrix,
    delta: f64,
) -> Result<(CMatrix, PerturbedReport)> {
    let n = g.size();
    if p.nrows() != n || q.nrows() != n || !q.is_square() {
        return Err(WeylError::DimensionMismatch(
            "matrix does not match the Grushin problem".into(),
        ));
    }
    if !(delta >= 0.0) {
        return Err(WeylError::InvalidParameter(
            "delta must be nonnegative".into(),
        ));
    }
    let q_norm = largest_sv(q)?;
    let precondition = delta * q_norm / g.alpha.sqrt();
    if precondition > 0.5 {
        return Err(WeylError::Precondition(format!(
            "delta ||Q|| alpha^(-1/2) = {precondition:.3e} exceeds 1/2"
        )));
    }
    let pd = p.add_scaled(q, Complex64::new(delta, 0.0))?;
    let bordered = g.bordered(&pd)?;
    let blu = Lu::new(&bordered)?;
    if blu.is_singular() {
        return Err(WeylError::Singular);
    }
    let inv = blu.inverse()?;
    let (norms, emp) = BlockNorms::of(&inv, n)?;
    let diff = emp.sub(&g.e_minus_plus)?;
    let deviation = largest_sv(&diff)?;
    let bound = 2.0 * delta * q_norm;

    // first-order term -delta E_- Q E_+ uses the unperturbed blocks f_i^*, e_i
    let e_minus = CMatrix::from_fn(g.m, n, |i, j| g.f[(j, i)].conj());
    let e_plus = CMatrix::from_fn(n, g.m, |i, j| g.e[(i, j)]);
    let first = e_minus
        .matmul(q)?
        .matmul(&e_plus)?
        .scale(Complex64::new(-delta, 0.0));
    let second_order_residual = largest_sv(&diff.sub(&first)?)?;
    let second_order_bound = (delta * q_norm).powi(2) / g.alpha.sqrt() / (1.0 - precondition);

    let direct = Lu::new(&pd.shifted(g.z))?.log_abs_det();
    let emp_det = Lu::new(&emp)?.log_abs_det();
    let determinant_residual = match (direct, blu.log_abs_det().plus(emp_det)) {
        (LogAbsDet::Finite(a), LogAbsDet::Finite(b)) => (a - b).abs(),
        (LogAbsDet::NegInfinity, LogAbsDet::NegInfinity) => 0.0,
        _ => f64::INFINITY,
    };
    let mut t_pd = svd(&pd.shifted(g.z), DEFAULT_SVD_TOL, false)?.values;
    t_pd.reverse();
    let r_norm = largest_sv(&g.r_plus)? * largest_sv(&g.r_minus)?;
    let sandwich = sandwich(
        &t_pd,
        &emp,
        &norms,
        r_norm,
        1e-8,
        rounding_floor(&t_pd, g.alpha),
    )?;

    Ok((
        emp,
        PerturbedReport {
            delta,
            q_norm,
            precondition,
            deviation,
            bound,
            bound_holds: deviation <= bound,
            second_order_residual,
            second_order_bound,
            determinant_residual,
            norms,
            sandwich,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantize::quantize;
    use crate::random::{rng_from_seed, Ensemble};
    use crate::symbols::Symbol;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn flag_matrix(n: usize) -> CMatrix {
        quantize(&Symbol::named("scottish-flag", 1).unwrap(), n, None)
            .unwrap()
            .matrix
    }

    #[test]
    fn identity_has_no_small_values() {
        let g = GrushinProblem::build(&CMatrix::identity(4), ZERO, 0.5).unwrap();
        assert_eq!(g.m, 0);
        assert_eq!(g.e_minus_plus.nrows(), 0);
        assert_eq!(g.log_det_e_minus_plus(), LogAbsDet::Finite(0.0));
        let r = check_factorization(&g, &CMatrix::identity(4)).unwrap();
        assert!(r.residual < 1e-14 && r.passes(1e-12));
    }

    #[test]
    fn exact_zero_singular_value() {
        let p = CMatrix::from_diag(&[ZERO, c(2.0, 0.0)]);
        let g = GrushinProblem::build(&p, ZERO, 0.5).unwrap();
        assert_eq!(g.m, 1);
        assert_eq!(g.e_minus_plus[(0, 0)].norm(), 0.0);
        let r = check_factorization(&g, &p).unwrap();
        assert!(r.neg_infinite);
        assert_eq!(r.residual, 0.0);
        assert!((r.log_det_calp_formula - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn scalar_case() {
        let p = CMatrix::from_diag(&[c(3.0, 0.0)]);
        let g = GrushinProblem::build(&p, ZERO, 0.5).unwrap();
        let r = check_factorization(&g, &p).unwrap();
        assert_eq!(r.log_abs_det_direct, LogAbsDet::Finite(3f64.ln()));
        assert!(r.residual < 1e-15);
    }

    #[test]
    fn ginibre_median_threshold() {
        let q = Ensemble::Ginibre.sample_matrix(8, &mut rng_from_seed(5));
        let z = c(0.1, 0.0);
        let mut t = crate::linalg::singular_values(&q.shifted(z)).unwrap();
        t.sort_by(f64::total_cmp);
        let alpha = (t[3] * t[3] + t[4] * t[4]) / 2.0;
        let g = GrushinProblem::build(&q, z, alpha.min(0.99)).unwrap();
        let r = check_factorization(&g, &q).unwrap();
        assert!(r.residual <= 1e-6, "{}", r.residual);
        assert!(r.passes(1e-6), "{r:?}");
        assert!(r.e_residual < 1e-8, "{}", r.e_residual);
    }

    #[test]
    fn flag_small_count_matches_raw_svd() {
        let p = flag_matrix(64);
        let z = c(0.3, 0.2);
        let g = GrushinProblem::build(&p, z, 0.05).unwrap();
        let raw = crate::linalg::singular_values(&p.shifted(z)).unwrap();
        assert_eq!(g.m, raw.iter().filter(|&&t| t * t <= 0.05).count());
        let r = check_factorization(&g, &p).unwrap();
        assert!(r.passes(1e-6 * 64.0), "{r:?}");
        assert!(r.calp_identity_residual < 1e-8);
    }

    #[test]
    fn perturbation_bounds() {
        let p = flag_matrix(64);
        let z = c(0.3, 0.2);
        let g = GrushinProblem::build(&p, z, 0.05).unwrap();
        let q = Ensemble::Ginibre.sample_matrix(64, &mut rng_from_seed(9));
        let (emp0, r0) = perturbed_effective_matrix(&g, &p, &q, 0.0).unwrap();
        assert!(emp0.max_abs_diff(&g.e_minus_plus).unwrap() < 1e-10);
        assert!(r0.deviation < 1e-10);
        let (_, r) = perturbed_effective_matrix(&g, &p, &q, 1e-6).unwrap();
        assert!(r.bound_holds, "{r:?}");
        assert!(r.second_order_residual <= r.second_order_bound + 1e-12);
        assert!(r.sandwich.holds);
        assert!(r.determinant_residual < 1e-8);
        assert!(matches!(
            perturbed_effective_matrix(&g, &p, &q, 1.0),
            Err(WeylError::Precondition(_))
        ));
    }

    #[test]
    fn bad_alpha_rejected() {
        assert!(GrushinProblem::build(&CMatrix::identity(2), ZERO, 1.0).is_err());
        assert!(GrushinProblem::build(&CMatrix::identity(2), ZERO, 0.0).is_err());
    }
}
