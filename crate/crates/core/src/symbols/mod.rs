//! Smooth torus symbols represented as finite Fourier series.
//!
//! A [`Symbol`] on `T^{2d} = [0,1)^{2d}` is
//! `p(x, xi) = sum p̂(n, m) exp(2 pi i (x.n + xi.m))` over finitely many
//! frequency pairs `(n, m)`. Band-limited symbols keep both the matrix
//! elements of the quantization and the Poisson bracket exact.

mod grid;

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, WeylError};

pub use grid::{
    log_potential, pushforward, sample_fraction, volume_profile, CellGrid, GridSampler,
    PushforwardMeasure, VolumeProfile,
};

/// Frequency pair `(n, m)` in `Z^d x Z^d`; `n` pairs with `x`, `m` with `xi`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Frequency {
    pub n: Vec<i64>,
    pub m: Vec<i64>,
}

impl Frequency {
    pub fn new(n: Vec<i64>, m: Vec<i64>) -> Self {
        Self { n, m }
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            n: vec![0; dim],
            m: vec![0; dim],
        }
    }

    pub fn neg(&self) -> Self {
        Self {
            n: self.n.iter().map(|&k| -k).collect(),
            m: self.m.iter().map(|&k| -k).collect(),
        }
    }

    pub fn add(&self, other: &Frequency) -> Self {
        Self {
            n: self.n.iter().zip(&other.n).map(|(a, b)| a + b).collect(),
            m: self.m.iter().zip(&other.m).map(|(a, b)| a + b).collect(),
        }
    }

    /// Sup norm over all `2d` components.
    pub fn sup_norm(&self) -> i64 {
        self.n
            .iter()
            .chain(&self.m)
            .map(|k| k.abs())
            .max()
            .unwrap_or(0)
    }
}

#[derive(Serialize, Deserialize)]
struct CoeffRecord {
    n: Vec<i64>,
    m: Vec<i64>,
    re: f64,
    im: f64,
}

#[derive(Serialize, Deserialize)]
struct SymbolDocument {
    dim: usize,
    coeffs: Vec<CoeffRecord>,
}

/// Finite Fourier series on `T^{2d}`. Zero amplitudes are never stored.
#[derive(Clone, Debug, PartialEq)]
pub struct Symbol {
    dim: usize,
    coeffs: BTreeMap<Frequency, Complex64>,
    label: String,
}

pub const NAMED_SYMBOLS: [&str; 4] = ["scottish-flag", "cos-x", "cos-xi", "constant"];

impl Symbol {
    /// Builds a symbol, summing repeated frequencies and dropping zeros.
    pub fn new(
        dim: usize,
        terms: impl IntoIterator<Item = (Frequency, Complex64)>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(WeylError::InvalidParameter(
                "symbol dimension must be positive".into(),
            ));
        }
        let mut coeffs: BTreeMap<Frequency, Complex64> = BTreeMap::new();
        for (f, c) in terms {
            if f.n.len() != dim || f.m.len() != dim {
                return Err(WeylError::DimensionMismatch(format!(
                    "frequency {:?}/{:?} in a d = {dim} symbol",
                    f.n, f.m
                )));
            }
            if !c.re.is_finite() || !c.im.is_finite() {
                return Err(WeylError::InvalidParameter(
                    "non-finite Fourier amplitude".into(),
                ));
            }
            *coeffs.entry(f).or_default() += c;
        }
        coeffs.retain(|_, c| *c != Complex64::new(0.0, 0.0));
        Ok(Self {
            dim,
            coeffs,
            label: "inline".into(),
        })
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            coeffs: BTreeMap::new(),
            label: "zero".into(),
        }
    }

    pub fn constant(dim: usize, c: Complex64) -> Self {
        let mut s = Self::new(dim, [(Frequency::zero(dim), c)]).expect("valid constant");
        s.label = "constant".into();
        s
    }

    /// `amplitude * cos(2 pi k x_axis)` or, with `on_xi`, in `xi_axis`.
    pub fn cosine(dim: usize, axis: usize, k: i64, on_xi: bool, amplitude: Complex64) -> Self {
        let mut plus = Frequency::zero(dim);
        let mut minus = Frequency::zero(dim);
        if on_xi {
            plus.m[axis] = k;
            minus.m[axis] = -k;
        } else {
            plus.n[axis] = k;
            minus.n[axis] = -k;
        }
        Self::new(dim, [(plus, amplitude * 0.5), (minus, amplitude * 0.5)]).expect("valid cosine")
    }

    /// Built-in symbols: `scottish-flag` (`cos 2 pi x + i cos 2 pi xi`, summed
    /// over coordinates when `d > 1`), `cos-x`, `cos-xi`, `constant` (`1`, or
    /// `constant:<re>[:<im>]`).
    pub fn named(name: &str, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(WeylError::InvalidParameter(
                "symbol dimension must be positive".into(),
            ));
        }
        let one = Complex64::new(1.0, 0.0);
        let mut sym = match name {
            "scottish-flag" => {
                let mut s = Symbol::zero(dim);
                for a in 0..dim {
                    s = s.add(&Symbol::cosine(dim, a, 1, false, one))?;
                    s = s.add(&Symbol::cosine(dim, a, 1, true, Complex64::new(0.0, 1.0)))?;
                }
                s
            }
            "cos-x" => Symbol::cosine(dim, 0, 1, false, one),
            "cos-xi" => Symbol::cosine(dim, 0, 1, true, one),
            "constant" => Symbol::constant(dim, one),
            other if other.starts_with("constant:") => {
                let parts: Vec<&str> = other["constant:".len()..].split(':').collect();
                let parse = |s: &str| {
                    s.parse::<f64>().map_err(|_| WeylError::Unknown {
                        kind: "symbol",
                        name: other.to_string(),
                    })
                };
                let re = parse(parts[0])?;
                let im = if parts.len() > 1 {
                    parse(parts[1])?
                } else {
                    0.0
                };
                Symbol::constant(dim, Complex64::new(re, im))
            }
            other => {
                return Err(WeylError::Unknown {
                    kind: "symbol",
                    name: other.to_string(),
                })
            }
        };
        sym.label = name.to_string();
        Ok(sym)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coeffs(&self) -> &BTreeMap<Frequency, Complex64> {
        &self.coeffs
    }

    pub fn coeff(&self, f: &Frequency) -> Complex64 {
        self.coeffs.get(f).copied().unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Largest sup-norm of a stored frequency.
    pub fn bandwidth(&self) -> i64 {
        self.coeffs
            .keys()
            .map(Frequency::sup_norm)
            .max()
            .unwrap_or(0)
    }

    /// `p̂(0, 0)`, the torus average.
    pub fn mean(&self) -> Complex64 {
        self.coeff(&Frequency::zero(self.dim))
    }

    pub fn max_amplitude(&self) -> f64 {
        self.coeffs.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn evaluate(&self, x: &[f64], xi: &[f64]) -> Complex64 {
        assert_eq!(x.len(), self.dim);
        assert_eq!(xi.len(), self.dim);
        self.coeffs
            .iter()
            .map(|(f, &c)| {
                let phase: f64 = f.n.iter().zip(x).map(|(&k, &t)| k as f64 * t).sum::<f64>()
                    + f.m.iter().zip(xi).map(|(&k, &t)| k as f64 * t).sum::<f64>();
                c * Complex64::from_polar(1.0, 2.0 * PI * phase.rem_euclid(1.0))
            })
            .sum()
    }

    fn check_dim(&self, other: &Symbol) -> Result<()> {
        if self.dim != other.dim {
            return Err(WeylError::DimensionMismatch(format!(
                "symbols of dimension {} and {}",
                self.dim, other.dim
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Symbol) -> Result<Symbol> {
        self.check_dim(other)?;
        Symbol::new(
            self.dim,
            self.coeffs
                .iter()
                .chain(&other.coeffs)
                .map(|(f, &c)| (f.clone(), c)),
        )
    }

    pub fn scale(&self, s: Complex64) -> Symbol {
        Symbol::new(
            self.dim,
            self.coeffs.iter().map(|(f, &c)| (f.clone(), c * s)),
        )
        .expect("same shape")
    }

    /// Pointwise product (convolution of coefficient sets).
    pub fn mul(&self, other: &Symbol) -> Result<Symbol> {
        self.check_dim(other)?;
        let mut terms = Vec::with_capacity(self.coeffs.len() * other.coeffs.len());
        for (f, &a) in &self.coeffs {
            for (g, &b) in &other.coeffs {
                terms.push((f.add(g), a * b));
            }
        }
        Symbol::new(self.dim, terms)
    }

    /// `conj(p)`: `conj(p)^(n, m) = conj(p̂(-n, -m))`.
    pub fn conj(&self) -> Symbol {
        Symbol::new(
            self.dim,
            self.coeffs.iter().map(|(f, c)| (f.neg(), c.conj())),
        )
        .expect("same shape")
    }

    pub fn real_part(&self) -> Symbol {
        self.add(&self.conj())
            .expect("same dim")
            .scale(Complex64::new(0.5, 0.0))
    }

    pub fn imag_part(&self) -> Symbol {
        self.add(&self.conj().scale(Complex64::new(-1.0, 0.0)))
            .expect("same dim")
            .scale(Complex64::new(0.0, -0.5))
    }

    /// `d/dx_axis`, or `d/dxi_axis` with `on_xi`.
    pub fn derivative(&self, axis: usize, on_xi: bool) -> Symbol {
        Symbol::new(
            self.dim,
            self.coeffs.iter().map(|(f, &c)| {
                let k = if on_xi { f.m[axis] } else { f.n[axis] };
                (f.clone(), c * Complex64::new(0.0, 2.0 * PI * k as f64))
            }),
        )
        .expect("same shape")
    }

    /// Hermitian symmetry `p̂(-n, -m) = conj(p̂(n, m))` within `tol`.
    pub fn is_real_valued(&self, tol: f64) -> bool {
        self.coeffs
            .iter()
            .all(|(f, c)| (self.coeff(&f.neg()) - c.conj()).norm() <= tol)
    }

    pub fn depends_on_x_only(&self) -> bool {
        self.coeffs.keys().all(|f| f.m.iter().all(|&k| k == 0))
    }

    pub fn depends_on_xi_only(&self) -> bool {
        self.coeffs.keys().all(|f| f.n.iter().all(|&k| k == 0))
    }

    /// Splits `p = f(x) + g(xi)` when no stored frequency mixes `x` and `xi`.
    /// The constant term goes to `f`.
    pub fn split_separable(&self) -> Option<(Symbol, Symbol)> {
        let mut fx = Vec::new();
        let mut gxi = Vec::new();
        for (f, &c) in &self.coeffs {
            if f.m.iter().all(|&k| k == 0) {
                fx.push((f.clone(), c));
            } else if f.n.iter().all(|&k| k == 0) {
                gxi.push((f.clone(), c));
            } else {
                return None;
            }
        }
        Some((
            Symbol::new(self.dim, fx).ok()?,
            Symbol::new(self.dim, gxi).ok()?,
        ))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Symbol> {
        Ok(serde_json::from_str(s)?)
    }
}

/// `{a, b} = sum_k d_xi_k a * d_x_k b - d_x_k a * d_xi_k b`, exactly.
pub fn poisson_bracket(a: &Symbol, b: &Symbol) -> Result<Symbol> {
    a.check_dim(b)?;
    let mut out = Symbol::zero(a.dim);
    for k in 0..a.dim {
        let t1 = a.derivative(k, true).mul(&b.derivative(k, false))?;
        let t2 = a.derivative(k, false).mul(&b.derivative(k, true))?;
        out = out.add(&t1)?.add(&t2.scale(Complex64::new(-1.0, 0.0)))?;
    }
    Ok(out)
}

impl Serialize for Symbol {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SymbolDocument {
            dim: self.dim,
            coeffs: self
                .coeffs
                .iter()
                .map(|(f, c)| CoeffRecord {
                    n: f.n.clone(),
                    m: f.m.clone(),
                    re: c.re,
                    im: c.im,
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Symbol {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let doc = SymbolDocument::deserialize(d)?;
        Symbol::new(
            doc.dim,
            doc.coeffs
                .into_iter()
                .map(|r| (Frequency::new(r.n, r.m), Complex64::new(r.re, r.im))),
        )
        .map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn flag() -> Symbol {
        Symbol::named("scottish-flag", 1).unwrap()
    }

    #[test]
    fn flag_values() {
        let p = flag();
        assert!((p.evaluate(&[0.0], &[0.0]) - c(1.0, 1.0)).norm() < 1e-15);
        assert!((p.evaluate(&[0.25], &[0.5]) - c(0.0, -1.0)).norm() < 1e-15);
        assert_eq!(p.bandwidth(), 1);
        assert_eq!(p.coeffs().len(), 4);
        assert_eq!(p.mean(), c(0.0, 0.0));
    }

    #[test]
    fn constant_everywhere() {
        let k = Symbol::constant(2, c(2.0, -1.0));
        assert_eq!(k.evaluate(&[0.3, 0.9], &[0.1, 0.7]), c(2.0, -1.0));
        assert_eq!(k.bandwidth(), 0);
        let k = Symbol::named("constant:2.5:1", 1).unwrap();
        assert_eq!(k.mean(), c(2.5, 1.0));
    }

    #[test]
    fn bracket_of_flag_real_and_imaginary_parts() {
        // {Re p, Im p} = -4 pi^2 sin(2 pi x) sin(2 pi xi), checked by hand
        // differentiation at a set of points.
        let p = flag();
        let b = poisson_bracket(&p.real_part(), &p.imag_part()).unwrap();
        for &(x, xi) in &[(0.25, 0.25), (0.1, 0.7), (0.33, 0.05), (0.9, 0.45)] {
            let want = -4.0 * PI * PI * (2.0 * PI * x).sin() * (2.0 * PI * xi).sin();
            let got = b.evaluate(&[x], &[xi]);
            assert!(
                (got.re - want).abs() < 1e-12 && got.im.abs() < 1e-12,
                "{got} vs {want}"
            );
        }
        // {p, conj p} = -2i {Re p, Im p}
        let pb = poisson_bracket(&p, &p.conj()).unwrap();
        let v = pb.evaluate(&[0.25], &[0.25]);
        assert!((v - c(0.0, 8.0 * PI * PI)).norm() < 1e-11);
    }

    #[test]
    fn bracket_trivial_cases() {
        let p = flag();
        assert!(poisson_bracket(&p, &p).unwrap().is_zero());
        let f = Symbol::cosine(1, 0, 1, false, c(1.0, 0.0));
        let g = Symbol::cosine(1, 0, 3, false, c(0.0, 2.0));
        assert!(poisson_bracket(&f, &g).unwrap().is_zero());
        assert!(poisson_bracket(&f, &Symbol::zero(2)).is_err());
    }

    #[test]
    fn separable_split() {
        let (fx, gxi) = flag().split_separable().unwrap();
        assert!(fx.depends_on_x_only() && gxi.depends_on_xi_only());
        let mixed = Symbol::new(1, [(Frequency::new(vec![1], vec![1]), c(1.0, 0.0))]).unwrap();
        assert!(mixed.split_separable().is_none());
    }

    #[test]
    fn json_schema_round_trip() {
        let p = flag();
        let s = p.to_json().unwrap();
        assert!(s.starts_with("{\"dim\":1,\"coeffs\":[{\"n\":["));
        let back = Symbol::from_json(&s).unwrap();
        assert_eq!(back.coeffs(), p.coeffs());
        assert!(Symbol::named("no-such-symbol", 1).is_err());
        assert!(Symbol::from_json(
            "{\"dim\":1,\"coeffs\":[{\"n\":[1,2],\"m\":[0],\"re\":1,\"im\":0}]}"
        )
        .is_err());
    }

    fn arb_symbol() -> impl Strategy<Value = Symbol> {
        prop::collection::vec(((-3i64..=3, -3i64..=3), (-2.0f64..2.0, -2.0f64..2.0)), 0..8)
            .prop_map(|terms| {
                Symbol::new(
                    1,
                    terms
                        .into_iter()
                        .map(|((n, m), (re, im))| (Frequency::new(vec![n], vec![m]), c(re, im))),
                )
                .unwrap()
            })
    }

    proptest! {
        #[test]
        fn bracket_antisymmetric(a in arb_symbol(), b in arb_symbol()) {
            let ab = poisson_bracket(&a, &b).unwrap();
            let ba = poisson_bracket(&b, &a).unwrap();
            let sum = ab.add(&ba).unwrap();
            // exact cancellation up to the rounding of the 4 pi^2 k l factors
            prop_assert!(sum.max_amplitude() <= 1e-12 * (1.0 + ab.max_amplitude()));
        }

        #[test]
        fn real_symbols_evaluate_real(a in arb_symbol(), x in 0.0f64..1.0, xi in 0.0f64..1.0) {
            let r = a.real_part();
            prop_assert!(r.is_real_valued(1e-15));
            prop_assert!(r.evaluate(&[x], &[xi]).im.abs() <= 1e-12);
        }

        #[test]
        fn evaluation_is_periodic(a in arb_symbol(), x in 0.0f64..1.0, xi in 0.0f64..1.0) {
            let v = a.evaluate(&[x], &[xi]);
            let w = a.evaluate(&[x + 1.0], &[xi - 2.0]);
            prop_assert!((v - w).norm() <= 1e-12 * (1.0 + v.norm()));
        }

        #[test]
        fn conj_and_mul_agree_pointwise(a in arb_symbol(), b in arb_symbol(), x in 0.0f64..1.0, xi in 0.0f64..1.0) {
            let ab = a.mul(&b).unwrap().evaluate(&[x], &[xi]);
            let want = a.evaluate(&[x], &[xi]) * b.evaluate(&[x], &[xi]);
            prop_assert!((ab - want).norm() <= 1e-10 * (1.0 + want.norm()));
            let ac = a.conj().evaluate(&[x], &[xi]);
            prop_assert!((ac - a.evaluate(&[x], &[xi]).conj()).norm() <= 1e-12 * (1.0 + ac.norm()));
        }
    }
}
