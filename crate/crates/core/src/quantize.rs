//! Weyl quantization of torus symbols into `N^d x N^d` matrices.
//!
//! Basis vectors are indexed by multi-indices `m in {0..N-1}^d` flattened
//! with the first coordinate most significant. The quantization of
//! `exp(2 pi i (x.n + xi.m'))` is `e^{i pi n.m'/N} X^n S^{m'}` where
//! `X = diag(e^{2 pi i l/N})` and `S` is the cyclic shift `e_j -> e_{j-1}`,
//! so entry `(m, j)` is nonzero only when `j = m + m' (mod N)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, WeylError};
use crate::linalg::{self, SpectralData, SpectralSource};
use crate::matrix::{CMatrix, ZERO};
use crate::symbols::Symbol;

/// Largest matrix dimension `N^d` the quantizer will allocate.
pub const MAX_MATRIX_DIM: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstructionPath {
    /// Direct matrix elements from the Fourier coefficients.
    General,
    /// `diag(f(l/N)) + F* diag(g(l/N)) F` for `p = f(x) + g(xi)`.
    Separable,
}

impl ConstructionPath {
    pub fn as_str(self) -> &'static str {
        match self {
            ConstructionPath::General => "general",
            ConstructionPath::Separable => "separable",
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QuantizedOperator {
    pub matrix: CMatrix,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "d")]
    pub dim: usize,
    pub symbol_id: String,
    pub path: ConstructionPath,
}

fn matrix_dim(n: usize, d: usize) -> Result<usize> {
    if n == 0 {
        return Err(WeylError::InvalidParameter("N must be at least 1".into()));
    }
    let size = (n as u128).checked_pow(d as u32).unwrap_or(u128::MAX);
    if size > MAX_MATRIX_DIM as u128 {
        return Err(WeylError::InvalidParameter(format!(
            "N^d = {n}^{d} exceeds the supported matrix dimension {MAX_MATRIX_DIM}"
        )));
    }
    Ok(size as usize)
}

fn digits(mut flat: usize, n: usize, d: usize, out: &mut [usize]) {
    for k in (0..d).rev() {
        out[k] = flat % n;
        flat /= n;
    }
}

fn flatten(idx: &[usize], n: usize) -> usize {
    idx.iter().fold(0, |acc, &k| acc * n + k)
}

/// Quantizes `symbol` at level `n`. With `path = None` the separable route
/// is taken whenever the symbol splits as `f(x) + g(xi)`.
pub fn quantize(
    symbol: &Symbol,
    n: usize,
    path: Option<ConstructionPath>,
) -> Result<QuantizedOperator> {
    let path = match path {
        Some(p) => p,
        None if symbol.split_separable().is_some() => ConstructionPath::Separable,
        None => ConstructionPath::General,
    };
    let matrix = match path {
        ConstructionPath::General => quantize_general(symbol, n)?,
        ConstructionPath::Separable => quantize_separable(symbol, n)?,
    };
    Ok(QuantizedOperator {
        matrix,
        n,
        dim: symbol.dim(),
        symbol_id: symbol.label().to_string(),
        path,
    })
}

/// Entry-wise construction, valid for any finite Fourier series.
pub fn quantize_general(symbol: &Symbol, n: usize) -> Result<CMatrix> {
    let d = symbol.dim();
    let size = matrix_dim(n, d)?;
    let two_n = 2 * n as i64;
    // e^{i pi q / N} for q in 0..2N
    let roots: Vec<Complex64> = (0..two_n)
        .map(|q| Complex64::from_polar(1.0, PI * q as f64 / n as f64))
        .collect();
    let mut out = CMatrix::zeros(size, size);
    let mut row_idx = vec![0usize; d];
    let mut col_idx = vec![0usize; d];
    for (f, &c) in symbol.coeffs() {
        for row in 0..size {
            digits(row, n, d, &mut row_idx);
            // q = sum_k (j_k + m_k) n_k + N n_k r_k  (mod 2N)
            let mut q: i64 = 0;
            for k in 0..d {
                let target = row_idx[k] as i64 + f.m[k];
                let j = target.rem_euclid(n as i64);
                let r = (j - target) / n as i64;
                col_idx[k] = j as usize;
                q += (j + row_idx[k] as i64) * f.n[k] + n as i64 * f.n[k] * r;
            }
            let col = flatten(&col_idx, n);
            out[(row, col)] += c * roots[q.rem_euclid(two_n) as usize];
        }
    }
    Ok(out)
}

/// Unitary DFT on `(Z/NZ)^d`: `F_{a,b} = e^{-2 pi i a.b/N} / N^{d/2}`.
pub fn dft_matrix(n: usize, d: usize) -> Result<CMatrix> {
    let size = matrix_dim(n, d)?;
    let norm = (size as f64).sqrt().recip();
    let mut ia = vec![0usize; d];
    let mut ib = vec![0usize; d];
    Ok(CMatrix::from_fn(size, size, |a, b| {
        digits(a, n, d, &mut ia);
        digits(b, n, d, &mut ib);
        let dot: usize = ia.iter().zip(&ib).map(|(x, y)| x * y % n).sum::<usize>() % n;
        Complex64::from_polar(norm, -2.0 * PI * dot as f64 / n as f64)
    }))
}

/// `diag(f(l/N)) + F* diag(g(l/N)) F`. The conjugated diagonal is a
/// convolution, so its entries are filled from one sum per offset.
pub fn quantize_separable(symbol: &Symbol, n: usize) -> Result<CMatrix> {
    let d = symbol.dim();
    let size = matrix_dim(n, d)?;
    let (fx, gxi) = symbol.split_separable().ok_or_else(|| {
        WeylError::NotSeparable(format!(
            "symbol '{}' mixes x and xi frequencies",
            symbol.label()
        ))
    })?;
    let zeros = vec![0.0; d];
    let mut idx = vec![0usize; d];
    let grid_point =
        |idx: &[usize]| -> Vec<f64> { idx.iter().map(|&k| k as f64 / n as f64).collect() };

    let mut g_samples = Vec::with_capacity(size);
    let mut out = CMatrix::zeros(size, size);
    for l in 0..size {
        digits(l, n, d, &mut idx);
        let t = grid_point(&idx);
        out[(l, l)] = fx.evaluate(&t, &zeros);
        g_samples.push(gxi.evaluate(&zeros, &t));
    }
    if gxi.is_zero() {
        return Ok(out);
    }
    let roots: Vec<Complex64> = (0..n)
        .map(|q| Complex64::from_polar(1.0, 2.0 * PI * q as f64 / n as f64))
        .collect();
    // h[k] = N^{-d} sum_l g(l/N) e^{2 pi i l.k/N}; entry (a, b) = h[a - b]
    let mut il = vec![0usize; d];
    let h: Vec<Complex64> = (0..size)
        .map(|k| {
            digits(k, n, d, &mut idx);
            let mut acc = ZERO;
            for (l, &g) in g_samples.iter().enumerate() {
                digits(l, n, d, &mut il);
                let q: usize = il.iter().zip(&idx).map(|(a, b)| a * b % n).sum::<usize>() % n;
                acc += g * roots[q];
            }
            acc / size as f64
        })
        .collect();
    let mut ia = vec![0usize; d];
    let mut ib = vec![0usize; d];
    let mut diff = vec![0usize; d];
    for a in 0..size {
        digits(a, n, d, &mut ia);
        for b in 0..size {
            digits(b, n, d, &mut ib);
            for k in 0..d {
                diff[k] = (ia[k] + n - ib[k]) % n;
            }
            out[(a, b)] += h[flatten(&diff, n)];
        }
    }
    Ok(out)
}

#[derive(Serialize)]
struct DumpHeader<'a> {
    #[serde(rename = "N")]
    n: usize,
    d: usize,
    symbol_id: &'a str,
    path: ConstructionPath,
}

#[derive(Serialize)]
struct Dump<'a> {
    header: DumpHeader<'a>,
    matrix: &'a CMatrix,
}

impl QuantizedOperator {
    pub fn size(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    pub fn operator_norm(&self) -> Result<f64> {
        linalg::operator_norm(&self.matrix, 1e-10)
    }

    pub fn spectral_data(&self, shift: Complex64, with_sv: bool) -> Result<SpectralData> {
        SpectralData::compute(
            &self.matrix,
            SpectralSource {
                operator: format!("quantized:{}:N={}", self.symbol_id, self.n),
                shift,
                seed: None,
            },
            with_sv,
        )
    }

    /// JSON with a `{N, d, symbol_id, path}` header ahead of the matrix.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&Dump {
            header: DumpHeader {
                n: self.n,
                d: self.dim,
                symbol_id: &self.symbol_id,
                path: self.path,
            },
            matrix: &self.matrix,
        })?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbols::Frequency;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn monomial(n: i64, m: i64) -> Symbol {
        Symbol::new(1, [(Frequency::new(vec![n], vec![m]), c(1.0, 0.0))]).unwrap()
    }

    fn power(a: &CMatrix, k: i64) -> CMatrix {
        // negative powers of the unitary X and S are adjoints
        let base = if k < 0 { a.adjoint() } else { a.clone() };
        let mut out = CMatrix::identity(a.nrows());
        for _ in 0..k.unsigned_abs() {
            out = out.matmul(&base).unwrap();
        }
        out
    }

    /// `e^{i pi n m / N} X^n S^m` built from the two generators.
    fn translation_oracle(n_level: usize, n: i64, m: i64) -> CMatrix {
        let x = CMatrix::from_diag(
            &(0..n_level)
                .map(|l| Complex64::from_polar(1.0, 2.0 * PI * l as f64 / n_level as f64))
                .collect::<Vec<_>>(),
        );
        let s = CMatrix::from_fn(n_level, n_level, |a, b| {
            if b == (a + 1) % n_level {
                c(1.0, 0.0)
            } else {
                ZERO
            }
        });
        let phase = Complex64::from_polar(1.0, PI * (n * m) as f64 / n_level as f64);
        power(&x, n).matmul(&power(&s, m)).unwrap().scale(phase)
    }

    #[test]
    fn monomials_match_generator_products() {
        for &level in &[1usize, 2, 5, 8] {
            for n in -3..=3 {
                for m in -3..=3 {
                    let q = quantize_general(&monomial(n, m), level).unwrap();
                    let want = translation_oracle(level, n, m);
                    assert!(
                        q.max_abs_diff(&want).unwrap() < 1e-12,
                        "N={level} n={n} m={m}"
                    );
                }
            }
        }
    }

    #[test]
    fn flag_structure() {
        let p = Symbol::named("scottish-flag", 1).unwrap();
        let q = quantize(&p, 6, None).unwrap();
        assert_eq!(q.path, ConstructionPath::Separable);
        for l in 0..6 {
            assert!((q.matrix[(l, l)] - c((2.0 * PI * l as f64 / 6.0).cos(), 0.0)).norm() < 1e-14);
            assert!((q.matrix[(l, (l + 1) % 6)] - c(0.0, 0.5)).norm() < 1e-14);
            assert!((q.matrix[(l, (l + 5) % 6)] - c(0.0, 0.5)).norm() < 1e-14);
        }
        // N = 1 collapses to the symbol at the origin, N = 2 folds both shifts
        assert!((quantize(&p, 1, None).unwrap().matrix[(0, 0)] - c(1.0, 1.0)).norm() < 1e-14);
        let q2 = quantize(&p, 2, Some(ConstructionPath::General)).unwrap();
        assert!((q2.matrix[(0, 1)] - c(0.0, 1.0)).norm() < 1e-14);
    }

    #[test]
    fn separable_matches_general_and_dft() {
        for d in 1..=2 {
            let p = Symbol::named("scottish-flag", d)
                .unwrap()
                .add(&Symbol::cosine(d, 0, 3, true, c(0.2, -0.1)))
                .unwrap()
                .add(&Symbol::constant(d, c(0.5, 0.0)))
                .unwrap();
            let n = if d == 1 { 7 } else { 4 };
            let a = quantize_separable(&p, n).unwrap();
            let b = quantize_general(&p, n).unwrap();
            assert!(a.max_abs_diff(&b).unwrap() < 1e-12);
            // explicit F* diag(g) F for the xi part
            let (_, g) = p.split_separable().unwrap();
            let f = dft_matrix(n, d).unwrap();
            let samples: Vec<Complex64> = (0..f.nrows())
                .map(|l| {
                    let mut idx = vec![0; d];
                    digits(l, n, d, &mut idx);
                    let t: Vec<f64> = idx.iter().map(|&k| k as f64 / n as f64).collect();
                    g.evaluate(&vec![0.0; d], &t)
                })
                .collect();
            let conj = f
                .adjoint()
                .matmul(&CMatrix::from_diag(&samples))
                .unwrap()
                .matmul(&f)
                .unwrap();
            let direct = quantize_separable(&g, n).unwrap();
            assert!(conj.max_abs_diff(&direct).unwrap() < 1e-12);
        }
        let mixed = monomial(1, 1);
        assert!(matches!(
            quantize_separable(&mixed, 4),
            Err(WeylError::NotSeparable(_))
        ));
    }

    #[test]
    fn trace_and_errors() {
        let p = Symbol::named("scottish-flag", 1)
            .unwrap()
            .add(&Symbol::constant(1, c(0.3, 0.0)))
            .unwrap();
        let q = quantize(&p, 16, None).unwrap();
        assert!((q.trace() - c(16.0 * 0.3, 0.0)).norm() < 1e-12);
        assert!(quantize(&p, 0, None).is_err());
        assert!(quantize(&Symbol::named("scottish-flag", 2).unwrap(), 100, None).is_err());
        let dump = q.to_json().unwrap();
        assert!(dump.starts_with(
            "{\"header\":{\"N\":16,\"d\":1,\"symbol_id\":\"inline\",\"path\":\"separable\"}"
        ));
    }

    #[test]
    fn dft_is_unitary() {
        let f = dft_matrix(6, 1).unwrap();
        let id = f.adjoint().matmul(&f).unwrap();
        assert!(id.max_abs_diff(&CMatrix::identity(6)).unwrap() < 1e-13);
    }

    fn arb_symbol() -> impl Strategy<Value = Symbol> {
        prop::collection::vec(((-4i64..=4, -4i64..=4), (-1.0f64..1.0, -1.0f64..1.0)), 1..6)
            .prop_map(|t| {
                Symbol::new(
                    1,
                    t.into_iter()
                        .map(|((n, m), (re, im))| (Frequency::new(vec![n], vec![m]), c(re, im))),
                )
                .unwrap()
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn adjoint_is_quantized_conjugate(p in arb_symbol(), n in 1usize..9) {
            let a = quantize_general(&p, n).unwrap();
            let b = quantize_general(&p.conj(), n).unwrap();
            prop_assert!(a.adjoint().max_abs_diff(&b).unwrap() < 1e-12);
        }

        #[test]
        fn quantization_is_linear(p in arb_symbol(), q in arb_symbol(), n in 1usize..9) {
            let sum = quantize_general(&p.add(&q).unwrap(), n).unwrap();
            let parts = quantize_general(&p, n).unwrap().add_scaled(&quantize_general(&q, n).unwrap(), c(1.0, 0.0)).unwrap();
            prop_assert!(sum.max_abs_diff(&parts).unwrap() < 1e-12);
        }

        #[test]
        fn trace_sees_only_the_mean_below_the_band(p in arb_symbol(), n in 5usize..12) {
            let q = quantize_general(&p, n).unwrap();
            prop_assert!((q.trace() - p.mean() * n as f64).norm() < 1e-11);
        }
    }
}
