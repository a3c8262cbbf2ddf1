//! Fixtures shared by the solver benchmarks.

use weyl_lab_core::random::{rng_from_seed, Ensemble};
use weyl_lab_core::{quantize::quantize, CMatrix, Symbol};

/// Scottish-flag quantization at level `n`.
pub fn flag(n: usize) -> CMatrix {
    let p = Symbol::named("scottish-flag", 1).expect("built-in symbol");
    quantize(&p, n, None).expect("valid level").matrix
}

/// Flag plus a `delta`-scaled Ginibre matrix from a fixed seed.
pub fn perturbed_flag(n: usize, delta: f64) -> CMatrix {
    let q = Ensemble::Ginibre.sample_matrix(n, &mut rng_from_seed(1));
    flag(n)
        .add_scaled(&q, weyl_lab_core::Complex64::new(delta, 0.0))
        .expect("same shape")
}
