//! Midpoint-grid sampling of `p` on `T^{2d}`: pushforward measure, volume
//! profile near a point, and the logarithmic potential.
//!
//! Every reduction is split by the first grid axis and merged in index
//! order, so results do not depend on the rayon thread count. Counts are
//! integers; floating sums use per-row sequential sums followed by a
//! pairwise merge.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Symbol;
use crate::error::{Result, WeylError};
use crate::stats::pairwise_sum;

/// Clamp applied to `|p - z|` inside the logarithm.
pub const LOG_CLAMP: f64 = 1e-14;
/// Smallest resolution accepted by [`pushforward`].
pub const MIN_PUSHFORWARD_RESOLUTION: usize = 16;
/// Smallest resolution accepted by [`log_potential`].
pub const MIN_LOG_POTENTIAL_RESOLUTION: usize = 64;

/// Evaluates a symbol on the midpoint grid `((k + 1/2) / G)` in each of the
/// `2d` coordinates, with per-axis phase tables.
pub struct GridSampler<'a> {
    symbol: &'a Symbol,
    resolution: usize,
    amplitudes: Vec<Complex64>,
    // tables[axis][coeff][k] = exp(2 pi i f_axis (k + 1/2) / G)
    tables: Vec<Vec<Vec<Complex64>>>,
}

impl<'a> GridSampler<'a> {
    pub fn new(symbol: &'a Symbol, resolution: usize) -> Result<Self> {
        if resolution == 0 {
            return Err(WeylError::InvalidParameter(
                "grid resolution must be positive".into(),
            ));
        }
        let d = symbol.dim();
        let g = resolution as f64;
        let amplitudes: Vec<Complex64> = symbol.coeffs().values().copied().collect();
        let tables = (0..2 * d)
            .map(|axis| {
                symbol
                    .coeffs()
                    .keys()
                    .map(|f| {
                        let freq = if axis < d { f.n[axis] } else { f.m[axis - d] };
                        (0..resolution)
                            .map(|k| {
                                let t = (freq as f64 * (k as f64 + 0.5) / g).rem_euclid(1.0);
                                Complex64::from_polar(1.0, 2.0 * PI * t)
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            symbol,
            resolution,
            amplitudes,
            tables,
        })
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn symbol(&self) -> &Symbol {
        self.symbol
    }

    pub fn num_points(&self) -> usize {
        self.resolution.pow(2 * self.symbol.dim() as u32)
    }

    pub fn coordinate(&self, k: usize) -> f64 {
        (k as f64 + 0.5) / self.resolution as f64
    }

    /// Runs `visit(acc, index, value)` over every grid point; returns one
    /// accumulator per value of the first axis index, in order. `index`
    /// lists the `2d` grid indices (`x` axes first, then `xi`).
    pub fn fold_rows<T, I, V>(&self, init: I, visit: V) -> Vec<T>
    where
        T: Send,
        I: Fn() -> T + Sync,
        V: Fn(&mut T, &[usize], Complex64) + Sync,
    {
        let axes = 2 * self.symbol.dim();
        let g = self.resolution;
        let nc = self.amplitudes.len();
        (0..g)
            .into_par_iter()
            .map(|i0| {
                let mut acc = init();
                let mut idx = vec![0usize; axes];
                idx[0] = i0;
                let mut partial = vec![Complex64::new(0.0, 0.0); nc];
                loop {
                    // product over all axes except the last, then the last
                    for (c, slot) in partial.iter_mut().enumerate() {
                        let mut v = self.amplitudes[c];
                        for (table, &i) in self.tables.iter().zip(&idx).take(axes - 1) {
                            v *= table[c][i];
                        }
                        *slot = v;
                    }
                    let last = axes - 1;
                    for k in 0..g {
                        idx[last] = k;
                        let mut value = Complex64::new(0.0, 0.0);
                        for (c, &pc) in partial.iter().enumerate() {
                            value += pc * self.tables[last][c][k];
                        }
                        visit(&mut acc, &idx, value);
                    }
                    // advance the middle axes (1..last) as an odometer
                    let mut a = last;
                    loop {
                        if a <= 1 {
                            return acc;
                        }
                        a -= 1;
                        idx[a] += 1;
                        if idx[a] < g {
                            break;
                        }
                        idx[a] = 0;
                    }
                }
            })
            .collect()
    }
}

/// Fraction of grid points where `pred(p)` holds.
pub fn sample_fraction<F>(symbol: &Symbol, resolution: usize, pred: F) -> Result<f64>
where
    F: Fn(Complex64) -> bool + Sync,
{
    let sampler = GridSampler::new(symbol, resolution)?;
    let counts = sampler.fold_rows(
        || 0u64,
        |acc, _, v| {
            if pred(v) {
                *acc += 1;
            }
        },
    );
    let total: u64 = counts.iter().sum();
    Ok(total as f64 / sampler.num_points() as f64)
}

/// Rectangular array of half-open cells `[re_k, re_{k+1}) x [im_l, im_{l+1})`
/// (the last row and column are closed).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellGrid {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
    pub n_re: usize,
    pub n_im: usize,
}

impl CellGrid {
    pub fn new(re: (f64, f64), im: (f64, f64), n_re: usize, n_im: usize) -> Result<Self> {
        if !(re.0 < re.1 && im.0 < im.1) || n_re == 0 || n_im == 0 {
            return Err(WeylError::InvalidParameter("empty cell grid".into()));
        }
        Ok(Self {
            re_min: re.0,
            re_max: re.1,
            im_min: im.0,
            im_max: im.1,
            n_re,
            n_im,
        })
    }

    pub fn cell_width(&self) -> f64 {
        (self.re_max - self.re_min) / self.n_re as f64
    }

    pub fn cell_height(&self) -> f64 {
        (self.im_max - self.im_min) / self.n_im as f64
    }

    pub fn len(&self) -> usize {
        self.n_re * self.n_im
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flat index `iy * n_re + ix`, or `None` outside the grid.
    pub fn cell_of(&self, w: Complex64) -> Option<usize> {
        if !(w.re >= self.re_min
            && w.re <= self.re_max
            && w.im >= self.im_min
            && w.im <= self.im_max)
        {
            return None;
        }
        let ix = (((w.re - self.re_min) / self.cell_width()) as usize).min(self.n_re - 1);
        let iy = (((w.im - self.im_min) / self.cell_height()) as usize).min(self.n_im - 1);
        Some(iy * self.n_re + ix)
    }

    pub fn cell_center(&self, index: usize) -> Complex64 {
        let ix = index % self.n_re;
        let iy = index / self.n_re;
        Complex64::new(
            self.re_min + (ix as f64 + 0.5) * self.cell_width(),
            self.im_min + (iy as f64 + 0.5) * self.cell_height(),
        )
    }
}

/// Grid approximation of the pushforward of Lebesgue measure on `T^{2d}`
/// under `p`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PushforwardMeasure {
    pub cells: CellGrid,
    pub masses: Vec<f64>,
    pub resolution: usize,
}

impl PushforwardMeasure {
    pub fn total_mass(&self) -> f64 {
        pairwise_sum(&self.masses)
    }

    /// Mass of the cells whose centers lie in `[re0, re1] x [im0, im1]`.
    pub fn mass_in_box(&self, re: (f64, f64), im: (f64, f64)) -> f64 {
        let inside: Vec<f64> = (0..self.cells.len())
            .filter(|&k| {
                let c = self.cells.cell_center(k);
                c.re >= re.0 && c.re <= re.1 && c.im >= im.0 && c.im <= im.1
            })
            .map(|k| self.masses[k])
            .collect();
        pairwise_sum(&inside)
    }
}

/// Histogram of `p` over `cells`. Fails with `CellGridTooSmall` if some
/// sample falls outside.
pub fn pushforward(
    symbol: &Symbol,
    resolution: usize,
    cells: &CellGrid,
) -> Result<PushforwardMeasure> {
    if resolution < MIN_PUSHFORWARD_RESOLUTION {
        return Err(WeylError::InvalidParameter(format!(
            "pushforward needs grid resolution >= {MIN_PUSHFORWARD_RESOLUTION}, got {resolution}"
        )));
    }
    let sampler = GridSampler::new(symbol, resolution)?;
    let rows = sampler.fold_rows(
        || (vec![0u64; cells.len()], None::<Complex64>),
        |acc, _, v| match cells.cell_of(v) {
            Some(k) => acc.0[k] += 1,
            None => {
                if acc.1.is_none() {
                    acc.1 = Some(v);
                }
            }
        },
    );
    let mut counts = vec![0u64; cells.len()];
    for (row, outside) in rows {
        if let Some(w) = outside {
            return Err(WeylError::CellGridTooSmall { re: w.re, im: w.im });
        }
        for (c, r) in counts.iter_mut().zip(row) {
            *c += r;
        }
    }
    let total = sampler.num_points() as f64;
    Ok(PushforwardMeasure {
        cells: cells.clone(),
        masses: counts.into_iter().map(|c| c as f64 / total).collect(),
        resolution,
    })
}

/// `V_z(t) = vol{ rho : |p(rho) - z|^2 <= t }` over a threshold list, with a
/// log-log fit of the exponent.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VolumeProfile {
    pub z: Complex64,
    pub thresholds: Vec<f64>,
    pub volumes: Vec<f64>,
    pub resolution: usize,
    /// Slope of `log V` against `log t` over `1e-4 <= V < 1/2`.
    pub kappa: Option<f64>,
    pub fit_residual: Option<f64>,
    pub fit_points: usize,
}

pub fn volume_profile(
    symbol: &Symbol,
    z: Complex64,
    thresholds: &[f64],
    resolution: usize,
) -> Result<VolumeProfile> {
    if thresholds.iter().any(|&t| !(t > 0.0) || !t.is_finite()) {
        return Err(WeylError::InvalidParameter(
            "volume thresholds must be positive".into(),
        ));
    }
    let mut sorted = thresholds.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    let sampler = GridSampler::new(symbol, resolution)?;
    let rows = sampler.fold_rows(
        || vec![0u64; sorted.len()],
        |acc, _, v| {
            let d2 = (v - z).norm_sqr();
            let k = sorted.partition_point(|&t| t < d2);
            if k < acc.len() {
                acc[k] += 1;
            }
        },
    );
    let mut counts = vec![0u64; sorted.len()];
    for row in rows {
        for (c, r) in counts.iter_mut().zip(row) {
            *c += r;
        }
    }
    let total = sampler.num_points() as f64;
    let mut running = 0u64;
    let volumes: Vec<f64> = counts
        .iter()
        .map(|&c| {
            running += c;
            running as f64 / total
        })
        .collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = sorted
        .iter()
        .zip(&volumes)
        .filter(|(_, &v)| (1e-4..0.5).contains(&v))
        .map(|(&t, &v)| (t.ln(), v.ln()))
        .unzip();
    let fit = crate::stats::linear_fit(&xs, &ys).ok();
    Ok(VolumeProfile {
        z,
        thresholds: sorted,
        volumes,
        resolution,
        kappa: fit.as_ref().map(|f| f.slope),
        fit_residual: fit.as_ref().map(|f| f.rms_residual),
        fit_points: xs.len(),
    })
}

/// `phi(z) = int log|p - z|` by the midpoint rule, with `|p - z|` clamped
/// below at [`LOG_CLAMP`].
pub fn log_potential(symbol: &Symbol, z: Complex64, resolution: usize) -> Result<f64> {
    if resolution < MIN_LOG_POTENTIAL_RESOLUTION {
        return Err(WeylError::InvalidParameter(format!(
            "log potential needs grid resolution >= {MIN_LOG_POTENTIAL_RESOLUTION}, got {resolution}"
        )));
    }
    let sampler = GridSampler::new(symbol, resolution)?;
    let rows = sampler.fold_rows(
        || 0.0f64,
        |acc, _, v| *acc += (v - z).norm().max(LOG_CLAMP).ln(),
    );
    Ok(pairwise_sum(&rows) / sampler.num_points() as f64)
}
