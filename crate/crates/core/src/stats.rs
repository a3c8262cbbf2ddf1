//! Small descriptive statistics used by the experiment drivers.

use serde::{Deserialize, Serialize};

use crate::error::{Result, WeylError};

/// Pairwise (cascade) summation; the result depends only on the order of `xs`.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 16 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    pairwise_sum(xs) / xs.len() as f64
}

/// Sample standard deviation (denominator `n - 1`); `0` for a single value.
pub fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return if xs.is_empty() { f64::NAN } else { 0.0 };
    }
    let mu = mean(xs);
    let sq: Vec<f64> = xs.iter().map(|x| (x - mu) * (x - mu)).collect();
    (pairwise_sum(&sq) / (xs.len() - 1) as f64).sqrt()
}

/// Fraction of `xs` strictly below `t`.
pub fn empirical_cdf(xs: &[f64], t: f64) -> f64 {
    xs.iter().filter(|&&x| x < t).count() as f64 / xs.len() as f64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub rms_residual: f64,
    pub points: usize,
}

/// Ordinary least squares `y = slope * x + intercept`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    if xs.len() != ys.len() {
        return Err(WeylError::DimensionMismatch(
            "regression inputs differ in length".into(),
        ));
    }
    if xs.len() < 2 {
        return Err(WeylError::DegenerateRegression(format!(
            "{} point(s)",
            xs.len()
        )));
    }
    let mx = mean(xs);
    let my = mean(ys);
    let sxx: Vec<f64> = xs.iter().map(|x| (x - mx) * (x - mx)).collect();
    let sxy: Vec<f64> = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (x - mx) * (y - my))
        .collect();
    let sxx = pairwise_sum(&sxx);
    if !(sxx > 0.0) {
        return Err(WeylError::DegenerateRegression(
            "all abscissae equal".into(),
        ));
    }
    let slope = pairwise_sum(&sxy) / sxx;
    let intercept = my - slope * mx;
    let res: Vec<f64> = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - slope * x - intercept).powi(2))
        .collect();
    Ok(LinearFit {
        slope,
        intercept,
        rms_residual: (pairwise_sum(&res) / xs.len() as f64).sqrt(),
        points: xs.len(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlaneFit {
    pub slope_u: f64,
    pub slope_v: f64,
    pub intercept: f64,
    pub rms_residual: f64,
    pub points: usize,
}

/// Ordinary least squares `y = slope_u * u + slope_v * v + intercept`.
pub fn plane_fit(us: &[f64], vs: &[f64], ys: &[f64]) -> Result<PlaneFit> {
    if us.len() != ys.len() || vs.len() != ys.len() {
        return Err(WeylError::DimensionMismatch(
            "regression inputs differ in length".into(),
        ));
    }
    if ys.len() < 3 {
        return Err(WeylError::DegenerateRegression(format!(
            "{} point(s)",
            ys.len()
        )));
    }
    let (mu, mv, my) = (mean(us), mean(vs), mean(ys));
    let moment = |a: &[f64], ma: f64, b: &[f64], mb: f64| {
        let t: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).collect();
        pairwise_sum(&t)
    };
    let (suu, svv, suv) = (
        moment(us, mu, us, mu),
        moment(vs, mv, vs, mv),
        moment(us, mu, vs, mv),
    );
    let (suy, svy) = (moment(us, mu, ys, my), moment(vs, mv, ys, my));
    let det = suu * svv - suv * suv;
    if !(det > 1e-12 * suu * svv) {
        return Err(WeylError::DegenerateRegression(
            "regressors are collinear".into(),
        ));
    }
    let slope_u = (svv * suy - suv * svy) / det;
    let slope_v = (suu * svy - suv * suy) / det;
    let intercept = my - slope_u * mu - slope_v * mv;
    let res: Vec<f64> = (0..ys.len())
        .map(|i| (ys[i] - slope_u * us[i] - slope_v * vs[i] - intercept).powi(2))
        .collect();
    Ok(PlaneFit {
        slope_u,
        slope_v,
        intercept,
        rms_residual: (pairwise_sum(&res) / ys.len() as f64).sqrt(),
        points: ys.len(),
    })
}
