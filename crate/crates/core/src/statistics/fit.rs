use serde::Serialize;

use crate::error::{Error, Result};

/// Least-squares fit of `t = c · n^a · 2 ln n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FitResult {
    pub a: f64,
    pub c: f64,
    /// Sum of squared residuals of `ln t`.
    pub residual: f64,
}

/// The comparison scale `√n · 2 ln n`.
pub fn sqrt_n_log_n2(n: usize) -> f64 {
    let nf = n as f64;
    nf.sqrt() * 2.0 * nf.ln()
}

/// `c · n^a · 2 ln n`.
pub fn mixing_law(n: usize, a: f64, c: f64) -> f64 {
    let nf = n as f64;
    c * nf.powf(a) * 2.0 * nf.ln()
}

/// The exponent `a` solving `t = n^a · 2 ln n` for a single point.
pub fn unit_constant_exponent(n: usize, t: f64) -> f64 {
    let nf = n as f64;
    (t / (2.0 * nf.ln())).ln() / nf.ln()
}

/// Fits `ln t − ln(2 ln n) = ln c + a ln n` over `(n, t_mix)` points.
///
/// Needs at least two distinct `n ≥ 4` and positive times.
pub fn fit_mixing_law(points: &[(usize, f64)]) -> Result<FitResult> {
    let mut ns: Vec<usize> = points.iter().map(|p| p.0).collect();
    ns.sort_unstable();
    ns.dedup();
    if ns.len() != points.len() {
        return Err(Error::DegenerateFit("repeated n".into()));
    }
    if points.len() < 2 {
        return Err(Error::DegenerateFit(format!(
            "{} point(s); at least two distinct n are needed",
            points.len()
        )));
    }
    if let Some(&(n, t)) = points.iter().find(|&&(n, t)| n < 4 || !(t > 0.0) || !t.is_finite()) {
        return Err(Error::DegenerateFit(format!("invalid point (n = {n}, t = {t})")));
    }
    let xs: Vec<f64> = points.iter().map(|&(n, _)| (n as f64).ln()).collect();
    let ys: Vec<f64> = points
        .iter()
        .map(|&(n, t)| t.ln() - (2.0 * (n as f64).ln()).ln())
        .collect();
    let m = points.len() as f64;
    let xbar = xs.iter().sum::<f64>() / m;
    let ybar = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - xbar) * (x - xbar)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xbar) * (y - ybar)).sum();
    let a = sxy / sxx;
    let ln_c = ybar - a * xbar;
    let residual = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - ln_c - a * x).powi(2))
        .sum();
    let c = ln_c.exp();
    if !a.is_finite() || !c.is_finite() {
        return Err(Error::DegenerateFit("non-finite coefficients".into()));
    }
    Ok(FitResult { a, c, residual })
}
