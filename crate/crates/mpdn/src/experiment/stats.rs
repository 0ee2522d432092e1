//! Small-sample summary statistics and the log-log rate fit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn checked(xs: &[f64]) -> Result<()> {
    if xs.is_empty() {
        return Err(Error::degenerate("empty sample".to_string()));
    }
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(Error::domain("sample contains non-finite values".to_string()));
    }
    Ok(())
}

/// Sample median; the midpoint of the two central order statistics for
/// even sizes.
pub fn median(xs: &[f64]) -> Result<f64> {
    checked(xs)?;
    let mut sorted = xs.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("values checked finite"));
    let n = sorted.len();
    Ok(if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    })
}

/// Sample mean and the unbiased standard deviation (zero for a single
/// observation).
pub fn mean_std(xs: &[f64]) -> Result<(f64, f64)> {
    checked(xs)?;
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() == 1 {
        return Ok((mean, 0.0));
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    Ok((mean, var.max(0.0).sqrt()))
}

/// Least-squares fit of `log(error)` against `log(n)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub slope_stderr: f64,
}

/// Fits a convergence rate on a ladder of sizes: the slope of
/// `log(median abs error)` vs `log n`. Requires at least four distinct
/// ladder points and strictly positive errors.
pub fn fit_rate(ns: &[usize], errors: &[f64]) -> Result<RateFit> {
    if ns.len() != errors.len() {
        return Err(Error::dimension(format!(
            "{} ladder points against {} error values",
            ns.len(),
            errors.len()
        )));
    }
    let mut distinct = ns.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 4 {
        return Err(Error::degenerate(format!(
            "rate fit needs at least 4 distinct ladder points, got {}",
            distinct.len()
        )));
    }
    if errors.iter().any(|&e| !e.is_finite() || e <= 0.0) {
        return Err(Error::degenerate(
            "rate fit needs strictly positive finite errors".to_string(),
        ));
    }
    let xs: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|&e| e.ln()).collect();
    let k = xs.len() as f64;
    let x_mean = xs.iter().sum::<f64>() / k;
    let y_mean = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - x_mean) * (x - x_mean)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - x_mean) * (y - y_mean)).sum();
    let syy: f64 = ys.iter().map(|y| (y - y_mean) * (y - y_mean)).sum();
    let slope = sxy / sxx;
    let intercept = y_mean - slope * x_mean;
    let sse = (syy - slope * sxy).max(0.0);
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - sse / syy };
    let slope_stderr = (sse / (k - 2.0) / sxx).sqrt();
    Ok(RateFit {
        slope,
        intercept,
        r_squared,
        slope_stderr,
    })
}
