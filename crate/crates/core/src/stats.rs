//! Small summary-statistics helpers.

use serde::Serialize;

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
    pub n: usize,
}

impl MeanSe {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self {
                mean: f64::NAN,
                se: f64::NAN,
                n,
            };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let se = if n > 1 {
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, se, n }
    }
}

/// Ordinary least squares line through `(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope from per-point standard errors of `y`,
    /// treating `x` as exact.
    pub slope_se: f64,
}

/// `None` with fewer than two distinct `x`.
pub fn fit_line(x: &[f64], y: &[f64], y_se: &[f64]) -> Option<LineFit> {
    let n = x.len();
    if n < 2 || y.len() != n || y_se.len() != n {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|xi| (xi - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let slope = x
        .iter()
        .zip(y)
        .map(|(xi, yi)| (xi - mx) * (yi - my))
        .sum::<f64>()
        / sxx;
    let slope_se = x
        .iter()
        .zip(y_se)
        .map(|(xi, s)| ((xi - mx) / sxx * s).powi(2))
        .sum::<f64>()
        .sqrt();
    Some(LineFit {
        slope,
        intercept: my - slope * mx,
        slope_se,
    })
}
