use serde::Serialize;

use super::metrics::Metric;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Values at or below zero are replaced by this before taking logarithms.
pub const CLIP_FLOOR: f64 = 1e-300;

const MIN_POINTS: usize = 8;

/// Least-squares fit of `log value = slope log t + intercept` over a window.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateFit {
    pub metric: Metric,
    pub window: [f64; 2],
    pub slope: f64,
    #[serde(skip)]
    pub intercept: f64,
    pub target: f64,
    pub tolerance: f64,
    /// Decay claims are upper bounds: faster decay also passes.
    pub pass: bool,
    pub r2: f64,
    pub clipped: bool,
    #[serde(skip)]
    pub points: usize,
}

/// Last decade of the horizon.
pub fn default_window(t_end: f64) -> [f64; 2] {
    [t_end / 10.0, t_end]
}

pub fn fit_rate<T: Scalar>(
    metric: Metric,
    times: &[T],
    values: &[T],
    window: [f64; 2],
    target: f64,
    tolerance: f64,
) -> Result<RateFit> {
    let [lo, hi] = window;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::InvalidInput(format!(
            "window [{lo}, {hi}] must satisfy 0 < lo < hi"
        )));
    }
    if times.len() != values.len() {
        return Err(Error::InvalidInput("times and values differ in length".into()));
    }
    let mut clipped = false;
    let (xs, ys): (Vec<f64>, Vec<f64>) = times
        .iter()
        .zip(values)
        .map(|(&t, &v)| (t.as_f64(), v.as_f64()))
        .filter(|&(t, _)| t >= lo && t <= hi)
        .map(|(t, v)| {
            let v = if v > CLIP_FLOOR {
                v
            } else {
                clipped = true;
                CLIP_FLOOR
            };
            (t.ln(), v.ln())
        })
        .unzip();
    let n = xs.len();
    if n < MIN_POINTS {
        return Err(Error::InsufficientData(format!(
            "{n} points in [{lo}, {hi}], need at least {MIN_POINTS}"
        )));
    }
    if ys.iter().any(|y| !y.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "{metric} has non-finite values in the window"
        )));
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r2 = if syy > 0.0 {
        (1.0 - sse / syy).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Ok(RateFit {
        metric,
        window,
        slope,
        intercept,
        target,
        tolerance,
        pass: slope <= target + tolerance,
        r2,
        clipped,
        points: n,
    })
}
