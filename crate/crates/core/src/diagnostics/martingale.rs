use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::SystemSpec;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::sde::{run_em, SeededIncrements, TimeGrid};

/// Ensemble statistics of `N(t_end) = sum_i <eta (Y_i - y*) + X_i, sigma(t_i) dW_i>`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MartingaleReport {
    pub n_paths: usize,
    pub eta: f64,
    pub mean: f64,
    pub stderr: f64,
    /// `|mean| <= 3 stderr`.
    pub pass: bool,
}

/// Discrete noise integral of the energy argument, one value per seed
/// `base_seed + k`, on a uniform grid with the given step.
pub fn martingale_mean_check<T: Scalar>(
    spec: &SystemSpec<T>,
    n_paths: usize,
    base_seed: u64,
    eta: T,
    y_star: &[T],
    step: T,
) -> Result<MartingaleReport> {
    if spec.variant().is_operator() {
        return Err(Error::InvalidInput(format!(
            "the noise integral check needs an objective system, got {}",
            spec.variant()
        )));
    }
    if n_paths == 0 {
        return Err(Error::InvalidInput("at least one path is needed".into()));
    }
    if y_star.len() != spec.dim() {
        return Err(Error::InvalidInput("y_star has the wrong dimension".into()));
    }
    let span = spec.span();
    let grid = TimeGrid::with_step(span.start, span.end(), step)?;
    let d = spec.dim();
    let terminal = |seed: u64| -> Result<f64> {
        let mut n_t = 0.0f64;
        run_em(
            spec,
            &grid,
            SeededIncrements::new(seed),
            grid.n_steps(),
            |_, _, state: &[T], noise: &[T]| {
                let (y, x) = state.split_at(d);
                for k in 0..d {
                    n_t += ((eta * (y[k] - y_star[k]) + x[k]) * noise[k]).as_f64();
                }
            },
        )?;
        Ok(n_t)
    };
    let values: Vec<f64> = (0..n_paths as u64)
        .into_par_iter()
        .map(|k| terminal(base_seed.wrapping_add(k)))
        .collect::<Result<_>>()?;
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    let stderr = (var / n).sqrt();
    Ok(MartingaleReport {
        n_paths,
        eta: eta.as_f64(),
        mean,
        stderr,
        pass: mean.abs() <= 3.0 * stderr,
    })
}
