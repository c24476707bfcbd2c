use std::sync::Arc;

use super::brownian::{BrownianPath, IncrementSource, SeededIncrements};
use super::grid::TimeGrid;
use super::trajectory::Trajectory;
use crate::dynamics::SystemSpec;
use crate::error::{Error, Result};
use crate::scalar::{all_finite, norm, Scalar};

/// State norm above which an integration is declared divergent.
pub const DIVERGENCE_THRESHOLD: f64 = 1e12;

fn check_grid<T: Scalar>(spec: &SystemSpec<T>, grid: &TimeGrid<T>) -> Result<()> {
    let span = spec.span();
    let tol = T::lit(1e-9) * (T::one() + span.end().abs());
    if grid.start() != span.start {
        return Err(Error::InvalidGrid(format!(
            "grid starts at {} but the system at {}",
            grid.start(),
            span.start
        )));
    }
    if (grid.end() - span.end()).abs() > tol {
        return Err(Error::InvalidGrid(format!(
            "grid ends at {} but the system at {}",
            grid.end(),
            span.end()
        )));
    }
    Ok(())
}

fn diverged<T: Scalar>(state: &[T]) -> bool {
    !all_finite(state) || norm(state).as_f64() > DIVERGENCE_THRESHOLD
}

/// Explicit Euler-Maruyama driven by `source`. `on_step(i, t_i, state_i,
/// sigma(t_i) dW_i)` sees every step before it is taken; states are recorded
/// at every `record_every`-th point and at the final point.
pub(crate) fn run_em<T, S, F>(
    spec: &SystemSpec<T>,
    grid: &TimeGrid<T>,
    mut source: S,
    record_every: usize,
    mut on_step: F,
) -> Result<Trajectory<T>>
where
    T: Scalar,
    S: IncrementSource<T>,
    F: FnMut(usize, T, &[T], &[T]),
{
    check_grid(spec, grid)?;
    let record_every = record_every.max(1);
    let d = spec.dim();
    let n = grid.n_steps();
    let mut warnings = spec.warnings().to_vec();
    warnings.extend(spec.step_warning(grid.max_step()));

    let mut state = spec.initial_state();
    let mut drift = vec![T::zero(); 2 * d];
    let mut scratch = vec![T::zero(); d];
    let mut dw = vec![T::zero(); d];
    let mut noise = vec![T::zero(); d];
    let noisy = !spec.is_deterministic();

    let n_records = n / record_every + 1 + usize::from(!n.is_multiple_of(record_every));
    let mut times = Vec::with_capacity(n_records);
    let mut states = Vec::with_capacity(n_records * 2 * d);
    times.push(grid.time(0));
    states.extend_from_slice(&state);

    for i in 0..n {
        let t = grid.time(i);
        let dt = grid.dt(i);
        spec.drift_into(t, &state, &mut drift, &mut scratch);
        if noisy {
            source.fill(i, dt, &mut dw);
            spec.diffusion().noise_term(t, &dw, &mut noise);
        }
        on_step(i, t, &state, &noise);
        for (s, &f) in state.iter_mut().zip(&drift) {
            *s = *s + f * dt;
        }
        if noisy {
            for (s, &z) in state[d..].iter_mut().zip(&noise) {
                *s = *s + z;
            }
        }
        if diverged(&state) {
            return Err(Error::Divergence {
                index: i + 1,
                time: grid.time(i + 1).as_f64(),
            });
        }
        if (i + 1) % record_every == 0 || i + 1 == n {
            times.push(grid.time(i + 1));
            states.extend_from_slice(&state);
        }
    }
    Ok(Trajectory::new(Arc::new(spec.clone()), times, states, warnings))
}

fn check_path<T: Scalar>(spec: &SystemSpec<T>, path: &BrownianPath<T>) -> Result<()> {
    if path.dim() != spec.dim() {
        return Err(Error::InvalidInput(format!(
            "path has dimension {} but the system has {}",
            path.dim(),
            spec.dim()
        )));
    }
    Ok(())
}

/// Euler-Maruyama on the grid of `path`, recording every point.
pub fn integrate_em<T: Scalar>(spec: &SystemSpec<T>, path: &BrownianPath<T>) -> Result<Trajectory<T>> {
    integrate_em_recorded(spec, path, 1)
}

/// Euler-Maruyama recording every `record_every`-th point (and the last).
pub fn integrate_em_recorded<T: Scalar>(
    spec: &SystemSpec<T>,
    path: &BrownianPath<T>,
    record_every: usize,
) -> Result<Trajectory<T>> {
    check_path(spec, path)?;
    run_em(spec, path.grid(), path, record_every, |_, _, _, _| {})
}

/// Same result as sampling the path with `seed` first, without holding it in
/// memory.
pub fn integrate_em_seeded<T: Scalar>(
    spec: &SystemSpec<T>,
    grid: &TimeGrid<T>,
    seed: u64,
    record_every: usize,
) -> Result<Trajectory<T>> {
    run_em(spec, grid, SeededIncrements::new(seed), record_every, |_, _, _, _| {})
}

/// Classical fourth-order Runge-Kutta for a system without noise.
pub fn integrate_rk4<T: Scalar>(spec: &SystemSpec<T>, grid: &TimeGrid<T>) -> Result<Trajectory<T>> {
    if !spec.is_deterministic() {
        return Err(Error::InvalidInput("RK4 integrates the noise-free system only".into()));
    }
    check_grid(spec, grid)?;
    let d2 = 2 * spec.dim();
    let n = grid.n_steps();
    let mut scratch = vec![T::zero(); spec.dim()];
    let mut k = [
        vec![T::zero(); d2],
        vec![T::zero(); d2],
        vec![T::zero(); d2],
        vec![T::zero(); d2],
    ];
    let mut tmp = vec![T::zero(); d2];
    let mut state = spec.initial_state();
    let mut times = Vec::with_capacity(n + 1);
    let mut states = Vec::with_capacity((n + 1) * d2);
    times.push(grid.time(0));
    states.extend_from_slice(&state);
    let half = T::lit(0.5);
    let sixth = T::one() / T::lit(6.0);
    let two = T::lit(2.0);
    for i in 0..n {
        let t = grid.time(i);
        let h = grid.dt(i);
        let [k1, k2, k3, k4] = &mut k;
        spec.drift_into(t, &state, k1, &mut scratch);
        for j in 0..d2 {
            tmp[j] = state[j] + half * h * k1[j];
        }
        spec.drift_into(t + half * h, &tmp, k2, &mut scratch);
        for j in 0..d2 {
            tmp[j] = state[j] + half * h * k2[j];
        }
        spec.drift_into(t + half * h, &tmp, k3, &mut scratch);
        for j in 0..d2 {
            tmp[j] = state[j] + h * k3[j];
        }
        spec.drift_into(grid.time(i + 1), &tmp, k4, &mut scratch);
        for j in 0..d2 {
            state[j] = state[j] + h * sixth * (k1[j] + two * k2[j] + two * k3[j] + k4[j]);
        }
        if diverged(&state) {
            return Err(Error::Divergence {
                index: i + 1,
                time: grid.time(i + 1).as_f64(),
            });
        }
        times.push(grid.time(i + 1));
        states.extend_from_slice(&state);
    }
    Ok(Trajectory::new(
        Arc::new(spec.clone()),
        times,
        states,
        spec.warnings().to_vec(),
    ))
}
