use std::fmt;

use serde::{Deserialize, Serialize};

use super::schedule::{DiffusionSchedule, ScalarSchedule};
use crate::error::{Error, Result};
use crate::problems::{MonotoneProblem, ObjectiveProblem, Problem, VectorState};
use crate::scalar::Scalar;
use crate::sde::Trajectory;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Heavy Ball with friction for `min f`.
    Shbf,
    /// Vanishing damping `alpha / s` for `min f`.
    Savd,
    /// Heavy Ball for `V(y) = 0` in the reduced `(Y, Z)` coordinates.
    ShbfopAlt,
    /// Fast OGDA in the reduced `(Z, R)` coordinates.
    SfogdaAlt,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Shbf => "shbf",
            Variant::Savd => "savd",
            Variant::ShbfopAlt => "shbfop_alt",
            Variant::SfogdaAlt => "sfogda_alt",
        }
    }

    pub fn is_operator(self) -> bool {
        matches!(self, Variant::ShbfopAlt | Variant::SfogdaAlt)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Variant parameters.
#[derive(Clone, Debug, PartialEq)]
pub enum SystemKind<T> {
    Shbf {
        lambda: T,
        b: ScalarSchedule<T>,
    },
    Savd {
        alpha: T,
    },
    ShbfopAlt {
        lambda: T,
        mu: ScalarSchedule<T>,
        gamma: ScalarSchedule<T>,
    },
    SfogdaAlt {
        alpha: T,
        beta: T,
    },
}

impl<T: Scalar> SystemKind<T> {
    pub fn variant(&self) -> Variant {
        match self {
            SystemKind::Shbf { .. } => Variant::Shbf,
            SystemKind::Savd { .. } => Variant::Savd,
            SystemKind::ShbfopAlt { .. } => Variant::ShbfopAlt,
            SystemKind::SfogdaAlt { .. } => Variant::SfogdaAlt,
        }
    }
}

/// Integration interval `[start, start + horizon]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeSpan<T> {
    pub start: T,
    pub horizon: T,
}

impl<T: Scalar> TimeSpan<T> {
    pub fn new(start: T, horizon: T) -> Result<Self> {
        if !start.is_finite() {
            return Err(Error::InvalidStart(format!("start time {start} is not finite")));
        }
        if !(horizon.is_finite() && horizon > T::zero()) {
            return Err(Error::InvalidInput(format!("horizon {horizon} must be positive")));
        }
        Ok(Self { start, horizon })
    }

    pub fn end(&self) -> T {
        self.start + self.horizon
    }
}

/// Position and velocity (`X0` resp. `Q0`) at the start time.
#[derive(Clone, Debug, PartialEq)]
pub struct InitialState<T> {
    pub position: VectorState<T>,
    pub velocity: VectorState<T>,
}

impl<T: Scalar> InitialState<T> {
    pub fn new(position: VectorState<T>, velocity: VectorState<T>) -> Result<Self> {
        if position.dim() != velocity.dim() {
            return Err(Error::InvalidInput(format!(
                "position has dimension {} but velocity has {}",
                position.dim(),
                velocity.dim()
            )));
        }
        Ok(Self { position, velocity })
    }

    /// Solution point with zero velocity.
    pub fn at_rest(problem: &Problem<T>) -> Self {
        Self {
            position: problem.solution().clone(),
            velocity: VectorState::zeros(problem.dim()),
        }
    }
}

/// Fully specified SDE `d(state) = drift dt + (0, sigma dW)`, with the state
/// laid out as `(position, companion)`.
#[derive(Clone)]
pub struct SystemSpec<T> {
    kind: SystemKind<T>,
    problem: Problem<T>,
    diffusion: DiffusionSchedule<T>,
    span: TimeSpan<T>,
    initial: InitialState<T>,
    companion0: Vec<T>,
    warnings: Vec<String>,
}

impl<T: Scalar> fmt::Debug for SystemSpec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SystemSpec")
            .field("kind", &self.kind)
            .field("problem", &self.problem)
            .field("diffusion", &self.diffusion)
            .field("span", &self.span)
            .finish_non_exhaustive()
    }
}

fn check_dims<T: Scalar>(
    problem: &Problem<T>,
    diffusion: &DiffusionSchedule<T>,
    initial: &InitialState<T>,
) -> Result<()> {
    let d = problem.dim();
    if initial.position.dim() != d || initial.velocity.dim() != d {
        return Err(Error::InvalidInput(format!(
            "initial state has dimension {} but the problem has {d}",
            initial.position.dim()
        )));
    }
    if diffusion.dim() != d {
        return Err(Error::InvalidInput(format!(
            "diffusion has dimension {} but the problem has {d}",
            diffusion.dim()
        )));
    }
    Ok(())
}

fn check_schedule_domain<T: Scalar>(name: &str, s: &ScalarSchedule<T>, start: T) -> Result<()> {
    if start < s.domain_start() {
        return Err(Error::InvalidSchedule(format!(
            "{name} is defined from {} but the system starts at {start}",
            s.domain_start()
        )));
    }
    Ok(())
}

fn check_diffusion_domain<T: Scalar>(diffusion: &DiffusionSchedule<T>, start: T) -> Result<()> {
    match diffusion.multiplier() {
        Some(m) => check_schedule_domain("diffusion multiplier", m, start),
        None => Ok(()),
    }
}

fn positive<T: Scalar>(name: &str, x: T) -> Result<()> {
    if x.is_finite() && x > T::zero() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} = {x} must be positive")))
    }
}

pub fn build_shbf<T: Scalar>(
    lambda: T,
    b: ScalarSchedule<T>,
    diffusion: DiffusionSchedule<T>,
    problem: ObjectiveProblem<T>,
    initial: InitialState<T>,
    span: TimeSpan<T>,
) -> Result<SystemSpec<T>> {
    positive("lambda", lambda)?;
    if !b.is_nondecreasing() {
        return Err(Error::InvalidSchedule(format!(
            "b must be nondecreasing, got {:?}",
            b.family()
        )));
    }
    check_schedule_domain("b", &b, span.start)?;
    check_diffusion_domain(&diffusion, span.start)?;
    let problem = Problem::Objective(problem);
    check_dims(&problem, &diffusion, &initial)?;
    let companion0 = initial.velocity.as_slice().to_vec();
    Ok(SystemSpec {
        kind: SystemKind::Shbf { lambda, b },
        problem,
        diffusion,
        span,
        initial,
        companion0,
        warnings: vec![],
    })
}

pub fn build_savd<T: Scalar>(
    alpha: T,
    diffusion: DiffusionSchedule<T>,
    problem: ObjectiveProblem<T>,
    initial: InitialState<T>,
    span: TimeSpan<T>,
) -> Result<SystemSpec<T>> {
    if !alpha.is_finite() {
        return Err(Error::InvalidParameter(format!("alpha = {alpha} must be finite")));
    }
    if span.start <= T::zero() {
        return Err(Error::InvalidStart(format!(
            "vanishing damping needs s_start > 0, got {}",
            span.start
        )));
    }
    check_diffusion_domain(&diffusion, span.start)?;
    let problem = Problem::Objective(problem);
    check_dims(&problem, &diffusion, &initial)?;
    let mut warnings = vec![];
    if alpha <= T::lit(3.0) {
        warnings.push(format!(
            "alpha = {alpha} <= 3: the O(1/s^2) rate guarantee does not apply"
        ));
    }
    let companion0 = initial.velocity.as_slice().to_vec();
    Ok(SystemSpec {
        kind: SystemKind::Savd { alpha },
        problem,
        diffusion,
        span,
        initial,
        companion0,
        warnings,
    })
}

pub fn build_shbfop_alt<T: Scalar>(
    lambda: T,
    mu: ScalarSchedule<T>,
    gamma: ScalarSchedule<T>,
    diffusion: DiffusionSchedule<T>,
    problem: MonotoneProblem<T>,
    initial: InitialState<T>,
    span: TimeSpan<T>,
) -> Result<SystemSpec<T>> {
    positive("lambda", lambda)?;
    if !mu.is_nondecreasing() {
        return Err(Error::InvalidSchedule(format!(
            "mu must be nondecreasing, got {:?}",
            mu.family()
        )));
    }
    check_schedule_domain("mu", &mu, span.start)?;
    check_schedule_domain("gamma", &gamma, span.start)?;
    check_diffusion_domain(&diffusion, span.start)?;
    let problem = Problem::Monotone(problem);
    check_dims(&problem, &diffusion, &initial)?;
    // Z0 = X0 + mu(t0) V(Y0)
    let v0 = eval_operator(&problem, initial.position.as_slice());
    let m0 = mu.value(span.start);
    let companion0 = initial
        .velocity
        .as_slice()
        .iter()
        .zip(&v0)
        .map(|(&x, &v)| x + m0 * v)
        .collect();
    Ok(SystemSpec {
        kind: SystemKind::ShbfopAlt { lambda, mu, gamma },
        problem,
        diffusion,
        span,
        initial,
        companion0,
        warnings: vec![],
    })
}

pub fn build_sfogda_alt<T: Scalar>(
    alpha: T,
    beta: T,
    diffusion: DiffusionSchedule<T>,
    problem: MonotoneProblem<T>,
    initial: InitialState<T>,
    span: TimeSpan<T>,
) -> Result<SystemSpec<T>> {
    if !alpha.is_finite() {
        return Err(Error::InvalidParameter(format!("alpha = {alpha} must be finite")));
    }
    positive("beta", beta)?;
    if span.start <= T::zero() {
        return Err(Error::InvalidStart(format!(
            "vanishing damping needs s_start > 0, got {}",
            span.start
        )));
    }
    check_diffusion_domain(&diffusion, span.start)?;
    let problem = Problem::Monotone(problem);
    check_dims(&problem, &diffusion, &initial)?;
    let mut warnings = vec![];
    if alpha <= T::lit(2.0) {
        warnings.push(format!(
            "alpha = {alpha} <= 2: the o(1/s) residual guarantee does not apply"
        ));
    }
    // R0 = Q0 + beta V(Z0)
    let v0 = eval_operator(&problem, initial.position.as_slice());
    let companion0 = initial
        .velocity
        .as_slice()
        .iter()
        .zip(&v0)
        .map(|(&q, &v)| q + beta * v)
        .collect();
    Ok(SystemSpec {
        kind: SystemKind::SfogdaAlt { alpha, beta },
        problem,
        diffusion,
        span,
        initial,
        companion0,
        warnings,
    })
}

fn eval_operator<T: Scalar>(problem: &Problem<T>, x: &[T]) -> Vec<T> {
    let mut out = vec![T::zero(); x.len()];
    problem.operator_into(x, &mut out);
    out
}

impl<T: Scalar> SystemSpec<T> {
    pub fn kind(&self) -> &SystemKind<T> {
        &self.kind
    }

    pub fn variant(&self) -> Variant {
        self.kind.variant()
    }

    pub fn problem(&self) -> &Problem<T> {
        &self.problem
    }

    pub fn diffusion(&self) -> &DiffusionSchedule<T> {
        &self.diffusion
    }

    pub fn span(&self) -> TimeSpan<T> {
        self.span
    }

    pub fn initial(&self) -> &InitialState<T> {
        &self.initial
    }

    pub fn dim(&self) -> usize {
        self.problem.dim()
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn is_deterministic(&self) -> bool {
        self.diffusion.is_zero()
    }

    /// Same system with a different diffusion term.
    pub fn with_diffusion(&self, diffusion: DiffusionSchedule<T>) -> Result<Self> {
        check_diffusion_domain(&diffusion, self.span.start)?;
        check_dims(&self.problem, &diffusion, &self.initial)?;
        Ok(Self {
            diffusion,
            ..self.clone()
        })
    }

    /// Same system on a different interval; the initial condition is kept.
    pub fn with_span(&self, span: TimeSpan<T>) -> Result<Self> {
        if span.start != self.span.start {
            return Err(Error::InvalidStart(
                "the start time is fixed by the initial condition".into(),
            ));
        }
        Ok(Self { span, ..self.clone() })
    }

    /// `(position, companion)` at the start time, of length `2 d`.
    pub fn initial_state(&self) -> Vec<T> {
        let mut s = self.initial.position.as_slice().to_vec();
        s.extend_from_slice(&self.companion0);
        s
    }

    /// Drift at `(t, state)`; `scratch` needs length `d`.
    pub fn drift_into(&self, t: T, state: &[T], out: &mut [T], scratch: &mut [T]) {
        let d = self.dim();
        let (y, c) = state.split_at(d);
        let (oy, oc) = out.split_at_mut(d);
        self.problem.operator_into(y, scratch);
        let g = &*scratch;
        match &self.kind {
            SystemKind::Shbf { lambda, b } => {
                let bt = b.value(t);
                for i in 0..d {
                    oy[i] = c[i];
                    oc[i] = -*lambda * c[i] - bt * g[i];
                }
            }
            SystemKind::Savd { alpha } => {
                let damp = *alpha / t;
                for i in 0..d {
                    oy[i] = c[i];
                    oc[i] = -damp * c[i] - g[i];
                }
            }
            SystemKind::ShbfopAlt { lambda, mu, gamma } => {
                let m = mu.value(t);
                let k = *lambda * m - gamma.value(t) + mu.derivative(t);
                for i in 0..d {
                    oy[i] = c[i] - m * g[i];
                    oc[i] = -*lambda * c[i] + k * g[i];
                }
            }
            SystemKind::SfogdaAlt { alpha, beta } => {
                let damp = *alpha / t;
                let k = *alpha * *beta / (T::lit(2.0) * t);
                for i in 0..d {
                    oy[i] = c[i] - *beta * g[i];
                    oc[i] = -damp * c[i] + k * g[i];
                }
            }
        }
    }

    pub fn drift(&self, t: T, state: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); state.len()];
        let mut scratch = vec![T::zero(); self.dim()];
        self.drift_into(t, state, &mut out, &mut scratch);
        out
    }

    /// Coefficient `m(t)` with `velocity = companion - m(t) V(position)`;
    /// zero for the objective variants.
    pub fn operator_shift(&self, t: T) -> T {
        match &self.kind {
            SystemKind::ShbfopAlt { mu, .. } => mu.value(t),
            SystemKind::SfogdaAlt { beta, .. } => *beta,
            _ => T::zero(),
        }
    }

    /// Velocity (`X` resp. `Q`) from a `(position, companion)` state;
    /// `scratch` needs length `d`.
    pub fn velocity_into(&self, t: T, state: &[T], out: &mut [T], scratch: &mut [T]) {
        let d = self.dim();
        let (y, c) = state.split_at(d);
        out.copy_from_slice(c);
        if self.variant().is_operator() {
            let m = self.operator_shift(t);
            self.problem.operator_into(y, scratch);
            for (o, &v) in out.iter_mut().zip(scratch.iter()) {
                *o = *o - m * v;
            }
        }
    }

    /// Largest step the explicit scheme is expected to tolerate at the end of
    /// the horizon.
    pub fn stability_hint(&self) -> T {
        let end = self.span.end();
        let l = self.problem.lipschitz();
        let half = T::lit(0.5);
        match &self.kind {
            // Frequency bound and the damped-mode bound of explicit Euler.
            SystemKind::Shbf { lambda, b } => {
                let k = b.value(end) * l;
                (half / k.sqrt()).min(*lambda / k)
            }
            SystemKind::Savd { alpha } => (half / l.sqrt()).min((*alpha / end).abs().max(T::epsilon()) / l),
            SystemKind::ShbfopAlt { mu, .. } => half / (mu.value(end) * l),
            SystemKind::SfogdaAlt { beta, .. } => half / (*beta * l),
        }
    }

    pub(crate) fn step_warning(&self, step: T) -> Option<String> {
        let hint = self.stability_hint();
        (step > hint).then(|| format!("step {step} exceeds the stability hint {hint} of the explicit scheme"))
    }
}

/// Velocity `X(t_i) = Z(t_i) - mu(t_i) V(Y(t_i))` along an operator trajectory
/// (`mu` is the constant `beta` for the Fast OGDA reduction).
pub fn recover_velocity<T: Scalar>(traj: &Trajectory<T>) -> Result<Vec<Vec<T>>> {
    let spec = traj.spec();
    if !spec.variant().is_operator() {
        return Err(Error::InvalidInput(format!(
            "velocity recovery needs an operator system, got {}",
            spec.variant()
        )));
    }
    let d = spec.dim();
    let mut scratch = vec![T::zero(); d];
    Ok((0..traj.len())
        .map(|i| {
            let mut x = vec![T::zero(); d];
            spec.velocity_into(traj.time(i), traj.state(i), &mut x, &mut scratch);
            x
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{make_quadratic, make_rotation};

    fn vs(x: &[f64]) -> VectorState<f64> {
        VectorState::from_f64(x).unwrap()
    }

    fn quad1() -> ObjectiveProblem<f64> {
        make_quadratic(&[1.0], vs(&[0.0])).unwrap()
    }

    fn zero(d: usize) -> DiffusionSchedule<f64> {
        DiffusionSchedule::zero(d)
    }

    fn one() -> ScalarSchedule<f64> {
        ScalarSchedule::constant(1.0, 0.0).unwrap()
    }

    #[test]
    fn shbf_drift_examples() {
        let span = TimeSpan::new(0.0, 1.0).unwrap();
        let p = make_quadratic(&[1.0], vs(&[0.3])).unwrap();
        let init = InitialState::new(vs(&[0.3]), vs(&[0.0])).unwrap();
        let spec = build_shbf(1.0, one(), zero(1), p, init, span).unwrap();
        assert_eq!(spec.drift(0.0, &[0.3, 0.0]), vec![0.0, 0.0]);

        let init = InitialState::new(vs(&[1.0]), vs(&[0.0])).unwrap();
        let spec = build_shbf(1.0, one(), zero(1), quad1(), init.clone(), span).unwrap();
        assert_eq!(spec.drift(0.0, &[1.0, 0.0]), vec![0.0, -1.0]);

        let b = ScalarSchedule::power(1.0, 2.0, 2.0).unwrap();
        let spec = build_shbf(1.0, b, zero(1), quad1(), init, TimeSpan::new(2.0, 1.0).unwrap()).unwrap();
        assert_eq!(spec.drift(2.0, &[1.0, 0.0]), vec![0.0, -4.0]);
    }

    #[test]
    fn shbf_rejects_decreasing_b() {
        let b = ScalarSchedule::exponential(1.0, -0.5, 0.0).unwrap();
        let init = InitialState::new(vs(&[1.0]), vs(&[0.0])).unwrap();
        let err = build_shbf(1.0, b, zero(1), quad1(), init.clone(), TimeSpan::new(0.0, 1.0).unwrap());
        assert!(matches!(err, Err(Error::InvalidSchedule(_))));
        let err = build_shbf(0.0, one(), zero(1), quad1(), init, TimeSpan::new(0.0, 1.0).unwrap());
        assert!(matches!(err, Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn savd_drift_and_warnings() {
        let init = InitialState::new(vs(&[1.0]), vs(&[1.0])).unwrap();
        let spec = build_savd(4.0, zero(1), quad1(), init.clone(), TimeSpan::new(1.0, 1.0).unwrap()).unwrap();
        assert_eq!(spec.drift(2.0, &[1.0, 1.0]), vec![1.0, -3.0]);
        assert_eq!(spec.drift(1.0, &[0.0, 0.0]), vec![0.0, 0.0]);
        assert!(spec.warnings().is_empty());
        let spec = build_savd(3.0, zero(1), quad1(), init.clone(), TimeSpan::new(1.0, 1.0).unwrap()).unwrap();
        assert_eq!(spec.warnings().len(), 1);
        let err = build_savd(4.0, zero(1), quad1(), init, TimeSpan::new(0.0, 1.0).unwrap());
        assert!(matches!(err, Err(Error::InvalidStart(_))));
    }

    #[test]
    fn shbfop_drift_and_companion() {
        let init = InitialState::new(vs(&[1.0, 0.0]), vs(&[0.0, 0.0])).unwrap();
        let span = TimeSpan::new(0.0, 1.0).unwrap();
        let spec = build_shbfop_alt(1.0, one(), one(), zero(2), make_rotation(), init, span).unwrap();
        // Z0 = X0 + mu V(Y0) = (0, 1)
        assert_eq!(spec.initial_state(), vec![1.0, 0.0, 0.0, 1.0]);
        assert_eq!(spec.drift(0.0, &[1.0, 0.0, 0.0, 0.0]), vec![0.0, -1.0, 0.0, 0.0]);
        assert_eq!(spec.drift(0.0, &[0.0, 0.0, 0.0, 0.0]), vec![0.0; 4]);
        let mut x = [0.0; 2];
        let mut scratch = [0.0; 2];
        spec.velocity_into(0.0, &spec.initial_state(), &mut x, &mut scratch);
        assert_eq!(x, [0.0, 0.0]);
    }

    #[test]
    fn sfogda_drift_and_companion() {
        let init = InitialState::new(vs(&[1.0, 0.0]), vs(&[0.5, 0.0])).unwrap();
        let span = TimeSpan::new(1.0, 1.0).unwrap();
        let spec = build_sfogda_alt(4.0, 1.0, zero(2), make_rotation(), init.clone(), span).unwrap();
        assert_eq!(spec.initial_state(), vec![1.0, 0.0, 0.5, 1.0]);
        assert_eq!(spec.drift(2.0, &[1.0, 0.0, 0.0, 0.0]), vec![0.0, -1.0, 0.0, 1.0]);
        assert_eq!(spec.drift(2.0, &[0.0; 4]), vec![0.0; 4]);
        let spec = build_sfogda_alt(2.0, 1.0, zero(2), make_rotation(), init.clone(), span).unwrap();
        assert_eq!(spec.warnings().len(), 1);
        assert!(matches!(
            build_sfogda_alt(4.0, 0.0, zero(2), make_rotation(), init.clone(), span),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            build_sfogda_alt(
                4.0,
                1.0,
                zero(2),
                make_rotation(),
                init,
                TimeSpan::new(-1.0, 1.0).unwrap()
            ),
            Err(Error::InvalidStart(_))
        ));
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let init = InitialState::new(vs(&[1.0, 0.0]), vs(&[0.0, 0.0])).unwrap();
        let err = build_shbf(1.0, one(), zero(2), quad1(), init, TimeSpan::new(0.0, 1.0).unwrap());
        assert!(matches!(err, Err(Error::InvalidInput(_))));
        assert!(InitialState::new(vs(&[1.0]), vs(&[0.0, 0.0])).is_err());
    }

    #[test]
    fn stability_hint_includes_damping_bound() {
        let b = ScalarSchedule::power(1.0, 2.0, 4.0).unwrap();
        let p = make_quadratic(&[0.05, 0.1], vs(&[0.0, 0.0])).unwrap();
        let init = InitialState::new(vs(&[1.0, 1.0]), vs(&[0.0, 0.0])).unwrap();
        let spec = build_shbf(1.0, b, zero(2), p, init, TimeSpan::new(4.0, 196.0).unwrap()).unwrap();
        let hint = spec.stability_hint();
        assert!((hint - 1.0 / (40_000.0 * 0.1)).abs() < 1e-15);
        assert!(spec.step_warning(1e-3).is_some());
        assert!(spec.step_warning(2e-4).is_none());
    }
}
