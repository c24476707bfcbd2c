//! Exponential time changes between the constant-friction systems and the
//! vanishing-damping systems, and pathwise comparison of the two sides.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::dynamics::{
    build_shbf, build_shbfop_alt, DiffusionSchedule, InitialState, ScalarSchedule, ScheduleFamily, SystemKind,
    SystemSpec, TimeSpan,
};
use crate::error::{Error, Result};
use crate::format::g17;
use crate::problems::{Problem, VectorState};
use crate::scalar::{dist, Scalar};
use crate::sde::{coarsen_path, integrate_em, integrate_rk4, BrownianPath, TimeGrid, Trajectory};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapKind {
    /// Heavy Ball with friction and the vanishing-damping system for `min f`.
    Opt,
    /// Operator Heavy Ball and Fast OGDA.
    Op,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// From the friction side `t` to the vanishing-damping side `s`.
    TToS,
    SToT,
}

/// `tau(s) = t0 + c log(s / s0)` and its inverse `kappa(t) = s0 exp((t - t0) / c)`,
/// with `c = alpha - 1` (opt) or `c = alpha / 2` (op).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeMap<T> {
    kind: MapKind,
    alpha: T,
    t0: T,
    s0: T,
}

pub fn make_time_map<T: Scalar>(kind: MapKind, alpha: T, t0: T, s0: T) -> Result<TimeMap<T>> {
    if !(s0.is_finite() && s0 > T::zero()) {
        return Err(Error::InvalidParameter(format!("s0 = {s0} must be positive")));
    }
    if !(t0.is_finite() && t0 >= T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "t0 = {t0} must be finite and nonnegative"
        )));
    }
    let min_alpha = match kind {
        MapKind::Opt => T::one(),
        MapKind::Op => T::zero(),
    };
    if !(alpha.is_finite() && alpha > min_alpha) {
        return Err(Error::InvalidParameter(format!(
            "alpha = {alpha} must exceed {min_alpha} for this map"
        )));
    }
    Ok(TimeMap { kind, alpha, t0, s0 })
}

impl<T: Scalar> TimeMap<T> {
    pub fn kind(&self) -> MapKind {
        self.kind
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }

    pub fn t0(&self) -> T {
        self.t0
    }

    pub fn s0(&self) -> T {
        self.s0
    }

    /// Log-time scale `c`.
    pub fn scale(&self) -> T {
        match self.kind {
            MapKind::Opt => self.alpha - T::one(),
            MapKind::Op => self.alpha / T::lit(2.0),
        }
    }

    pub fn tau(&self, s: T) -> T {
        self.t0 + self.scale() * (s / self.s0).ln()
    }

    pub fn kappa(&self, t: T) -> T {
        self.s0 * ((t - self.t0) / self.scale()).exp()
    }

    pub fn tau_dot(&self, s: T) -> T {
        self.scale() / s
    }

    pub fn kappa_dot(&self, t: T) -> T {
        self.kappa(t) / self.scale()
    }

    /// Friction of the constant-friction side.
    pub fn lambda_image(&self) -> T {
        match self.kind {
            MapKind::Opt => T::one(),
            MapKind::Op => T::lit(2.0) * (self.alpha - T::one()) / self.alpha,
        }
    }

    /// `b(t) = (s0 / (alpha - 1))^2 exp(2 (t - t0) / (alpha - 1))`.
    pub fn b_image(&self) -> Result<ScalarSchedule<T>> {
        self.expect_kind(MapKind::Opt)?;
        let c = self.scale();
        let two = T::lit(2.0);
        let k = self.s0 / c;
        ScalarSchedule::exponential(k * k * (-two * self.t0 / c).exp(), two / c, self.t0)
    }

    /// `mu(t) = gamma(t) = (2 beta s0 / alpha) exp(2 (t - t0) / alpha)`.
    pub fn mu_image(&self, beta: T) -> Result<ScalarSchedule<T>> {
        self.expect_kind(MapKind::Op)?;
        let two = T::lit(2.0);
        let a = two / self.alpha;
        ScalarSchedule::exponential(two * beta * self.s0 / self.alpha * (-a * self.t0).exp(), a, self.t0)
    }

    fn expect_kind(&self, kind: MapKind) -> Result<()> {
        if self.kind == kind {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!(
                "this needs a {kind:?} map, got {:?}",
                self.kind
            )))
        }
    }

    /// Constant-friction system whose solutions are the vanishing-damping
    /// solutions of `spec_s` seen in the time `t = tau(s)`.
    pub fn image_spec(&self, spec_s: &SystemSpec<T>) -> Result<SystemSpec<T>> {
        let span = spec_s.span();
        if span.start != self.s0 {
            return Err(Error::InvalidInput(format!(
                "system starts at {} but the map at s0 = {}",
                span.start, self.s0
            )));
        }
        let t_span = TimeSpan::new(self.t0, self.tau(span.end()) - self.t0)?;
        let diffusion = transform_diffusion(self, spec_s.diffusion(), Direction::SToT)?;
        let init = spec_s.initial();
        let scale = self.kappa_dot(self.t0);
        let velocity = VectorState::new(init.velocity.as_slice().iter().map(|&q| scale * q).collect())?;
        let initial = InitialState::new(init.position.clone(), velocity)?;
        match (self.kind, spec_s.kind(), spec_s.problem()) {
            (MapKind::Opt, SystemKind::Savd { alpha }, Problem::Objective(p)) if *alpha == self.alpha => build_shbf(
                self.lambda_image(),
                self.b_image()?,
                diffusion,
                p.clone(),
                initial,
                t_span,
            ),
            (MapKind::Op, SystemKind::SfogdaAlt { alpha, beta }, Problem::Monotone(p)) if *alpha == self.alpha => {
                let mu = self.mu_image(*beta)?;
                build_shbfop_alt(self.lambda_image(), mu, mu, diffusion, p.clone(), initial, t_span)
            }
            _ => Err(Error::InvalidInput(format!(
                "a {:?} map with alpha = {} does not apply to {}",
                self.kind,
                self.alpha,
                spec_s.variant()
            ))),
        }
    }
}

fn transform_multiplier<T: Scalar>(
    map: &TimeMap<T>,
    m: &ScalarSchedule<T>,
    direction: Direction,
) -> Result<ScalarSchedule<T>> {
    let c = map.scale();
    let three_halves = T::lit(1.5);
    let c32 = c.powf(three_halves);
    let unsupported = |side: &str| {
        Error::UnsupportedComposition(format!(
            "a {} multiplier on the {side} side does not stay in a closed-form family",
            m.family().name()
        ))
    };
    match direction {
        // sigma_Z(s) = tau'(s)^{3/2} sigma_Y(tau(s))
        Direction::TToS => {
            let (k, a) = match m.family() {
                ScheduleFamily::Constant { c } => (c, T::zero()),
                ScheduleFamily::Exponential { c, a } => (c, a),
                _ => return Err(unsupported("t")),
            };
            if m.domain_start() > map.t0 {
                return Err(Error::InvalidSchedule(format!(
                    "multiplier starts after t0 = {}",
                    map.t0
                )));
            }
            // e^{a tau(s)} = e^{a t0} (s / s0)^{a c}
            let r = a * c;
            let coef = k * (a * map.t0).exp() * map.s0.powf(-r) * c32;
            ScalarSchedule::power(coef, r - three_halves, map.s0)
        }
        // sigma_Y(t) = kappa'(t)^{3/2} sigma_Z(kappa(t)), kappa' = kappa / c
        Direction::SToT => {
            let (k, r) = match m.family() {
                ScheduleFamily::Constant { c } => (c, T::zero()),
                ScheduleFamily::Power { c, r } => (c, r),
                _ => return Err(unsupported("s")),
            };
            if m.domain_start() > map.s0 {
                return Err(Error::InvalidSchedule(format!(
                    "multiplier starts after s0 = {}",
                    map.s0
                )));
            }
            let p = r + three_halves;
            let a = p / c;
            let coef = k / c32 * map.s0.powf(p) * (-a * map.t0).exp();
            ScalarSchedule::exponential(coef, a, map.t0)
        }
    }
}

/// Diffusion of the other side of the time change; the fixed operator is
/// carried over unchanged.
pub fn transform_diffusion<T: Scalar>(
    map: &TimeMap<T>,
    sigma: &DiffusionSchedule<T>,
    direction: Direction,
) -> Result<DiffusionSchedule<T>> {
    let multiplier = sigma
        .multiplier()
        .map(|m| transform_multiplier(map, m, direction))
        .transpose()?;
    Ok(sigma.with_multiplier(multiplier))
}

/// Pushes `s`-grid increments to the image grid `t_i = tau(s_i)` with
/// `dW_t_i = sqrt(tau'(s_i)) dW_s_i`.
pub fn couple_increments<T: Scalar>(path_s: &BrownianPath<T>, map: &TimeMap<T>) -> Result<BrownianPath<T>> {
    let grid_s = path_s.grid();
    let points: Vec<T> = (0..grid_s.len()).map(|i| map.tau(grid_s.time(i))).collect();
    let grid_t = TimeGrid::explicit(points)?;
    let d = path_s.dim();
    let mut increments = Vec::with_capacity(path_s.increments().len());
    for i in 0..path_s.n_steps() {
        let w = map.tau_dot(grid_s.time(i)).sqrt();
        increments.extend(path_s.increment(i).iter().map(|&x| w * x));
    }
    BrownianPath::from_increments(path_s.seed(), grid_t, d, increments)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EquivalenceMethod {
    /// Euler-Maruyama on both sides with coupled increments.
    Em,
    /// Fourth-order Runge-Kutta on both sides; noise-free systems only.
    Rk4,
}

/// Pathwise discrepancy between the two sides of a time change.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquivalenceReport {
    pub kind: MapKind,
    pub alpha: f64,
    /// Errors of the finest level.
    pub sup_pos_err: f64,
    pub sup_vel_err: f64,
    /// `s`-side step of every level, coarsest first.
    pub steps: Vec<f64>,
    /// Log-log slope of the sup position error against the step, when
    /// several levels were run.
    pub slope: Option<f64>,
    pub pass: bool,
    #[serde(skip)]
    pub level_pos_errs: Vec<f64>,
    #[serde(skip)]
    pub level_vel_errs: Vec<f64>,
    #[serde(skip)]
    pub s_grid: Vec<f64>,
    #[serde(skip)]
    pub t_grid: Vec<f64>,
    #[serde(skip)]
    pub pos_err: Vec<f64>,
    #[serde(skip)]
    pub vel_err: Vec<f64>,
}

impl EquivalenceReport {
    /// Per-point errors of the finest level, `s,t,pos_err,vel_err`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "s,t,pos_err,vel_err")?;
        for i in 0..self.s_grid.len() {
            writeln!(
                w,
                "{},{},{},{}",
                g17(self.s_grid[i]),
                g17(self.t_grid[i]),
                g17(self.pos_err[i]),
                g17(self.vel_err[i])
            )?;
        }
        Ok(())
    }

    /// Whether every refinement reduced the position error.
    pub fn monotone(&self) -> bool {
        self.level_pos_errs.windows(2).all(|w| w[1] < w[0])
    }
}

fn close<T: Scalar>(a: T, b: T, rel: f64) -> bool {
    let (a, b) = (a.as_f64(), b.as_f64());
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

fn mismatch(field: &str, detail: impl Into<String>) -> Error {
    Error::InvalidPairing {
        field: field.into(),
        detail: detail.into(),
    }
}

const PAIRING_TOL: f64 = 1e-9;

fn sample_times<T: Scalar>(start: T, end: T) -> Vec<T> {
    (0..=8)
        .map(|k| start + (end - start) * T::lit(k as f64 / 8.0))
        .collect()
}

fn check_schedule<T: Scalar>(
    field: &str,
    got: &ScalarSchedule<T>,
    want: &ScalarSchedule<T>,
    times: &[T],
) -> Result<()> {
    for &t in times {
        if !close(got.value(t), want.value(t), PAIRING_TOL)
            || !close(got.derivative(t), want.derivative(t), PAIRING_TOL)
        {
            return Err(mismatch(
                field,
                format!("is {} at t = {t}, expected {}", got.value(t), want.value(t)),
            ));
        }
    }
    Ok(())
}

/// Rejects pairs that are not related by the time change.
fn check_pairing<T: Scalar>(spec_t: &SystemSpec<T>, spec_s: &SystemSpec<T>, map: &TimeMap<T>) -> Result<()> {
    let (span_t, span_s) = (spec_t.span(), spec_s.span());
    if span_s.start != map.s0 {
        return Err(mismatch(
            "s_start",
            format!("is {}, the map has s0 = {}", span_s.start, map.s0),
        ));
    }
    if span_t.start != map.t0 {
        return Err(mismatch(
            "t_start",
            format!("is {}, the map has t0 = {}", span_t.start, map.t0),
        ));
    }
    if !close(map.tau(span_s.end()), span_t.end(), PAIRING_TOL) {
        return Err(mismatch(
            "horizon",
            format!("t end {} is not tau(s end) = {}", span_t.end(), map.tau(span_s.end())),
        ));
    }
    let times = sample_times(span_t.start, span_t.end());
    let lambda_want = map.lambda_image();
    match (map.kind, spec_t.kind(), spec_s.kind()) {
        (MapKind::Opt, SystemKind::Shbf { lambda, b }, SystemKind::Savd { alpha }) => {
            if !close(*alpha, map.alpha, 1e-12) {
                return Err(mismatch("alpha", format!("is {alpha}, the map has {}", map.alpha)));
            }
            if !close(*lambda, lambda_want, 1e-12) {
                return Err(mismatch("lambda", format!("is {lambda}, expected {lambda_want}")));
            }
            check_schedule("b", b, &map.b_image()?, &times)?;
        }
        (MapKind::Op, SystemKind::ShbfopAlt { lambda, mu, gamma }, SystemKind::SfogdaAlt { alpha, beta }) => {
            if !close(*alpha, map.alpha, 1e-12) {
                return Err(mismatch("alpha", format!("is {alpha}, the map has {}", map.alpha)));
            }
            if !close(*lambda, lambda_want, 1e-12) {
                return Err(mismatch("lambda", format!("is {lambda}, expected {lambda_want}")));
            }
            let want = map.mu_image(*beta)?;
            check_schedule("mu", mu, &want, &times)?;
            check_schedule("gamma", gamma, &want, &times)?;
        }
        _ => {
            return Err(mismatch(
                "variant",
                format!(
                    "{} and {} are not paired by a {:?} map",
                    spec_t.variant(),
                    spec_s.variant(),
                    map.kind
                ),
            ))
        }
    }

    let (pt, ps) = (spec_t.problem(), spec_s.problem());
    if pt.dim() != ps.dim() {
        return Err(mismatch(
            "problem",
            format!("dimensions {} and {} differ", pt.dim(), ps.dim()),
        ));
    }
    let d = pt.dim();
    let (mut gt, mut gs) = (vec![T::zero(); d], vec![T::zero(); d]);
    for k in 0..6 {
        let x: Vec<T> = (0..d)
            .map(|j| pt.solution().as_slice()[j] + T::lit(((k * 7 + j * 3) % 11) as f64 / 5.0 - 1.0) * T::lit(k as f64))
            .collect();
        pt.operator_into(&x, &mut gt);
        ps.operator_into(&x, &mut gs);
        if gt
            .iter()
            .zip(&gs)
            .any(|(&a, &b)| !close(a, b, 1e-12) && (a - b).abs().as_f64() > 1e-14)
        {
            return Err(mismatch(
                "problem",
                "the two sides use different objectives or operators",
            ));
        }
    }

    let (dt, ds) = (spec_t.diffusion(), spec_s.diffusion());
    if dt.operator() != ds.operator() {
        return Err(mismatch("diffusion", "noise operators differ"));
    }
    for &s in &sample_times(span_s.start, span_s.end()) {
        let want = map.tau_dot(s).powf(T::lit(1.5)) * dt.multiplier_at(map.tau(s));
        let got = ds.multiplier_at(s);
        if !(close(got, want, PAIRING_TOL) || (got == T::zero() && want == T::zero())) {
            return Err(mismatch("diffusion", format!("sigma_Z({s}) = {got}, expected {want}")));
        }
    }

    let (it, is) = (spec_t.initial(), spec_s.initial());
    if it.position != is.position {
        return Err(mismatch("initial", "initial positions differ"));
    }
    let tdot = map.tau_dot(map.s0);
    for (&x, &q) in it.velocity.as_slice().iter().zip(is.velocity.as_slice()) {
        if !close(tdot * x, q, PAIRING_TOL) && (tdot * x - q).abs().as_f64() > 1e-15 {
            return Err(mismatch("initial", format!("velocity {q} is not tau'(s0) times {x}")));
        }
    }
    Ok(())
}

struct LevelErrors {
    s: Vec<f64>,
    t: Vec<f64>,
    pos: Vec<f64>,
    vel: Vec<f64>,
}

fn compare<T: Scalar>(traj_t: &Trajectory<T>, traj_s: &Trajectory<T>, map: &TimeMap<T>) -> LevelErrors {
    let d = traj_s.dim();
    let mut out = LevelErrors {
        s: vec![],
        t: vec![],
        pos: vec![],
        vel: vec![],
    };
    let (mut q, mut x) = (vec![T::zero(); d], vec![T::zero(); d]);
    let mut scratch = vec![T::zero(); d];
    for i in 0..traj_s.len() {
        let s = traj_s.time(i);
        let t = traj_t.time(i);
        traj_s.spec().velocity_into(s, traj_s.state(i), &mut q, &mut scratch);
        traj_t.spec().velocity_into(t, traj_t.state(i), &mut x, &mut scratch);
        let tdot = map.tau_dot(s);
        x.iter_mut().for_each(|v| *v = *v * tdot);
        out.s.push(s.as_f64());
        out.t.push(t.as_f64());
        out.pos.push(dist(traj_s.position(i), traj_t.position(i)).as_f64());
        out.vel.push(dist(&q, &x).as_f64());
    }
    out
}

fn run_level<T: Scalar>(
    spec_t: &SystemSpec<T>,
    spec_s: &SystemSpec<T>,
    map: &TimeMap<T>,
    path_s: &BrownianPath<T>,
    method: EquivalenceMethod,
) -> Result<LevelErrors> {
    let path_t = couple_increments(path_s, map)?;
    let (traj_s, traj_t) = match method {
        EquivalenceMethod::Em => (integrate_em(spec_s, path_s)?, integrate_em(spec_t, &path_t)?),
        EquivalenceMethod::Rk4 => (
            integrate_rk4(spec_s, path_s.grid())?,
            integrate_rk4(spec_t, path_t.grid())?,
        ),
    };
    Ok(compare(&traj_t, &traj_s, map))
}

/// Log-log least-squares slope of `ys` against `xs`.
fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.max(1e-300).ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Verdict thresholds of an equivalence run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EquivalenceCriteria {
    /// Largest accepted position error of a single-level run.
    pub position_tolerance: f64,
    /// Smallest accepted refinement slope of a multi-level run.
    pub min_slope: f64,
}

impl Default for EquivalenceCriteria {
    fn default() -> Self {
        Self {
            position_tolerance: 1e-6,
            min_slope: 0.4,
        }
    }
}

/// Integrates both sides of the time change on coupled grids and measures
/// `sup |Z(s_i) - Y(tau(s_i))|` and `sup |Q(s_i) - tau'(s_i) X(tau(s_i))|`.
///
/// With `levels > 1` the fine path is coarsened by `2^(levels-1), ..., 2, 1`
/// and the report carries the refinement slope; the verdict then requires
/// strictly decreasing errors and a slope of at least `criteria.min_slope`.
pub fn check_equivalence<T: Scalar>(
    spec_t: &SystemSpec<T>,
    spec_s: &SystemSpec<T>,
    map: &TimeMap<T>,
    path_s: &BrownianPath<T>,
    method: EquivalenceMethod,
    levels: usize,
    criteria: EquivalenceCriteria,
) -> Result<EquivalenceReport> {
    check_pairing(spec_t, spec_s, map)?;
    if path_s.dim() != spec_s.dim() {
        return Err(Error::InvalidInput("path dimension differs from the system".into()));
    }
    if method == EquivalenceMethod::Rk4 && !(spec_s.is_deterministic() && spec_t.is_deterministic()) {
        return Err(Error::InvalidInput("RK4 comparison needs noise-free systems".into()));
    }
    let levels = levels.max(1);
    let mut steps = vec![];
    let mut level_pos = vec![];
    let mut level_vel = vec![];
    let mut finest = None;
    for k in (0..levels).rev() {
        let path = coarsen_path(path_s, 1 << k)?;
        let errs = run_level(spec_t, spec_s, map, &path, method)?;
        steps.push(path.grid().max_step().as_f64());
        level_pos.push(errs.pos.iter().copied().fold(0.0, f64::max));
        level_vel.push(errs.vel.iter().copied().fold(0.0, f64::max));
        finest = Some(errs);
    }
    let finest = finest.expect("at least one level");
    let slope = (levels > 1).then(|| loglog_slope(&steps, &level_pos));
    let mut report = EquivalenceReport {
        kind: map.kind,
        alpha: map.alpha.as_f64(),
        sup_pos_err: *level_pos.last().unwrap(),
        sup_vel_err: *level_vel.last().unwrap(),
        steps,
        slope,
        pass: false,
        level_pos_errs: level_pos,
        level_vel_errs: level_vel,
        s_grid: finest.s,
        t_grid: finest.t,
        pos_err: finest.pos,
        vel_err: finest.vel,
    };
    report.pass = match slope {
        None => report.sup_pos_err <= criteria.position_tolerance,
        Some(s) => report.monotone() && s >= criteria.min_slope,
    };
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{build_savd, build_sfogda_alt};
    use crate::problems::{make_quadratic, make_rotation};
    use crate::sde::sample_brownian;

    fn opt_map() -> TimeMap<f64> {
        make_time_map(MapKind::Opt, 4.0, 0.0, 1.0).unwrap()
    }

    #[test]
    fn map_examples() {
        let m = opt_map();
        assert!((m.tau(std::f64::consts::E) - 3.0).abs() < 1e-15);
        assert!((m.kappa(3.0) - std::f64::consts::E).abs() < 1e-15);
        let op = make_time_map(MapKind::Op, 4.0, 0.0, 1.0).unwrap();
        assert_eq!(op.tau_dot(2.0), 1.0);
        assert!(make_time_map(MapKind::Opt, 4.0, 0.0, 0.0).is_err());
        assert!(make_time_map(MapKind::Opt, 1.0, 0.0, 1.0).is_err());
        assert!(make_time_map(MapKind::Op, 1.5, 0.0, 1.0).is_ok());
    }

    #[test]
    fn bijection_and_derivatives() {
        for m in [opt_map(), make_time_map(MapKind::Op, 3.0, 2.0, 0.5).unwrap()] {
            for k in 0..1000 {
                let s = m.s0() * 10f64.powf(k as f64 * 6.0 / 999.0);
                assert!((m.kappa(m.tau(s)) - s).abs() <= 1e-12 * s);
                assert!((m.tau_dot(s) * m.kappa_dot(m.tau(s)) - 1.0).abs() <= 1e-12);
                let t = m.t0() + k as f64 * 0.05;
                assert!((m.tau(m.kappa(t)) - t).abs() <= 1e-12 * t.max(1.0));
            }
        }
    }

    #[test]
    fn exponential_image_of_b() {
        let m = make_time_map(MapKind::Opt, 4.0, 1.0, 2.0).unwrap();
        let b = m.b_image().unwrap();
        for s in [2.0f64, 3.0, 10.0, 100.0] {
            let want = s * s / 9.0;
            assert!((b.value(m.tau(s)) - want).abs() <= 1e-12 * want);
        }
        assert!(m.mu_image(1.0).is_err());
    }

    #[test]
    fn diffusion_transform_examples() {
        let m = opt_map();
        let sigma = DiffusionSchedule::scalar(ScalarSchedule::constant(0.2, 0.0).unwrap(), 1);
        let z = transform_diffusion(&m, &sigma, Direction::TToS).unwrap();
        for s in [1.0, 2.0, 7.5] {
            let want = 0.2 * (3.0f64 / s).powf(1.5);
            assert!((z.multiplier_at(s) - want).abs() <= 1e-14 * want);
        }
        let back = transform_diffusion(&m, &z, Direction::SToT).unwrap();
        for t in [0.0, 1.0, 5.0] {
            assert!((back.multiplier_at(t) - 0.2).abs() <= 1e-12 * 0.2);
        }
        let p = DiffusionSchedule::scalar(ScalarSchedule::power(1.0, 2.0, 1.0).unwrap(), 1);
        assert!(matches!(
            transform_diffusion(&m, &p, Direction::TToS),
            Err(Error::UnsupportedComposition(_))
        ));
    }

    #[test]
    fn square_integrability_transfers() {
        // int |sigma_Y|^2 dt = c^-2 int s^2 |sigma_Z|^2 ds with c = alpha - 1 resp. alpha / 2
        for (kind, factor) in [(MapKind::Opt, 1.0 / 9.0), (MapKind::Op, 4.0 / 16.0)] {
            let m = make_time_map(kind, 4.0f64, 0.0, 1.0).unwrap();
            let z = DiffusionSchedule::scalar(ScalarSchedule::power(0.3, -1.6, 1.0).unwrap(), 2);
            let y = transform_diffusion(&m, &z, Direction::SToT).unwrap();
            assert!(z.weighted_square_integrable(2.0) && y.square_integrable());
            let lhs = y.weighted_square_integral(0).unwrap();
            let rhs = factor * z.weighted_square_integral(2).unwrap();
            assert!((lhs - rhs).abs() <= 1e-12 * rhs, "{kind:?}: {lhs} vs {rhs}");
            let z = DiffusionSchedule::scalar(ScalarSchedule::power(0.3, -1.4, 1.0).unwrap(), 2);
            let y = transform_diffusion(&m, &z, Direction::SToT).unwrap();
            assert!(!z.weighted_square_integrable(2.0) && !y.square_integrable());
        }
    }

    #[test]
    fn coupled_increments() {
        let m = opt_map();
        let g = TimeGrid::uniform(1.0, 3.0, 4).unwrap();
        let zero = BrownianPath::from_increments(0, g.clone(), 1, vec![0.0; 4]).unwrap();
        assert!(couple_increments(&zero, &m)
            .unwrap()
            .increments()
            .iter()
            .all(|&x| x == 0.0));
        let p = sample_brownian(3, &g, 1).unwrap();
        let doubled = BrownianPath::from_increments(3, g, 1, p.increments().iter().map(|x| 2.0 * x).collect()).unwrap();
        let (a, b) = (
            couple_increments(&p, &m).unwrap(),
            couple_increments(&doubled, &m).unwrap(),
        );
        for (x, y) in a.increments().iter().zip(b.increments()) {
            assert_eq!(2.0 * x, *y);
        }
        assert_eq!(a.grid().time(2), m.tau(2.0));
    }

    #[test]
    fn coupled_variance_matches_image_steps() {
        let m = opt_map();
        let g = TimeGrid::uniform(1.0, 2.0, 50).unwrap();
        let (mut acc, mut count) = (0.0, 0usize);
        for seed in 0..2000 {
            let p = couple_increments(&sample_brownian(seed, &g, 1).unwrap(), &m).unwrap();
            for i in 0..p.n_steps() {
                acc += p.increment(i)[0].powi(2) / p.grid().dt(i);
                count += 1;
            }
        }
        let ratio = acc / count as f64;
        assert!((ratio - 1.0).abs() < 0.03, "{ratio}");
    }

    fn savd_pair(sigma: f64) -> (SystemSpec<f64>, SystemSpec<f64>, TimeMap<f64>) {
        let m = opt_map();
        let p = make_quadratic(&[1.0, 0.5], VectorState::zeros(2)).unwrap();
        let init = InitialState::new(
            VectorState::from_f64(&[1.0, -1.0]).unwrap(),
            VectorState::from_f64(&[0.5, 0.0]).unwrap(),
        )
        .unwrap();
        let diffusion = if sigma > 0.0 {
            DiffusionSchedule::scalar(ScalarSchedule::power(sigma, -1.6, 1.0).unwrap(), 2)
        } else {
            DiffusionSchedule::zero(2)
        };
        let spec_s = build_savd(4.0, diffusion, p, init, TimeSpan::new(1.0, 19.0).unwrap()).unwrap();
        let spec_t = m.image_spec(&spec_s).unwrap();
        (spec_t, spec_s, m)
    }

    #[test]
    fn deterministic_objective_equivalence() {
        let (spec_t, spec_s, m) = savd_pair(0.0);
        let g = TimeGrid::uniform(1.0, 20.0, 19_000).unwrap();
        let path = sample_brownian(0, &g, 2).unwrap();
        let r = check_equivalence(
            &spec_t,
            &spec_s,
            &m,
            &path,
            EquivalenceMethod::Rk4,
            1,
            Default::default(),
        )
        .unwrap();
        assert!(r.sup_pos_err <= 1e-6 && r.pass, "{r:?}");
        assert!(r.sup_vel_err <= 1e-6);
    }

    #[test]
    fn deterministic_operator_equivalence() {
        let m = make_time_map(MapKind::Op, 4.0, 0.0, 1.0).unwrap();
        let init = InitialState::new(VectorState::from_f64(&[1.0, 0.5]).unwrap(), VectorState::zeros(2)).unwrap();
        let spec_s = build_sfogda_alt(
            4.0,
            1.0,
            DiffusionSchedule::zero(2),
            make_rotation(),
            init,
            TimeSpan::new(1.0, 19.0).unwrap(),
        )
        .unwrap();
        let spec_t = m.image_spec(&spec_s).unwrap();
        let g = TimeGrid::uniform(1.0, 20.0, 19_000).unwrap();
        let path = sample_brownian(0, &g, 2).unwrap();
        let r = check_equivalence(
            &spec_t,
            &spec_s,
            &m,
            &path,
            EquivalenceMethod::Rk4,
            1,
            Default::default(),
        )
        .unwrap();
        assert!(r.sup_pos_err <= 1e-6 && r.pass, "{r:?}");
    }

    #[test]
    fn mismatched_pairs_name_the_field() {
        let (spec_t, spec_s, m) = savd_pair(0.0);
        let g = TimeGrid::uniform(1.0, 20.0, 100).unwrap();
        let path = sample_brownian(0, &g, 2).unwrap();
        let run = |t: &SystemSpec<f64>, s: &SystemSpec<f64>| {
            check_equivalence(t, s, &m, &path, EquivalenceMethod::Rk4, 1, Default::default())
        };
        let other = make_quadratic(&[2.0, 0.5], VectorState::zeros(2)).unwrap();
        let wrong_b = build_shbf(
            1.0,
            ScalarSchedule::exponential(0.2, 2.0 / 3.0, 0.0).unwrap(),
            DiffusionSchedule::zero(2),
            other.clone(),
            spec_t.initial().clone(),
            spec_t.span(),
        )
        .unwrap();
        assert!(matches!(run(&wrong_b, &spec_s), Err(Error::InvalidPairing { field, .. }) if field == "b"));
        let wrong_problem = build_shbf(
            1.0,
            m.b_image().unwrap(),
            DiffusionSchedule::zero(2),
            other,
            spec_t.initial().clone(),
            spec_t.span(),
        )
        .unwrap();
        assert!(matches!(run(&wrong_problem, &spec_s), Err(Error::InvalidPairing { field, .. }) if field == "problem"));
        let noisy = spec_t
            .with_diffusion(DiffusionSchedule::scalar(
                ScalarSchedule::constant(0.1, 0.0).unwrap(),
                2,
            ))
            .unwrap();
        assert!(matches!(run(&noisy, &spec_s), Err(Error::InvalidPairing { field, .. }) if field == "diffusion"));
        assert!(matches!(run(&spec_s, &spec_t), Err(Error::InvalidPairing { .. })));
    }
}
