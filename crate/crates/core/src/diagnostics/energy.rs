use crate::dynamics::{ScalarSchedule, SystemKind};
use crate::error::{Error, Result};
use crate::problems::{ObjectiveProblem, Problem};
use crate::scalar::{dot, norm_sq, Scalar};
use crate::sde::Trajectory;

fn check_eta<T: Scalar>(eta: T, lambda: T) -> Result<()> {
    if eta > T::zero() && eta < lambda {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "eta = {eta} must lie in (0, {lambda})"
        )))
    }
}

/// `b(t)(f(y) - inf f) + |eta (y - y*) + x|^2 / 2 + eta (lambda - eta) |y - y*|^2 / 2`
#[allow(clippy::too_many_arguments)]
pub fn energy_shbf<T: Scalar>(
    eta: T,
    y_star: &[T],
    t: T,
    y: &[T],
    x: &[T],
    b: &ScalarSchedule<T>,
    problem: &ObjectiveProblem<T>,
    lambda: T,
) -> Result<T> {
    check_eta(eta, lambda)?;
    let half = T::lit(0.5);
    let mut mixed = T::zero();
    let mut dist2 = T::zero();
    for ((&yi, &xi), &si) in y.iter().zip(x).zip(y_star) {
        let e = yi - si;
        let m = eta * e + xi;
        mixed = mixed + m * m;
        dist2 = dist2 + e * e;
    }
    Ok(b.value(t) * (problem.eval(y) - problem.inf_value()) + half * mixed + half * eta * (lambda - eta) * dist2)
}

/// `|2 eta (y - y*) + 2 x + mu v|^2 / 2 + 2 eta (lambda - eta) |y - y*|^2
///  + 2 eta mu <y - y*, v> + mu^2 |v|^2 / 2` with `v = V(y)`.
#[allow(clippy::too_many_arguments)]
pub fn energy_shbfop<T: Scalar>(
    eta: T,
    y_star: &[T],
    t: T,
    x: &[T],
    y: &[T],
    v: &[T],
    mu: &ScalarSchedule<T>,
    lambda: T,
) -> Result<T> {
    check_eta(eta, lambda)?;
    let two = T::lit(2.0);
    let half = T::lit(0.5);
    let m = mu.value(t);
    let mut mixed = T::zero();
    let mut dist2 = T::zero();
    let mut gap = T::zero();
    for (((&yi, &xi), &vi), &si) in y.iter().zip(x).zip(v).zip(y_star) {
        let e = yi - si;
        let c = two * eta * e + two * xi + m * vi;
        mixed = mixed + c * c;
        dist2 = dist2 + e * e;
        gap = gap + e * vi;
    }
    Ok(half * mixed + two * eta * (lambda - eta) * dist2 + two * eta * m * gap + half * m * m * norm_sq(v))
}

/// Energy at every record of a Heavy Ball trajectory (objective or operator).
pub fn energy_series<T: Scalar>(traj: &Trajectory<T>, eta: T) -> Result<Vec<T>> {
    let spec = traj.spec();
    let d = spec.dim();
    let y_star = spec.problem().solution().as_slice();
    let mut x = vec![T::zero(); d];
    let mut v = vec![T::zero(); d];
    let mut scratch = vec![T::zero(); d];
    match (spec.kind(), spec.problem()) {
        (SystemKind::Shbf { lambda, b }, Problem::Objective(p)) => (0..traj.len())
            .map(|i| {
                energy_shbf(
                    eta,
                    y_star,
                    traj.time(i),
                    traj.position(i),
                    traj.companion(i),
                    b,
                    p,
                    *lambda,
                )
            })
            .collect(),
        (SystemKind::ShbfopAlt { lambda, mu, .. }, problem) => (0..traj.len())
            .map(|i| {
                let t = traj.time(i);
                spec.velocity_into(t, traj.state(i), &mut x, &mut scratch);
                problem.operator_into(traj.position(i), &mut v);
                energy_shbfop(eta, y_star, t, &x, traj.position(i), &v, mu, *lambda)
            })
            .collect(),
        _ => Err(Error::InvalidInput(format!(
            "no energy is defined for {}",
            spec.variant()
        ))),
    }
}

/// `g(t) [(f(y) - inf f) + |x|^2 / (2 b(t))]` with `g(t) = int_{(t+t0)/2}^t b`.
pub fn scaled_phi<T: Scalar>(
    t: T,
    y: &[T],
    x: &[T],
    b: &ScalarSchedule<T>,
    problem: &ObjectiveProblem<T>,
    t0: T,
) -> Result<T> {
    if !(t > t0) {
        return Err(Error::InvalidInput(format!("t = {t} must exceed t0 = {t0}")));
    }
    let g = b.integral((t + t0) / T::lit(2.0), t)?;
    let kinetic = dot(x, x) / (T::lit(2.0) * b.value(t));
    Ok(g * (problem.eval(y) - problem.inf_value() + kinetic))
}
