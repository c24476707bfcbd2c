use serde::Serialize;

use super::schedule::ScalarSchedule;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Check of `sup_{t >= t0} b'/b < lambda`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ShbfAssumptionReport {
    pub lambda: f64,
    pub sup_ratio: f64,
    pub margin: f64,
    pub pass: bool,
    /// Midpoint of the admissible energy parameters `(sup b'/b, lambda)`.
    pub default_eta: Option<f64>,
}

pub fn validate_shbf_assumption<T: Scalar>(lambda: T, b: &ScalarSchedule<T>) -> ShbfAssumptionReport {
    let sup = b.sup_log_derivative().as_f64();
    let lambda = lambda.as_f64();
    let pass = sup < lambda;
    ShbfAssumptionReport {
        lambda,
        sup_ratio: sup,
        margin: lambda - sup,
        pass,
        default_eta: pass.then(|| (sup.max(0.0) + lambda) / 2.0),
    }
}

/// Checks of the three operator-case conditions on `(lambda, mu, gamma)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OperatorAssumptionReport {
    pub lambda: f64,
    /// `lim gamma/mu`; `None` when infinite.
    pub ell: Option<f64>,
    /// `sup mu'/gamma`; `None` when not available in closed form.
    pub sup_mudot_over_gamma: Option<f64>,
    pub inf_mudot_over_mu: f64,
    /// `2 lambda - 3 ell + inf mu'/mu`.
    pub condition: Option<f64>,
    pub ell_positive: bool,
    pub ratio_below_one: bool,
    pub condition_positive: bool,
    pub pass: bool,
    pub default_eta: Option<f64>,
    /// Time from which the energy with the default parameter is nonincreasing.
    pub admissibility_time: Option<f64>,
    pub diagnostic: Option<String>,
}

pub fn validate_operator_assumptions<T: Scalar>(
    lambda: T,
    mu: &ScalarSchedule<T>,
    gamma: &ScalarSchedule<T>,
) -> OperatorAssumptionReport {
    let lambda_f = lambda.as_f64();
    let ell = mu.limit_ratio(gamma).map(Scalar::as_f64);
    let inf_mm = mu.inf_log_derivative().as_f64();
    let mut diagnostic = None;
    // mu'/gamma = (mu'/mu) (mu/gamma), a constant multiple of mu'/mu for
    // proportional pairs.
    let sup_mg = match gamma.proportionality(mu) {
        Some(k) => Some((mu.sup_log_derivative() * k).as_f64()),
        None if mu.sup_log_derivative() == T::zero() && mu.inf_log_derivative() == T::zero() => Some(0.0),
        None => {
            diagnostic = Some(format!(
                "mu ({}) and gamma ({}) are not proportional; sup mu'/gamma has no closed form here",
                mu.family().name(),
                gamma.family().name()
            ));
            None
        }
    };
    if ell.is_none() {
        diagnostic = Some(format!(
            "gamma/mu diverges: gamma ({}) grows faster than mu ({})",
            gamma.family().name(),
            mu.family().name()
        ));
    } else if ell == Some(0.0) {
        diagnostic = Some(format!(
            "gamma/mu tends to 0: mu ({}) grows faster than gamma ({})",
            mu.family().name(),
            gamma.family().name()
        ));
    }
    let condition = ell.map(|l| 2.0 * lambda_f - 3.0 * l + inf_mm);
    let ell_positive = ell.is_some_and(|l| l > 0.0);
    let ratio_below_one = sup_mg.is_some_and(|r| r < 1.0);
    let condition_positive = condition.is_some_and(|c| c > 0.0);
    let pass = ell_positive && ratio_below_one && condition_positive;
    let proportional = gamma.proportionality(mu).is_some();
    OperatorAssumptionReport {
        lambda: lambda_f,
        ell,
        sup_mudot_over_gamma: sup_mg,
        inf_mudot_over_mu: inf_mm,
        condition,
        ell_positive,
        ratio_below_one,
        condition_positive,
        pass,
        default_eta: if pass {
            ell.map(|l| lambda_f - (lambda_f - l) / 2.0)
        } else {
            None
        },
        admissibility_time: (pass && proportional).then(|| mu.domain_start().max(gamma.domain_start()).as_f64()),
        diagnostic,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FormSign {
    Nonnegative,
    Nonpositive,
    Indefinite,
}

/// Sign of `A |P|^2 + 2 B <P, Q> + C |Q|^2` over all `P, Q`.
pub fn quadratic_form_sign<T: Scalar>(a: T, b: T, c: T) -> Result<FormSign> {
    if a == T::zero() || !a.is_finite() {
        return Err(Error::InvalidInput(format!(
            "leading coefficient must be nonzero and finite, got {a}"
        )));
    }
    Ok(if b * b - a * c <= T::zero() {
        if a > T::zero() {
            FormSign::Nonnegative
        } else {
            FormSign::Nonpositive
        }
    } else {
        FormSign::Indefinite
    })
}
