//! Closed-form coefficient schedules and diffusion terms.
//!
//! All suprema, infima and limits over `[t0, inf)` are computed per family
//! from the formulas, never by sampling: the standing assumptions quantify
//! over unbounded intervals.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// One of the supported closed-form families, parameterized by a positive
/// coefficient `c`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ScheduleFamily<T> {
    /// `c`
    Constant { c: T },
    /// `c t^r`
    Power { c: T, r: T },
    /// `c t^r log t`, only for `t > 1`
    PowerLog { c: T, r: T },
    /// `c exp(a t)`
    Exponential { c: T, a: T },
}

impl<T: Scalar> ScheduleFamily<T> {
    pub fn name(&self) -> &'static str {
        match self {
            ScheduleFamily::Constant { .. } => "constant",
            ScheduleFamily::Power { .. } => "power",
            ScheduleFamily::PowerLog { .. } => "power_log",
            ScheduleFamily::Exponential { .. } => "exponential",
        }
    }

    pub fn coefficient(&self) -> T {
        match *self {
            ScheduleFamily::Constant { c }
            | ScheduleFamily::Power { c, .. }
            | ScheduleFamily::PowerLog { c, .. }
            | ScheduleFamily::Exponential { c, .. } => c,
        }
    }
}

/// Positive, closed-form time-dependent coefficient on `[domain_start, inf)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalarSchedule<T> {
    family: ScheduleFamily<T>,
    domain_start: T,
}

impl<T: Scalar> ScalarSchedule<T> {
    pub fn new(family: ScheduleFamily<T>, domain_start: T) -> Result<Self> {
        if !(domain_start.is_finite() && domain_start >= T::zero()) {
            return Err(Error::InvalidSchedule(format!(
                "domain start {domain_start} must be finite and nonnegative"
            )));
        }
        let c = family.coefficient();
        if !(c.is_finite() && c > T::zero()) {
            return Err(Error::InvalidSchedule(format!("coefficient {c} must be positive")));
        }
        // Collapse degenerate parameterizations so every query sees one canonical form.
        let family = match family {
            ScheduleFamily::Power { c, r } if r == T::zero() => ScheduleFamily::Constant { c },
            ScheduleFamily::Exponential { c, a } if a == T::zero() => ScheduleFamily::Constant { c },
            f => f,
        };
        match family {
            ScheduleFamily::Power { r, .. } => {
                if !r.is_finite() {
                    return Err(Error::InvalidSchedule("power exponent must be finite".into()));
                }
                if domain_start <= T::zero() {
                    return Err(Error::InvalidSchedule(
                        "power family needs a positive domain start".into(),
                    ));
                }
            }
            ScheduleFamily::PowerLog { r, .. } => {
                if !r.is_finite() {
                    return Err(Error::InvalidSchedule("power_log exponent must be finite".into()));
                }
                if domain_start <= T::one() {
                    return Err(Error::InvalidSchedule(
                        "power_log family needs a domain start above 1".into(),
                    ));
                }
            }
            ScheduleFamily::Exponential { a, .. } => {
                if !a.is_finite() {
                    return Err(Error::InvalidSchedule("exponential rate must be finite".into()));
                }
            }
            ScheduleFamily::Constant { .. } => {}
        }
        Ok(Self { family, domain_start })
    }

    pub fn constant(c: T, domain_start: T) -> Result<Self> {
        Self::new(ScheduleFamily::Constant { c }, domain_start)
    }

    pub fn power(c: T, r: T, domain_start: T) -> Result<Self> {
        Self::new(ScheduleFamily::Power { c, r }, domain_start)
    }

    pub fn power_log(c: T, r: T, domain_start: T) -> Result<Self> {
        Self::new(ScheduleFamily::PowerLog { c, r }, domain_start)
    }

    pub fn exponential(c: T, a: T, domain_start: T) -> Result<Self> {
        Self::new(ScheduleFamily::Exponential { c, a }, domain_start)
    }

    pub fn family(&self) -> ScheduleFamily<T> {
        self.family
    }

    pub fn domain_start(&self) -> T {
        self.domain_start
    }

    /// Same function restricted to a later start.
    pub fn restricted(&self, start: T) -> Result<Self> {
        if start < self.domain_start {
            return Err(Error::InvalidSchedule(format!(
                "cannot extend a schedule from {} back to {start}",
                self.domain_start
            )));
        }
        Self::new(self.family, start)
    }

    pub fn scaled(&self, k: T) -> Result<Self> {
        let family = match self.family {
            ScheduleFamily::Constant { c } => ScheduleFamily::Constant { c: k * c },
            ScheduleFamily::Power { c, r } => ScheduleFamily::Power { c: k * c, r },
            ScheduleFamily::PowerLog { c, r } => ScheduleFamily::PowerLog { c: k * c, r },
            ScheduleFamily::Exponential { c, a } => ScheduleFamily::Exponential { c: k * c, a },
        };
        Self::new(family, self.domain_start)
    }

    pub fn value(&self, t: T) -> T {
        match self.family {
            ScheduleFamily::Constant { c } => c,
            ScheduleFamily::Power { c, r } => c * t.powf(r),
            ScheduleFamily::PowerLog { c, r } => c * t.powf(r) * t.ln(),
            ScheduleFamily::Exponential { c, a } => c * (a * t).exp(),
        }
    }

    pub fn derivative(&self, t: T) -> T {
        match self.family {
            ScheduleFamily::Constant { .. } => T::zero(),
            ScheduleFamily::Power { c, r } => c * r * t.powf(r - T::one()),
            ScheduleFamily::PowerLog { c, r } => c * t.powf(r - T::one()) * (r * t.ln() + T::one()),
            ScheduleFamily::Exponential { c, a } => c * a * (a * t).exp(),
        }
    }

    /// `value'(t) / value(t)`.
    pub fn log_derivative(&self, t: T) -> T {
        match self.family {
            ScheduleFamily::Constant { .. } => T::zero(),
            ScheduleFamily::Power { r, .. } => r / t,
            ScheduleFamily::PowerLog { r, .. } => r / t + T::one() / (t * t.ln()),
            ScheduleFamily::Exponential { a, .. } => a,
        }
    }

    pub fn is_nondecreasing(&self) -> bool {
        match self.family {
            ScheduleFamily::Constant { .. } => true,
            ScheduleFamily::Power { r, .. } | ScheduleFamily::PowerLog { r, .. } => r >= T::zero(),
            ScheduleFamily::Exponential { a, .. } => a >= T::zero(),
        }
    }

    /// `sup_{t >= t0} value'/value` (may be a limit that is not attained).
    pub fn sup_log_derivative(&self) -> T {
        let t0 = self.domain_start;
        match self.family {
            ScheduleFamily::Constant { .. } => T::zero(),
            ScheduleFamily::Exponential { a, .. } => a,
            ScheduleFamily::Power { r, .. } => (r / t0).max(T::zero()),
            // Decreasing for r >= 0; for r < 0 it decreases to a minimum and
            // then climbs back to its limit 0 from below.
            ScheduleFamily::PowerLog { .. } => self.log_derivative(t0).max(T::zero()),
        }
    }

    /// `inf_{t >= t0} value'/value` (may be a limit that is not attained).
    pub fn inf_log_derivative(&self) -> T {
        let t0 = self.domain_start;
        match self.family {
            ScheduleFamily::Constant { .. } => T::zero(),
            ScheduleFamily::Exponential { a, .. } => a,
            ScheduleFamily::Power { r, .. } => (r / t0).min(T::zero()),
            ScheduleFamily::PowerLog { r, .. } => {
                if r >= T::zero() {
                    T::zero()
                } else {
                    // Minimum where |r| log(t)^2 = log(t) + 1.
                    let m = -r;
                    let two = T::lit(2.0);
                    let four = T::lit(4.0);
                    let log_crit = (T::one() + (T::one() + four * m).sqrt()) / (two * m);
                    let t_crit = log_crit.exp().max(t0);
                    self.log_derivative(t_crit)
                }
            }
        }
    }

    /// `lim_{t -> inf} value'/value`.
    pub fn limit_log_derivative(&self) -> T {
        match self.family {
            ScheduleFamily::Exponential { a, .. } => a,
            _ => T::zero(),
        }
    }

    /// Growth signature `(exp rate, power, log power)` of the family.
    pub(crate) fn signature(&self) -> (T, T, T) {
        let z = T::zero();
        match self.family {
            ScheduleFamily::Constant { .. } => (z, z, z),
            ScheduleFamily::Power { r, .. } => (z, r, z),
            ScheduleFamily::PowerLog { r, .. } => (z, r, T::one()),
            ScheduleFamily::Exponential { a, .. } => (a, z, z),
        }
    }

    /// `lim_{t -> inf} other(t) / self(t)`; `None` when it is infinite.
    pub fn limit_ratio(&self, other: &ScalarSchedule<T>) -> Option<T> {
        let (a1, r1, k1) = self.signature();
        let (a2, r2, k2) = other.signature();
        let growth = [a2 - a1, r2 - r1, k2 - k1];
        match growth.iter().find(|g| **g != T::zero()) {
            None => Some(other.family.coefficient() / self.family.coefficient()),
            Some(g) if *g < T::zero() => Some(T::zero()),
            Some(_) => None,
        }
    }

    /// `other / self` when the two schedules are proportional.
    pub(crate) fn proportionality(&self, other: &ScalarSchedule<T>) -> Option<T> {
        (self.signature() == other.signature()).then(|| other.family.coefficient() / self.family.coefficient())
    }

    /// Closed-form `int_lo^hi value(s) ds`.
    pub fn integral(&self, lo: T, hi: T) -> Result<T> {
        if lo < self.domain_start || hi < lo {
            return Err(Error::InvalidInput(format!(
                "integration interval [{lo}, {hi}] outside the domain"
            )));
        }
        let one = T::one();
        Ok(match self.family {
            ScheduleFamily::Constant { c } => c * (hi - lo),
            ScheduleFamily::Power { c, r } => {
                if r == -one {
                    c * (hi / lo).ln()
                } else {
                    let p = r + one;
                    c * (hi.powf(p) - lo.powf(p)) / p
                }
            }
            ScheduleFamily::PowerLog { c, r } => {
                let anti = |u: T| -> T {
                    if r == -one {
                        u.ln() * u.ln() / T::lit(2.0)
                    } else {
                        let p = r + one;
                        u.powf(p) / p * (u.ln() - one / p)
                    }
                };
                c * (anti(hi) - anti(lo))
            }
            ScheduleFamily::Exponential { c, a } => c * ((a * hi).exp() - (a * lo).exp()) / a,
        })
    }

    /// Whether `int_{t0}^inf t^k value(t)^2 dt` is finite.
    pub fn weighted_square_integrable(&self, k: T) -> bool {
        match self.family {
            ScheduleFamily::Constant { .. } => false,
            ScheduleFamily::Power { r, .. } | ScheduleFamily::PowerLog { r, .. } => T::lit(2.0) * r + k < -T::one(),
            ScheduleFamily::Exponential { a, .. } => a < T::zero(),
        }
    }

    /// Closed-form `int_{t0}^inf t^k value(t)^2 dt`, `None` when divergent.
    pub fn weighted_square_integral(&self, k: u32) -> Option<T> {
        if !self.weighted_square_integrable(T::lit(k as f64)) {
            return None;
        }
        let t0 = self.domain_start;
        let kk = T::lit(k as f64);
        let two = T::lit(2.0);
        Some(match self.family {
            ScheduleFamily::Constant { .. } => unreachable!("constant schedules are never square integrable"),
            ScheduleFamily::Power { c, r } => {
                let q = two * r + kk + T::one();
                c * c * t0.powf(q) / (-q)
            }
            ScheduleFamily::PowerLog { c, r } => {
                let q = two * r + kk + T::one();
                let l = t0.ln();
                -c * c * t0.powf(q) * (l * l / q - two * l / (q * q) + two / (q * q * q))
            }
            ScheduleFamily::Exponential { c, a } => {
                // I_j = -t0^j e^{b t0} / b - (j / b) I_{j-1}, b = 2a < 0.
                let b = two * a;
                let e = (b * t0).exp();
                let mut acc = -e / b;
                for j in 1..=k {
                    let jj = T::lit(j as f64);
                    acc = -t0.powi(j as i32) * e / b - jj / b * acc;
                }
                c * c * acc
            }
        })
    }
}

/// Noise coefficient `multiplier(t) * operator`, acting on the companion block.
#[derive(Clone, Debug, PartialEq)]
pub struct DiffusionSchedule<T> {
    multiplier: Option<ScalarSchedule<T>>,
    /// Row-major `dim x dim`; `None` is the identity.
    operator: Option<Vec<T>>,
    dim: usize,
}

impl<T: Scalar> DiffusionSchedule<T> {
    pub fn zero(dim: usize) -> Self {
        Self {
            multiplier: None,
            operator: None,
            dim,
        }
    }

    pub fn scalar(multiplier: ScalarSchedule<T>, dim: usize) -> Self {
        Self {
            multiplier: Some(multiplier),
            operator: None,
            dim,
        }
    }

    pub fn with_operator(multiplier: Option<ScalarSchedule<T>>, rows: &[Vec<T>]) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 || rows.iter().any(|r| r.len() != dim) {
            return Err(Error::InvalidInput(
                "diffusion operator must be a nonempty square matrix".into(),
            ));
        }
        if rows.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("diffusion operator has non-finite entries".into()));
        }
        Ok(Self {
            multiplier,
            operator: Some(rows.iter().flatten().copied().collect()),
            dim,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn multiplier(&self) -> Option<&ScalarSchedule<T>> {
        self.multiplier.as_ref()
    }

    pub fn operator(&self) -> Option<&[T]> {
        self.operator.as_deref()
    }

    pub fn is_zero(&self) -> bool {
        self.multiplier.is_none() || self.operator_norm() == T::zero()
    }

    /// Frobenius norm of the fixed operator.
    pub fn operator_norm(&self) -> T {
        match &self.operator {
            None => T::lit(self.dim as f64).sqrt(),
            Some(m) => m.iter().map(|&x| x * x).sum::<T>().sqrt(),
        }
    }

    pub fn multiplier_at(&self, t: T) -> T {
        self.multiplier.as_ref().map_or(T::zero(), |m| m.value(t))
    }

    pub fn hs_norm(&self, t: T) -> T {
        self.multiplier_at(t) * self.operator_norm()
    }

    pub fn square_integrable(&self) -> bool {
        self.weighted_square_integrable(T::zero())
    }

    pub fn weighted_square_integrable(&self, k: T) -> bool {
        self.is_zero()
            || self
                .multiplier
                .as_ref()
                .is_some_and(|m| m.weighted_square_integrable(k))
    }

    /// Closed-form `int t^k ||sigma(t)||_HS^2 dt` over the multiplier's domain.
    pub fn weighted_square_integral(&self, k: u32) -> Option<T> {
        if self.is_zero() {
            return Some(T::zero());
        }
        let n = self.operator_norm();
        self.multiplier.as_ref()?.weighted_square_integral(k).map(|v| v * n * n)
    }

    /// Adds `sigma(t) dw` to `out`.
    pub(crate) fn apply(&self, t: T, dw: &[T], out: &mut [T]) {
        let Some(m) = &self.multiplier else { return };
        let s = m.value(t);
        match &self.operator {
            None => {
                for (o, &w) in out.iter_mut().zip(dw) {
                    *o = *o + s * w;
                }
            }
            Some(op) => {
                let d = self.dim;
                for (i, o) in out.iter_mut().enumerate() {
                    let row = &op[i * d..(i + 1) * d];
                    let acc = row.iter().zip(dw).fold(T::zero(), |acc, (&a, &w)| acc + a * w);
                    *o = *o + s * acc;
                }
            }
        }
    }

    /// Writes `sigma(t) dw` into `out`.
    pub(crate) fn noise_term(&self, t: T, dw: &[T], out: &mut [T]) {
        out.iter_mut().for_each(|o| *o = T::zero());
        self.apply(t, dw, out);
    }

    pub(crate) fn with_multiplier(&self, multiplier: Option<ScalarSchedule<T>>) -> Self {
        Self {
            multiplier,
            operator: self.operator.clone(),
            dim: self.dim,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn families(t0: f64) -> Vec<ScalarSchedule<f64>> {
        vec![
            ScalarSchedule::constant(2.0, t0).unwrap(),
            ScalarSchedule::power(1.5, 2.0, t0).unwrap(),
            ScalarSchedule::power(0.7, -1.1, t0).unwrap(),
            ScalarSchedule::power_log(1.0, 1.5, t0).unwrap(),
            ScalarSchedule::power_log(1.0, -0.8, t0).unwrap(),
            ScalarSchedule::exponential(0.3, 0.5, t0).unwrap(),
            ScalarSchedule::exponential(2.0, -0.4, t0).unwrap(),
        ]
    }

    #[test]
    fn rejects_invalid_parameterizations() {
        assert!(ScalarSchedule::constant(0.0, 0.0).is_err());
        assert!(ScalarSchedule::constant(-1.0, 0.0).is_err());
        assert!(ScalarSchedule::power(1.0, 2.0, 0.0).is_err());
        assert!(ScalarSchedule::power_log(1.0, 2.0, 1.0).is_err());
        assert!(ScalarSchedule::exponential(1.0, f64::NAN, 0.0).is_err());
        assert!(ScalarSchedule::constant(1.0, -1.0).is_err());
        // r = 0 is the constant family and needs no positive start.
        assert!(ScalarSchedule::power(1.0, 0.0, 0.0).is_ok());
    }

    #[test]
    fn derivative_matches_central_differences() {
        let mut state = 0x1234_5678_u64;
        let mut uniform = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for s in families(2.0) {
            for _ in 0..100 {
                let t = 2.0 + 8.0 * uniform();
                let h = 1e-5 * t;
                let fd = (s.value(t + h) - s.value(t - h)) / (2.0 * h);
                let d = s.derivative(t);
                let rel = (fd - d).abs() / d.abs().max(1e-300);
                assert!(d == 0.0 && fd.abs() < 1e-9 || rel <= 1e-6, "{s:?} at {t}: {d} vs {fd}");
            }
        }
    }

    #[test]
    fn value_positive_on_domain() {
        for s in families(1.5) {
            for t in [1.5, 2.0, 10.0, 100.0, 1e3] {
                assert!(s.value(t) > 0.0, "{s:?} at {t}");
            }
        }
    }

    #[test]
    fn log_derivative_bounds_match_dense_scan() {
        for s in families(1.5) {
            let (sup, inf) = (s.sup_log_derivative(), s.inf_log_derivative());
            let mut t = 1.5;
            while t < 1e7 {
                let h = s.log_derivative(t);
                assert!(
                    h <= sup + 1e-12 && h >= inf - 1e-12,
                    "{s:?} at {t}: {h} not in [{inf}, {sup}]"
                );
                t *= 1.001;
            }
        }
    }

    #[test]
    fn power_log_negative_exponent_minimum() {
        let s = ScalarSchedule::power_log(1.0, -0.8, 1.5).unwrap();
        let inf = s.inf_log_derivative();
        let mut best = f64::INFINITY;
        let mut t = 1.5;
        while t < 1e6 {
            best = best.min(s.log_derivative(t));
            t *= 1.0001;
        }
        assert!((best - inf).abs() < 1e-8, "{best} vs {inf}");
    }

    #[test]
    fn closed_form_queries() {
        let e = ScalarSchedule::exponential(1.0, 0.5, 0.0).unwrap();
        assert_eq!(e.sup_log_derivative(), 0.5);
        let p = ScalarSchedule::power(1.0, 2.0, 4.0).unwrap();
        assert_eq!(p.sup_log_derivative(), 0.5);
        assert_eq!(p.inf_log_derivative(), 0.0);
        assert!(p.is_nondecreasing());
        assert!(!ScalarSchedule::exponential(1.0, -1.0, 0.0).unwrap().is_nondecreasing());
    }

    #[test]
    fn limit_ratios() {
        let mu = ScalarSchedule::exponential(2.0, 0.5, 0.0).unwrap();
        let gamma = ScalarSchedule::exponential(3.0, 0.5, 0.0).unwrap();
        assert_eq!(mu.limit_ratio(&gamma), Some(1.5));
        let slow = ScalarSchedule::constant(1.0, 0.0).unwrap();
        assert_eq!(mu.limit_ratio(&slow), Some(0.0));
        assert_eq!(slow.limit_ratio(&mu), None);
        let p = ScalarSchedule::power(1.0, 2.0, 2.0).unwrap();
        let pl = ScalarSchedule::power_log(1.0, 2.0, 2.0).unwrap();
        assert_eq!(pl.limit_ratio(&p), Some(0.0));
        assert_eq!(p.limit_ratio(&pl), None);
    }

    #[test]
    fn integrals_match_quadrature() {
        for s in families(2.0) {
            let (lo, hi) = (3.0, 7.5);
            let n = 20_000;
            let h = (hi - lo) / n as f64;
            // composite Simpson
            let mut acc = s.value(lo) + s.value(hi);
            for i in 1..n {
                let w = if i % 2 == 1 { 4.0 } else { 2.0 };
                acc += w * s.value(lo + i as f64 * h);
            }
            let simpson = acc * h / 3.0;
            let exact = s.integral(lo, hi).unwrap();
            assert!(
                (simpson - exact).abs() <= 1e-10 * exact.abs(),
                "{s:?}: {simpson} vs {exact}"
            );
        }
    }

    #[test]
    fn square_integrability_flags() {
        let c = ScalarSchedule::constant(0.1, 1.0).unwrap();
        assert!(!c.weighted_square_integrable(0.0));
        let p = ScalarSchedule::power(1.0, -1.1, 1.0).unwrap();
        assert!(p.weighted_square_integrable(0.0));
        assert!(p.weighted_square_integrable(1.0));
        assert!(!p.weighted_square_integrable(2.0));
        let p = ScalarSchedule::power(1.0, -0.4, 1.0).unwrap();
        assert!(!p.weighted_square_integrable(0.0));
        let e = ScalarSchedule::exponential(1.0, -0.1, 0.0).unwrap();
        assert!(e.weighted_square_integrable(5.0));
        let d = DiffusionSchedule::<f64>::zero(2);
        assert!(d.square_integrable());
        assert_eq!(d.hs_norm(3.0), 0.0);
    }

    #[test]
    fn hs_norm_uses_frobenius_norm() {
        let m = ScalarSchedule::constant(2.0, 0.0).unwrap();
        let d = DiffusionSchedule::scalar(m, 4);
        assert_eq!(d.hs_norm(1.0), 4.0);
        let d = DiffusionSchedule::with_operator(Some(m), &[vec![3.0, 0.0], vec![0.0, 4.0]]).unwrap();
        assert_eq!(d.hs_norm(1.0), 10.0);
        let mut out = [0.0, 0.0];
        d.apply(1.0, &[1.0, 1.0], &mut out);
        assert_eq!(out, [6.0, 8.0]);
    }

    #[test]
    fn weighted_square_integrals_match_quadrature() {
        let cases = [
            (ScalarSchedule::power(1.3, -1.6, 1.0).unwrap(), 2u32),
            (ScalarSchedule::power_log(0.5, -1.5, 2.0).unwrap(), 1),
            (ScalarSchedule::exponential(2.0, -0.3, 0.5).unwrap(), 0),
            (ScalarSchedule::exponential(2.0, -0.3, 0.5).unwrap(), 2),
        ];
        for (s, k) in cases {
            let exact = s.weighted_square_integral(k).unwrap();
            // Substitute t = t0 e^x and apply Simpson's rule on [0, 200].
            let t0 = s.domain_start();
            let n = 600_000;
            let h = 200.0 / n as f64;
            let f = |x: f64| {
                let t = t0 * x.exp();
                let v = s.value(t);
                if v == 0.0 {
                    0.0
                } else {
                    t.powi(k as i32 + 1) * v * v
                }
            };
            let mut acc = f(0.0) + f(200.0);
            for i in 1..n {
                acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
            }
            acc *= h / 3.0;
            assert!((acc - exact).abs() <= 1e-8 * exact, "{s:?} k={k}: {acc} vs {exact}");
        }
    }

    proptest! {
        #[test]
        fn proportional_schedules_have_constant_ratio(c1 in 0.1f64..10.0, c2 in 0.1f64..10.0, a in 0.01f64..2.0, t in 0.0f64..20.0) {
            let mu = ScalarSchedule::exponential(c1, a, 0.0).unwrap();
            let gamma = ScalarSchedule::exponential(c2, a, 0.0).unwrap();
            let k = mu.proportionality(&gamma).unwrap();
            prop_assert!((gamma.value(t) / mu.value(t) - k).abs() <= 1e-12 * k);
        }
    }
}
