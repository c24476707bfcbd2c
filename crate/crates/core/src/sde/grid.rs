use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Strictly increasing time points `t_0 < ... < t_N`.
#[derive(Clone, Debug, PartialEq)]
pub enum TimeGrid<T> {
    /// `n` equal steps from `start` to `end`; the last point is `end` exactly.
    Uniform {
        start: T,
        end: T,
        n: usize,
    },
    Explicit(Vec<T>),
}

impl<T: Scalar> TimeGrid<T> {
    pub fn uniform(start: T, end: T, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGrid("a grid needs at least one step".into()));
        }
        if !(start.is_finite() && end.is_finite() && end > start) {
            return Err(Error::InvalidGrid(format!(
                "interval [{start}, {end}] is empty or not finite"
            )));
        }
        Ok(TimeGrid::Uniform { start, end, n })
    }

    /// Uniform grid whose step is `step` up to rounding of the step count.
    pub fn with_step(start: T, end: T, step: T) -> Result<Self> {
        if !(step.is_finite() && step > T::zero()) {
            return Err(Error::InvalidGrid(format!("step {step} must be positive")));
        }
        let n = ((end - start) / step).round().to_usize().unwrap_or(0);
        Self::uniform(start, end, n.max(1))
    }

    /// `n` steps equally spaced in `log t`.
    pub fn log_uniform(start: T, end: T, n: usize) -> Result<Self> {
        if !(start > T::zero()) {
            return Err(Error::InvalidGrid("log-uniform grids need a positive start".into()));
        }
        Self::uniform(start, end, n)?;
        let (l0, l1) = (start.ln(), end.ln());
        let nn = T::lit(n as f64);
        let mut points: Vec<T> = (0..=n)
            .map(|i| (l0 + (l1 - l0) * T::lit(i as f64) / nn).exp())
            .collect();
        points[0] = start;
        points[n] = end;
        Self::explicit(points)
    }

    pub fn explicit(points: Vec<T>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidGrid("a grid needs at least two points".into()));
        }
        if points.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidGrid("grid points must be finite".into()));
        }
        if let Some(i) = points.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid(format!(
                "grid is not strictly increasing at index {}",
                i + 1
            )));
        }
        Ok(TimeGrid::Explicit(points))
    }

    /// Number of steps `N`.
    pub fn n_steps(&self) -> usize {
        match self {
            TimeGrid::Uniform { n, .. } => *n,
            TimeGrid::Explicit(p) => p.len() - 1,
        }
    }

    /// Number of points `N + 1`.
    pub fn len(&self) -> usize {
        self.n_steps() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn time(&self, i: usize) -> T {
        match self {
            TimeGrid::Uniform { start, end, n } => {
                if i == *n {
                    *end
                } else {
                    *start + (*end - *start) * T::lit(i as f64) / T::lit(*n as f64)
                }
            }
            TimeGrid::Explicit(p) => p[i],
        }
    }

    pub fn dt(&self, i: usize) -> T {
        self.time(i + 1) - self.time(i)
    }

    pub fn start(&self) -> T {
        self.time(0)
    }

    pub fn end(&self) -> T {
        self.time(self.n_steps())
    }

    pub fn is_uniform(&self) -> bool {
        matches!(self, TimeGrid::Uniform { .. })
    }

    /// Largest step.
    pub fn max_step(&self) -> T {
        match self {
            TimeGrid::Uniform { start, end, n } => (*end - *start) / T::lit(*n as f64),
            TimeGrid::Explicit(_) => (0..self.n_steps()).map(|i| self.dt(i)).fold(T::zero(), T::max),
        }
    }

    pub fn points(&self) -> Vec<T> {
        (0..self.len()).map(|i| self.time(i)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_grid_ends_exactly() {
        let g = TimeGrid::uniform(0.0f64, 5.0, 50_000).unwrap();
        assert_eq!(g.len(), 50_001);
        assert_eq!(g.end(), 5.0);
        assert!((g.dt(17) - 1e-4).abs() < 1e-15);
        let g = TimeGrid::with_step(4.0, 200.0, 1e-3).unwrap();
        assert_eq!(g.n_steps(), 196_000);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(TimeGrid::explicit(vec![0.0, 1.0, 1.0]).is_err());
        assert!(TimeGrid::explicit(vec![0.0]).is_err());
        assert!(TimeGrid::uniform(1.0, 0.0, 4).is_err());
        assert!(TimeGrid::with_step(0.0, 1.0, -1e-3).is_err());
    }

    #[test]
    fn log_uniform_grid() {
        let g = TimeGrid::log_uniform(1.0f64, 100.0, 10).unwrap();
        assert_eq!(g.start(), 1.0);
        assert_eq!(g.end(), 100.0);
        assert!((g.time(5) - 10.0).abs() < 1e-12);
    }
}
