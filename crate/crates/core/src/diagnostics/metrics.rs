use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::g17;
use crate::problems::Problem;
use crate::scalar::{dot, norm, norm_sq, Scalar};
use crate::sde::Trajectory;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// `f(Y) - inf f`
    Suboptimality,
    /// `|grad f(Y)|` resp. `|V(Y)|`
    Residual,
    ResidualSquared,
    /// `<Y - y*, V(Y)>`
    Gap,
    /// `|X|`
    Velocity,
    /// Distance of `Y` to the solution set.
    Distance,
}

impl Metric {
    pub const ALL: [Metric; 6] = [
        Metric::Suboptimality,
        Metric::Residual,
        Metric::ResidualSquared,
        Metric::Gap,
        Metric::Velocity,
        Metric::Distance,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Suboptimality => "suboptimality",
            Metric::Residual => "residual",
            Metric::ResidualSquared => "residual_squared",
            Metric::Gap => "gap",
            Metric::Velocity => "velocity",
            Metric::Distance => "distance",
        }
    }

    /// Metrics defined for the given kind of problem.
    pub fn applicable<T>(problem: &Problem<T>) -> Vec<Metric> {
        match problem {
            Problem::Objective(_) => Metric::ALL.to_vec(),
            Problem::Monotone(_) => Metric::ALL[1..].to_vec(),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown metric `{s}`")))
    }
}

/// Metric values at every record of a trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricSeries<T> {
    times: Vec<T>,
    columns: Vec<(Metric, Vec<T>)>,
}

impl<T: Scalar> MetricSeries<T> {
    pub fn new(times: Vec<T>, columns: Vec<(Metric, Vec<T>)>) -> Result<Self> {
        if let Some((m, _)) = columns.iter().find(|(_, v)| v.len() != times.len()) {
            return Err(Error::InvalidInput(format!("metric {m} has the wrong length")));
        }
        Ok(Self { times, columns })
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn metrics(&self) -> impl Iterator<Item = Metric> + '_ {
        self.columns.iter().map(|(m, _)| *m)
    }

    pub fn get(&self, metric: Metric) -> Option<&[T]> {
        self.columns
            .iter()
            .find(|(m, _)| *m == metric)
            .map(|(_, v)| v.as_slice())
    }

    pub fn try_get(&self, metric: Metric) -> Result<&[T]> {
        self.get(metric)
            .ok_or_else(|| Error::InvalidInput(format!("metric {metric} is not available for this problem")))
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let mut header = String::from("t");
        for (m, _) in &self.columns {
            header.push(',');
            header.push_str(m.name());
        }
        writeln!(w, "{header}")?;
        for (i, t) in self.times.iter().enumerate() {
            let mut line = g17(t.as_f64());
            for (_, v) in &self.columns {
                line.push(',');
                line.push_str(&g17(v[i].as_f64()));
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }
}

/// Every metric applicable to `problem` at every record of `traj`.
pub fn compute_metrics<T: Scalar>(traj: &Trajectory<T>, problem: &Problem<T>) -> Result<MetricSeries<T>> {
    let d = problem.dim();
    if traj.dim() != d {
        return Err(Error::InvalidInput(format!(
            "trajectory has dimension {} but the problem has {d}",
            traj.dim()
        )));
    }
    let spec = traj.spec();
    let metrics = Metric::applicable(problem);
    let mut columns: Vec<(Metric, Vec<T>)> = metrics.iter().map(|&m| (m, Vec::with_capacity(traj.len()))).collect();
    let solution = problem.solution().as_slice();
    let mut v = vec![T::zero(); d];
    let mut x = vec![T::zero(); d];
    let mut scratch = vec![T::zero(); d];
    let mut shifted = vec![T::zero(); d];
    for i in 0..traj.len() {
        let y = traj.position(i);
        problem.operator_into(y, &mut v);
        spec.velocity_into(traj.time(i), traj.state(i), &mut x, &mut scratch);
        for ((s, &yi), &ys) in shifted.iter_mut().zip(y).zip(solution) {
            *s = yi - ys;
        }
        for (m, col) in columns.iter_mut() {
            col.push(match m {
                Metric::Suboptimality => match problem {
                    Problem::Objective(p) => p.eval(y) - p.inf_value(),
                    Problem::Monotone(_) => unreachable!("not applicable to operators"),
                },
                Metric::Residual => norm(&v),
                Metric::ResidualSquared => norm_sq(&v),
                Metric::Gap => dot(&shifted, &v),
                Metric::Velocity => norm(&x),
                Metric::Distance => problem.solution_distance(y),
            });
        }
    }
    MetricSeries::new(traj.times().to_vec(), columns)
}
