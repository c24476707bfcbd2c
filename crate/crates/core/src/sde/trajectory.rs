use std::fmt;
use std::io::{self, Write};
use std::sync::Arc;

use crate::dynamics::{SystemSpec, Variant};
use crate::format::g17;
use crate::scalar::Scalar;

/// Recorded `(position, companion)` states of one integration.
#[derive(Clone)]
pub struct Trajectory<T> {
    spec: Arc<SystemSpec<T>>,
    times: Vec<T>,
    /// Row-major, `len x 2 dim`.
    states: Vec<T>,
    warnings: Vec<String>,
}

impl<T: Scalar> fmt::Debug for Trajectory<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Trajectory")
            .field("variant", &self.variant())
            .field("records", &self.len())
            .field(
                "last_state",
                &self.states.get(self.states.len().saturating_sub(2 * self.dim())..),
            )
            .finish()
    }
}

impl<T: Scalar> Trajectory<T> {
    pub(crate) fn new(spec: Arc<SystemSpec<T>>, times: Vec<T>, states: Vec<T>, warnings: Vec<String>) -> Self {
        debug_assert_eq!(states.len(), times.len() * 2 * spec.dim());
        Self {
            spec,
            times,
            states,
            warnings,
        }
    }

    pub fn spec(&self) -> &SystemSpec<T> {
        &self.spec
    }

    pub fn variant(&self) -> Variant {
        self.spec.variant()
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn time(&self, i: usize) -> T {
        self.times[i]
    }

    /// Full `(position, companion)` state at record `i`.
    pub fn state(&self, i: usize) -> &[T] {
        let w = 2 * self.dim();
        &self.states[i * w..(i + 1) * w]
    }

    pub fn position(&self, i: usize) -> &[T] {
        &self.state(i)[..self.dim()]
    }

    pub fn companion(&self, i: usize) -> &[T] {
        &self.state(i)[self.dim()..]
    }

    pub fn last_state(&self) -> &[T] {
        self.state(self.len() - 1)
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// `t,y_1..y_d,c_1..c_d`, one row per record.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let d = self.dim();
        let mut header = String::from("t");
        for prefix in ["y", "c"] {
            for k in 1..=d {
                header.push_str(&format!(",{prefix}_{k}"));
            }
        }
        writeln!(w, "{header}")?;
        for i in 0..self.len() {
            let mut line = g17(self.times[i].as_f64());
            for &x in self.state(i) {
                line.push(',');
                line.push_str(&g17(x.as_f64()));
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }
}
