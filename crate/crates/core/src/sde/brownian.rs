use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::grid::TimeGrid;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Gaussian increments `W(t_{i+1}) - W(t_i)` in `R^dim` on a fixed grid.
#[derive(Clone, Debug, PartialEq)]
pub struct BrownianPath<T> {
    seed: u64,
    grid: TimeGrid<T>,
    dim: usize,
    /// Row-major, `n_steps x dim`.
    increments: Vec<T>,
}

/// Supplier of the increment for step `i` of an integration.
pub(crate) trait IncrementSource<T> {
    fn fill(&mut self, i: usize, dt: T, out: &mut [T]);
}

/// Draws the same increments as [`sample_brownian`] without storing them.
pub(crate) struct SeededIncrements {
    rng: ChaCha8Rng,
}

impl SeededIncrements {
    pub(crate) fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl<T: Scalar> IncrementSource<T> for SeededIncrements {
    fn fill(&mut self, _i: usize, dt: T, out: &mut [T]) {
        let scale = dt.as_f64().sqrt();
        for o in out.iter_mut() {
            let z: f64 = StandardNormal.sample(&mut self.rng);
            *o = T::lit(scale * z);
        }
    }
}

impl<T: Scalar> IncrementSource<T> for &BrownianPath<T> {
    fn fill(&mut self, i: usize, _dt: T, out: &mut [T]) {
        out.copy_from_slice(self.increment(i));
    }
}

pub fn sample_brownian<T: Scalar>(seed: u64, grid: &TimeGrid<T>, dim: usize) -> Result<BrownianPath<T>> {
    if dim == 0 {
        return Err(Error::InvalidInput("Brownian motion needs dimension at least 1".into()));
    }
    let n = grid.n_steps();
    let mut increments = vec![T::zero(); n * dim];
    let mut source = SeededIncrements::new(seed);
    for (i, row) in increments.chunks_exact_mut(dim).enumerate() {
        source.fill(i, grid.dt(i), row);
    }
    Ok(BrownianPath {
        seed,
        grid: grid.clone(),
        dim,
        increments,
    })
}

impl<T: Scalar> BrownianPath<T> {
    /// Path from explicitly given increments (row-major, `n_steps x dim`).
    pub fn from_increments(seed: u64, grid: TimeGrid<T>, dim: usize, increments: Vec<T>) -> Result<Self> {
        if dim == 0 || increments.len() != grid.n_steps() * dim {
            return Err(Error::InvalidInput(format!(
                "expected {} x {dim} increments, got {}",
                grid.n_steps(),
                increments.len()
            )));
        }
        Ok(Self {
            seed,
            grid,
            dim,
            increments,
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn grid(&self) -> &TimeGrid<T> {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_steps(&self) -> usize {
        self.grid.n_steps()
    }

    pub fn increment(&self, i: usize) -> &[T] {
        &self.increments[i * self.dim..(i + 1) * self.dim]
    }

    pub fn increments(&self) -> &[T] {
        &self.increments
    }

    /// `W(t_N) - W(t_0)`.
    pub fn total(&self) -> Vec<T> {
        let mut acc = vec![T::zero(); self.dim];
        for row in self.increments.chunks_exact(self.dim) {
            for (a, &w) in acc.iter_mut().zip(row) {
                *a = *a + w;
            }
        }
        acc
    }
}

/// Path on the grid with every `factor` consecutive steps merged.
pub fn coarsen_path<T: Scalar>(path: &BrownianPath<T>, factor: usize) -> Result<BrownianPath<T>> {
    let n = path.n_steps();
    if factor == 0 || !n.is_multiple_of(factor) {
        return Err(Error::InvalidInput(format!(
            "factor {factor} does not divide {n} steps"
        )));
    }
    let TimeGrid::Uniform { start, end, .. } = path.grid else {
        return Err(Error::InvalidInput("only uniform grids can be coarsened".into()));
    };
    let d = path.dim;
    let mut increments = vec![T::zero(); n / factor * d];
    for (j, row) in increments.chunks_exact_mut(d).enumerate() {
        for k in 0..factor {
            for (r, &w) in row.iter_mut().zip(path.increment(j * factor + k)) {
                *r = *r + w;
            }
        }
    }
    Ok(BrownianPath {
        seed: path.seed,
        grid: TimeGrid::uniform(start, end, n / factor)?,
        dim: d,
        increments,
    })
}
