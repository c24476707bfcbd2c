//! Brownian paths, time grids and the explicit Euler-Maruyama / RK4 integrators.

mod brownian;
mod grid;
mod integrate;
mod trajectory;

pub use brownian::{coarsen_path, sample_brownian, BrownianPath};
pub use grid::TimeGrid;
pub use integrate::{integrate_em, integrate_em_recorded, integrate_em_seeded, integrate_rk4, DIVERGENCE_THRESHOLD};
pub use trajectory::Trajectory;

pub(crate) use brownian::SeededIncrements;
pub(crate) use integrate::run_em;
