//! Numerical laboratory for stochastic inertial dynamics.
//!
//! The crate simulates the stochastic Heavy Ball system with friction for
//! convex minimization, its operator counterpart for monotone equations, and
//! the vanishing-damping systems they map to under exponential time
//! rescaling. Around the integrators sit the diagnostics needed to check the
//! long-time behaviour numerically: Lyapunov energies, Monte Carlo ensembles,
//! log-log rate fits and pathwise equivalence reports.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! `*64` / `*32` aliases below name the common instantiations.

pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod format;
pub mod problems;
pub mod rescaling;
pub mod scalar;
pub mod sde;

pub use diagnostics::{
    compute_metrics, default_window, energy_series, energy_shbf, energy_shbfop, fit_rate, martingale_mean_check,
    run_ensemble, scaled_phi, threads_from_env, EnsembleOptions, EnsembleStats, MartingaleReport, Metric, MetricSeries,
    MetricStats, RateFit, CLIP_FLOOR,
};
pub use dynamics::{
    build_savd, build_sfogda_alt, build_shbf, build_shbfop_alt, quadratic_form_sign, recover_velocity,
    validate_operator_assumptions, validate_shbf_assumption, DiffusionSchedule, FormSign, InitialState,
    OperatorAssumptionReport, ScalarSchedule, ScheduleFamily, ShbfAssumptionReport, SystemKind, SystemSpec, TimeSpan,
    Variant,
};
pub use error::{Error, Result};
pub use problems::{
    gradient_as_operator, make_bilinear_saddle, make_quadratic, make_rotation, verify_problem, MonotoneProblem,
    ObjectiveProblem, Problem, VectorState, VerificationReport,
};
pub use rescaling::{
    check_equivalence, couple_increments, make_time_map, transform_diffusion, Direction, EquivalenceCriteria,
    EquivalenceMethod, EquivalenceReport, MapKind, TimeMap,
};
pub use scalar::Scalar;
pub use sde::{
    coarsen_path, integrate_em, integrate_em_recorded, integrate_em_seeded, integrate_rk4, sample_brownian,
    BrownianPath, TimeGrid, Trajectory, DIVERGENCE_THRESHOLD,
};

pub type VectorState64 = VectorState<f64>;
pub type ObjectiveProblem64 = ObjectiveProblem<f64>;
pub type MonotoneProblem64 = MonotoneProblem<f64>;
pub type ScalarSchedule64 = ScalarSchedule<f64>;
pub type DiffusionSchedule64 = DiffusionSchedule<f64>;
pub type SystemSpec64 = SystemSpec<f64>;
pub type BrownianPath64 = BrownianPath<f64>;
pub type Trajectory64 = Trajectory<f64>;
pub type MetricSeries64 = MetricSeries<f64>;
pub type EnsembleStats64 = EnsembleStats<f64>;
pub type TimeMap64 = TimeMap<f64>;

pub type VectorState32 = VectorState<f32>;
pub type ObjectiveProblem32 = ObjectiveProblem<f32>;
pub type MonotoneProblem32 = MonotoneProblem<f32>;
pub type ScalarSchedule32 = ScalarSchedule<f32>;
pub type SystemSpec32 = SystemSpec<f32>;
pub type Trajectory32 = Trajectory<f32>;
