//! Schedules, the four drift/diffusion systems and their parameter checks.

mod schedule;
mod system;
mod validate;

pub use schedule::{DiffusionSchedule, ScalarSchedule, ScheduleFamily};
pub use system::{
    build_savd, build_sfogda_alt, build_shbf, build_shbfop_alt, recover_velocity, InitialState, SystemKind, SystemSpec,
    TimeSpan, Variant,
};
pub use validate::{
    quadratic_form_sign, validate_operator_assumptions, validate_shbf_assumption, FormSign, OperatorAssumptionReport,
    ShbfAssumptionReport,
};
