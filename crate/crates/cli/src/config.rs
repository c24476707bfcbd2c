//! Experiment description read from a JSON document.

use std::fmt;
use std::path::PathBuf;

use dynlab::{
    build_savd, build_sfogda_alt, build_shbf, build_shbfop_alt, gradient_as_operator, make_bilinear_saddle,
    make_quadratic, make_rotation, DiffusionSchedule, DiffusionSchedule64, EquivalenceMethod, InitialState, Metric,
    MonotoneProblem64, ObjectiveProblem64, Problem, ScalarSchedule, ScalarSchedule64, SystemSpec64, TimeSpan,
    VectorState,
};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemConfig {
    Quadratic {
        spectrum: Vec<f64>,
        #[serde(default)]
        minimizer: Option<Vec<f64>>,
    },
    /// Gradient of a quadratic, read as a monotone operator.
    QuadraticGradient {
        spectrum: Vec<f64>,
        #[serde(default)]
        minimizer: Option<Vec<f64>>,
    },
    Rotation {},
    BilinearSaddle {
        coupling: Vec<Vec<f64>>,
    },
}

impl ProblemConfig {
    pub fn dim(&self) -> usize {
        match self {
            Self::Quadratic { spectrum, .. } | Self::QuadraticGradient { spectrum, .. } => spectrum.len(),
            Self::Rotation {} => 2,
            Self::BilinearSaddle { coupling } => coupling.len() + coupling.first().map_or(0, Vec::len),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScheduleConfig {
    Constant {
        c: f64,
        #[serde(default)]
        start: Option<f64>,
    },
    Power {
        c: f64,
        r: f64,
        #[serde(default)]
        start: Option<f64>,
    },
    PowerLog {
        c: f64,
        r: f64,
        #[serde(default)]
        start: Option<f64>,
    },
    Exponential {
        c: f64,
        a: f64,
        #[serde(default)]
        start: Option<f64>,
    },
}

impl ScheduleConfig {
    fn coefficient(&self) -> f64 {
        match *self {
            Self::Constant { c, .. }
            | Self::Power { c, .. }
            | Self::PowerLog { c, .. }
            | Self::Exponential { c, .. } => c,
        }
    }

    fn start(&self) -> Option<f64> {
        match *self {
            Self::Constant { start, .. }
            | Self::Power { start, .. }
            | Self::PowerLog { start, .. }
            | Self::Exponential { start, .. } => start,
        }
    }

    /// The schedule, defined from `start` unless the config names its own
    /// domain start.
    pub fn build(&self, start: f64) -> dynlab::Result<ScalarSchedule64> {
        let t0 = self.start().unwrap_or(start);
        match *self {
            Self::Constant { c, .. } => ScalarSchedule::constant(c, t0),
            Self::Power { c, r, .. } => ScalarSchedule::power(c, r, t0),
            Self::PowerLog { c, r, .. } => ScalarSchedule::power_log(c, r, t0),
            Self::Exponential { c, a, .. } => ScalarSchedule::exponential(c, a, t0),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemConfig {
    Shbf {
        lambda: f64,
        b: ScheduleConfig,
    },
    Savd {
        alpha: f64,
    },
    ShbfopAlt {
        lambda: f64,
        mu: ScheduleConfig,
        /// Defaults to `mu`.
        #[serde(default)]
        gamma: Option<ScheduleConfig>,
    },
    SfogdaAlt {
        alpha: f64,
        beta: f64,
    },
}

impl SystemConfig {
    pub fn is_operator(&self) -> bool {
        matches!(self, Self::ShbfopAlt { .. } | Self::SfogdaAlt { .. })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiffusionConfig {
    /// Time-dependent factor; omitted means 1 when an operator is given.
    #[serde(default)]
    pub multiplier: Option<ScheduleConfig>,
    /// Fixed square matrix, row by row; omitted means the identity.
    #[serde(default)]
    pub operator: Option<Vec<Vec<f64>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    pub position: Vec<f64>,
    #[serde(default)]
    pub velocity: Option<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodConfig {
    #[default]
    Em,
    Rk4,
}

impl From<MethodConfig> for EquivalenceMethod {
    fn from(m: MethodConfig) -> Self {
        match m {
            MethodConfig::Em => EquivalenceMethod::Em,
            MethodConfig::Rk4 => EquivalenceMethod::Rk4,
        }
    }
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    #[serde(default)]
    pub method: MethodConfig,
    pub step: f64,
    #[serde(default = "one")]
    pub record_every: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    pub n_paths: usize,
    /// Worker threads; falls back to `DYNLAB_THREADS`, then to all cores.
    #[serde(default)]
    pub threads: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    pub metric: Metric,
    /// Defaults to the last decade of the horizon.
    #[serde(default)]
    pub window: Option<[f64; 2]>,
    pub target: f64,
    pub tolerance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquivalenceConfig {
    /// Start of the constant-friction time axis.
    #[serde(default)]
    pub t0: f64,
    #[serde(default = "one")]
    pub levels: usize,
    /// Defaults to RK4 for noise-free systems and Euler-Maruyama otherwise.
    #[serde(default)]
    pub method: Option<MethodConfig>,
    #[serde(default)]
    pub position_tolerance: Option<f64>,
    #[serde(default)]
    pub min_slope: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemConfig,
    pub system: SystemConfig,
    pub start: f64,
    /// Length of the time span.
    pub horizon: f64,
    /// Defaults to the all-ones position at rest.
    #[serde(default)]
    pub initial: Option<InitialConfig>,
    /// Omitted means noise-free.
    #[serde(default)]
    pub diffusion: Option<DiffusionConfig>,
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub ensemble: Option<EnsembleConfig>,
    #[serde(default)]
    pub fits: Vec<FitConfig>,
    #[serde(default)]
    pub equivalence: Option<EquivalenceConfig>,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

/// A config problem located by its JSON path, e.g. `.integrator.step`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SchemaError {
    pub path: String,
    pub message: String,
}

impl fmt::Display for SchemaError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let path = if self.path.is_empty() { "." } else { &self.path };
        write!(f, "{path}: {}", self.message)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("invalid config:\n{}", .0.iter().map(|e| format!("  {e}")).collect::<Vec<_>>().join("\n"))]
pub struct SchemaErrors(pub Vec<SchemaError>);

/// A config that passed the schema and range checks, with the warnings the
/// system builder attached to it.
#[derive(Clone, Debug)]
pub struct ParsedConfig {
    pub config: ExperimentConfig,
    pub warnings: Vec<String>,
}

pub fn parse_config(text: &str) -> Result<ParsedConfig, SchemaErrors> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let config: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let path = if path == "." { String::new() } else { format!(".{path}") };
        SchemaErrors(vec![SchemaError {
            path,
            message: e.into_inner().to_string(),
        }])
    })?;
    let errors = config.range_errors();
    if !errors.is_empty() {
        return Err(SchemaErrors(errors));
    }
    let spec = config.build_spec().map_err(|e| SchemaErrors(vec![e]))?;
    let mut warnings = spec.warnings().to_vec();
    let hint = spec.stability_hint();
    if config.integrator.step > hint {
        warnings.push(format!(
            "step {} exceeds the stability hint {hint} of the explicit scheme",
            config.integrator.step
        ));
    }
    Ok(ParsedConfig { config, warnings })
}

fn at(path: &'static str) -> impl Fn(dynlab::Error) -> SchemaError {
    move |e| SchemaError {
        path: path.into(),
        message: e.to_string(),
    }
}

struct Checker(Vec<SchemaError>);

impl Checker {
    fn require(&mut self, ok: bool, path: impl Into<String>, message: impl Into<String>) {
        if !ok {
            self.0.push(SchemaError {
                path: path.into(),
                message: message.into(),
            });
        }
    }

    fn positive(&mut self, x: f64, path: &str) {
        self.require(
            x.is_finite() && x > 0.0,
            path,
            format!("must be positive and finite, got {x}"),
        );
    }

    fn finite(&mut self, x: f64, path: &str) {
        self.require(x.is_finite(), path, format!("must be finite, got {x}"));
    }

    fn schedule(&mut self, s: &ScheduleConfig, path: &str) {
        self.positive(s.coefficient(), &format!("{path}.c"));
        match *s {
            ScheduleConfig::Power { r, .. } | ScheduleConfig::PowerLog { r, .. } => {
                self.finite(r, &format!("{path}.r"))
            }
            ScheduleConfig::Exponential { a, .. } => self.finite(a, &format!("{path}.a")),
            ScheduleConfig::Constant { .. } => {}
        }
        if let Some(t) = s.start() {
            self.finite(t, &format!("{path}.start"));
        }
    }

    fn vector(&mut self, v: &[f64], dim: usize, path: &str) {
        self.require(
            v.len() == dim,
            path,
            format!("must have {dim} entries, got {}", v.len()),
        );
        for (i, &x) in v.iter().enumerate() {
            self.finite(x, &format!("{path}[{i}]"));
        }
    }
}

impl ExperimentConfig {
    fn range_errors(&self) -> Vec<SchemaError> {
        let mut c = Checker(vec![]);
        match &self.problem {
            ProblemConfig::Quadratic { spectrum, minimizer }
            | ProblemConfig::QuadraticGradient { spectrum, minimizer } => {
                c.require(!spectrum.is_empty(), ".problem.spectrum", "must not be empty");
                for (i, &x) in spectrum.iter().enumerate() {
                    c.positive(x, &format!(".problem.spectrum[{i}]"));
                }
                if let Some(m) = minimizer {
                    c.vector(m, spectrum.len(), ".problem.minimizer");
                }
            }
            ProblemConfig::Rotation {} => {}
            ProblemConfig::BilinearSaddle { coupling } => {
                let cols = coupling.first().map_or(0, Vec::len);
                c.require(cols > 0, ".problem.coupling", "must be a nonempty matrix");
                for (i, row) in coupling.iter().enumerate() {
                    c.vector(row, cols, &format!(".problem.coupling[{i}]"));
                }
            }
        }
        let operator_problem = matches!(
            self.problem,
            ProblemConfig::QuadraticGradient { .. }
                | ProblemConfig::Rotation { .. }
                | ProblemConfig::BilinearSaddle { .. }
        );
        c.require(
            operator_problem == self.system.is_operator(),
            ".system.variant",
            if operator_problem {
                "operator problems need shbfop_alt or sfogda_alt"
            } else {
                "objective problems need shbf or savd"
            },
        );
        match &self.system {
            SystemConfig::Shbf { lambda, b } => {
                c.positive(*lambda, ".system.lambda");
                c.schedule(b, ".system.b");
            }
            SystemConfig::Savd { alpha } => c.positive(*alpha, ".system.alpha"),
            SystemConfig::ShbfopAlt { lambda, mu, gamma } => {
                c.positive(*lambda, ".system.lambda");
                c.schedule(mu, ".system.mu");
                if let Some(g) = gamma {
                    c.schedule(g, ".system.gamma");
                }
            }
            SystemConfig::SfogdaAlt { alpha, beta } => {
                c.positive(*alpha, ".system.alpha");
                c.positive(*beta, ".system.beta");
            }
        }
        c.finite(self.start, ".start");
        c.positive(self.horizon, ".horizon");
        let dim = self.problem.dim();
        if let Some(init) = &self.initial {
            c.vector(&init.position, dim, ".initial.position");
            if let Some(v) = &init.velocity {
                c.vector(v, dim, ".initial.velocity");
            }
        }
        if let Some(d) = &self.diffusion {
            if let Some(m) = &d.multiplier {
                c.schedule(m, ".diffusion.multiplier");
            }
            if let Some(op) = &d.operator {
                c.require(
                    op.len() == dim,
                    ".diffusion.operator",
                    format!("must have {dim} rows, got {}", op.len()),
                );
                for (i, row) in op.iter().enumerate() {
                    c.vector(row, dim, &format!(".diffusion.operator[{i}]"));
                }
            }
        }
        c.positive(self.integrator.step, ".integrator.step");
        if self.horizon > 0.0 {
            c.require(
                self.integrator.step <= self.horizon,
                ".integrator.step",
                "must not exceed the horizon",
            );
        }
        c.require(
            self.integrator.record_every >= 1,
            ".integrator.record_every",
            "must be at least 1",
        );
        if let Some(e) = &self.ensemble {
            c.require(e.n_paths >= 1, ".ensemble.n_paths", "must be at least 1");
            if let Some(t) = e.threads {
                c.require(t <= 1024, ".ensemble.threads", "must be at most 1024");
            }
        }
        for (i, f) in self.fits.iter().enumerate() {
            let path = format!(".fits[{i}]");
            c.finite(f.target, &format!("{path}.target"));
            c.require(
                f.tolerance.is_finite() && f.tolerance >= 0.0,
                format!("{path}.tolerance"),
                "must be nonnegative",
            );
            if let Some([lo, hi]) = f.window {
                c.require(
                    lo > 0.0 && lo < hi && hi.is_finite(),
                    format!("{path}.window"),
                    "must satisfy 0 < lo < hi",
                );
            }
            c.require(
                f.metric != Metric::Suboptimality || !self.system.is_operator(),
                format!("{path}.metric"),
                "suboptimality needs an objective problem",
            );
        }
        if let Some(e) = &self.equivalence {
            c.finite(e.t0, ".equivalence.t0");
            c.require(e.t0 >= 0.0, ".equivalence.t0", "must be nonnegative");
            c.require(
                (1..=12).contains(&e.levels),
                ".equivalence.levels",
                "must be between 1 and 12",
            );
            if let Some(tol) = e.position_tolerance {
                c.positive(tol, ".equivalence.position_tolerance");
            }
            if let Some(s) = e.min_slope {
                c.finite(s, ".equivalence.min_slope");
            }
            c.require(
                matches!(self.system, SystemConfig::Savd { .. } | SystemConfig::SfogdaAlt { .. }),
                ".system.variant",
                "the equivalence check starts from savd or sfogda_alt",
            );
        }
        c.0
    }

    pub fn span(&self) -> dynlab::Result<TimeSpan<f64>> {
        TimeSpan::new(self.start, self.horizon)
    }

    pub fn build_problem(&self) -> Result<Problem<f64>, SchemaError> {
        let at = |e: dynlab::Error| SchemaError {
            path: ".problem".into(),
            message: e.to_string(),
        };
        let quad = |spectrum: &[f64], minimizer: &Option<Vec<f64>>| -> Result<ObjectiveProblem64, SchemaError> {
            let m = match minimizer {
                Some(m) => VectorState::from_f64(m).map_err(at)?,
                None => VectorState::zeros(spectrum.len()),
            };
            make_quadratic(spectrum, m).map_err(at)
        };
        Ok(match &self.problem {
            ProblemConfig::Quadratic { spectrum, minimizer } => Problem::Objective(quad(spectrum, minimizer)?),
            ProblemConfig::QuadraticGradient { spectrum, minimizer } => {
                Problem::Monotone(gradient_as_operator(&quad(spectrum, minimizer)?))
            }
            ProblemConfig::Rotation {} => Problem::Monotone(make_rotation()),
            ProblemConfig::BilinearSaddle { coupling } => {
                Problem::Monotone(make_bilinear_saddle(coupling).map_err(at)?)
            }
        })
    }

    pub fn build_diffusion(&self) -> Result<DiffusionSchedule64, SchemaError> {
        let dim = self.problem.dim();
        let Some(d) = &self.diffusion else {
            return Ok(DiffusionSchedule::zero(dim));
        };
        let multiplier = d
            .multiplier
            .map(|m| m.build(self.start))
            .transpose()
            .map_err(at(".diffusion.multiplier"))?;
        match (&d.operator, multiplier) {
            (Some(op), m) => DiffusionSchedule::with_operator(m, op).map_err(at(".diffusion.operator")),
            (None, Some(m)) => Ok(DiffusionSchedule::scalar(m, dim)),
            (None, None) => Ok(DiffusionSchedule::zero(dim)),
        }
    }

    pub fn build_initial(&self) -> Result<InitialState<f64>, SchemaError> {
        let dim = self.problem.dim();
        let at = |e: dynlab::Error| SchemaError {
            path: ".initial".into(),
            message: e.to_string(),
        };
        let (position, velocity) = match &self.initial {
            Some(init) => (
                init.position.clone(),
                init.velocity.clone().unwrap_or_else(|| vec![0.0; dim]),
            ),
            None => (vec![1.0; dim], vec![0.0; dim]),
        };
        InitialState::new(
            VectorState::from_f64(&position).map_err(at)?,
            VectorState::from_f64(&velocity).map_err(at)?,
        )
        .map_err(at)
    }

    /// The system the config describes. Range checks are assumed to have
    /// passed; builder rejections are reported against the system.
    pub fn build_spec(&self) -> Result<SystemSpec64, SchemaError> {
        let problem = self.build_problem()?;
        let diffusion = self.build_diffusion()?;
        let initial = self.build_initial()?;
        let span = self.span().map_err(|e| SchemaError {
            path: ".start".into(),
            message: e.to_string(),
        })?;
        let objective = |p: Problem<f64>| -> ObjectiveProblem64 {
            match p {
                Problem::Objective(p) => p,
                Problem::Monotone(_) => unreachable!("variant and problem checked together"),
            }
        };
        let monotone = |p: Problem<f64>| -> MonotoneProblem64 {
            match p {
                Problem::Monotone(p) => p,
                Problem::Objective(_) => unreachable!("variant and problem checked together"),
            }
        };
        match &self.system {
            SystemConfig::Shbf { lambda, b } => {
                let b = b.build(self.start).map_err(at(".system.b"))?;
                build_shbf(*lambda, b, diffusion, objective(problem), initial, span).map_err(at(".system"))
            }
            SystemConfig::Savd { alpha } => {
                build_savd(*alpha, diffusion, objective(problem), initial, span).map_err(at(".system"))
            }
            SystemConfig::ShbfopAlt { lambda, mu, gamma } => {
                let mu_s = mu.build(self.start).map_err(at(".system.mu"))?;
                let gamma_s = gamma.unwrap_or(*mu).build(self.start).map_err(at(".system.gamma"))?;
                build_shbfop_alt(*lambda, mu_s, gamma_s, diffusion, monotone(problem), initial, span)
                    .map_err(at(".system"))
            }
            SystemConfig::SfogdaAlt { alpha, beta } => {
                build_sfogda_alt(*alpha, *beta, diffusion, monotone(problem), initial, span).map_err(at(".system"))
            }
        }
    }
}
