use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use dynlab::{
    check_equivalence, compute_metrics, default_window, fit_rate, integrate_em_seeded, integrate_rk4, make_time_map,
    run_ensemble, sample_brownian, threads_from_env, validate_operator_assumptions, validate_shbf_assumption,
    verify_problem, EnsembleOptions, EquivalenceCriteria, MapKind, Metric, RateFit, SystemKind, SystemSpec64, TimeGrid,
};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{ExperimentConfig, FitConfig, MethodConfig, ParsedConfig, SchemaError, SchemaErrors, SystemConfig};

pub const FAILED_MARKER: &str = ".failed";
/// Pairs sampled by `validate` when checking the problem's structure.
pub const VERIFY_SAMPLES: usize = 10_000;
pub const VERIFY_RADIUS: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Validate,
    Simulate,
    Ensemble,
    Rates,
    Equivalence,
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] SchemaErrors),
    #[error("{0}")]
    Core(#[from] dynlab::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl From<SchemaError> for RunError {
    fn from(e: SchemaError) -> Self {
        RunError::Config(SchemaErrors(vec![e]))
    }
}

/// What a finished command left behind.
#[derive(Clone, Debug, Default)]
pub struct RunOutcome {
    /// Conjunction of every verdict written; `true` when none was.
    pub pass: bool,
    pub artifacts: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

struct Out<'a> {
    dir: &'a Path,
    outcome: RunOutcome,
}

impl Out<'_> {
    fn write(&mut self, name: &str, f: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>) -> Result<(), RunError> {
        let path = self.dir.join(name);
        let io_err = |source| RunError::Io {
            path: path.clone(),
            source,
        };
        let mut w = BufWriter::new(File::create(&path).map_err(io_err)?);
        f(&mut w).and_then(|_| w.flush()).map_err(io_err)?;
        self.outcome.artifacts.push(path);
        Ok(())
    }

    fn json<S: Serialize>(&mut self, name: &str, value: &S) -> Result<(), RunError> {
        self.write(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            writeln!(w)
        })
    }
}

/// Runs `command` and writes its artifacts into `out_dir`. Any error leaves
/// the artifacts written so far in place next to a `.failed` marker holding
/// the message.
pub fn run_experiment(
    command: Command,
    parsed: &ParsedConfig,
    out_dir: &Path,
    seed_offset: u64,
) -> Result<RunOutcome, RunError> {
    let io_err = |source| RunError::Io {
        path: out_dir.to_path_buf(),
        source,
    };
    fs::create_dir_all(out_dir).map_err(io_err)?;
    let marker = out_dir.join(FAILED_MARKER);
    if marker.exists() {
        fs::remove_file(&marker).map_err(io_err)?;
    }
    let mut out = Out {
        dir: out_dir,
        outcome: RunOutcome {
            pass: true,
            artifacts: vec![],
            warnings: parsed.warnings.clone(),
        },
    };
    let seed = parsed.config.seed.wrapping_add(seed_offset);
    let result = match command {
        Command::Validate => validate(&parsed.config, &parsed.warnings, seed, &mut out),
        Command::Simulate => simulate(&parsed.config, seed, &mut out),
        Command::Ensemble => ensemble(&parsed.config, seed, &mut out),
        Command::Rates => rates(&parsed.config, &mut out),
        Command::Equivalence => equivalence(&parsed.config, seed, &mut out),
    };
    match result {
        Ok(()) => Ok(out.outcome),
        Err(e) => {
            fs::write(&marker, format!("{e}\n")).map_err(io_err)?;
            Err(e)
        }
    }
}

fn validate(config: &ExperimentConfig, warnings: &[String], seed: u64, out: &mut Out) -> Result<(), RunError> {
    let spec = config.build_spec()?;
    let problem = verify_problem(spec.problem(), VERIFY_SAMPLES, VERIFY_RADIUS, seed)?;
    let assumption = match &config.system {
        SystemConfig::Savd { alpha } => match make_time_map(MapKind::Opt, *alpha, 0.0, config.start) {
            Ok(map) => {
                let b = map.b_image()?;
                let mut v = serde_json::to_value(validate_shbf_assumption(map.lambda_image(), &b))?;
                v["checked_on"] = json!("constant_friction_image");
                v
            }
            Err(e) => json!({ "checked_on": "constant_friction_image", "diagnostic": e.to_string(), "pass": false }),
        },
        SystemConfig::SfogdaAlt { alpha, beta } => match make_time_map(MapKind::Op, *alpha, 0.0, config.start) {
            Ok(map) => {
                let mu = map.mu_image(*beta)?;
                let mut v = serde_json::to_value(validate_operator_assumptions(map.lambda_image(), &mu, &mu))?;
                v["checked_on"] = json!("constant_friction_image");
                v
            }
            Err(e) => json!({ "checked_on": "constant_friction_image", "diagnostic": e.to_string(), "pass": false }),
        },
        _ => match spec.kind() {
            SystemKind::Shbf { lambda, b } => {
                let mut v = serde_json::to_value(validate_shbf_assumption(*lambda, b))?;
                v["checked_on"] = json!("system");
                v
            }
            SystemKind::ShbfopAlt { lambda, mu, gamma } => {
                let mut v = serde_json::to_value(validate_operator_assumptions(*lambda, mu, gamma))?;
                v["checked_on"] = json!("system");
                v
            }
            _ => unreachable!("vanishing-damping variants are handled above"),
        },
    };
    let pass = problem.pass && assumption["pass"] == json!(true);
    let report = json!({
        "command": "validate",
        "variant": spec.variant(),
        "stability_hint": spec.stability_hint(),
        "step": config.integrator.step,
        "warnings": warnings,
        "problem": problem,
        "assumption": assumption,
        "pass": pass,
    });
    out.json("validate.json", &report)?;
    out.outcome.pass &= pass;
    Ok(())
}

fn grid(spec: &SystemSpec64, step: f64) -> Result<TimeGrid<f64>, RunError> {
    let span = spec.span();
    Ok(TimeGrid::with_step(span.start, span.end(), step)?)
}

fn simulate(config: &ExperimentConfig, seed: u64, out: &mut Out) -> Result<(), RunError> {
    let spec = config.build_spec()?;
    let grid = grid(&spec, config.integrator.step)?;
    let traj = match config.integrator.method {
        MethodConfig::Em => integrate_em_seeded(&spec, &grid, seed, config.integrator.record_every)?,
        MethodConfig::Rk4 => {
            if !spec.is_deterministic() {
                return Err(SchemaError {
                    path: ".integrator.method".into(),
                    message: "rk4 needs a noise-free system".into(),
                }
                .into());
            }
            if config.integrator.record_every != 1 {
                return Err(SchemaError {
                    path: ".integrator.record_every".into(),
                    message: "rk4 records every step".into(),
                }
                .into());
            }
            integrate_rk4(&spec, &grid)?
        }
    };
    out.outcome.warnings.extend(traj.warnings().iter().cloned());
    let metrics = compute_metrics(&traj, spec.problem())?;
    out.write("trajectory.csv", |w| traj.write_csv(w))?;
    out.write("metrics.csv", |w| metrics.write_csv(w))?;
    Ok(())
}

fn require_fits(config: &ExperimentConfig) -> Result<(), RunError> {
    if config.fits.is_empty() {
        return Err(SchemaError {
            path: ".fits".into(),
            message: "this command needs at least one fit".into(),
        }
        .into());
    }
    Ok(())
}

fn fit(f: &FitConfig, times: &[f64], values: &[f64], end: f64) -> Result<RateFit, RunError> {
    Ok(fit_rate(
        f.metric,
        times,
        values,
        f.window.unwrap_or_else(|| default_window(end)),
        f.target,
        f.tolerance,
    )?)
}

#[derive(Serialize)]
struct EnsembleSummary<'a> {
    n_paths: usize,
    seeds: [u64; 2],
    diverged: Vec<u64>,
    fits: &'a [RateFit],
    pass: bool,
}

fn ensemble(config: &ExperimentConfig, seed: u64, out: &mut Out) -> Result<(), RunError> {
    let Some(e) = &config.ensemble else {
        return Err(SchemaError {
            path: ".ensemble".into(),
            message: "the ensemble command needs this section".into(),
        }
        .into());
    };
    require_fits(config)?;
    let spec = config.build_spec()?;
    let mut options =
        EnsembleOptions::new(e.n_paths, seed, config.integrator.step).record_every(config.integrator.record_every);
    options.threads = e.threads.unwrap_or_else(threads_from_env);
    let stats = run_ensemble(&spec, &options)?;
    out.write("ensemble.csv", |w| stats.write_csv(w))?;
    let end = spec.span().end();
    let fits = config
        .fits
        .iter()
        .map(|f| fit(f, &stats.times, &stats.try_get(f.metric)?.mean, end))
        .collect::<Result<Vec<_>, _>>()?;
    let pass = fits.iter().all(|f| f.pass);
    let summary = EnsembleSummary {
        n_paths: stats.n_paths(),
        seeds: [seed, seed.wrapping_add(e.n_paths as u64 - 1)],
        diverged: stats.diverged.iter().map(|d| d.seed).collect(),
        fits: &fits,
        pass,
    };
    out.json("ratefit.json", &summary)?;
    out.outcome.pass &= pass;
    Ok(())
}

/// Columns of a CSV file keyed by header name.
fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<csv::StringRecord>), RunError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| RunError::Input(format!("{}: {e}", path.display())))?;
    let header = reader
        .headers()
        .map_err(|e| RunError::Input(format!("{}: {e}", path.display())))?
        .iter()
        .map(str::to_string)
        .collect();
    let rows = reader
        .records()
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| RunError::Input(format!("{}: {e}", path.display())))?;
    Ok((header, rows))
}

fn number(field: &str, path: &Path) -> Result<f64, RunError> {
    field
        .parse()
        .map_err(|_| RunError::Input(format!("{}: not a number: {field:?}", path.display())))
}

fn column(header: &[String], name: &str, path: &Path) -> Result<usize, RunError> {
    header
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| RunError::Input(format!("{}: no column {name:?}", path.display())))
}

/// `(t, value)` series of `metric` from a `metrics.csv` file.
fn path_series(path: &Path, metric: Metric) -> Result<(Vec<f64>, Vec<f64>), RunError> {
    let (header, rows) = read_csv(path)?;
    let (ti, mi) = (column(&header, "t", path)?, column(&header, metric.name(), path)?);
    let mut t = Vec::with_capacity(rows.len());
    let mut v = Vec::with_capacity(rows.len());
    for r in &rows {
        t.push(number(&r[ti], path)?);
        v.push(number(&r[mi], path)?);
    }
    Ok((t, v))
}

/// `(t, mean)` series of `metric` from an `ensemble.csv` file.
fn mean_series(path: &Path, metric: Metric) -> Result<(Vec<f64>, Vec<f64>), RunError> {
    let (header, rows) = read_csv(path)?;
    let (ti, ki, mi) = (
        column(&header, "t", path)?,
        column(&header, "metric", path)?,
        column(&header, "mean", path)?,
    );
    let mut t = vec![];
    let mut v = vec![];
    for r in rows.iter().filter(|r| &r[ki] == metric.name()) {
        t.push(number(&r[ti], path)?);
        v.push(number(&r[mi], path)?);
    }
    if t.is_empty() {
        return Err(RunError::Input(format!("{}: no rows for {metric}", path.display())));
    }
    Ok((t, v))
}

type SeriesReader = fn(&Path, Metric) -> Result<(Vec<f64>, Vec<f64>), RunError>;

#[derive(Serialize)]
struct SourcedFit {
    source: &'static str,
    #[serde(flatten)]
    fit: RateFit,
}

fn rates(config: &ExperimentConfig, out: &mut Out) -> Result<(), RunError> {
    require_fits(config)?;
    let end = config.start + config.horizon;
    let sources: [(&'static str, SeriesReader); 2] = [("metrics.csv", path_series), ("ensemble.csv", mean_series)];
    let mut fits = vec![];
    for (name, read) in sources {
        let path = out.dir.join(name);
        if !path.exists() {
            continue;
        }
        for f in &config.fits {
            let (t, v) = read(&path, f.metric)?;
            fits.push(SourcedFit {
                source: name,
                fit: fit(f, &t, &v, end)?,
            });
        }
    }
    if fits.is_empty() {
        return Err(RunError::Input(format!(
            "no metrics.csv or ensemble.csv in {}; run simulate or ensemble first",
            out.dir.display()
        )));
    }
    let pass = fits.iter().all(|f| f.fit.pass);
    out.json("rates.json", &json!({ "fits": fits, "pass": pass }))?;
    out.outcome.pass &= pass;
    Ok(())
}

fn equivalence(config: &ExperimentConfig, seed: u64, out: &mut Out) -> Result<(), RunError> {
    let Some(eq) = &config.equivalence else {
        return Err(SchemaError {
            path: ".equivalence".into(),
            message: "the equivalence command needs this section".into(),
        }
        .into());
    };
    let spec_s = config.build_spec()?;
    let (kind, alpha) = match &config.system {
        SystemConfig::Savd { alpha } => (MapKind::Opt, *alpha),
        SystemConfig::SfogdaAlt { alpha, .. } => (MapKind::Op, *alpha),
        _ => unreachable!("checked with the schema"),
    };
    let map = make_time_map(kind, alpha, eq.t0, config.start)?;
    let spec_t = map.image_spec(&spec_s)?;
    let block = 1usize << (eq.levels - 1);
    let n = ((config.horizon / config.integrator.step).round() as usize)
        .max(1)
        .div_ceil(block)
        * block;
    let path = sample_brownian(
        seed,
        &TimeGrid::uniform(config.start, config.start + config.horizon, n)?,
        spec_s.dim(),
    )?;
    let method = eq.method.unwrap_or(if spec_s.is_deterministic() {
        MethodConfig::Rk4
    } else {
        MethodConfig::Em
    });
    let defaults = EquivalenceCriteria::default();
    let criteria = EquivalenceCriteria {
        position_tolerance: eq.position_tolerance.unwrap_or(defaults.position_tolerance),
        min_slope: eq.min_slope.unwrap_or(defaults.min_slope),
    };
    let report = check_equivalence(&spec_t, &spec_s, &map, &path, method.into(), eq.levels, criteria)?;
    out.json("equivalence.json", &report)?;
    out.write("equivalence.csv", |w| report.write_csv(w))?;
    out.outcome.pass &= report.pass;
    Ok(())
}

/// Whether every `"pass"` entry anywhere in a JSON document is `true`.
pub fn all_verdicts_pass(doc: &Value) -> bool {
    match doc {
        Value::Object(map) => map.iter().all(|(k, v)| {
            if k == "pass" {
                v == &Value::Bool(true)
            } else {
                all_verdicts_pass(v)
            }
        }),
        Value::Array(items) => items.iter().all(all_verdicts_pass),
        _ => true,
    }
}
