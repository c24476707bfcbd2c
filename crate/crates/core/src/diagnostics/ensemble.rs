use std::io::{self, Write};

use rayon::prelude::*;

use super::metrics::{compute_metrics, Metric, MetricSeries};
use crate::dynamics::SystemSpec;
use crate::error::{Error, Result};
use crate::format::g17;
use crate::scalar::Scalar;
use crate::sde::{integrate_em_seeded, TimeGrid};

/// Environment variable capping ensemble parallelism (0 or unset = all cores).
pub const THREADS_ENV: &str = "DYNLAB_THREADS";

pub fn threads_from_env() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleOptions<T> {
    pub n_paths: usize,
    pub base_seed: u64,
    pub step: T,
    /// Metrics are evaluated on every `record_every`-th grid point.
    pub record_every: usize,
    /// 0 uses every core.
    pub threads: usize,
}

impl<T: Scalar> EnsembleOptions<T> {
    pub fn new(n_paths: usize, base_seed: u64, step: T) -> Self {
        Self {
            n_paths,
            base_seed,
            step,
            record_every: 1,
            threads: threads_from_env(),
        }
    }

    pub fn record_every(mut self, k: usize) -> Self {
        self.record_every = k;
        self
    }
}

/// Per-time mean, standard deviation and 95% normal band of one metric.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricStats<T> {
    pub mean: Vec<T>,
    pub sd: Vec<T>,
    pub ci_lo: Vec<T>,
    pub ci_hi: Vec<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DivergedPath {
    pub seed: u64,
    pub index: usize,
    pub time: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleStats<T> {
    pub times: Vec<T>,
    /// Seeds whose paths entered the statistics, in order.
    pub seeds: Vec<u64>,
    pub diverged: Vec<DivergedPath>,
    /// False for a single path, where the band is undefined (NaN).
    pub ci_defined: bool,
    stats: Vec<(Metric, MetricStats<T>)>,
}

impl<T: Scalar> EnsembleStats<T> {
    pub fn n_paths(&self) -> usize {
        self.seeds.len()
    }

    pub fn get(&self, metric: Metric) -> Option<&MetricStats<T>> {
        self.stats.iter().find(|(m, _)| *m == metric).map(|(_, s)| s)
    }

    pub fn try_get(&self, metric: Metric) -> Result<&MetricStats<T>> {
        self.get(metric)
            .ok_or_else(|| Error::InvalidInput(format!("metric {metric} is not available for this ensemble")))
    }

    pub fn metrics(&self) -> impl Iterator<Item = Metric> + '_ {
        self.stats.iter().map(|(m, _)| *m)
    }

    /// Long format `t,metric,mean,sd,ci_lo,ci_hi`, metric by metric.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "t,metric,mean,sd,ci_lo,ci_hi")?;
        for (m, s) in &self.stats {
            for (i, t) in self.times.iter().enumerate() {
                writeln!(
                    w,
                    "{},{},{},{},{},{}",
                    g17(t.as_f64()),
                    m.name(),
                    g17(s.mean[i].as_f64()),
                    g17(s.sd[i].as_f64()),
                    g17(s.ci_lo[i].as_f64()),
                    g17(s.ci_hi[i].as_f64())
                )?;
            }
        }
        Ok(())
    }
}

struct Welford<T> {
    count: usize,
    mean: Vec<T>,
    m2: Vec<T>,
}

impl<T: Scalar> Welford<T> {
    fn new(n: usize) -> Self {
        Self {
            count: 0,
            mean: vec![T::zero(); n],
            m2: vec![T::zero(); n],
        }
    }

    fn push(&mut self, xs: &[T]) {
        self.count += 1;
        let k = T::lit(self.count as f64);
        for ((m, s), &x) in self.mean.iter_mut().zip(self.m2.iter_mut()).zip(xs) {
            let delta = x - *m;
            *m = *m + delta / k;
            *s = *s + delta * (x - *m);
        }
    }

    fn finish(self) -> MetricStats<T> {
        let n = self.count;
        let z = T::lit(1.959_963_984_540_054);
        let sd: Vec<T> = if n > 1 {
            let nm1 = T::lit((n - 1) as f64);
            self.m2.iter().map(|&s| (s / nm1).max(T::zero()).sqrt()).collect()
        } else {
            vec![T::zero(); self.mean.len()]
        };
        let (ci_lo, ci_hi) = if n > 1 {
            let rn = T::lit(n as f64).sqrt();
            let half: Vec<T> = sd.iter().map(|&s| z * s / rn).collect();
            (
                self.mean.iter().zip(&half).map(|(&m, &h)| m - h).collect(),
                self.mean.iter().zip(&half).map(|(&m, &h)| m + h).collect(),
            )
        } else {
            (vec![T::nan(); self.mean.len()], vec![T::nan(); self.mean.len()])
        };
        MetricStats {
            mean: self.mean,
            sd,
            ci_lo,
            ci_hi,
        }
    }
}

fn path_metrics<T: Scalar>(
    spec: &SystemSpec<T>,
    grid: &TimeGrid<T>,
    seed: u64,
    record_every: usize,
) -> Result<MetricSeries<T>> {
    let traj = integrate_em_seeded(spec, grid, seed, record_every)?;
    compute_metrics(&traj, spec.problem())
}

/// Integrates `spec` once per seed `base_seed + k` on a shared uniform grid
/// and aggregates every metric. Results are merged in seed order, so the
/// statistics do not depend on the thread count.
pub fn run_ensemble<T: Scalar>(spec: &SystemSpec<T>, options: &EnsembleOptions<T>) -> Result<EnsembleStats<T>> {
    if options.n_paths == 0 {
        return Err(Error::InvalidInput("an ensemble needs at least one path".into()));
    }
    let span = spec.span();
    let grid = TimeGrid::with_step(span.start, span.end(), options.step)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.threads)
        .build()
        .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
    let chunk = 4 * pool.current_num_threads().max(1);

    let mut times: Option<Vec<T>> = None;
    let mut acc: Vec<(Metric, Welford<T>)> = vec![];
    let mut seeds = vec![];
    let mut diverged = vec![];
    let all: Vec<u64> = (0..options.n_paths as u64)
        .map(|k| options.base_seed.wrapping_add(k))
        .collect();
    for block in all.chunks(chunk) {
        let results: Vec<Result<MetricSeries<T>>> = pool.install(|| {
            block
                .par_iter()
                .map(|&seed| path_metrics(spec, &grid, seed, options.record_every))
                .collect()
        });
        for (&seed, result) in block.iter().zip(results) {
            match result {
                Ok(series) => {
                    if times.is_none() {
                        times = Some(series.times().to_vec());
                        acc = series.metrics().map(|m| (m, Welford::new(series.len()))).collect();
                    }
                    for (m, w) in acc.iter_mut() {
                        w.push(series.try_get(*m)?);
                    }
                    seeds.push(seed);
                }
                Err(Error::Divergence { index, time }) => diverged.push(DivergedPath { seed, index, time }),
                Err(e) => return Err(e),
            }
        }
    }
    let total = options.n_paths;
    if diverged.len() * 10 > total || seeds.is_empty() {
        return Err(Error::EnsembleFailure {
            diverged: diverged.len(),
            total,
        });
    }
    Ok(EnsembleStats {
        times: times.unwrap_or_default(),
        ci_defined: seeds.len() > 1,
        seeds,
        diverged,
        stats: acc.into_iter().map(|(m, w)| (m, w.finish())).collect(),
    })
}
