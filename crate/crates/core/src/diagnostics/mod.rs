//! Metrics, Lyapunov energies, rate fits, Monte Carlo ensembles and the
//! zero-mean check of the noise integral.

mod energy;
mod ensemble;
mod fit;
mod martingale;
mod metrics;

pub use energy::{energy_series, energy_shbf, energy_shbfop, scaled_phi};
pub use ensemble::{run_ensemble, threads_from_env, EnsembleOptions, EnsembleStats, MetricStats};
pub use fit::{default_window, fit_rate, RateFit, CLIP_FLOOR};
pub use martingale::{martingale_mean_check, MartingaleReport};
pub use metrics::{compute_metrics, Metric, MetricSeries};
