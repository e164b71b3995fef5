//! Simulation and counting statistics for an asynchronous heralded
//! single-photon source characterized on a gated Hanbury-Brown & Twiss bench.
//!
//! * [`model`] holds the domain types and the closed-form source relations
//!   (heralding rate, multi-photon probability, figure of merit).
//! * [`simulator`] draws per-trigger detection records, including the
//!   gate-out dead-time discarding, and [`raw`] stores them on disk.
//! * [`estimator`] turns counts into P(1), P(2) and g2(0) with dark counts
//!   removed and Poisson error bars.
//! * [`histogram`] builds the start/stop trigger-separation histogram and
//!   fits its geometric law.
//! * [`sweep`] runs pump or attenuation sweeps and checks linearity.
//!
//! The Monte Carlo and counting loops run on rayon when the `parallel`
//! feature is on (the default). Output is identical either way.

pub mod config;
pub mod error;
pub mod estimator;
pub mod exec;
pub mod histogram;
pub mod model;
pub mod raw;
pub mod record;
pub mod simulator;
pub mod sweep;

pub use config::BenchConfig;
pub use error::{Error, Result};
pub use estimator::{
    accumulate_counts, analyze, forward_probabilities, g2, g2_from_stats, measured_rates,
    net_rates, solve_statistics, AnalysisReport, Arms, CountTotals, MeasuredRates,
};
pub use exec::Execution;
pub use histogram::{build_histogram, fit_c, normalize, theoretical_m, Histogram};
pub use model::{
    figure_of_merit, figure_of_merit_physical, heralding_rate, multi_photon_prob, DetectorConfig,
    FigureOfMerit, PhotonStatistics, SourceConfig,
};
pub use raw::{read_raw, write_raw};
pub use record::{Clicks, RecordSet, TriggerRecord};
pub use simulator::{simulate_run, simulate_run_with, RunOptions, Simulation, SimulationSummary};
