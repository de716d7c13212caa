//! Seed-replicated experiments over the method roster, pooled-regret
//! aggregation and result files.

mod config;
mod emit;
mod runner;

use std::path::PathBuf;

pub use config::{
    parse_seeds, BenchmarkSpec, BuiltBenchmark, ExperimentConfig, GeometryConfig, MethodName, MethodPlan,
    MethodSpec, SeedSpec, SimulationOptions, SpaceSource,
};
pub use emit::{aggregate_traces, emit_results, read_traces, trace_dir, write_aggregate_csv};
pub use runner::{
    aggregate, log_grid, mean_stderr, pooled_y_star, run_experiment, run_method_seed, AggregateResult,
    ExperimentResult, SeedTrace, GRID_POINTS,
};

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("method {method}, seed {seed}: {source}")]
    Seed {
        method: String,
        seed: u64,
        source: Box<crate::sim::SimError>,
        /// Results of the runs that finished before the failure.
        partial: Option<Box<ExperimentResult>>,
    },
}
