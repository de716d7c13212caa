//! Discrete-event simulation of parallel workers training against
//! learning-curve benchmarks.

mod benchmark;
mod engine;
mod tabular;
mod trace;

pub use benchmark::{Benchmark, BenchmarkError, EpochResult, SyntheticBenchmark, SyntheticParams};
pub use engine::{run_simulation, SimError, SimulationConfig};
pub use tabular::{load_tabular, sidecar_path, LookupRule, Sidecar, TabularBenchmark, TabularError};
pub use trace::{regret_series, step_value, EventKind, EventTrace, TraceEvent, TraceParseError};
