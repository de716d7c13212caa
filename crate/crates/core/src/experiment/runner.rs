use super::config::{ExperimentConfig, MethodPlan};
use super::ExperimentError;
use crate::scheduler::build_scheduler;
use crate::searcher::Searcher;
use crate::sim::{regret_series, run_simulation, step_value, Benchmark, EventTrace};

pub const GRID_POINTS: usize = 256;

#[derive(Clone, Debug, PartialEq)]
pub struct SeedTrace {
    pub seed: u64,
    pub trace: EventTrace,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AggregateResult {
    pub method: String,
    pub grid: Vec<f64>,
    pub mean_regret: Vec<f64>,
    pub stderr: Vec<f64>,
    /// Regret of each seed on the grid.
    pub per_seed: Vec<(u64, Vec<f64>)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentResult {
    /// Traces per method, in config order.
    pub traces: Vec<(String, Vec<SeedTrace>)>,
    /// Best metric over all methods, seeds and times.
    pub y_star: Option<f64>,
    pub aggregates: Vec<AggregateResult>,
}

/// Runs one simulation.
pub fn run_method_seed(
    cfg: &ExperimentConfig,
    plan: &MethodPlan,
    bench: &dyn Benchmark,
    seed: u64,
) -> Result<EventTrace, ExperimentError> {
    let geometry = cfg.geometry.build(plan.single_rung)?;
    let mut scheduler = build_scheduler(plan.scheduler, geometry.clone());
    let mut searcher = Searcher::new(plan.searcher, cfg.searcher.clone(), bench.space().clone(), geometry);
    run_simulation(&cfg.simulation_config(seed), bench, scheduler.as_mut(), &mut searcher).map_err(|source| {
        ExperimentError::Seed { method: plan.name.clone(), seed, source: Box::new(source), partial: None }
    })
}

/// One simulation per (method, seed), then pooled regret aggregation. On a
/// failing seed the error carries the results gathered so far.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult, ExperimentError> {
    let bench = cfg.validate()?;
    let plans = cfg.plans()?;
    let seeds = cfg.seeds()?;
    let mut traces: Vec<(String, Vec<SeedTrace>)> = Vec::new();
    for plan in &plans {
        traces.push((plan.name.clone(), Vec::new()));
        for &seed in &seeds {
            log::info!("running {} seed {seed}", plan.name);
            match run_method_seed(cfg, plan, bench.as_dyn(), seed) {
                Ok(trace) => traces.last_mut().expect("pushed").1.push(SeedTrace { seed, trace }),
                Err(ExperimentError::Seed { method, seed, source, .. }) => {
                    let partial = aggregate(traces);
                    return Err(ExperimentError::Seed { method, seed, source, partial: Some(Box::new(partial)) });
                }
                Err(e) => return Err(e),
            }
        }
    }
    Ok(aggregate(traces))
}

/// Pooled `y_star` over every trace.
pub fn pooled_y_star<'a>(traces: impl IntoIterator<Item = &'a EventTrace>) -> Option<f64> {
    traces.into_iter().filter_map(EventTrace::best_metric).reduce(f64::min)
}

/// `n` log-spaced points from `lo` to `hi` (a single point if `hi <= lo`).
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 0 {
        return Vec::new();
    }
    if hi <= lo || n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| match i {
            0 => lo,
            _ if i == n - 1 => hi,
            _ => (a + (b - a) * i as f64 / (n - 1) as f64).exp(),
        })
        .collect()
}

/// Mean and standard error of the mean (sample standard deviation over
/// `sqrt(n)`; 0 for a single value).
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Aggregates traces on a common grid: 256 log-spaced points from the
/// latest first-incumbent time of any trace (so every seed has a value)
/// to the latest event time.
pub fn aggregate(traces: Vec<(String, Vec<SeedTrace>)>) -> ExperimentResult {
    let all = || traces.iter().flat_map(|(_, ts)| ts.iter().map(|s| &s.trace));
    let y_star = pooled_y_star(all());
    let lo = all().filter_map(|t| t.incumbent.first().map(|&(t, _)| t)).reduce(f64::max);
    let hi = all().filter_map(EventTrace::last_time).reduce(f64::max);
    let grid = match (y_star, lo, hi) {
        (Some(_), Some(lo), Some(hi)) if all().all(|t| !t.incumbent.is_empty()) => {
            // a zero start time cannot be log-spaced
            let lo = if lo > 0.0 { lo } else { hi.min(1.0).max(f64::MIN_POSITIVE) };
            log_grid(lo, hi.max(lo), GRID_POINTS)
        }
        _ => Vec::new(),
    };
    let aggregates = traces
        .iter()
        .map(|(method, seeds)| aggregate_method(method, seeds, &grid, y_star.unwrap_or(0.0)))
        .collect();
    ExperimentResult { traces, y_star, aggregates }
}

fn aggregate_method(method: &str, seeds: &[SeedTrace], grid: &[f64], y_star: f64) -> AggregateResult {
    let per_seed: Vec<(u64, Vec<f64>)> = seeds
        .iter()
        .map(|s| {
            let regret = regret_series(&s.trace.incumbent, y_star);
            let first = regret.first().map_or(f64::NAN, |&(_, r)| r);
            (s.seed, grid.iter().map(|&t| step_value(&regret, t).unwrap_or(first)).collect())
        })
        .collect();
    let (mut mean_regret, mut stderr) = (Vec::new(), Vec::new());
    if !per_seed.is_empty() {
        for i in 0..grid.len() {
            let column: Vec<f64> = per_seed.iter().map(|(_, v)| v[i]).collect();
            let (m, s) = mean_stderr(&column);
            mean_regret.push(m);
            stderr.push(s);
        }
    }
    AggregateResult { method: method.to_string(), grid: grid.to_vec(), mean_regret, stderr, per_seed }
}
