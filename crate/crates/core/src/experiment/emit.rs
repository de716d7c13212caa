//! Result files:
//!
//! ```text
//! <out>/manifest.json                      resolved config (space inlined), version, seeds, y_star
//! <out>/<method>.csv                       time,mean_regret,stderr
//! <out>/traces/<method>/seed_<k>.jsonl     raw events
//! <out>/traces/<method>/seed_<k>.csv       time,incumbent,regret
//! ```

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::ExperimentConfig;
use super::runner::{aggregate, AggregateResult, ExperimentResult, SeedTrace};
use super::ExperimentError;
use crate::sim::EventTrace;

#[derive(Serialize)]
struct Manifest<'a> {
    version: &'static str,
    config: ExperimentConfig,
    methods: Vec<&'a str>,
    seeds: Vec<u64>,
    y_star: Option<f64>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ExperimentError + '_ {
    move |source| ExperimentError::Io { path: path.to_path_buf(), source }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> ExperimentError + '_ {
    move |e| ExperimentError::Io { path: path.to_path_buf(), source: std::io::Error::other(e) }
}

fn create(path: &Path) -> Result<BufWriter<File>, ExperimentError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    File::create(path).map(BufWriter::new).map_err(io_err(path))
}

pub fn trace_dir(out: &Path, method: &str) -> PathBuf {
    out.join("traces").join(method)
}

pub fn write_aggregate_csv(path: &Path, agg: &AggregateResult) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["time", "mean_regret", "stderr"]).map_err(csv_err(path))?;
    for ((t, m), s) in agg.grid.iter().zip(&agg.mean_regret).zip(&agg.stderr) {
        w.write_record([t.to_string(), m.to_string(), s.to_string()]).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

fn write_trace(out: &Path, method: &str, st: &SeedTrace, y_star: f64) -> Result<(), ExperimentError> {
    let dir = trace_dir(out, method);
    let jsonl = dir.join(format!("seed_{}.jsonl", st.seed));
    let mut w = create(&jsonl)?;
    st.trace.write_jsonl(&mut w).map_err(io_err(&jsonl))?;
    w.flush().map_err(io_err(&jsonl))?;
    let csv_path = dir.join(format!("seed_{}.csv", st.seed));
    st.trace.write_series_csv(create(&csv_path)?, y_star).map_err(csv_err(&csv_path))
}

fn write_aggregates(out: &Path, result: &ExperimentResult) -> Result<(), ExperimentError> {
    for agg in &result.aggregates {
        write_aggregate_csv(&out.join(format!("{}.csv", agg.method)), agg)?;
    }
    Ok(())
}

/// Writes every result file under `out`.
pub fn emit_results(result: &ExperimentResult, cfg: &ExperimentConfig, out: &Path) -> Result<(), ExperimentError> {
    fs::create_dir_all(out).map_err(io_err(out))?;
    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION"),
        config: cfg.resolved()?,
        methods: result.traces.iter().map(|(m, _)| m.as_str()).collect(),
        seeds: cfg.seeds()?,
        y_star: result.y_star,
    };
    let path = out.join("manifest.json");
    let mut w = create(&path)?;
    serde_json::to_writer_pretty(&mut w, &manifest).map_err(|e| ExperimentError::Io {
        path: path.clone(),
        source: e.into(),
    })?;
    w.write_all(b"\n").and_then(|_| w.flush()).map_err(io_err(&path))?;
    let y_star = result.y_star.unwrap_or(0.0);
    for (method, seeds) in &result.traces {
        for st in seeds {
            write_trace(out, method, st, y_star)?;
        }
    }
    write_aggregates(out, result)
}

fn seed_of(path: &Path) -> Option<u64> {
    let stem = path.file_stem()?.to_str()?;
    stem.strip_prefix("seed_")?.parse().ok()
}

/// Reads `<traces>/<method>/seed_<k>.jsonl` files (methods and seeds in
/// sorted order).
pub fn read_traces(traces: &Path) -> Result<Vec<(String, Vec<SeedTrace>)>, ExperimentError> {
    let mut methods: Vec<PathBuf> = fs::read_dir(traces)
        .map_err(io_err(traces))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    methods.sort();
    let mut out = Vec::new();
    for dir in methods {
        let name = dir.file_name().and_then(|n| n.to_str()).unwrap_or_default().to_string();
        let mut files: Vec<(u64, PathBuf)> = fs::read_dir(&dir)
            .map_err(io_err(&dir))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
            .filter_map(|p| seed_of(&p).map(|s| (s, p)))
            .collect();
        files.sort();
        let mut seeds = Vec::new();
        for (seed, path) in files {
            let file = File::open(&path).map_err(io_err(&path))?;
            let trace = EventTrace::read_jsonl(BufReader::new(file))
                .map_err(|e| ExperimentError::Config(format!("{}: {e}", path.display())))?;
            seeds.push(SeedTrace { seed, trace });
        }
        if !seeds.is_empty() {
            out.push((name, seeds));
        }
    }
    if out.is_empty() {
        return Err(ExperimentError::Config(format!("no traces found under {}", traces.display())));
    }
    Ok(out)
}

/// Re-aggregates saved traces and rewrites the per-method CSVs in `out`.
pub fn aggregate_traces(traces: &Path, out: &Path) -> Result<ExperimentResult, ExperimentError> {
    let result = aggregate(read_traces(traces)?);
    write_aggregates(out, &result)?;
    Ok(result)
}
