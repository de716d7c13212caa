use std::path::{Path, PathBuf};
use std::process::ExitCode;

use abohb::experiment::{
    aggregate_traces, emit_results, run_experiment, ExperimentConfig, ExperimentError, MethodSpec, SeedSpec,
};
use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

const OUT_ENV: &str = "ABOHB_OUT_DIR";

#[derive(Parser)]
#[command(name = "abohb", version, about = "Simulated asynchronous multi-fidelity HPO experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (method, seed) pair and write traces, aggregates and a manifest.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory [default: $ABOHB_OUT_DIR/<name>, else results/<name>].
        #[arg(long)]
        out: Option<PathBuf>,
        /// Seed override, e.g. `0..29`, `3` or `1,4,7`.
        #[arg(long)]
        seeds: Option<String>,
        #[arg(long)]
        workers: Option<usize>,
        /// Restrict to these methods (repeatable or comma separated).
        #[arg(long = "method", value_delimiter = ',')]
        methods: Vec<String>,
    },
    /// Parse a config and load its benchmark without running anything.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Re-aggregate saved traces into per-method CSVs.
    Aggregate {
        /// Directory holding `<method>/seed_<k>.jsonl`.
        #[arg(long)]
        traces: PathBuf,
        /// Where to write `<method>.csv` [default: parent of --traces].
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn default_out(cfg: &ExperimentConfig, config_path: &Path) -> PathBuf {
    let name = if cfg.name.is_empty() {
        config_path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "experiment".into())
    } else {
        cfg.name.clone()
    };
    let root = std::env::var_os(OUT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("results"));
    root.join(name)
}

fn select_methods(cfg: &mut ExperimentConfig, wanted: &[String]) -> Result<()> {
    if wanted.is_empty() {
        return Ok(());
    }
    let name = |m: &MethodSpec| m.plan().name;
    for w in wanted {
        if !cfg.methods.iter().any(|m| &name(m) == w) {
            bail!("method `{w}` is not in the config");
        }
    }
    cfg.methods.retain(|m| wanted.contains(&name(m)));
    Ok(())
}

fn load(path: &Path) -> Result<ExperimentConfig> {
    ExperimentConfig::from_file(path).with_context(|| format!("loading {}", path.display()))
}

fn run(config: &Path, out: Option<PathBuf>, seeds: Option<String>, workers: Option<usize>, methods: &[String]) -> Result<()> {
    let mut cfg = load(config)?;
    if let Some(s) = seeds {
        cfg.seeds = SeedSpec::Range(s);
    }
    if let Some(n) = workers {
        cfg.n_workers = n;
    }
    select_methods(&mut cfg, methods)?;
    cfg.validate()?;
    let out = out.unwrap_or_else(|| default_out(&cfg, config));
    match run_experiment(&cfg) {
        Ok(result) => {
            emit_results(&result, &cfg, &out)?;
            for agg in &result.aggregates {
                let last = agg.mean_regret.last().copied().unwrap_or(f64::NAN);
                println!("{:<18} final mean regret {last:.6}", agg.method);
            }
            println!("results written to {}", out.display());
            Ok(())
        }
        Err(ExperimentError::Seed { method, seed, source, partial }) => {
            if let Some(partial) = partial {
                emit_results(&partial, &cfg, &out)?;
                eprintln!("partial results written to {}", out.display());
            }
            bail!("method {method}, seed {seed} failed: {source}")
        }
        Err(e) => Err(e.into()),
    }
}

fn validate(config: &Path) -> Result<()> {
    let cfg = load(config)?;
    let bench = cfg.validate()?;
    let plans = cfg.plans()?;
    let seeds = cfg.seeds()?;
    println!(
        "ok: {} method(s) x {} seed(s), {} workers, budget {}s, benchmark r_max {}",
        plans.len(),
        seeds.len(),
        cfg.n_workers,
        cfg.time_budget,
        bench.as_dyn().max_resource()
    );
    Ok(())
}

fn aggregate(traces: &Path, out: Option<PathBuf>) -> Result<()> {
    let out = out.unwrap_or_else(|| traces.parent().map(Path::to_path_buf).unwrap_or_default());
    let result = aggregate_traces(traces, &out)?;
    for agg in &result.aggregates {
        println!("{:<18} {} seeds, {} grid points", agg.method, agg.per_seed.len(), agg.grid.len());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Run { config, out, seeds, workers, methods } => run(&config, out, seeds, workers, &methods),
        Command::Validate { config } => validate(&config),
        Command::Aggregate { traces, out } => aggregate(&traces, out),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::debug!("{e:?}");
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
