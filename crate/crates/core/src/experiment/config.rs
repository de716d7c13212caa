use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::ExperimentError;
use crate::scheduler::{RungGeometry, SchedulerKind};
use crate::searcher::{SearcherConfig, SearcherKind};
use crate::sim::{
    load_tabular, Benchmark, LookupRule, SimulationConfig, SyntheticBenchmark, SyntheticParams, TabularBenchmark,
};
use crate::space::ConfigSpace;

/// A configuration space given inline or as a path to its JSON file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpaceSource {
    Path(PathBuf),
    Inline(ConfigSpace),
}

impl SpaceSource {
    pub fn load(&self) -> Result<ConfigSpace, ExperimentError> {
        match self {
            SpaceSource::Inline(space) => Ok(space.clone()),
            SpaceSource::Path(p) => ConfigSpace::from_json_file(p)
                .map_err(|e| ExperimentError::Config(format!("{}: {e}", p.display()))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum BenchmarkSpec {
    Synthetic {
        space: SpaceSource,
        params: SyntheticParams,
    },
    Tabular {
        path: PathBuf,
        /// Defaults to the table path with a `.json` extension.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sidecar: Option<PathBuf>,
        #[serde(default)]
        lookup: LookupRule,
    },
}

pub enum BuiltBenchmark {
    Synthetic(SyntheticBenchmark),
    Tabular(TabularBenchmark),
}

impl BuiltBenchmark {
    pub fn as_dyn(&self) -> &dyn Benchmark {
        match self {
            BuiltBenchmark::Synthetic(b) => b,
            BuiltBenchmark::Tabular(b) => b,
        }
    }
}

impl BenchmarkSpec {
    pub fn build(&self) -> Result<BuiltBenchmark, ExperimentError> {
        match self {
            BenchmarkSpec::Synthetic { space, params } => SyntheticBenchmark::new(space.load()?, params.clone())
                .map(BuiltBenchmark::Synthetic)
                .map_err(ExperimentError::Config),
            BenchmarkSpec::Tabular { path, sidecar, lookup } => load_tabular(path, sidecar.as_deref(), *lookup)
                .map(BuiltBenchmark::Tabular)
                .map_err(|e| match e {
                    crate::sim::TabularError::Io { .. } => ExperimentError::Config(e.to_string()),
                    _ => ExperimentError::Config(format!("{}: {e}", path.display())),
                }),
        }
    }

    fn resolve_paths(&mut self, base: &Path) {
        let join = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        match self {
            BenchmarkSpec::Synthetic { space: SpaceSource::Path(p), .. } => join(p),
            BenchmarkSpec::Synthetic { .. } => {}
            BenchmarkSpec::Tabular { path, sidecar, .. } => {
                join(path);
                if let Some(s) = sidecar {
                    join(s);
                }
            }
        }
    }
}

/// The method roster: scheduler variant paired with a searcher.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodName {
    AbohbStopping,
    AbohbPromotion,
    AhbStopping,
    /// ASHA.
    AhbPromotion,
    /// GP-based search, every configuration trained to `r_max`.
    Abo,
    /// Random search, every configuration trained to `r_max`.
    Ars,
    SyncHb,
}

impl MethodName {
    pub const ALL: [MethodName; 7] = [
        MethodName::AbohbStopping,
        MethodName::AbohbPromotion,
        MethodName::AhbStopping,
        MethodName::AhbPromotion,
        MethodName::Abo,
        MethodName::Ars,
        MethodName::SyncHb,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MethodName::AbohbStopping => "abohb_stopping",
            MethodName::AbohbPromotion => "abohb_promotion",
            MethodName::AhbStopping => "ahb_stopping",
            MethodName::AhbPromotion => "ahb_promotion",
            MethodName::Abo => "abo",
            MethodName::Ars => "ars",
            MethodName::SyncHb => "sync_hb",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.as_str() == s)
    }

    pub fn plan(self) -> MethodPlan {
        use MethodName::*;
        let (scheduler, searcher, single_rung) = match self {
            AbohbStopping => (SchedulerKind::Stopping, SearcherKind::Gp, false),
            AbohbPromotion => (SchedulerKind::Promotion, SearcherKind::Gp, false),
            AhbStopping => (SchedulerKind::Stopping, SearcherKind::Random, false),
            AhbPromotion => (SchedulerKind::Promotion, SearcherKind::Random, false),
            Abo => (SchedulerKind::Stopping, SearcherKind::Gp, true),
            Ars => (SchedulerKind::Stopping, SearcherKind::Random, true),
            SyncHb => (SchedulerKind::Synchronous, SearcherKind::Random, false),
        };
        MethodPlan { name: self.as_str().to_string(), scheduler, searcher, single_rung }
    }
}

impl fmt::Display for MethodName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A named scheduler/searcher pairing outside the roster.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodPlan {
    pub name: String,
    pub scheduler: SchedulerKind,
    pub searcher: SearcherKind,
    /// Use the degenerate geometry `{r_max}` (no early stopping).
    #[serde(default)]
    pub single_rung: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MethodSpec {
    Named(MethodName),
    Custom(MethodPlan),
}

impl MethodSpec {
    pub fn plan(&self) -> MethodPlan {
        match self {
            MethodSpec::Named(m) => m.plan(),
            MethodSpec::Custom(p) => p.clone(),
        }
    }
}

fn default_eta() -> u32 {
    3
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub r_min: u32,
    pub r_max: u32,
    #[serde(default = "default_eta")]
    pub eta: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_brackets: Option<usize>,
}

impl GeometryConfig {
    pub fn build(&self, single_rung: bool) -> Result<RungGeometry, ExperimentError> {
        let err = |e: crate::scheduler::SchedulerError| ExperimentError::Config(e.to_string());
        if single_rung {
            return RungGeometry::single(self.r_max, self.eta).map_err(err);
        }
        let g = RungGeometry::new(self.r_min, self.r_max, self.eta).map_err(err)?;
        match self.num_brackets {
            Some(n) => g.with_num_brackets(n).map_err(err),
            None => Ok(g),
        }
    }
}

/// Seeds as a list or a range string such as `"0..29"` (inclusive).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SeedSpec {
    List(Vec<u64>),
    Range(String),
}

impl SeedSpec {
    pub fn resolve(&self) -> Result<Vec<u64>, ExperimentError> {
        match self {
            SeedSpec::List(v) => Ok(v.clone()),
            SeedSpec::Range(s) => parse_seeds(s),
        }
    }
}

/// Parses `a..b` / `a..=b` (both inclusive), a single seed, or a comma list.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>, ExperimentError> {
    const MAX_SEEDS: u64 = 100_000;
    let bad = |msg: &str| ExperimentError::Config(format!("invalid seeds `{s}`: {msg}"));
    let num = |t: &str| t.trim().parse::<u64>().map_err(|_| bad("expected unsigned integers"));
    let s = s.trim();
    if let Some((a, b)) = s.split_once("..") {
        let (lo, hi) = (num(a)?, num(b.strip_prefix('=').unwrap_or(b))?);
        if lo > hi {
            return Err(bad("range start exceeds end"));
        }
        if hi - lo >= MAX_SEEDS {
            return Err(bad("too many seeds"));
        }
        return Ok((lo..=hi).collect());
    }
    let seeds = s.split(',').map(num).collect::<Result<Vec<_>, _>>()?;
    if seeds.len() as u64 > MAX_SEEDS {
        return Err(bad("too many seeds"));
    }
    Ok(seeds)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationOptions {
    #[serde(default)]
    pub resume_from_checkpoint: bool,
    #[serde(default)]
    pub decision_overhead: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_configs: Option<usize>,
}

impl Default for SimulationOptions {
    fn default() -> Self {
        Self { resume_from_checkpoint: false, decision_overhead: 0.0, max_configs: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: String,
    pub benchmark: BenchmarkSpec,
    pub methods: Vec<MethodSpec>,
    pub geometry: GeometryConfig,
    pub n_workers: usize,
    /// Simulated seconds per run.
    pub time_budget: f64,
    pub seeds: SeedSpec,
    #[serde(default)]
    pub searcher: SearcherConfig,
    #[serde(default)]
    pub simulation: SimulationOptions,
}

impl ExperimentConfig {
    pub fn from_json_str(s: &str) -> Result<Self, ExperimentError> {
        let value: serde_json::Value =
            serde_json::from_str(s).map_err(|e| ExperimentError::Config(e.to_string()))?;
        // A results manifest embeds the resolved config under `config`.
        let value = match value {
            serde_json::Value::Object(mut m) if m.contains_key("config") && m.contains_key("version") => {
                m.remove("config").expect("checked")
            }
            other => other,
        };
        serde_json::from_value(value).map_err(|e| ExperimentError::Config(e.to_string()))
    }

    /// Reads a config (or manifest) and makes its file paths absolute
    /// relative to the file's directory.
    pub fn from_file(path: &Path) -> Result<Self, ExperimentError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ExperimentError::Io { path: path.to_path_buf(), source: e })?;
        let mut cfg = Self::from_json_str(&text)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let base = std::path::absolute(&base).unwrap_or(base);
        cfg.benchmark.resolve_paths(&base);
        Ok(cfg)
    }

    /// Copy with a file-based synthetic space replaced by its contents, so
    /// the config no longer depends on the space file.
    pub fn resolved(&self) -> Result<Self, ExperimentError> {
        let mut cfg = self.clone();
        if let BenchmarkSpec::Synthetic { space, .. } = &mut cfg.benchmark {
            *space = SpaceSource::Inline(space.load()?);
        }
        Ok(cfg)
    }

    pub fn seeds(&self) -> Result<Vec<u64>, ExperimentError> {
        self.seeds.resolve()
    }

    pub fn plans(&self) -> Result<Vec<MethodPlan>, ExperimentError> {
        let plans: Vec<MethodPlan> = self.methods.iter().map(MethodSpec::plan).collect();
        for (i, p) in plans.iter().enumerate() {
            let ok = !p.name.is_empty()
                && p.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-');
            if !ok {
                return Err(ExperimentError::Config(format!("method name `{}` must be [A-Za-z0-9_-]+", p.name)));
            }
            if plans[..i].iter().any(|q| q.name == p.name) {
                return Err(ExperimentError::Config(format!("method `{}` listed twice", p.name)));
            }
        }
        Ok(plans)
    }

    pub fn simulation_config(&self, seed: u64) -> SimulationConfig {
        SimulationConfig {
            resume_from_checkpoint: self.simulation.resume_from_checkpoint,
            decision_overhead: self.simulation.decision_overhead,
            max_configs: self.simulation.max_configs,
            ..SimulationConfig::new(self.n_workers, self.time_budget, seed)
        }
    }

    /// Checks everything that can be checked without running, including
    /// loading the benchmark.
    pub fn validate(&self) -> Result<BuiltBenchmark, ExperimentError> {
        if self.methods.is_empty() {
            return Err(ExperimentError::Config("at least one method is required".into()));
        }
        let plans = self.plans()?;
        if self.seeds()?.is_empty() {
            return Err(ExperimentError::Config("at least one seed is required".into()));
        }
        self.simulation_config(0).validate().map_err(ExperimentError::Config)?;
        self.searcher.validate().map_err(ExperimentError::Config)?;
        for p in &plans {
            self.geometry.build(p.single_rung)?;
        }
        let bench = self.benchmark.build()?;
        if self.geometry.r_max > bench.as_dyn().max_resource() {
            return Err(ExperimentError::Config(format!(
                "geometry r_max {} exceeds benchmark r_max {}",
                self.geometry.r_max,
                bench.as_dyn().max_resource()
            )));
        }
        Ok(bench)
    }
}
