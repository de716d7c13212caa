//! Offline learning-curve tables.
//!
//! A table is a CSV with header `config_key,epoch,metric,seconds` (one row
//! per configuration and epoch) plus a JSON sidecar `{"space": [...],
//! "r_max": N}` declaring the configuration space and curve length.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::benchmark::{Benchmark, BenchmarkError, EpochResult};
use crate::space::{Config, ConfigSpace};

#[derive(Debug, thiserror::Error)]
pub enum TabularError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("sidecar: {0}")]
    Sidecar(String),
    #[error("row {row}: {message}")]
    Row { row: usize, message: String },
    #[error("configuration `{key}` (first seen at row {row}): {message}")]
    Curve { key: String, row: usize, message: String },
    #[error("table is empty")]
    Empty,
}

/// How configurations missing from the table are looked up.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LookupRule {
    #[default]
    Error,
    /// Closest table entry in encoded space (Euclidean; ties go to the
    /// smallest key).
    Nearest,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sidecar {
    pub space: ConfigSpace,
    pub r_max: u32,
}

#[derive(Clone, Debug)]
struct Entry {
    features: Vec<f64>,
    curve: Vec<EpochResult>,
}

#[derive(Clone, Debug)]
pub struct TabularBenchmark {
    space: ConfigSpace,
    r_max: u32,
    lookup: LookupRule,
    entries: BTreeMap<String, Entry>,
}

#[derive(Debug, Deserialize)]
struct Row {
    config_key: String,
    epoch: u32,
    metric: f64,
    seconds: f64,
}

/// Default sidecar location: the table path with a `.json` extension.
pub fn sidecar_path(table: &Path) -> PathBuf {
    table.with_extension("json")
}

pub fn load_tabular(
    table: &Path,
    sidecar: Option<&Path>,
    lookup: LookupRule,
) -> Result<TabularBenchmark, TabularError> {
    let side_path = sidecar.map(Path::to_path_buf).unwrap_or_else(|| sidecar_path(table));
    let io = |path: &Path, source| TabularError::Io { path: path.to_path_buf(), source };
    let side_text = std::fs::read_to_string(&side_path).map_err(|e| io(&side_path, e))?;
    let side: Sidecar = serde_json::from_str(&side_text).map_err(|e| TabularError::Sidecar(e.to_string()))?;
    let file = std::fs::File::open(table).map_err(|e| io(table, e))?;
    TabularBenchmark::from_reader(file, side.space, side.r_max, lookup)
}

impl TabularBenchmark {
    /// Parses and fully validates a table before returning it.
    pub fn from_reader<R: Read>(
        reader: R,
        space: ConfigSpace,
        r_max: u32,
        lookup: LookupRule,
    ) -> Result<Self, TabularError> {
        if r_max < 1 {
            return Err(TabularError::Sidecar("r_max must be >= 1".into()));
        }
        let mut csv = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = csv.headers().map_err(|e| TabularError::Row { row: 1, message: e.to_string() })?;
        if headers.iter().collect::<Vec<_>>() != ["config_key", "epoch", "metric", "seconds"] {
            return Err(TabularError::Row {
                row: 1,
                message: format!("header must be config_key,epoch,metric,seconds, got {:?}", headers),
            });
        }
        // key -> (first row, per-epoch slots)
        let mut raw: BTreeMap<String, (usize, Vec<Option<EpochResult>>)> = BTreeMap::new();
        for (i, rec) in csv.deserialize::<Row>().enumerate() {
            let row = i + 2;
            let bad = |message: String| TabularError::Row { row, message };
            let rec = rec.map_err(|e| bad(e.to_string()))?;
            let config = space.parse_key(&rec.config_key).map_err(|e| bad(e.to_string()))?;
            let key = space.config_key(&config);
            if rec.epoch < 1 || rec.epoch > r_max {
                return Err(bad(format!("epoch {} outside 1..={r_max}", rec.epoch)));
            }
            if !rec.metric.is_finite() {
                return Err(bad("metric is not finite".into()));
            }
            if !(rec.seconds.is_finite() && rec.seconds >= 0.0) {
                return Err(bad(format!("seconds must be finite and >= 0, got {}", rec.seconds)));
            }
            let slots = &mut raw.entry(key.clone()).or_insert_with(|| (row, vec![None; r_max as usize])).1;
            let slot = &mut slots[rec.epoch as usize - 1];
            if slot.is_some() {
                return Err(bad(format!("duplicate row for `{key}` at epoch {}", rec.epoch)));
            }
            *slot = Some(EpochResult { metric: rec.metric, seconds: rec.seconds });
        }
        if raw.is_empty() {
            return Err(TabularError::Empty);
        }
        let mut entries = BTreeMap::new();
        for (key, (row, slots)) in raw {
            let present = slots.iter().filter(|s| s.is_some()).count();
            if present != slots.len() {
                let missing = slots.iter().position(Option::is_none).expect("some slot missing") + 1;
                return Err(TabularError::Curve {
                    key,
                    row,
                    message: format!("curve has {present} of {r_max} epochs (epoch {missing} missing)"),
                });
            }
            let config = space.parse_key(&key).expect("key was parsed before");
            let features = space.encode(&config).expect("parsed config is valid").0;
            entries.insert(key, Entry { features, curve: slots.into_iter().flatten().collect() });
        }
        Ok(Self { space, r_max, lookup, entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn lookup_rule(&self) -> LookupRule {
        self.lookup
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Table key that answers for `config` under the lookup rule.
    pub fn resolve(&self, config: &Config) -> Result<&str, BenchmarkError> {
        let key = self.space.config_key(config);
        if let Some((k, _)) = self.entries.get_key_value(&key) {
            return Ok(k);
        }
        if self.lookup == LookupRule::Error {
            return Err(BenchmarkError::NotInTable(key));
        }
        let x = self.space.encode(config)?.0;
        let mut best: Option<(&str, f64)> = None;
        for (k, e) in &self.entries {
            let d: f64 = e.features.iter().zip(&x).map(|(a, b)| (a - b).powi(2)).sum();
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((k, d));
            }
        }
        Ok(best.expect("table is non-empty").0)
    }

    /// Lowest metric anywhere in the table.
    pub fn best_metric(&self) -> f64 {
        self.entries
            .values()
            .flat_map(|e| e.curve.iter().map(|r| r.metric))
            .fold(f64::INFINITY, f64::min)
    }
}

impl Benchmark for TabularBenchmark {
    fn space(&self) -> &ConfigSpace {
        &self.space
    }

    fn max_resource(&self) -> u32 {
        self.r_max
    }

    fn evaluate(&self, config: &Config, epoch: u32) -> Result<EpochResult, BenchmarkError> {
        if epoch < 1 || epoch > self.r_max {
            return Err(BenchmarkError::EpochOutOfRange { epoch, r_max: self.r_max });
        }
        let key = self.resolve(config)?;
        Ok(self.entries[key].curve[epoch as usize - 1])
    }

    fn curve(&self, config: &Config, epochs: u32) -> Result<Vec<EpochResult>, BenchmarkError> {
        if epochs > self.r_max {
            return Err(BenchmarkError::EpochOutOfRange { epoch: epochs, r_max: self.r_max });
        }
        let key = self.resolve(config)?;
        Ok(self.entries[key].curve[..epochs as usize].to_vec())
    }
}
