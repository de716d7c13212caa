use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::space::{Config, ConfigSpace, SpaceError};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum BenchmarkError {
    #[error("epoch {epoch} outside 1..={r_max}")]
    EpochOutOfRange { epoch: u32, r_max: u32 },
    #[error("configuration `{0}` is not in the table")]
    NotInTable(String),
    #[error(transparent)]
    Space(#[from] SpaceError),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochResult {
    pub metric: f64,
    pub seconds: f64,
}

/// A learning-curve oracle: metric and duration of each training epoch.
/// Results are deterministic in `(config, epoch)`.
pub trait Benchmark {
    fn space(&self) -> &ConfigSpace;

    fn max_resource(&self) -> u32;

    fn evaluate(&self, config: &Config, epoch: u32) -> Result<EpochResult, BenchmarkError>;

    /// Epochs `1..=epochs` in order.
    fn curve(&self, config: &Config, epochs: u32) -> Result<Vec<EpochResult>, BenchmarkError> {
        (1..=epochs).map(|k| self.evaluate(config, k)).collect()
    }
}

fn default_noise() -> f64 {
    0.002
}
fn default_asymptote_min() -> f64 {
    0.05
}
fn default_asymptote_scale() -> f64 {
    0.5
}
fn default_offset() -> f64 {
    0.4
}
fn default_decay_min() -> f64 {
    0.05
}
fn default_decay_max() -> f64 {
    0.6
}
fn default_epoch_seconds() -> f64 {
    10.0
}
fn default_duration_spread() -> f64 {
    4.0
}

/// Parameters of [`SyntheticBenchmark`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticParams {
    pub r_max: u32,
    /// Instance seed: fixes the optimum location, weights and noise stream.
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_noise")]
    pub noise_sd: f64,
    #[serde(default = "default_asymptote_min")]
    pub asymptote_min: f64,
    #[serde(default = "default_asymptote_scale")]
    pub asymptote_scale: f64,
    /// Scale of the transient `b(x)` added at epoch 0.
    #[serde(default = "default_offset")]
    pub curve_offset: f64,
    #[serde(default = "default_decay_min")]
    pub decay_min: f64,
    #[serde(default = "default_decay_max")]
    pub decay_max: f64,
    #[serde(default = "default_epoch_seconds")]
    pub epoch_seconds: f64,
    /// Ratio of the slowest to the fastest configuration's epoch time.
    #[serde(default = "default_duration_spread")]
    pub duration_spread: f64,
}

impl SyntheticParams {
    pub fn new(r_max: u32, seed: u64) -> Self {
        Self {
            r_max,
            seed,
            noise_sd: default_noise(),
            asymptote_min: default_asymptote_min(),
            asymptote_scale: default_asymptote_scale(),
            curve_offset: default_offset(),
            decay_min: default_decay_min(),
            decay_max: default_decay_max(),
            epoch_seconds: default_epoch_seconds(),
            duration_spread: default_duration_spread(),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let nonneg = |v: f64| v.is_finite() && v >= 0.0;
        if self.r_max < 1 {
            return Err("r_max must be >= 1".into());
        }
        if !(nonneg(self.noise_sd) && nonneg(self.asymptote_scale) && nonneg(self.curve_offset)) {
            return Err("noise_sd, asymptote_scale and curve_offset must be finite and >= 0".into());
        }
        if !self.asymptote_min.is_finite() {
            return Err("asymptote_min must be finite".into());
        }
        if !(self.decay_min > 0.0 && self.decay_min <= self.decay_max && self.decay_max.is_finite()) {
            return Err("need 0 < decay_min <= decay_max".into());
        }
        if !nonneg(self.epoch_seconds) {
            return Err("epoch_seconds must be finite and >= 0".into());
        }
        if !(self.duration_spread.is_finite() && self.duration_spread >= 1.0) {
            return Err("duration_spread must be >= 1".into());
        }
        Ok(())
    }
}

/// FNV-1a, used to derive stable per-configuration noise seeds.
fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3))
}

/// Learning curves `y_k = a(x) + b(x) c(x)^k + noise` over the encoded space.
///
/// `a` is a weighted quadratic bowl around a seeded optimum, so the best
/// asymptote is `asymptote_min`. The decay rate and the per-epoch duration
/// each depend on one encoded coordinate, which makes early rankings
/// imperfect and durations heterogeneous.
#[derive(Clone, Debug)]
pub struct SyntheticBenchmark {
    space: ConfigSpace,
    params: SyntheticParams,
    optimum: Vec<f64>,
    weights: Vec<f64>,
    offset_coord: usize,
    decay_coord: usize,
    duration_coord: usize,
}

impl SyntheticBenchmark {
    pub fn new(space: ConfigSpace, params: SyntheticParams) -> Result<Self, String> {
        params.validate()?;
        let d = space.encoded_dim();
        if d == 0 {
            return Err("synthetic benchmark needs a non-empty space".into());
        }
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        let optimum = (0..d).map(|_| rng.random_range(0.15..0.85)).collect();
        let weights = (0..d).map(|_| rng.random_range(0.5..2.0)).collect();
        let offset_coord = rng.random_range(0..d);
        let decay_coord = rng.random_range(0..d);
        let duration_coord = rng.random_range(0..d);
        Ok(Self { space, params, optimum, weights, offset_coord, decay_coord, duration_coord })
    }

    pub fn params(&self) -> &SyntheticParams {
        &self.params
    }

    /// Encoded location of the best asymptote.
    pub fn optimum(&self) -> &[f64] {
        &self.optimum
    }

    /// Noise-free asymptote `a(x)`.
    pub fn asymptote(&self, config: &Config) -> Result<f64, SpaceError> {
        let u = self.space.encode(config)?.0;
        Ok(self.asymptote_of(&u))
    }

    fn asymptote_of(&self, u: &[f64]) -> f64 {
        let wsum: f64 = self.weights.iter().sum();
        let bowl: f64 = u
            .iter()
            .zip(&self.optimum)
            .zip(&self.weights)
            .map(|((x, o), w)| w * (x - o).powi(2))
            .sum::<f64>()
            / wsum;
        self.params.asymptote_min + self.params.asymptote_scale * bowl
    }
}

impl Benchmark for SyntheticBenchmark {
    fn space(&self) -> &ConfigSpace {
        &self.space
    }

    fn max_resource(&self) -> u32 {
        self.params.r_max
    }

    fn evaluate(&self, config: &Config, epoch: u32) -> Result<EpochResult, BenchmarkError> {
        let p = &self.params;
        if epoch < 1 || epoch > p.r_max {
            return Err(BenchmarkError::EpochOutOfRange { epoch, r_max: p.r_max });
        }
        let u = self.space.encode(config)?.0;
        let a = self.asymptote_of(&u);
        let b = p.curve_offset * (0.5 + u[self.offset_coord]);
        let lambda = p.decay_min + (p.decay_max - p.decay_min) * u[self.decay_coord];
        let seed = fnv1a(self.space.config_key(config).as_bytes())
            ^ p.seed.wrapping_mul(0x9e37_79b9_7f4a_7c15)
            ^ u64::from(epoch).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        let z: f64 = StandardNormal.sample(&mut ChaCha8Rng::seed_from_u64(seed));
        let metric = a + b * (-lambda * f64::from(epoch)).exp() + p.noise_sd * z.clamp(-4.0, 4.0);
        let seconds = p.epoch_seconds * (1.0 + (p.duration_spread - 1.0) * u[self.duration_coord]);
        Ok(EpochResult { metric, seconds })
    }
}
