//! Hyperparameter configuration spaces.
//!
//! A [`ConfigSpace`] is an ordered list of typed domains. Concrete assignments
//! ([`Config`]) are mapped into the unit hypercube ([`FeatureVector`]) for the
//! surrogate model: numeric dimensions become one coordinate each (after a log
//! transform for log-scaled domains), categorical dimensions become a one-hot
//! block.

mod io;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::fmt;

pub use io::RawHyperparameter;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SpaceError {
    #[error("hyperparameter `{name}`: {reason}")]
    InvalidDomain { name: String, reason: String },
    #[error("duplicate hyperparameter name `{0}`")]
    DuplicateName(String),
    #[error("config has {got} values but space has {expected} dimensions")]
    Arity { expected: usize, got: usize },
    #[error("value {value} violates domain of `{name}`")]
    DomainViolation { name: String, value: String },
    #[error("feature vector has length {got}, expected {expected}")]
    FeatureLength { expected: usize, got: usize },
    #[error("malformed config key: {0}")]
    MalformedKey(String),
    #[error("invalid space file: {0}")]
    Parse(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    #[default]
    Linear,
    Log,
}

impl Scale {
    fn forward(self, v: f64) -> f64 {
        match self {
            Scale::Linear => v,
            Scale::Log => v.ln(),
        }
    }

    fn inverse(self, t: f64) -> f64 {
        match self {
            Scale::Linear => t,
            Scale::Log => t.exp(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Domain {
    Continuous { lower: f64, upper: f64, scale: Scale },
    Integer { lower: i64, upper: i64, scale: Scale },
    Categorical { choices: Vec<String> },
}

impl Domain {
    /// Number of feature coordinates this domain occupies.
    pub fn encoded_len(&self) -> usize {
        match self {
            Domain::Categorical { choices } => choices.len(),
            _ => 1,
        }
    }

    fn validate(&self, name: &str) -> Result<(), SpaceError> {
        let bad = |reason: &str| SpaceError::InvalidDomain {
            name: name.to_string(),
            reason: reason.to_string(),
        };
        match self {
            Domain::Continuous { lower, upper, scale } => {
                if !lower.is_finite() || !upper.is_finite() {
                    return Err(bad("bounds must be finite"));
                }
                if lower >= upper {
                    return Err(bad("lower must be < upper"));
                }
                if *scale == Scale::Log && *lower <= 0.0 {
                    return Err(bad("log scale requires lower > 0"));
                }
            }
            Domain::Integer { lower, upper, scale } => {
                if lower >= upper {
                    return Err(bad("lower must be < upper"));
                }
                if *scale == Scale::Log && *lower <= 0 {
                    return Err(bad("log scale requires lower > 0"));
                }
            }
            Domain::Categorical { choices } => {
                if choices.is_empty() {
                    return Err(bad("categorical needs at least one choice"));
                }
                for (i, c) in choices.iter().enumerate() {
                    if c.contains(';') || c.chars().any(char::is_control) {
                        return Err(bad("choices may not contain ';' or control characters"));
                    }
                    if choices[..i].contains(c) {
                        return Err(bad(&format!("duplicate choice `{c}`")));
                    }
                }
            }
        }
        Ok(())
    }

    /// Numeric value -> [0, 1]. `None` for categorical domains.
    fn to_unit(&self, v: f64) -> Option<f64> {
        let (lo, hi, scale) = match *self {
            Domain::Continuous { lower, upper, scale } => (lower, upper, scale),
            Domain::Integer { lower, upper, scale } => (lower as f64, upper as f64, scale),
            Domain::Categorical { .. } => return None,
        };
        let (tl, th) = (scale.forward(lo), scale.forward(hi));
        Some((scale.forward(v) - tl) / (th - tl))
    }

    /// [0, 1] -> numeric value, clamped to the domain and rounded for integers.
    fn from_unit(&self, u: f64) -> Value {
        let u = u.clamp(0.0, 1.0);
        match *self {
            Domain::Continuous { lower, upper, scale } => {
                let (tl, th) = (scale.forward(lower), scale.forward(upper));
                let v = scale.inverse(tl + u * (th - tl));
                Value::Float(v.clamp(lower, upper))
            }
            Domain::Integer { lower, upper, scale } => {
                let (tl, th) = (scale.forward(lower as f64), scale.forward(upper as f64));
                let v = scale.inverse(tl + u * (th - tl)).round() as i64;
                Value::Int(v.clamp(lower, upper))
            }
            Domain::Categorical { .. } => unreachable!("from_unit on categorical domain"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Hyperparameter {
    pub name: String,
    pub domain: Domain,
}

impl Hyperparameter {
    pub fn continuous(name: &str, lower: f64, upper: f64, scale: Scale) -> Self {
        Self { name: name.into(), domain: Domain::Continuous { lower, upper, scale } }
    }

    pub fn integer(name: &str, lower: i64, upper: i64, scale: Scale) -> Self {
        Self { name: name.into(), domain: Domain::Integer { lower, upper, scale } }
    }

    pub fn categorical<S: AsRef<str>>(name: &str, choices: &[S]) -> Self {
        Self {
            name: name.into(),
            domain: Domain::Categorical {
                choices: choices.iter().map(|c| c.as_ref().to_string()).collect(),
            },
        }
    }
}

/// A single assignment for one dimension. Categorical values are stored as
/// choice indices.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Value {
    Float(f64),
    Int(i64),
    Choice(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    values: Vec<Value>,
}

impl Config {
    pub fn new(values: Vec<Value>) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &[Value] {
        &self.values
    }
}

/// Coordinates in [0, 1]^d consumed by the surrogate.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector(pub Vec<f64>);

impl FeatureVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<RawHyperparameter>", into = "Vec<RawHyperparameter>")]
pub struct ConfigSpace {
    params: Vec<Hyperparameter>,
    encoded_dim: usize,
}

impl ConfigSpace {
    pub fn new(params: Vec<Hyperparameter>) -> Result<Self, SpaceError> {
        for (i, p) in params.iter().enumerate() {
            if p.name.is_empty()
                || p.name.contains(['=', ';'])
                || p.name.chars().any(char::is_control)
            {
                return Err(SpaceError::InvalidDomain {
                    name: p.name.clone(),
                    reason: "names must be non-empty and free of '=', ';' and control characters"
                        .into(),
                });
            }
            if params[..i].iter().any(|q| q.name == p.name) {
                return Err(SpaceError::DuplicateName(p.name.clone()));
            }
            p.domain.validate(&p.name)?;
        }
        let encoded_dim = params.iter().map(|p| p.domain.encoded_len()).sum();
        Ok(Self { params, encoded_dim })
    }

    pub fn params(&self) -> &[Hyperparameter] {
        &self.params
    }

    /// Number of hyperparameters.
    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    /// Length of the feature vectors produced by [`ConfigSpace::encode`].
    pub fn encoded_dim(&self) -> usize {
        self.encoded_dim
    }

    pub fn validate_config(&self, config: &Config) -> Result<(), SpaceError> {
        if config.values.len() != self.params.len() {
            return Err(SpaceError::Arity { expected: self.params.len(), got: config.values.len() });
        }
        for (p, v) in self.params.iter().zip(&config.values) {
            let ok = match (&p.domain, *v) {
                (Domain::Continuous { lower, upper, .. }, Value::Float(x)) => {
                    x.is_finite() && x >= *lower && x <= *upper
                }
                (Domain::Integer { lower, upper, .. }, Value::Int(x)) => x >= *lower && x <= *upper,
                (Domain::Categorical { choices }, Value::Choice(i)) => i < choices.len(),
                _ => false,
            };
            if !ok {
                return Err(SpaceError::DomainViolation {
                    name: p.name.clone(),
                    value: format!("{v:?}"),
                });
            }
        }
        Ok(())
    }

    pub fn sample_random<R: Rng + ?Sized>(&self, rng: &mut R) -> Config {
        let values = self
            .params
            .iter()
            .map(|p| match &p.domain {
                Domain::Categorical { choices } => Value::Choice(rng.random_range(0..choices.len())),
                numeric => numeric.from_unit(rng.random::<f64>()),
            })
            .collect();
        Config { values }
    }

    pub fn encode(&self, config: &Config) -> Result<FeatureVector, SpaceError> {
        self.validate_config(config)?;
        let mut coords = Vec::with_capacity(self.encoded_dim);
        for (p, v) in self.params.iter().zip(&config.values) {
            match (&p.domain, *v) {
                (Domain::Categorical { choices }, Value::Choice(i)) => {
                    coords.extend((0..choices.len()).map(|j| if j == i { 1.0 } else { 0.0 }));
                }
                (d, Value::Float(x)) => coords.push(d.to_unit(x).expect("numeric")),
                (d, Value::Int(x)) => coords.push(d.to_unit(x as f64).expect("numeric")),
                _ => unreachable!("validated above"),
            }
        }
        Ok(FeatureVector(coords))
    }

    /// Inverse of [`ConfigSpace::encode`]. Coordinates are clamped into [0, 1];
    /// integers are rounded; a one-hot block decodes to its largest entry.
    pub fn decode(&self, features: &FeatureVector) -> Result<Config, SpaceError> {
        if features.len() != self.encoded_dim {
            return Err(SpaceError::FeatureLength { expected: self.encoded_dim, got: features.len() });
        }
        let mut pos = 0;
        let mut values = Vec::with_capacity(self.params.len());
        for p in &self.params {
            match &p.domain {
                Domain::Categorical { choices } => {
                    let block = &features.0[pos..pos + choices.len()];
                    let mut best = 0;
                    for (j, &c) in block.iter().enumerate() {
                        if c > block[best] {
                            best = j;
                        }
                    }
                    values.push(Value::Choice(best));
                    pos += choices.len();
                }
                d => {
                    values.push(d.from_unit(features.0[pos]));
                    pos += 1;
                }
            }
        }
        Ok(Config { values })
    }

    /// Local move used by the acquisition optimizer: numeric coordinates get
    /// Gaussian noise of standard deviation `scale` in encoded space,
    /// truncated to [0, 1]; each categorical is resampled with probability
    /// `scale`.
    pub fn perturb<R: Rng + ?Sized>(&self, config: &Config, scale: f64, rng: &mut R) -> Config {
        assert!(scale > 0.0 && scale <= 1.0, "perturbation scale must lie in (0, 1]");
        let values = self
            .params
            .iter()
            .zip(&config.values)
            .map(|(p, v)| match (&p.domain, *v) {
                (Domain::Categorical { choices }, Value::Choice(i)) => {
                    if rng.random::<f64>() < scale {
                        Value::Choice(rng.random_range(0..choices.len()))
                    } else {
                        Value::Choice(i)
                    }
                }
                (d, v) => {
                    let x = match v {
                        Value::Float(x) => x,
                        Value::Int(x) => x as f64,
                        Value::Choice(_) => unreachable!(),
                    };
                    let z = d.to_unit(x).expect("numeric").clamp(0.0, 1.0);
                    d.from_unit(truncated_normal(z, scale, rng))
                }
            })
            .collect();
        Config { values }
    }

    /// Canonical textual form: `name=value` pairs joined by `;`, in space order.
    pub fn config_key(&self, config: &Config) -> String {
        let mut out = String::new();
        for (i, (p, v)) in self.params.iter().zip(&config.values).enumerate() {
            if i > 0 {
                out.push(';');
            }
            out.push_str(&p.name);
            out.push('=');
            match (&p.domain, v) {
                (Domain::Categorical { choices }, Value::Choice(c)) => out.push_str(&choices[*c]),
                (_, Value::Float(x)) => out.push_str(&format!("{x}")),
                (_, Value::Int(x)) => out.push_str(&format!("{x}")),
                (_, Value::Choice(c)) => out.push_str(&format!("#{c}")),
            }
        }
        out
    }

    /// Parses a key produced by [`ConfigSpace::config_key`]. Pairs must appear
    /// in space order and the parsed config must lie in the domain.
    pub fn parse_key(&self, key: &str) -> Result<Config, SpaceError> {
        let malformed = |msg: String| SpaceError::MalformedKey(msg);
        let parts: Vec<&str> = key.split(';').collect();
        if parts.len() != self.params.len() {
            return Err(malformed(format!(
                "expected {} pairs, found {}",
                self.params.len(),
                parts.len()
            )));
        }
        let mut values = Vec::with_capacity(parts.len());
        for (p, part) in self.params.iter().zip(parts) {
            let (name, raw) = part
                .split_once('=')
                .ok_or_else(|| malformed(format!("pair `{part}` lacks '='")))?;
            if name.trim() != p.name {
                return Err(malformed(format!("expected `{}`, found `{name}`", p.name)));
            }
            let raw = raw.trim();
            let v = match &p.domain {
                Domain::Continuous { .. } => Value::Float(
                    raw.parse::<f64>()
                        .map_err(|_| malformed(format!("`{raw}` is not a number")))?,
                ),
                Domain::Integer { .. } => Value::Int(
                    raw.parse::<i64>()
                        .map_err(|_| malformed(format!("`{raw}` is not an integer")))?,
                ),
                Domain::Categorical { choices } => Value::Choice(
                    choices
                        .iter()
                        .position(|c| c == raw)
                        .ok_or_else(|| malformed(format!("`{raw}` is not a choice of `{}`", p.name)))?,
                ),
            };
            values.push(v);
        }
        let config = Config { values };
        self.validate_config(&config)?;
        Ok(config)
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Float(x) => write!(f, "{x}"),
            Value::Int(x) => write!(f, "{x}"),
            Value::Choice(c) => write!(f, "#{c}"),
        }
    }
}

fn truncated_normal<R: Rng + ?Sized>(mean: f64, std: f64, rng: &mut R) -> f64 {
    for _ in 0..1000 {
        let z: f64 = StandardNormal.sample(rng);
        let x = mean + std * z;
        if (0.0..=1.0).contains(&x) {
            return x;
        }
    }
    mean
}
