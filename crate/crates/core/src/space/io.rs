//! JSON form of a configuration space: a list of
//! `{name, type, lower/upper | choices, scale}` objects.

use super::{ConfigSpace, Domain, Hyperparameter, Scale, SpaceError};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawHyperparameter {
    pub name: String,
    #[serde(rename = "type")]
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub choices: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<Scale>,
}

fn integral(name: &str, v: f64) -> Result<i64, SpaceError> {
    if v.fract() != 0.0 || !v.is_finite() || v.abs() > 9.0e15 {
        return Err(SpaceError::InvalidDomain {
            name: name.to_string(),
            reason: format!("integer bound {v} is not an integer"),
        });
    }
    Ok(v as i64)
}

impl TryFrom<RawHyperparameter> for Hyperparameter {
    type Error = SpaceError;

    fn try_from(raw: RawHyperparameter) -> Result<Self, SpaceError> {
        let missing = |what: &str| SpaceError::InvalidDomain {
            name: raw.name.clone(),
            reason: format!("missing `{what}`"),
        };
        let domain = match raw.kind.as_str() {
            "continuous" | "float" => Domain::Continuous {
                lower: raw.lower.ok_or_else(|| missing("lower"))?,
                upper: raw.upper.ok_or_else(|| missing("upper"))?,
                scale: raw.scale.unwrap_or_default(),
            },
            "integer" | "int" => Domain::Integer {
                lower: integral(&raw.name, raw.lower.ok_or_else(|| missing("lower"))?)?,
                upper: integral(&raw.name, raw.upper.ok_or_else(|| missing("upper"))?)?,
                scale: raw.scale.unwrap_or_default(),
            },
            "categorical" => Domain::Categorical {
                choices: raw.choices.clone().ok_or_else(|| missing("choices"))?,
            },
            other => {
                return Err(SpaceError::InvalidDomain {
                    name: raw.name.clone(),
                    reason: format!("unknown type `{other}`"),
                })
            }
        };
        Ok(Hyperparameter { name: raw.name, domain })
    }
}

impl From<Hyperparameter> for RawHyperparameter {
    fn from(p: Hyperparameter) -> Self {
        let mut raw = RawHyperparameter {
            name: p.name,
            kind: String::new(),
            lower: None,
            upper: None,
            choices: None,
            scale: None,
        };
        match p.domain {
            Domain::Continuous { lower, upper, scale } => {
                raw.kind = "continuous".into();
                raw.lower = Some(lower);
                raw.upper = Some(upper);
                raw.scale = Some(scale);
            }
            Domain::Integer { lower, upper, scale } => {
                raw.kind = "integer".into();
                raw.lower = Some(lower as f64);
                raw.upper = Some(upper as f64);
                raw.scale = Some(scale);
            }
            Domain::Categorical { choices } => {
                raw.kind = "categorical".into();
                raw.choices = Some(choices);
            }
        }
        raw
    }
}

impl TryFrom<Vec<RawHyperparameter>> for ConfigSpace {
    type Error = SpaceError;

    fn try_from(raw: Vec<RawHyperparameter>) -> Result<Self, SpaceError> {
        let params = raw
            .into_iter()
            .map(Hyperparameter::try_from)
            .collect::<Result<Vec<_>, _>>()?;
        ConfigSpace::new(params)
    }
}

impl From<ConfigSpace> for Vec<RawHyperparameter> {
    fn from(space: ConfigSpace) -> Self {
        space.params.into_iter().map(RawHyperparameter::from).collect()
    }
}

impl ConfigSpace {
    pub fn from_json_str(s: &str) -> Result<Self, SpaceError> {
        serde_json::from_str(s).map_err(|e| SpaceError::Parse(e.to_string()))
    }

    pub fn from_json_file(path: &Path) -> Result<Self, SpaceError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SpaceError::Parse(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&text).map_err(|e| match e {
            SpaceError::Parse(m) => SpaceError::Parse(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("space serializes")
    }
}
