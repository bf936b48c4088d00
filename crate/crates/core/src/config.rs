//! TOML model files.
//!
//! ```toml
//! d = 2
//! lambda_bar = [0.5, 0.5]
//! alpha = [3.0, 2.0]
//! mu = [1.0, 2.0]
//! dependence = "independent"        # or "shared_column"
//! marks = [
//!   [{ kind = "exponential", mean = 1.5 }, { kind = "exponential", rate = 2.0 }],
//!   [{ kind = "deterministic", value = 0.75 }, { kind = "zero" }],
//! ]
//!
//! [run]                               # optional defaults for the CLI
//! t = 5.0
//! order = 2
//! ```
//!
//! Unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{HawkesModel, MarkDependence, MarkLaw};
use crate::scalar::Scalar;

/// One entry of the `marks` grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MarkSpec {
    /// Give exactly one of `mean` and `rate`.
    Exponential {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mean: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rate: Option<f64>,
    },
    Deterministic { value: f64 },
    Zero,
}

impl MarkSpec {
    fn to_law<T: Scalar>(&self, at: (usize, usize)) -> Result<MarkLaw<T>> {
        let here = format!("marks[{}][{}]", at.0, at.1);
        match *self {
            MarkSpec::Exponential { mean: Some(m), rate: None } => Ok(MarkLaw::exponential(T::lit(m))),
            MarkSpec::Exponential { mean: None, rate: Some(r) } => {
                if !(r > 0.0 && r.is_finite()) {
                    return Err(Error::Config(format!("{here}: rate must be positive, got {r}")));
                }
                Ok(MarkLaw::exponential(T::one() / T::lit(r)))
            }
            MarkSpec::Exponential { .. } => {
                Err(Error::Config(format!("{here}: exponential needs exactly one of `mean` and `rate`")))
            }
            MarkSpec::Deterministic { value } => Ok(MarkLaw::deterministic(T::lit(value))),
            MarkSpec::Zero => Ok(MarkLaw::Zero),
        }
    }
}

/// Defaults for CLI runs; command-line flags take precedence.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub t: Option<f64>,
    pub order: Option<u32>,
    pub method: Option<String>,
    pub stationary: Option<bool>,
    pub h: Option<Vec<f64>>,
    pub mc_runs: Option<Vec<usize>>,
    pub seed: Option<u64>,
    pub horizon: Option<f64>,
    pub runs: Option<usize>,
    pub tau_grid: Option<Vec<f64>>,
    pub theta_grid: Option<Vec<f64>>,
    pub s_grid: Option<Vec<f64>>,
}

/// A model file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub d: usize,
    pub lambda_bar: Vec<f64>,
    pub alpha: Vec<f64>,
    pub mu: Vec<f64>,
    pub marks: Vec<Vec<MarkSpec>>,
    #[serde(default)]
    pub dependence: MarkDependence,
    /// Accept `ρ(H) ≥ 1` (only simulation makes sense then).
    #[serde(default)]
    pub allow_unstable: bool,
    #[serde(default)]
    pub run: RunSection,
}

impl ModelConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn model<T: Scalar>(&self) -> Result<HawkesModel<T>> {
        let d = self.d;
        if d == 0 {
            return Err(Error::Config("d must be at least 1".into()));
        }
        for (name, v) in [("lambda_bar", &self.lambda_bar), ("alpha", &self.alpha), ("mu", &self.mu)] {
            if v.len() != d {
                return Err(Error::Config(format!("{name} has {} entries, expected d = {d}", v.len())));
            }
        }
        if self.marks.len() != d {
            return Err(Error::Config(format!("marks has {} rows, expected d = {d}", self.marks.len())));
        }
        let mut marks = Vec::with_capacity(d);
        for (i, row) in self.marks.iter().enumerate() {
            if row.len() != d {
                return Err(Error::Config(format!("marks[{i}] has {} entries, expected d = {d}", row.len())));
            }
            marks.push(row.iter().enumerate().map(|(j, s)| s.to_law((i, j))).collect::<Result<Vec<_>>>()?);
        }
        let lit = |v: &[f64]| v.iter().map(|&x| T::lit(x)).collect::<Vec<T>>();
        HawkesModel::build(
            lit(&self.lambda_bar),
            lit(&self.alpha),
            lit(&self.mu),
            marks,
            self.dependence,
            self.allow_unstable,
        )
    }

    /// Config describing `m`, with empty run defaults.
    pub fn from_model(m: &HawkesModel<f64>) -> Self {
        let marks = m
            .marks()
            .iter()
            .map(|row| {
                row.iter()
                    .map(|law| match *law {
                        MarkLaw::Exponential { mean } => MarkSpec::Exponential { mean: Some(mean), rate: None },
                        MarkLaw::Deterministic { value } => MarkSpec::Deterministic { value },
                        MarkLaw::Zero => MarkSpec::Zero,
                    })
                    .collect()
            })
            .collect();
        Self {
            d: m.d(),
            lambda_bar: m.lambda_bar().to_vec(),
            alpha: m.alpha().to_vec(),
            mu: m.mu().to_vec(),
            marks,
            dependence: m.dependence(),
            allow_unstable: false,
            run: RunSection::default(),
        }
    }
}
