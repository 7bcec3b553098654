//! Experiment configuration files.

use std::collections::BTreeMap;

use nclab_core::tower::CompactFunction;
use nclab_core::{BranchFunction, Operator, TorusParams, Unitary, C64};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::RunError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Tower,
    Torus,
    ThetaTower,
    Span,
    LemmaIso,
    AnticommuteDemo,
}

impl Kind {
    pub fn as_str(self) -> &'static str {
        match self {
            Kind::Tower => "tower",
            Kind::Torus => "torus",
            Kind::ThetaTower => "theta_tower",
            Kind::Span => "span",
            Kind::LemmaIso => "lemma_iso",
            Kind::AnticommuteDemo => "anticommute_demo",
        }
    }
}

/// One experiment as written in the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub kind: Kind,
    #[serde(default, skip_serializing_if = "Value::is_null")]
    pub parameters: Value,
    /// Residuals to report. All of the kind's residuals when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checks: Option<Vec<String>>,
    /// Threshold overrides by residual name.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Batch {
    #[serde(default)]
    seed: Option<u64>,
    experiments: Vec<ExperimentConfig>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ConfigFile {
    Batch(Batch),
    List(Vec<ExperimentConfig>),
    Single(ExperimentConfig),
}

/// A parsed config: experiments in file order plus the file-level seed.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub experiments: Vec<ExperimentConfig>,
}

/// Accepts a single experiment object, a list of them, or
/// `{"seed": .., "experiments": [..]}`.
pub fn parse_config(text: &str) -> Result<RunConfig, RunError> {
    let value: Value = serde_json::from_str(text).map_err(|e| RunError::Schema(format!("invalid json: {e}")))?;
    // untagged enums swallow the useful message, so pick the shape by hand
    let parsed = match &value {
        Value::Array(_) => serde_json::from_value(value).map(ConfigFile::List),
        Value::Object(m) if m.contains_key("experiments") => serde_json::from_value(value).map(ConfigFile::Batch),
        _ => serde_json::from_value(value).map(ConfigFile::Single),
    }
    .map_err(|e| RunError::Schema(e.to_string()))?;
    let cfg = match parsed {
        ConfigFile::Batch(b) => RunConfig { seed: b.seed, experiments: b.experiments },
        ConfigFile::List(experiments) => RunConfig { seed: None, experiments },
        ConfigFile::Single(e) => RunConfig { seed: None, experiments: vec![e] },
    };
    if cfg.experiments.is_empty() {
        return Err(RunError::Schema("config lists no experiments".into()));
    }
    Ok(cfg)
}

pub(crate) fn parameters<T: DeserializeOwned>(cfg: &ExperimentConfig, name: &str) -> Result<T, RunError> {
    let v = if cfg.parameters.is_null() { Value::Object(Default::default()) } else { cfg.parameters.clone() };
    serde_json::from_value(v).map_err(|e| RunError::Schema(format!("{name}: parameters: {e}")))
}

/// How a matrix is described in a config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum OperatorSpec {
    Clock {
        #[serde(default = "one")]
        p: i64,
        q: u64,
    },
    Shift {
        dim: usize,
    },
    /// Diagonal unitary `diag(e^{iα_j})`, angles in radians.
    DiagAngles {
        angles: Vec<f64>,
    },
    /// Haar-distributed; uses the experiment seed unless given.
    Random {
        dim: usize,
        #[serde(default)]
        seed: Option<u64>,
    },
    /// Row-major entries as `[re, im]` pairs.
    Matrix {
        rows: Vec<Vec<[f64; 2]>>,
    },
    Power {
        of: Box<OperatorSpec>,
        exponent: u32,
    },
}

fn one() -> i64 {
    1
}

impl OperatorSpec {
    pub fn dim(&self) -> usize {
        match self {
            OperatorSpec::Clock { q, .. } => *q as usize,
            OperatorSpec::Shift { dim } | OperatorSpec::Random { dim, .. } => *dim,
            OperatorSpec::DiagAngles { angles } => angles.len(),
            OperatorSpec::Matrix { rows } => rows.len(),
            OperatorSpec::Power { of, .. } => of.dim(),
        }
    }

    pub fn build(&self, seed: u64, max_dim: usize) -> Result<Operator, RunError> {
        let dim = self.dim();
        if dim > max_dim {
            return Err(RunError::Schema(format!("operator dimension {dim} exceeds the guard {max_dim}")));
        }
        let op = match self {
            OperatorSpec::Clock { p, q } => {
                nclab_core::torus::clock(TorusParams::new(*p, *q)?)?.into_operator()
            }
            OperatorSpec::Shift { dim } => {
                if *dim == 0 {
                    return Err(RunError::Schema("shift dimension must be positive".into()));
                }
                nclab_core::torus::shift(*dim).into_operator()
            }
            OperatorSpec::DiagAngles { angles } => {
                let e: Vec<C64> = angles.iter().map(|&a| nclab_core::spectral::phase(a)).collect();
                Operator::diagonal(&e)?
            }
            OperatorSpec::Random { dim, seed: own } => {
                nclab_core::random::random_unitary_seeded(*dim, own.unwrap_or(seed))?.into_operator()
            }
            OperatorSpec::Matrix { rows } => {
                let mut e = Vec::with_capacity(dim * dim);
                for r in rows {
                    if r.len() != dim {
                        return Err(RunError::Schema(format!("matrix row of length {} in a {dim}x{dim} matrix", r.len())));
                    }
                    e.extend(r.iter().map(|&[re, im]| C64::new(re, im)));
                }
                Operator::from_row_slice(dim, &e)?
            }
            OperatorSpec::Power { of, exponent } => of.build(seed, max_dim)?.pow(*exponent),
        };
        Ok(op)
    }

    pub fn build_unitary(&self, seed: u64, max_dim: usize) -> Result<Unitary, RunError> {
        Ok(Unitary::new(self.build(seed, max_dim)?)?)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TowerParams {
    #[serde(default = "default_base")]
    pub base: OperatorSpec,
    pub depth: usize,
    /// One branch for every level, or one per level.
    #[serde(default = "default_branches")]
    pub branches: Vec<BranchFunction>,
    /// Functions for the level-independence sweep. A hat family when absent.
    #[serde(default)]
    pub functions: Option<Vec<CompactFunction>>,
}

fn default_base() -> OperatorSpec {
    OperatorSpec::Clock { p: 1, q: 8 }
}

fn default_branches() -> Vec<BranchFunction> {
    vec![BranchFunction::principal(2).expect("order 2")]
}

/// Five height-one hats of half width 1/2 centred on `[-1, 1]`.
pub fn default_hat_family() -> Vec<CompactFunction> {
    [-1.0, -0.5, 0.0, 0.5, 1.0]
        .iter()
        .map(|&c| CompactFunction::hat(c, 0.5, C64::new(1.0, 0.0)).expect("valid hat"))
        .collect()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TorusConfig {
    pub p: i64,
    pub q: u64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThetaTowerParams {
    pub p: i64,
    pub q: u64,
    pub steps: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpanParams {
    pub generators: Vec<OperatorSpec>,
    pub word_cap: usize,
    #[serde(default)]
    pub rank_tol: Option<f64>,
    #[serde(default)]
    pub word_budget: Option<usize>,
    #[serde(default)]
    pub expected_dim: Option<usize>,
    /// Operators whose distance to the span is reported.
    #[serde(default)]
    pub members: Vec<OperatorSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IsoParams {
    pub a_generators: Vec<OperatorSpec>,
    pub u: OperatorSpec,
    pub xi: BranchFunction,
    pub eta: BranchFunction,
    pub m: usize,
    pub word_cap: usize,
    #[serde(default)]
    pub samples: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoParams {}
