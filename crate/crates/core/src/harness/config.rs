//! Experiment and grid configuration files.
//!
//! Both are flat JSON objects. Unknown keys are rejected so that typos do not
//! silently fall back to defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::active_selection::{SelectionStrategy, DEFAULT_BATCH_SIZE, DEFAULT_TARGET_RECALL};
use crate::cluster::ClusterParams;
use crate::error::{Error, Result};
use crate::featurize::DEFAULT_MAX_FEATURES;
use crate::metrics::ToleranceMode;
use crate::model::Hyperparams;
use crate::seeding::{SeedMethod, DEFAULT_SEED_SIZE};

/// Environment variable overriding the master seed.
pub const SEED_ENV_VAR: &str = "TARSIM_SEED";

/// Settings shared by single experiments and grids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunParams {
    pub corpus_path: PathBuf,
    pub keywords_path: Option<PathBuf>,
    pub seed_size: usize,
    pub batch_size: usize,
    pub target_recall: f64,
    pub max_features: usize,
    /// `None` runs until the pool is exhausted.
    pub max_rounds: Option<usize>,
    pub rng_seed: u64,
    pub l2_lambda: f64,
    pub learning_rate: f64,
    pub max_iters: usize,
    pub tol: f64,
    pub cluster_branching: usize,
    pub cluster_depth: usize,
    pub cluster_min_split: usize,
    /// Stop once a round's review percentage falls to this value.
    pub stop_at_review_pct: Option<f64>,
    pub tolerance_mode: ToleranceMode,
}

impl Default for RunParams {
    fn default() -> Self {
        let hp = Hyperparams::default();
        let cp = ClusterParams::default();
        RunParams {
            corpus_path: PathBuf::new(),
            keywords_path: None,
            seed_size: DEFAULT_SEED_SIZE,
            batch_size: DEFAULT_BATCH_SIZE,
            target_recall: DEFAULT_TARGET_RECALL,
            max_features: DEFAULT_MAX_FEATURES,
            max_rounds: None,
            rng_seed: 0,
            l2_lambda: hp.l2_lambda,
            learning_rate: hp.learning_rate,
            max_iters: hp.max_iters,
            tol: hp.tol,
            cluster_branching: cp.branching,
            cluster_depth: cp.depth,
            cluster_min_split: cp.min_split,
            stop_at_review_pct: None,
            tolerance_mode: ToleranceMode::Relative,
        }
    }
}

impl RunParams {
    pub fn hyperparams(&self) -> Hyperparams {
        Hyperparams {
            l2_lambda: self.l2_lambda,
            learning_rate: self.learning_rate,
            max_iters: self.max_iters,
            tol: self.tol,
        }
    }

    pub fn cluster_params(&self) -> ClusterParams {
        ClusterParams {
            branching: self.cluster_branching,
            depth: self.cluster_depth,
            min_split: self.cluster_min_split,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.seed_size < 2 {
            return Err(Error::InvalidConfig("seed_size must be at least 2".into()));
        }
        if self.batch_size < 1 {
            return Err(Error::InvalidConfig("batch_size must be at least 1".into()));
        }
        if !(self.target_recall > 0.0 && self.target_recall <= 1.0) {
            return Err(Error::InvalidConfig("target_recall must be in (0, 1]".into()));
        }
        if self.max_features < 1 {
            return Err(Error::InvalidConfig("max_features must be at least 1".into()));
        }
        self.hyperparams().validate()?;
        self.cluster_params().validate()
    }

    /// Resolves relative paths against `base`.
    fn rebase(&mut self, base: &Path) {
        if self.corpus_path.is_relative() && !self.corpus_path.as_os_str().is_empty() {
            self.corpus_path = base.join(&self.corpus_path);
        }
        if let Some(k) = &self.keywords_path {
            if k.is_relative() {
                self.keywords_path = Some(base.join(k));
            }
        }
    }
}

/// One seed method and one active-learning strategy.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub seed_method: SeedMethod,
    pub al_strategy: SelectionStrategy,
    pub params: RunParams,
}

impl ExperimentConfig {
    pub fn new(seed_method: SeedMethod, al_strategy: SelectionStrategy, params: RunParams) -> Self {
        ExperimentConfig {
            seed_method,
            al_strategy,
            params,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.al_strategy.validate()
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let mut map = parse_object(s)?;
        let seed_method = take_required(&mut map, "seed_method")?;
        let al_strategy = take_required(&mut map, "al_strategy")?;
        let params = params_from_map(map)?;
        let cfg = ExperimentConfig {
            seed_method,
            al_strategy,
            params,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file; relative paths inside resolve against the file's
    /// directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| config_io(path, e))?;
        let mut cfg = Self::from_json_str(&text)?;
        cfg.params.rebase(path.parent().unwrap_or(Path::new(".")));
        Ok(cfg)
    }

    pub fn to_json_value(&self) -> Value {
        let mut map = params_to_map(&self.params);
        map.insert("seed_method".into(), Value::String(self.seed_method.name().into()));
        map.insert("al_strategy".into(), Value::String(self.al_strategy.to_string()));
        Value::Object(map)
    }
}

/// Cartesian grid of seed methods, strategies and replicates.
#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    pub seed_methods: Vec<SeedMethod>,
    pub strategies: Vec<SelectionStrategy>,
    pub replicates: usize,
    /// `params.rng_seed` is the master seed.
    pub params: RunParams,
}

impl GridConfig {
    /// All five seed methods against all six strategies.
    pub fn full(params: RunParams) -> Self {
        GridConfig {
            seed_methods: SeedMethod::ALL.to_vec(),
            strategies: SelectionStrategy::DEFAULT_GRID.to_vec(),
            replicates: 1,
            params,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.seed_methods.is_empty() || self.strategies.is_empty() || self.replicates == 0 {
            return Err(Error::InvalidConfig("grid must be nonempty".into()));
        }
        for s in &self.strategies {
            s.validate()?;
        }
        self.params.validate()
    }

    /// Missing `seed_methods` / `strategies` default to the full grid.
    pub fn from_json_str(s: &str) -> Result<Self> {
        let mut map = parse_object(s)?;
        let seed_methods = take_optional(&mut map, "seed_methods")?.unwrap_or_else(|| SeedMethod::ALL.to_vec());
        let strategies =
            take_optional(&mut map, "strategies")?.unwrap_or_else(|| SelectionStrategy::DEFAULT_GRID.to_vec());
        let replicates = take_optional(&mut map, "replicates")?.unwrap_or(1);
        let params = params_from_map(map)?;
        let cfg = GridConfig {
            seed_methods,
            strategies,
            replicates,
            params,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| config_io(path, e))?;
        let mut cfg = Self::from_json_str(&text)?;
        cfg.params.rebase(path.parent().unwrap_or(Path::new(".")));
        Ok(cfg)
    }

    pub fn to_json_value(&self) -> Value {
        let mut map = params_to_map(&self.params);
        map.insert(
            "seed_methods".into(),
            Value::Array(
                self.seed_methods
                    .iter()
                    .map(|m| Value::String(m.name().into()))
                    .collect(),
            ),
        );
        map.insert(
            "strategies".into(),
            Value::Array(self.strategies.iter().map(|s| Value::String(s.to_string())).collect()),
        );
        map.insert("replicates".into(), Value::from(self.replicates));
        Value::Object(map)
    }

    pub fn needs_keywords(&self) -> bool {
        self.seed_methods.iter().any(|m| m.uses_keywords())
    }

    pub fn needs_clusters(&self) -> bool {
        self.seed_methods.iter().any(|m| m.uses_clusters())
    }
}

/// Reads [`SEED_ENV_VAR`], if set.
pub fn seed_override_from_env() -> Result<Option<u64>> {
    match std::env::var(SEED_ENV_VAR) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::InvalidConfig(format!("{SEED_ENV_VAR} must be an unsigned integer, got {v:?}"))),
        Err(_) => Ok(None),
    }
}

fn config_io(path: &Path, e: std::io::Error) -> Error {
    Error::InvalidConfig(format!("cannot read {}: {e}", path.display()))
}

fn parse_object(s: &str) -> Result<Map<String, Value>> {
    match serde_json::from_str::<Value>(s) {
        Ok(Value::Object(map)) => Ok(map),
        Ok(_) => Err(Error::InvalidConfig("configuration must be a JSON object".into())),
        Err(e) => Err(Error::InvalidConfig(e.to_string())),
    }
}

fn take_required<T: for<'de> Deserialize<'de>>(map: &mut Map<String, Value>, key: &str) -> Result<T> {
    take_optional(map, key)?.ok_or_else(|| Error::InvalidConfig(format!("missing key {key:?}")))
}

fn take_optional<T: for<'de> Deserialize<'de>>(map: &mut Map<String, Value>, key: &str) -> Result<Option<T>> {
    map.remove(key)
        .map(|v| serde_json::from_value(v).map_err(|e| Error::InvalidConfig(format!("{key}: {e}"))))
        .transpose()
}

fn params_from_map(map: Map<String, Value>) -> Result<RunParams> {
    serde_json::from_value(Value::Object(map)).map_err(|e| Error::InvalidConfig(e.to_string()))
}

fn params_to_map(params: &RunParams) -> Map<String, Value> {
    match serde_json::to_value(params) {
        Ok(Value::Object(map)) => map,
        _ => unreachable!("RunParams serializes to an object"),
    }
}
