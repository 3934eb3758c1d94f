//! Experiment configuration (TOML).
//!
//! ```toml
//! [data]
//! path = "pd_speech_features.csv"   # relative to the config file
//! label_column = "class"
//! drop_columns = ["id"]
//! positive_label = 1
//!
//! [split]
//! test_fraction = 0.3
//! stratified = true
//!
//! [pca]
//! arms = ["off", "on"]               # run without and/or with PCA
//! standardize = true
//! variance_threshold = 0.95          # or: fixed_k = 40
//!
//! [forest]
//! n_trees = 100
//! # features_per_split = 27          # default floor(sqrt(p))
//! max_depth = 16                     # or "none"
//! min_samples_split = 2
//! bootstrap = true
//!
//! [mlp]
//! hidden = [32]
//! epochs = 200
//! learning_rate = 0.01
//! batch_size = 32
//!
//! [run]
//! models = ["forest", "mlp"]
//! seeds = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10]
//! output_dir = "results"             # relative to the config file
//! save_models = true
//! ```
//!
//! Every key except `data.path` has the default shown.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::SplitSpec;
use crate::error::{Error, Result};
use crate::forest::ForestParams;
use crate::mlp::TrainParams;
use crate::pca::ComponentPolicy;
use crate::pipeline::{ModelKind, ModelSettings, PcaSettings};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub data: DataConfig,
    #[serde(default)]
    pub split: SplitConfig,
    #[serde(default)]
    pub pca: PcaConfig,
    #[serde(default)]
    pub forest: ForestConfig,
    #[serde(default)]
    pub mlp: MlpConfig,
    #[serde(default)]
    pub run: RunConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub path: PathBuf,
    #[serde(default = "default_label_column")]
    pub label_column: String,
    #[serde(default = "default_drop_columns")]
    pub drop_columns: Vec<String>,
    #[serde(default = "default_positive_label")]
    pub positive_label: u8,
}

fn default_label_column() -> String {
    crate::data::DEFAULT_LABEL_COLUMN.to_owned()
}

fn default_drop_columns() -> Vec<String> {
    crate::data::DEFAULT_DROP_COLUMNS
        .iter()
        .map(|s| s.to_string())
        .collect()
}

fn default_positive_label() -> u8 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplitConfig {
    pub test_fraction: f64,
    pub stratified: bool,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            test_fraction: 0.3,
            stratified: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PcaArm {
    Off,
    On,
}

impl PcaArm {
    pub fn as_str(self) -> &'static str {
        match self {
            PcaArm::Off => "off",
            PcaArm::On => "on",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PcaConfig {
    pub arms: Vec<PcaArm>,
    pub standardize: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variance_threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fixed_k: Option<usize>,
}

impl Default for PcaConfig {
    fn default() -> Self {
        PcaConfig {
            arms: vec![PcaArm::Off, PcaArm::On],
            standardize: true,
            variance_threshold: None,
            fixed_k: None,
        }
    }
}

impl PcaConfig {
    pub fn policy(&self) -> Result<ComponentPolicy> {
        match (self.variance_threshold, self.fixed_k) {
            (Some(_), Some(_)) => Err(Error::Config(
                "pca: set variance_threshold or fixed_k, not both".into(),
            )),
            (None, Some(k)) => Ok(ComponentPolicy::FixedK(k)),
            (Some(t), None) => Ok(ComponentPolicy::VarianceThreshold(t)),
            (None, None) => Ok(ComponentPolicy::default()),
        }
    }

    pub fn settings(&self) -> Result<PcaSettings> {
        Ok(PcaSettings {
            policy: self.policy()?,
            standardize: self.standardize,
        })
    }
}

/// Integer depth or the string `"none"` for unlimited.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MaxDepth {
    Depth(usize),
    Unlimited(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForestConfig {
    pub n_trees: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub features_per_split: Option<usize>,
    pub max_depth: MaxDepth,
    pub min_samples_split: usize,
    pub bootstrap: bool,
}

impl Default for ForestConfig {
    fn default() -> Self {
        let d = ForestParams::default();
        ForestConfig {
            n_trees: d.n_trees,
            features_per_split: d.features_per_split,
            max_depth: MaxDepth::Depth(16),
            min_samples_split: d.min_samples_split,
            bootstrap: d.bootstrap,
        }
    }
}

impl ForestConfig {
    pub fn params(&self) -> Result<ForestParams> {
        let max_depth = match &self.max_depth {
            MaxDepth::Depth(d) => Some(*d),
            MaxDepth::Unlimited(s) if s == "none" => None,
            MaxDepth::Unlimited(s) => {
                return Err(Error::Config(format!(
                    "forest.max_depth must be an integer or \"none\", got \"{s}\""
                )))
            }
        };
        if self.n_trees == 0 {
            return Err(Error::Config("forest.n_trees must be at least 1".into()));
        }
        if self.features_per_split == Some(0) {
            return Err(Error::Config(
                "forest.features_per_split must be at least 1".into(),
            ));
        }
        Ok(ForestParams {
            n_trees: self.n_trees,
            features_per_split: self.features_per_split,
            max_depth,
            min_samples_split: self.min_samples_split,
            bootstrap: self.bootstrap,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MlpConfig {
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
}

impl Default for MlpConfig {
    fn default() -> Self {
        let t = TrainParams::default();
        MlpConfig {
            hidden: vec![32],
            epochs: t.epochs,
            learning_rate: t.learning_rate,
            batch_size: t.batch_size,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub models: Vec<ModelKind>,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
    pub save_models: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            models: vec![ModelKind::Forest, ModelKind::Mlp],
            seeds: (1..=10).collect(),
            output_dir: PathBuf::from("results"),
            save_models: true,
        }
    }
}

/// Environment variable that overrides `run.output_dir`.
pub const OUTPUT_DIR_ENV: &str = "PCARF_OUTPUT_DIR";

impl ExperimentConfig {
    /// Parses TOML text, applies `key.path=value` overrides, and resolves
    /// relative paths against `base_dir`.
    pub fn parse(text: &str, source_name: &str, base_dir: &Path, overrides: &[String]) -> Result<Self> {
        let config_err = |e: toml::de::Error| Error::Config(format!("{source_name}: {e}"));
        // Parse the untouched text first so type errors carry line numbers.
        let _: ExperimentConfig = toml::from_str(text).map_err(config_err)?;
        let mut table: toml::Table = toml::from_str(text).map_err(config_err)?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let mut config: ExperimentConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(format!("after overrides: {e}")))?;
        if config.data.path.is_relative() {
            config.data.path = base_dir.join(&config.data.path);
        }
        if config.run.output_dir.is_relative() {
            config.run.output_dir = base_dir.join(&config.run.output_dir);
        }
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        ExperimentConfig::parse(&text, &path.display().to_string(), base, overrides)
    }

    pub fn validate(&self) -> Result<()> {
        if self.data.positive_label > 1 {
            return Err(Error::Config("data.positive_label must be 0 or 1".into()));
        }
        SplitSpec::new(self.split.test_fraction, 0, self.split.stratified)
            .map_err(|e| Error::Config(format!("split: {e}")))?;
        if self.pca.arms.is_empty() {
            return Err(Error::Config("pca.arms must not be empty".into()));
        }
        match self.pca.policy()? {
            ComponentPolicy::FixedK(0) => {
                return Err(Error::Config("pca.fixed_k must be at least 1".into()))
            }
            ComponentPolicy::VarianceThreshold(t) if !(t > 0.0 && t <= 1.0) => {
                return Err(Error::Config(
                    "pca.variance_threshold must lie in (0, 1]".into(),
                ))
            }
            _ => {}
        }
        self.forest.params()?;
        if self.mlp.hidden.contains(&0) {
            return Err(Error::Config("mlp.hidden sizes must be positive".into()));
        }
        if self.mlp.batch_size == 0 {
            return Err(Error::Config("mlp.batch_size must be positive".into()));
        }
        if !(self.mlp.learning_rate.is_finite() && self.mlp.learning_rate >= 0.0) {
            return Err(Error::Config("mlp.learning_rate must be non-negative".into()));
        }
        if self.run.models.is_empty() {
            return Err(Error::Config("run.models must name at least one model".into()));
        }
        if self.run.seeds.is_empty() {
            return Err(Error::Config("run.seeds must not be empty".into()));
        }
        let mut seeds = self.run.seeds.clone();
        seeds.sort_unstable();
        seeds.dedup();
        if seeds.len() != self.run.seeds.len() {
            return Err(Error::Config("run.seeds contains duplicates".into()));
        }
        Ok(())
    }

    pub fn model_settings(&self, kind: ModelKind) -> Result<ModelSettings> {
        Ok(match kind {
            ModelKind::Forest => ModelSettings::Forest(self.forest.params()?),
            ModelKind::Mlp => ModelSettings::Mlp {
                hidden: self.mlp.hidden.clone(),
                train: TrainParams {
                    epochs: self.mlp.epochs,
                    learning_rate: self.mlp.learning_rate,
                    batch_size: self.mlp.batch_size,
                },
            },
        })
    }
}

/// Sets a dotted key such as `forest.n_trees=50`. The value is read as a
/// TOML value, falling back to a plain string.
fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment.split_once('=').ok_or_else(|| {
        Error::Config(format!("override `{assignment}` is not of the form key=value"))
    })?;
    let value = match toml::from_str::<toml::Table>(&format!("v = {}", raw.trim())) {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.trim().to_owned()),
    };
    let parts: Vec<&str> = key.trim().split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("bad override key `{key}`")));
    }
    let mut current = table;
    for part in &parts[..parts.len() - 1] {
        let entry = current
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        current = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override key `{key}`: `{part}` is not a table")))?;
    }
    current.insert(parts[parts.len() - 1].to_owned(), value);
    Ok(())
}
