//! Experiment harness: load, split, optional PCA, train, evaluate, report.
//!
//! [`run`] executes one cell per (model, PCA arm, seed). The seed picks the
//! train/test split (shared by every model and arm of that seed) and, via
//! [`derive_seed`], the classifier's randomness. Cells run in parallel;
//! every output is ordered by (model, arm, seed) position in the config, so
//! identical configs produce byte-identical files.
//!
//! Files written to the output directory:
//!
//! * `metrics.csv`: one row per cell with confusion counts and metrics,
//! * `comparison.txt`: aligned mean ± sd table per model and PCA arm,
//! * `summary.json`: everything above in machine-readable form,
//! * `roc/<cell>.csv`: ROC points of each cell,
//! * `models/<cell>.model`: fitted pipelines (when `run.save_models`).
//!
//! `<cell>` is `<model>_pca-<on|off>_seed-<seed>`.

pub mod config;
mod report;

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::data::{load_csv, stratified_split, LabeledDataset, SplitSpec};
use crate::error::{Error, Result};
use crate::metrics::{ConfusionMatrix, MetricsReport};
use crate::pca;
use crate::pipeline::{ModelKind, Pipeline, PipelineSettings};
use crate::rng::derive_seed;

pub use config::{ExperimentConfig, PcaArm, OUTPUT_DIR_ENV};
pub use report::{comparison_table, metrics_csv};

/// Stream ids for [`derive_seed`]; the split uses the seed itself.
const FOREST_STREAM: u64 = 1;
const MLP_STREAM: u64 = 2;

#[derive(Debug, Clone, Serialize)]
pub struct CellResult {
    pub model: ModelKind,
    pub pca: PcaArm,
    pub seed: u64,
    pub n_train: usize,
    pub n_test: usize,
    /// Classifier input width (PCA components when the arm is on).
    pub n_inputs: usize,
    pub confusion: ConfusionMatrix,
    pub metrics: MetricsReport,
    pub auc: Option<f64>,
    pub roc_file: Option<String>,
    pub model_file: Option<String>,
}

impl CellResult {
    pub fn name(&self) -> String {
        cell_name(self.model, self.pca, self.seed)
    }
}

fn cell_name(model: ModelKind, arm: PcaArm, seed: u64) -> String {
    format!("{}_pca-{}_seed-{}", model.as_str(), arm.as_str(), seed)
}

/// Mean and sample standard deviation over seeds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stat {
    pub mean: f64,
    pub sd: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Stat {
        let n = values.len() as f64;
        if values.is_empty() {
            return Stat { mean: 0.0, sd: 0.0 };
        }
        let mean = values.iter().sum::<f64>() / n;
        let sd = if values.len() > 1 {
            (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Stat { mean, sd }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Aggregate {
    pub model: ModelKind,
    pub pca: PcaArm,
    pub seeds: Vec<u64>,
    pub accuracy: Stat,
    pub sensitivity: Stat,
    pub specificity: Stat,
    pub precision: Stat,
    pub f1: Stat,
    /// Over the seeds whose test set had both classes.
    pub auc: Option<Stat>,
}

impl Aggregate {
    pub fn stats(&self) -> [Stat; 5] {
        [
            self.accuracy,
            self.sensitivity,
            self.specificity,
            self.precision,
            self.f1,
        ]
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SeedDirection {
    pub seed: u64,
    pub accuracy_without_pca: f64,
    pub accuracy_with_pca: f64,
    pub without_pca_better: bool,
}

/// Whether the forest scores higher without PCA than with it, per seed.
#[derive(Debug, Clone, Serialize)]
pub struct DirectionCheck {
    pub per_seed: Vec<SeedDirection>,
    pub holds_on: usize,
    pub seeds: usize,
    pub mean_accuracy_without_pca: f64,
    pub mean_accuracy_with_pca: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DatasetSummary {
    pub file: String,
    pub samples: usize,
    pub features: usize,
    pub class_counts: [usize; 2],
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub dataset: DatasetSummary,
    pub settings: RunSettings,
    pub cells: Vec<CellResult>,
    pub aggregates: Vec<Aggregate>,
    pub direction_check: Option<DirectionCheck>,
}

/// Path-free echo of the configuration, embedded in the summary.
#[derive(Debug, Clone, Serialize)]
pub struct RunSettings {
    pub label_column: String,
    pub drop_columns: Vec<String>,
    pub positive_label: u8,
    pub split: config::SplitConfig,
    pub pca: config::PcaConfig,
    pub forest: config::ForestConfig,
    pub mlp: config::MlpConfig,
    pub models: Vec<ModelKind>,
    pub seeds: Vec<u64>,
}

impl RunReport {
    pub fn aggregate(&self, model: ModelKind, arm: PcaArm) -> Option<&Aggregate> {
        self.aggregates
            .iter()
            .find(|a| a.model == model && a.pca == arm)
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Loads the dataset named in `config` and runs the experiment.
pub fn run(config: &ExperimentConfig) -> Result<RunReport> {
    config.validate()?;
    let ds = load_csv(
        &config.data.path,
        &config.data.label_column,
        &config.data.drop_columns,
    )?;
    run_on(config, &ds)
}

/// Runs the experiment on an already loaded dataset.
pub fn run_on(config: &ExperimentConfig, ds: &LabeledDataset) -> Result<RunReport> {
    config.validate()?;
    let out = &config.run.output_dir;
    let roc_dir = out.join("roc");
    let model_dir = out.join("models");
    fs::create_dir_all(&roc_dir).map_err(|e| Error::io(&roc_dir, e))?;
    if config.run.save_models {
        fs::create_dir_all(&model_dir).map_err(|e| Error::io(&model_dir, e))?;
    }

    let per_seed: Vec<Vec<CellResult>> = config
        .run
        .seeds
        .par_iter()
        .map(|&seed| run_seed(config, ds, seed, &roc_dir, &model_dir))
        .collect::<Result<_>>()?;

    let mut cells: Vec<CellResult> = per_seed.into_iter().flatten().collect();
    let position = |c: &CellResult| {
        (
            config.run.models.iter().position(|&m| m == c.model),
            config.pca.arms.iter().position(|&a| a == c.pca),
            config.run.seeds.iter().position(|&s| s == c.seed),
        )
    };
    cells.sort_by_key(position);

    let aggregates = aggregate(config, &cells);
    let direction_check = direction_check(config, &cells);
    let [n0, n1] = ds.class_counts();
    let report = RunReport {
        dataset: DatasetSummary {
            file: config
                .data
                .path
                .file_name()
                .map_or_else(String::new, |f| f.to_string_lossy().into_owned()),
            samples: ds.n_samples(),
            features: ds.n_features(),
            class_counts: [n0, n1],
        },
        settings: RunSettings {
            label_column: config.data.label_column.clone(),
            drop_columns: config.data.drop_columns.clone(),
            positive_label: config.data.positive_label,
            split: config.split.clone(),
            pca: config.pca.clone(),
            forest: config.forest.clone(),
            mlp: config.mlp.clone(),
            models: config.run.models.clone(),
            seeds: config.run.seeds.clone(),
        },
        cells,
        aggregates,
        direction_check,
    };

    write_file(&out.join("metrics.csv"), &metrics_csv(&report))?;
    write_file(&out.join("comparison.txt"), &comparison_table(&report))?;
    let json = serde_json::to_string_pretty(&report)
        .map_err(|e| Error::Numerical(format!("cannot serialize summary: {e}")))?;
    write_file(&out.join("summary.json"), &(json + "\n"))?;
    Ok(report)
}

fn run_seed(
    config: &ExperimentConfig,
    ds: &LabeledDataset,
    seed: u64,
    roc_dir: &Path,
    model_dir: &Path,
) -> Result<Vec<CellResult>> {
    let spec = SplitSpec::new(config.split.test_fraction, seed, config.split.stratified)?;
    let split = stratified_split(ds, &spec)?;
    let mut results = Vec::new();
    for &arm in &config.pca.arms {
        let pca_model = match arm {
            PcaArm::On => {
                let s = config.pca.settings()?;
                Some(pca::fit(split.train.features(), s.policy, s.standardize)?)
            }
            PcaArm::Off => None,
        };
        for &model in &config.run.models {
            let stream = match model {
                ModelKind::Forest => FOREST_STREAM,
                ModelKind::Mlp => MLP_STREAM,
            };
            let settings = PipelineSettings {
                positive_label: config.data.positive_label,
                pca: None,
                model: config.model_settings(model)?,
            };
            let pipeline = Pipeline::fit_with_pca(
                &split.train,
                pca_model.clone(),
                &settings,
                derive_seed(seed, stream),
                &config.data.label_column,
                &config.data.drop_columns,
            )?;
            let eval = pipeline.evaluate(&split.test)?;
            let name = cell_name(model, arm, seed);
            let roc_file = match &eval.roc {
                Some(roc) => {
                    let rel = PathBuf::from("roc").join(format!("{name}.csv"));
                    write_file(&roc_dir.join(format!("{name}.csv")), &roc.to_csv())?;
                    Some(rel.to_string_lossy().into_owned())
                }
                None => None,
            };
            let model_file = if config.run.save_models {
                let rel = PathBuf::from("models").join(format!("{name}.model"));
                write_file(&model_dir.join(format!("{name}.model")), &pipeline.to_text())?;
                Some(rel.to_string_lossy().into_owned())
            } else {
                None
            };
            results.push(CellResult {
                model,
                pca: arm,
                seed,
                n_train: split.train.n_samples(),
                n_test: split.test.n_samples(),
                n_inputs: pipeline.n_components().unwrap_or(pipeline.n_features),
                confusion: eval.confusion,
                metrics: eval.report,
                auc: eval.roc.as_ref().map(|r| r.auc),
                roc_file,
                model_file,
            });
        }
    }
    Ok(results)
}

fn aggregate(config: &ExperimentConfig, cells: &[CellResult]) -> Vec<Aggregate> {
    let mut out = Vec::new();
    for &model in &config.run.models {
        for &arm in &config.pca.arms {
            let group: Vec<&CellResult> = cells
                .iter()
                .filter(|c| c.model == model && c.pca == arm)
                .collect();
            let col = |i: usize| -> Stat {
                Stat::of(
                    &group
                        .iter()
                        .map(|c| c.metrics.values()[i])
                        .collect::<Vec<_>>(),
                )
            };
            let aucs: Vec<f64> = group.iter().filter_map(|c| c.auc).collect();
            out.push(Aggregate {
                model,
                pca: arm,
                seeds: group.iter().map(|c| c.seed).collect(),
                accuracy: col(0),
                sensitivity: col(1),
                specificity: col(2),
                precision: col(3),
                f1: col(4),
                auc: (!aucs.is_empty()).then(|| Stat::of(&aucs)),
            });
        }
    }
    out
}

fn direction_check(config: &ExperimentConfig, cells: &[CellResult]) -> Option<DirectionCheck> {
    let has = |a| config.pca.arms.contains(&a);
    if !config.run.models.contains(&ModelKind::Forest) || !has(PcaArm::On) || !has(PcaArm::Off) {
        return None;
    }
    let accuracy = |seed: u64, arm: PcaArm| {
        cells
            .iter()
            .find(|c| c.model == ModelKind::Forest && c.pca == arm && c.seed == seed)
            .map(|c| c.metrics.accuracy)
    };
    let per_seed: Vec<SeedDirection> = config
        .run
        .seeds
        .iter()
        .filter_map(|&seed| {
            let without = accuracy(seed, PcaArm::Off)?;
            let with = accuracy(seed, PcaArm::On)?;
            Some(SeedDirection {
                seed,
                accuracy_without_pca: without,
                accuracy_with_pca: with,
                without_pca_better: without > with,
            })
        })
        .collect();
    let n = per_seed.len().max(1) as f64;
    Some(DirectionCheck {
        holds_on: per_seed.iter().filter(|d| d.without_pca_better).count(),
        seeds: per_seed.len(),
        mean_accuracy_without_pca: per_seed.iter().map(|d| d.accuracy_without_pca).sum::<f64>() / n,
        mean_accuracy_with_pca: per_seed.iter().map(|d| d.accuracy_with_pca).sum::<f64>() / n,
        per_seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stat_of_values() {
        let s = Stat::of(&[1.0, 2.0, 3.0]);
        assert_eq!(s.mean, 2.0);
        assert_eq!(s.sd, 1.0);
        assert_eq!(Stat::of(&[4.0]).sd, 0.0);
    }
}
