//! A fitted preprocessing + classifier chain and its model file.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::LabeledDataset;
use crate::error::{Error, Result};
use crate::forest::{self, ForestModel, ForestParams};
use crate::linalg::Matrix;
use crate::metrics::{confusion, metrics_report, roc_curve, ConfusionMatrix, MetricsReport, RocCurve};
use crate::mlp::{self, MlpModel, Standardizer, TrainParams};
use crate::pca::{self, ComponentPolicy, PcaModel};
use crate::textfmt::TextReader;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Forest,
    Mlp,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Forest => "forest",
            ModelKind::Mlp => "mlp",
        }
    }

    /// Column heading used in comparison tables.
    pub fn display_name(self) -> &'static str {
        match self {
            ModelKind::Forest => "Random Forest",
            ModelKind::Mlp => "ANN",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Classifier {
    Forest(ForestModel),
    /// The network sees z-scored inputs and models P(label = 1).
    Mlp {
        standardizer: Standardizer,
        network: MlpModel,
    },
}

impl Classifier {
    pub fn kind(&self) -> ModelKind {
        match self {
            Classifier::Forest(_) => ModelKind::Forest,
            Classifier::Mlp { .. } => ModelKind::Mlp,
        }
    }
}

/// Settings for [`Pipeline::fit`].
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineSettings {
    pub positive_label: u8,
    /// `None` skips PCA.
    pub pca: Option<PcaSettings>,
    pub model: ModelSettings,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PcaSettings {
    pub policy: ComponentPolicy,
    pub standardize: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelSettings {
    Forest(ForestParams),
    Mlp {
        hidden: Vec<usize>,
        train: TrainParams,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pipeline {
    pub label_column: String,
    pub drop_columns: Vec<String>,
    pub positive_label: u8,
    pub n_features: usize,
    pub pca: Option<PcaModel>,
    pub classifier: Classifier,
}

/// Test-set outcome of a fitted pipeline.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub scores: Vec<f64>,
    pub predictions: Vec<u8>,
    pub confusion: ConfusionMatrix,
    pub report: MetricsReport,
    /// `None` when the evaluation set holds a single class.
    pub roc: Option<RocCurve>,
}

impl Pipeline {
    /// Fits PCA (when requested) on `train`, then the classifier on the
    /// projected features. `seed` drives the classifier's randomness.
    pub fn fit(
        train: &LabeledDataset,
        settings: &PipelineSettings,
        seed: u64,
        label_column: &str,
        drop_columns: &[String],
    ) -> Result<Pipeline> {
        let pca = match &settings.pca {
            Some(p) => Some(pca::fit(train.features(), p.policy, p.standardize)?),
            None => None,
        };
        Pipeline::fit_with_pca(train, pca, settings, seed, label_column, drop_columns)
    }

    /// As [`Pipeline::fit`] with an already fitted PCA model.
    pub fn fit_with_pca(
        train: &LabeledDataset,
        pca: Option<PcaModel>,
        settings: &PipelineSettings,
        seed: u64,
        label_column: &str,
        drop_columns: &[String],
    ) -> Result<Pipeline> {
        let features = match &pca {
            Some(model) => pca::transform(model, train.features())?,
            None => train.features().clone(),
        };
        let k = features.cols();
        let projected = LabeledDataset::unnamed(features, train.labels().to_vec())?;
        let classifier = match &settings.model {
            ModelSettings::Forest(params) => Classifier::Forest(forest::fit_forest(
                &projected,
                params,
                seed,
                settings.positive_label,
            )?),
            ModelSettings::Mlp { hidden, train: tp } => {
                let standardizer = Standardizer::fit(projected.features())?;
                let scaled = projected.with_features(
                    standardizer.apply(projected.features())?,
                    projected.feature_names().to_vec(),
                )?;
                let mut sizes = vec![k];
                sizes.extend(hidden);
                sizes.push(1);
                let init = MlpModel::init(&sizes, seed)?;
                let network = mlp::train(&init, &scaled, tp, seed.wrapping_add(1))?;
                Classifier::Mlp {
                    standardizer,
                    network,
                }
            }
        };
        Ok(Pipeline {
            label_column: label_column.to_owned(),
            drop_columns: drop_columns.to_vec(),
            positive_label: settings.positive_label,
            n_features: train.n_features(),
            pca,
            classifier,
        })
    }

    pub fn n_components(&self) -> Option<usize> {
        self.pca.as_ref().map(PcaModel::n_components)
    }

    /// Score in [0, 1] for the positive label, one per row.
    pub fn scores(&self, x: &Matrix) -> Result<Vec<f64>> {
        if x.cols() != self.n_features {
            return Err(Error::Dimension {
                expected: self.n_features,
                got: x.cols(),
            });
        }
        let projected;
        let x = match &self.pca {
            Some(model) => {
                projected = pca::transform(model, x)?;
                &projected
            }
            None => x,
        };
        match &self.classifier {
            Classifier::Forest(model) => x
                .row_iter()
                .map(|row| forest::predict_score(model, row))
                .collect(),
            Classifier::Mlp {
                standardizer,
                network,
            } => {
                let z = standardizer.apply(x)?;
                z.row_iter()
                    .map(|row| {
                        let p1 = network.forward(row)?;
                        Ok(if self.positive_label == 1 { p1 } else { 1.0 - p1 })
                    })
                    .collect()
            }
        }
    }

    /// Positive label where the score is at least 0.5.
    pub fn predict(&self, x: &Matrix) -> Result<Vec<u8>> {
        Ok(self
            .scores(x)?
            .into_iter()
            .map(|s| self.label_for_score(s))
            .collect())
    }

    fn label_for_score(&self, score: f64) -> u8 {
        if score >= 0.5 {
            self.positive_label
        } else {
            1 - self.positive_label
        }
    }

    pub fn evaluate(&self, ds: &LabeledDataset) -> Result<Evaluation> {
        let scores = self.scores(ds.features())?;
        let predictions: Vec<u8> = scores.iter().map(|&s| self.label_for_score(s)).collect();
        let cm = confusion(ds.labels(), &predictions, self.positive_label)?;
        let [n0, n1] = ds.class_counts();
        let roc = if n0 > 0 && n1 > 0 {
            Some(roc_curve(&scores, ds.labels(), self.positive_label)?)
        } else {
            None
        };
        Ok(Evaluation {
            scores,
            predictions,
            confusion: cm,
            report: metrics_report(&cm),
            roc,
        })
    }

    /// Model file.
    ///
    /// ```text
    /// pcarf-model 1
    /// label_column <name>
    /// drop_column <name>          (zero or more)
    /// positive_label <0|1>
    /// n_features <p>
    /// preprocess <pca|none>
    /// classifier <forest|mlp>
    /// <pca block>                 (when preprocess is pca)
    /// <forest block> | <standardizer block> <mlp block>
    /// end pcarf-model
    /// ```
    pub fn to_text(&self) -> String {
        let mut s = String::from("pcarf-model 1\n");
        s.push_str(&format!("label_column {}\n", self.label_column));
        for d in &self.drop_columns {
            s.push_str(&format!("drop_column {d}\n"));
        }
        s.push_str(&format!("positive_label {}\n", self.positive_label));
        s.push_str(&format!("n_features {}\n", self.n_features));
        s.push_str(&format!(
            "preprocess {}\n",
            if self.pca.is_some() { "pca" } else { "none" }
        ));
        s.push_str(&format!("classifier {}\n", self.classifier.kind()));
        if let Some(p) = &self.pca {
            s.push_str(&p.to_text());
        }
        match &self.classifier {
            Classifier::Forest(f) => s.push_str(&f.to_text()),
            Classifier::Mlp {
                standardizer,
                network,
            } => {
                s.push_str(&standardizer.to_text());
                s.push_str(&network.to_text());
            }
        }
        s.push_str("end pcarf-model\n");
        s
    }

    pub fn from_text(source_name: &str, text: &str) -> Result<Pipeline> {
        let mut r = TextReader::new(source_name, text);
        let version: u32 = r.expect_value("pcarf-model")?;
        if version != 1 {
            return Err(r.error(1, format!("unsupported model format version {version}")));
        }
        let line = r.expect("label_column")?;
        let label_column = line.rest.join(" ");
        let mut drop_columns = Vec::new();
        while r.peek_key() == Some("drop_column") {
            drop_columns.push(r.next_line()?.rest.join(" "));
        }
        let positive_label: u8 = r.expect_value("positive_label")?;
        if positive_label > 1 {
            return Err(r.error(0, "positive_label must be 0 or 1"));
        }
        let n_features: usize = r.expect_value("n_features")?;
        let preprocess: String = r.expect_value("preprocess")?;
        let kind: String = r.expect_value("classifier")?;
        let pca = match preprocess.as_str() {
            "pca" => Some(PcaModel::read_text(&mut r)?),
            "none" => None,
            other => return Err(r.error(0, format!("unknown preprocess `{other}`"))),
        };
        let classifier = match kind.as_str() {
            "forest" => Classifier::Forest(ForestModel::read_text(&mut r)?),
            "mlp" => Classifier::Mlp {
                standardizer: Standardizer::read_text(&mut r)?,
                network: MlpModel::read_text(&mut r)?,
            },
            other => return Err(r.error(0, format!("unknown classifier `{other}`"))),
        };
        let end = r.expect("end")?;
        if end.rest != ["pcarf-model"] {
            return Err(r.error(end.number, "expected `end pcarf-model`"));
        }
        r.expect_done()?;
        let pipeline = Pipeline {
            label_column,
            drop_columns,
            positive_label,
            n_features,
            pca,
            classifier,
        };
        pipeline.check_consistency(source_name)?;
        Ok(pipeline)
    }

    fn check_consistency(&self, source_name: &str) -> Result<()> {
        let bad = |message: String| Error::Format {
            source_name: source_name.to_owned(),
            line: 0,
            message,
        };
        let mut width = self.n_features;
        if let Some(p) = &self.pca {
            if p.n_features() != width {
                return Err(bad("pca input width does not match n_features".into()));
            }
            width = p.n_components();
        }
        let classifier_width = match &self.classifier {
            Classifier::Forest(f) => f.n_features,
            Classifier::Mlp {
                standardizer,
                network,
            } => {
                if standardizer.mean.len() != network.n_inputs() {
                    return Err(bad("standardizer and network widths differ".into()));
                }
                network.n_inputs()
            }
        };
        if classifier_width != width {
            return Err(bad(format!(
                "classifier expects {classifier_width} inputs, preprocessing yields {width}"
            )));
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Pipeline> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Pipeline::from_text(&path.display().to_string(), &text)
    }
}
