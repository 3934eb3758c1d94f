//! Labeled datasets, CSV ingestion and seeded train/test splitting.

use std::fs::File;
use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng::SplitMix64;

pub const DEFAULT_LABEL_COLUMN: &str = "class";
pub const DEFAULT_DROP_COLUMNS: &[&str] = &["id"];

/// Feature matrix with binary labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    features: Matrix,
    labels: Vec<u8>,
    feature_names: Vec<String>,
}

impl LabeledDataset {
    pub fn new(features: Matrix, labels: Vec<u8>, feature_names: Vec<String>) -> Result<Self> {
        if features.rows() == 0 {
            return Err(Error::Dataset("dataset has no samples".into()));
        }
        if labels.len() != features.rows() {
            return Err(Error::Dimension {
                expected: features.rows(),
                got: labels.len(),
            });
        }
        if feature_names.len() != features.cols() {
            return Err(Error::Dimension {
                expected: features.cols(),
                got: feature_names.len(),
            });
        }
        if let Some(bad) = labels.iter().find(|&&l| l > 1) {
            return Err(Error::Dataset(format!("label {bad} is not 0 or 1")));
        }
        Ok(LabeledDataset {
            features,
            labels,
            feature_names,
        })
    }

    /// Dataset with generated feature names `x0, x1, ...`.
    pub fn unnamed(features: Matrix, labels: Vec<u8>) -> Result<Self> {
        let names = (0..features.cols()).map(|i| format!("x{i}")).collect();
        LabeledDataset::new(features, labels, names)
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn n_samples(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.features.cols()
    }

    /// Number of samples with label 0 and label 1.
    pub fn class_counts(&self) -> [usize; 2] {
        let ones = self.labels.iter().filter(|&&l| l == 1).count();
        [self.labels.len() - ones, ones]
    }

    pub fn subset(&self, indices: &[usize]) -> Result<LabeledDataset> {
        LabeledDataset::new(
            self.features.select_rows(indices),
            indices.iter().map(|&i| self.labels[i]).collect(),
            self.feature_names.clone(),
        )
    }

    /// Same labels and names with a replacement feature matrix.
    pub fn with_features(&self, features: Matrix, names: Vec<String>) -> Result<LabeledDataset> {
        LabeledDataset::new(features, self.labels.clone(), names)
    }
}

/// Reads a CSV file whose first row is a header.
///
/// Every column except `label_column` and `drop_columns` becomes a feature
/// and must hold finite decimal numbers. Label cells must parse as 0 or 1
/// (`1.0` is accepted).
pub fn load_csv(
    path: impl AsRef<Path>,
    label_column: &str,
    drop_columns: &[String],
) -> Result<LabeledDataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, &path.display().to_string(), label_column, drop_columns)
}

/// [`load_csv`] over any reader; `source_name` is used in error messages.
pub fn read_csv<R: Read>(
    reader: R,
    source_name: &str,
    label_column: &str,
    drop_columns: &[String],
) -> Result<LabeledDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    let label_idx = headers
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| {
            Error::Dataset(format!(
                "{source_name}: label column `{label_column}` not found in header"
            ))
        })?;
    let feature_idx: Vec<usize> = (0..headers.len())
        .filter(|&i| i != label_idx && !drop_columns.iter().any(|d| d == &headers[i]))
        .collect();
    let feature_names = feature_idx.iter().map(|&i| headers[i].clone()).collect();

    let mut data = Vec::new();
    let mut labels = Vec::new();
    for (row_no, record) in rdr.records().enumerate() {
        let record = record?;
        // Row numbers in messages count data rows from 1 (header excluded).
        let row = row_no + 1;
        if record.len() != headers.len() {
            return Err(Error::Dataset(format!(
                "{source_name}: row {row} has {} fields, header has {}",
                record.len(),
                headers.len()
            )));
        }
        let cell_err = |col: usize, message: String| Error::Cell {
            path: source_name.to_owned(),
            row,
            column: headers[col].clone(),
            message,
        };
        for &col in &feature_idx {
            let cell = &record[col];
            if cell.is_empty() {
                return Err(cell_err(col, "empty cell".into()));
            }
            let v: f64 = cell
                .parse()
                .map_err(|_| cell_err(col, format!("`{cell}` is not a number")))?;
            if !v.is_finite() {
                return Err(cell_err(col, format!("`{cell}` is not finite")));
            }
            data.push(v);
        }
        let cell = &record[label_idx];
        let label = match cell.parse::<f64>() {
            Ok(0.0) => 0u8,
            Ok(1.0) => 1u8,
            _ => {
                return Err(cell_err(
                    label_idx,
                    format!("label `{cell}` is not 0 or 1"),
                ))
            }
        };
        labels.push(label);
    }
    if labels.is_empty() {
        return Err(Error::Dataset(format!("{source_name}: no data rows")));
    }
    let features = Matrix::new(labels.len(), feature_idx.len(), data)?;
    LabeledDataset::new(features, labels, feature_names)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub test_fraction: f64,
    pub seed: u64,
    pub stratified: bool,
}

impl SplitSpec {
    pub fn new(test_fraction: f64, seed: u64, stratified: bool) -> Result<Self> {
        if !(test_fraction > 0.0 && test_fraction < 1.0) {
            return Err(Error::domain(format!(
                "test_fraction must lie in (0, 1), got {test_fraction}"
            )));
        }
        Ok(SplitSpec {
            test_fraction,
            seed,
            stratified,
        })
    }
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            test_fraction: 0.3,
            seed: 0,
            stratified: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Split {
    pub train: LabeledDataset,
    pub test: LabeledDataset,
    /// Source row indices of `train`, ascending.
    pub train_indices: Vec<usize>,
    /// Source row indices of `test`, ascending.
    pub test_indices: Vec<usize>,
}

/// Seeded train/test partition.
///
/// Stratified: the rows of each class (0 first, then 1) are shuffled with
/// one shared [`SplitMix64`] stream seeded by `spec.seed`, and the first
/// `round(count * test_fraction)` of each go to the test set. Unstratified:
/// all rows are shuffled once and `round(n * test_fraction)` are taken.
/// Both partitions are returned in ascending source-row order.
pub fn stratified_split(ds: &LabeledDataset, spec: &SplitSpec) -> Result<Split> {
    SplitSpec::new(spec.test_fraction, spec.seed, spec.stratified)?;
    let n = ds.n_samples();
    let mut rng = SplitMix64::new(spec.seed);
    let mut test = Vec::new();
    let mut train = Vec::new();
    let groups: Vec<Vec<usize>> = if spec.stratified {
        (0..=1u8)
            .map(|c| (0..n).filter(|&i| ds.labels[i] == c).collect())
            .collect()
    } else {
        vec![(0..n).collect()]
    };
    for mut group in groups {
        rng.shuffle(&mut group);
        let k = (group.len() as f64 * spec.test_fraction).round() as usize;
        test.extend_from_slice(&group[..k]);
        train.extend_from_slice(&group[k..]);
    }
    if test.is_empty() {
        return Err(Error::domain(format!(
            "test_fraction {} leaves the test set empty for {n} samples",
            spec.test_fraction
        )));
    }
    if train.is_empty() {
        return Err(Error::domain(format!(
            "test_fraction {} leaves the training set empty for {n} samples",
            spec.test_fraction
        )));
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(Split {
        train: ds.subset(&train)?,
        test: ds.subset(&test)?,
        train_indices: train,
        test_indices: test,
    })
}
