//! Principal component analysis.
//!
//! [`fit`] centres (and optionally z-scores) the training features, forms
//! the sample covariance, diagonalises it with the Jacobi solver and keeps
//! the leading eigenvectors. [`transform`] projects new rows with the
//! training statistics.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::linalg::{covariance, eigh_symmetric, Matrix};
use crate::textfmt::{fmt_real, fmt_reals, TextReader};

/// How many components to keep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ComponentPolicy {
    FixedK(usize),
    /// Smallest k whose cumulative explained-variance ratio reaches the
    /// threshold, which lies in (0, 1].
    VarianceThreshold(f64),
}

impl Default for ComponentPolicy {
    fn default() -> Self {
        ComponentPolicy::VarianceThreshold(0.95)
    }
}

/// Standard deviations at or below this (relative to the column magnitude)
/// count as zero variance and get scale 1.
const ZERO_SCALE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// Per-feature standard deviations when fitted with standardization.
    pub scales: Option<Vec<f64>>,
    /// p x k, orthonormal columns.
    pub components: Matrix,
    /// k leading eigenvalues, non-increasing.
    pub eigenvalues: Vec<f64>,
    /// Sum of all p eigenvalues.
    pub total_variance: f64,
}

impl PcaModel {
    pub fn n_features(&self) -> usize {
        self.mean.len()
    }

    pub fn n_components(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Plain-text export.
    ///
    /// ```text
    /// pca 1
    /// dims <p> <k>
    /// standardize <true|false>
    /// total_variance <real>
    /// mean <p reals>
    /// scales <p reals>          (only when standardize is true)
    /// eigenvalues <k reals>
    /// row <k reals>             (p lines: component matrix, row order)
    /// end pca
    /// ```
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "pca 1");
        let _ = writeln!(s, "dims {} {}", self.n_features(), self.n_components());
        let _ = writeln!(s, "standardize {}", self.scales.is_some());
        let _ = writeln!(s, "total_variance {}", fmt_real(self.total_variance));
        let _ = writeln!(s, "mean {}", fmt_reals(&self.mean));
        if let Some(scales) = &self.scales {
            let _ = writeln!(s, "scales {}", fmt_reals(scales));
        }
        let _ = writeln!(s, "eigenvalues {}", fmt_reals(&self.eigenvalues));
        for row in self.components.row_iter() {
            let _ = writeln!(s, "row {}", fmt_reals(row));
        }
        let _ = writeln!(s, "end pca");
        s
    }

    pub fn read_text(r: &mut TextReader<'_>) -> Result<Self> {
        let version: u32 = r.expect_value("pca")?;
        if version != 1 {
            return Err(r.error(0, format!("unsupported pca format version {version}")));
        }
        let dims = r.expect("dims")?;
        if dims.rest.len() != 2 {
            return Err(r.error(dims.number, "`dims` takes p and k"));
        }
        let p: usize = r.parse(dims.number, dims.rest[0])?;
        let k: usize = r.parse(dims.number, dims.rest[1])?;
        if k > p {
            return Err(r.error(dims.number, "more components than features"));
        }
        let standardize: bool = r.expect_value("standardize")?;
        let total_variance: f64 = r.expect_value("total_variance")?;
        let mean = r.expect_reals("mean", p)?;
        let scales = if standardize {
            Some(r.expect_reals("scales", p)?)
        } else {
            None
        };
        let eigenvalues = r.expect_reals("eigenvalues", k)?;
        let mut data = Vec::with_capacity(p * k);
        for _ in 0..p {
            data.extend(r.expect_reals("row", k)?);
        }
        let end = r.expect("end")?;
        if end.rest != ["pca"] {
            return Err(r.error(end.number, "expected `end pca`"));
        }
        Ok(PcaModel {
            mean,
            scales,
            components: Matrix::new(p, k, data)?,
            eigenvalues,
            total_variance,
        })
    }

    pub fn from_text(source_name: &str, text: &str) -> Result<Self> {
        let mut r = TextReader::new(source_name, text);
        let model = PcaModel::read_text(&mut r)?;
        r.expect_done()?;
        Ok(model)
    }
}

/// Centres `x` and, when `scales` is given, divides each column by its scale.
fn prepare(x: &Matrix, mean: &[f64], scales: Option<&[f64]>) -> Matrix {
    let mut data = Vec::with_capacity(x.rows() * x.cols());
    for row in x.row_iter() {
        match scales {
            Some(s) => data.extend(
                row.iter()
                    .zip(mean)
                    .zip(s)
                    .map(|((v, m), sd)| (v - m) / sd),
            ),
            None => data.extend(row.iter().zip(mean).map(|(v, m)| v - m)),
        }
    }
    Matrix::new(x.rows(), x.cols(), data).expect("finite inputs stay finite")
}

/// Sample standard deviation of every column (n - 1 denominator), with
/// zero-variance columns mapped to 1.
pub(crate) fn column_scales(x: &Matrix, mean: &[f64]) -> Vec<f64> {
    let n = x.rows();
    let mut ss = vec![0.0; x.cols()];
    for row in x.row_iter() {
        for ((acc, v), m) in ss.iter_mut().zip(row).zip(mean) {
            let d = v - m;
            *acc += d * d;
        }
    }
    ss.iter()
        .zip(mean)
        .map(|(s, m)| {
            let sd = (s / (n.saturating_sub(1).max(1)) as f64).sqrt();
            if sd <= ZERO_SCALE * m.abs().max(1.0) {
                1.0
            } else {
                sd
            }
        })
        .collect()
}

pub fn fit(x: &Matrix, policy: ComponentPolicy, standardize: bool) -> Result<PcaModel> {
    let (n, p) = (x.rows(), x.cols());
    if n < 2 {
        return Err(Error::domain(format!("PCA needs at least 2 rows, got {n}")));
    }
    if p == 0 {
        return Err(Error::domain("PCA needs at least one feature"));
    }
    match policy {
        ComponentPolicy::FixedK(k) if k == 0 || k > p => {
            return Err(Error::domain(format!(
                "fixed_k = {k} must lie in 1..={p}"
            )))
        }
        ComponentPolicy::VarianceThreshold(t) if !(t > 0.0 && t <= 1.0) => {
            return Err(Error::domain(format!(
                "variance threshold {t} must lie in (0, 1]"
            )))
        }
        _ => {}
    }
    let mean = x.column_means();
    let scales = standardize.then(|| column_scales(x, &mean));
    let b = prepare(x, &mean, scales.as_deref());
    let c = covariance(&b)?;
    let eig = eigh_symmetric(&c)?;
    // Rounding can leave the null-space eigenvalues slightly negative.
    let values: Vec<f64> = eig.values.iter().map(|&v| v.max(0.0)).collect();
    let total_variance: f64 = values.iter().sum();

    let k = match policy {
        ComponentPolicy::FixedK(k) => k,
        ComponentPolicy::VarianceThreshold(t) => {
            if total_variance <= 0.0 {
                1
            } else {
                let mut cum = 0.0;
                let mut k = p;
                for (i, v) in values.iter().enumerate() {
                    cum += v / total_variance;
                    if cum >= t - 1e-12 {
                        k = i + 1;
                        break;
                    }
                }
                k
            }
        }
    };
    Ok(PcaModel {
        mean,
        scales,
        components: eig.vectors.leading_columns(k),
        eigenvalues: values[..k].to_vec(),
        total_variance,
    })
}

/// Projects rows of `x` onto the model's components (n x k).
pub fn transform(model: &PcaModel, x: &Matrix) -> Result<Matrix> {
    if x.cols() != model.n_features() {
        return Err(Error::Dimension {
            expected: model.n_features(),
            got: x.cols(),
        });
    }
    prepare(x, &model.mean, model.scales.as_deref()).matmul(&model.components)
}

/// `eigenvalues / total_variance`; all zeros when the data has no variance.
pub fn explained_variance_ratio(model: &PcaModel) -> Vec<f64> {
    if model.total_variance <= 0.0 {
        return vec![0.0; model.eigenvalues.len()];
    }
    model
        .eigenvalues
        .iter()
        .map(|v| v / model.total_variance)
        .collect()
}
