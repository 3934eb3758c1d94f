//! Small feed-forward network: rectifier hidden layers, one logistic output,
//! trained on binary cross-entropy with mini-batch gradient descent.

use std::fmt::Write as _;

use crate::data::LabeledDataset;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::pca::column_scales;
use crate::rng::SplitMix64;
use crate::textfmt::{fmt_reals, TextReader};

#[inline]
pub fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Cross-entropy of a logistic output with logit `z` against `y`.
#[inline]
fn bce_with_logit(z: f64, y: f64) -> f64 {
    z.max(0.0) - y * z + (-z.abs()).exp().ln_1p()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    /// Layer `l` maps `sizes[l]` inputs to `sizes[l + 1]` outputs; stored
    /// as a `sizes[l + 1] x sizes[l]` matrix.
    pub weights: Vec<Matrix>,
    pub biases: Vec<Vec<f64>>,
}

fn check_sizes(sizes: &[usize]) -> Result<()> {
    if sizes.len() < 2 {
        return Err(Error::domain("an MLP needs at least input and output sizes"));
    }
    if sizes.last() != Some(&1) {
        return Err(Error::domain("the output layer must have size 1"));
    }
    if sizes.contains(&0) {
        return Err(Error::domain("layer sizes must be positive"));
    }
    Ok(())
}

impl MlpModel {
    /// Weights uniform on `[-1/sqrt(fan_in), 1/sqrt(fan_in))`, drawn from
    /// `SplitMix64::new(seed)` layer by layer in row-major order; biases 0.
    pub fn init(sizes: &[usize], seed: u64) -> Result<Self> {
        check_sizes(sizes)?;
        let mut rng = SplitMix64::new(seed);
        let mut weights = Vec::with_capacity(sizes.len() - 1);
        let mut biases = Vec::with_capacity(sizes.len() - 1);
        for pair in sizes.windows(2) {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let bound = 1.0 / (fan_in as f64).sqrt();
            let data = (0..fan_in * fan_out)
                .map(|_| rng.uniform(-bound, bound))
                .collect();
            weights.push(Matrix::new(fan_out, fan_in, data)?);
            biases.push(vec![0.0; fan_out]);
        }
        Ok(MlpModel { weights, biases })
    }

    /// All-zero parameters (test hook).
    pub fn zeros(sizes: &[usize]) -> Result<Self> {
        check_sizes(sizes)?;
        Ok(MlpModel {
            weights: sizes
                .windows(2)
                .map(|p| Matrix::zeros(p[1], p[0]))
                .collect(),
            biases: sizes.windows(2).map(|p| vec![0.0; p[1]]).collect(),
        })
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![self.weights[0].cols()];
        sizes.extend(self.weights.iter().map(Matrix::rows));
        sizes
    }

    pub fn n_inputs(&self) -> usize {
        self.weights[0].cols()
    }

    pub fn n_parameters(&self) -> usize {
        self.weights
            .iter()
            .zip(&self.biases)
            .map(|(w, b)| w.rows() * w.cols() + b.len())
            .sum()
    }

    /// Flattened parameters: per layer, weights row-major then biases.
    pub fn parameters(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_parameters());
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend_from_slice(w.as_slice());
            out.extend_from_slice(b);
        }
        out
    }

    /// Copy of the model with parameters in [`MlpModel::parameters`] order.
    pub fn with_parameters(&self, params: &[f64]) -> Result<Self> {
        if params.len() != self.n_parameters() {
            return Err(Error::Dimension {
                expected: self.n_parameters(),
                got: params.len(),
            });
        }
        let mut offset = 0;
        let mut weights = Vec::with_capacity(self.weights.len());
        let mut biases = Vec::with_capacity(self.biases.len());
        for (w, b) in self.weights.iter().zip(&self.biases) {
            let nw = w.rows() * w.cols();
            weights.push(Matrix::new(
                w.rows(),
                w.cols(),
                params[offset..offset + nw].to_vec(),
            )?);
            offset += nw;
            biases.push(params[offset..offset + b.len()].to_vec());
            offset += b.len();
        }
        Ok(MlpModel { weights, biases })
    }

    /// Activations of every layer; the last entry holds the output logit.
    fn activations(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let last = self.weights.len() - 1;
        let mut acts = Vec::with_capacity(self.weights.len() + 1);
        acts.push(x.to_vec());
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let input = &acts[l];
            let out: Vec<f64> = w
                .row_iter()
                .zip(b)
                .map(|(row, bias)| {
                    let z = crate::linalg::dot(row, input) + bias;
                    if l == last {
                        z
                    } else {
                        z.max(0.0)
                    }
                })
                .collect();
            acts.push(out);
        }
        acts
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n_inputs() {
            return Err(Error::Dimension {
                expected: self.n_inputs(),
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Output probability in (0, 1).
    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        self.check_input(x)?;
        let acts = self.activations(x);
        Ok(logistic(acts[acts.len() - 1][0]))
    }

    /// Mean cross-entropy over the rows of `x` against labels `y`.
    pub fn loss(&self, x: &Matrix, y: &[u8]) -> Result<f64> {
        check_batch(self, x, y)?;
        let mut total = 0.0;
        for (row, &label) in x.row_iter().zip(y) {
            let acts = self.activations(row);
            total += bce_with_logit(acts[acts.len() - 1][0], f64::from(label));
        }
        Ok(total / y.len() as f64)
    }

    /// Mean loss and its gradient, in [`MlpModel::parameters`] order, by
    /// backpropagation over the rows of `x`.
    pub fn loss_and_gradient(&self, x: &Matrix, y: &[u8]) -> Result<(f64, Vec<f64>)> {
        check_batch(self, x, y)?;
        let rows: Vec<usize> = (0..y.len()).collect();
        Ok(self.batch_gradient(x, y, &rows))
    }

    fn batch_gradient(&self, x: &Matrix, y: &[u8], rows: &[usize]) -> (f64, Vec<f64>) {
        let n_layers = self.weights.len();
        let mut gw: Vec<Vec<f64>> = self
            .weights
            .iter()
            .map(|w| vec![0.0; w.rows() * w.cols()])
            .collect();
        let mut gb: Vec<Vec<f64>> = self.biases.iter().map(|b| vec![0.0; b.len()]).collect();
        let mut total = 0.0;
        for &r in rows {
            let acts = self.activations(x.row(r));
            let z = acts[n_layers][0];
            let target = f64::from(y[r]);
            total += bce_with_logit(z, target);
            // dL/dz of the current layer's pre-activations.
            let mut delta = vec![logistic(z) - target];
            for l in (0..n_layers).rev() {
                let w = &self.weights[l];
                let input = &acts[l];
                for (o, d) in delta.iter().enumerate() {
                    gb[l][o] += d;
                    let g_row = &mut gw[l][o * w.cols()..(o + 1) * w.cols()];
                    for (g, a) in g_row.iter_mut().zip(input) {
                        *g += d * a;
                    }
                }
                if l > 0 {
                    let mut next = vec![0.0; w.cols()];
                    for (o, d) in delta.iter().enumerate() {
                        for (acc, wv) in next.iter_mut().zip(w.row(o)) {
                            *acc += d * wv;
                        }
                    }
                    // Rectifier derivative: 1 where the unit was active.
                    for (acc, a) in next.iter_mut().zip(input) {
                        if *a <= 0.0 {
                            *acc = 0.0;
                        }
                    }
                    delta = next;
                }
            }
        }
        let scale = 1.0 / rows.len() as f64;
        let mut grad = Vec::with_capacity(self.n_parameters());
        for (w, b) in gw.iter().zip(&gb) {
            grad.extend(w.iter().map(|g| g * scale));
            grad.extend(b.iter().map(|g| g * scale));
        }
        (total * scale, grad)
    }

    /// Plain-text export.
    ///
    /// ```text
    /// mlp 1
    /// layers <s0> <s1> ... <sL>
    /// w <s_l reals>          (s_{l+1} lines per layer, row-major)
    /// b <s_{l+1} reals>      (one line per layer, after its weights)
    /// end mlp
    /// ```
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "mlp 1");
        let sizes: Vec<String> = self.layer_sizes().iter().map(usize::to_string).collect();
        let _ = writeln!(s, "layers {}", sizes.join(" "));
        for (w, b) in self.weights.iter().zip(&self.biases) {
            for row in w.row_iter() {
                let _ = writeln!(s, "w {}", fmt_reals(row));
            }
            let _ = writeln!(s, "b {}", fmt_reals(b));
        }
        let _ = writeln!(s, "end mlp");
        s
    }

    pub fn read_text(r: &mut TextReader<'_>) -> Result<Self> {
        let version: u32 = r.expect_value("mlp")?;
        if version != 1 {
            return Err(r.error(0, format!("unsupported mlp format version {version}")));
        }
        let line = r.expect("layers")?;
        let sizes: Vec<usize> = line
            .rest
            .iter()
            .map(|t| r.parse(line.number, t))
            .collect::<Result<_>>()?;
        check_sizes(&sizes).map_err(|e| r.error(line.number, e.to_string()))?;
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for pair in sizes.windows(2) {
            let mut data = Vec::with_capacity(pair[0] * pair[1]);
            for _ in 0..pair[1] {
                data.extend(r.expect_reals("w", pair[0])?);
            }
            weights.push(Matrix::new(pair[1], pair[0], data)?);
            biases.push(r.expect_reals("b", pair[1])?);
        }
        let end = r.expect("end")?;
        if end.rest != ["mlp"] {
            return Err(r.error(end.number, "expected `end mlp`"));
        }
        Ok(MlpModel { weights, biases })
    }
}

fn check_batch(model: &MlpModel, x: &Matrix, y: &[u8]) -> Result<()> {
    if x.cols() != model.n_inputs() {
        return Err(Error::Dimension {
            expected: model.n_inputs(),
            got: x.cols(),
        });
    }
    if x.rows() != y.len() {
        return Err(Error::Dimension {
            expected: x.rows(),
            got: y.len(),
        });
    }
    if y.is_empty() {
        return Err(Error::domain("empty batch"));
    }
    if y.iter().any(|&l| l > 1) {
        return Err(Error::domain("labels must be 0 or 1"));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainParams {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
}

impl Default for TrainParams {
    fn default() -> Self {
        TrainParams {
            epochs: 200,
            learning_rate: 0.01,
            batch_size: 32,
        }
    }
}

/// Mini-batch gradient descent on mean cross-entropy; the network output
/// models the probability of label 1.
///
/// Each epoch shuffles the row order with one `SplitMix64::new(seed)`
/// stream and steps once per consecutive batch (the last may be short).
pub fn train(
    model: &MlpModel,
    ds: &LabeledDataset,
    params: &TrainParams,
    seed: u64,
) -> Result<MlpModel> {
    if ds.n_samples() == 0 {
        return Err(Error::domain("empty training set"));
    }
    if params.batch_size == 0 {
        return Err(Error::domain("batch_size must be positive"));
    }
    if !params.learning_rate.is_finite() || params.learning_rate < 0.0 {
        return Err(Error::domain("learning_rate must be finite and non-negative"));
    }
    check_batch(model, ds.features(), ds.labels())?;
    let x = ds.features();
    let y = ds.labels();
    let mut rng = SplitMix64::new(seed);
    let mut params_vec = model.parameters();
    let mut current = model.clone();
    let mut order: Vec<usize> = (0..ds.n_samples()).collect();
    for _ in 0..params.epochs {
        rng.shuffle(&mut order);
        for batch in order.chunks(params.batch_size) {
            let (_, grad) = current.batch_gradient(x, y, batch);
            for (p, g) in params_vec.iter_mut().zip(&grad) {
                *p -= params.learning_rate * g;
            }
            current = current.with_parameters(&params_vec).map_err(|_| {
                Error::Numerical("MLP training diverged (non-finite parameters)".into())
            })?;
        }
    }
    Ok(current)
}

/// Per-feature z-scoring with training statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    /// Sample standard deviations; zero-variance features get 1.
    pub scales: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &Matrix) -> Result<Self> {
        if x.rows() == 0 {
            return Err(Error::domain("cannot standardize zero rows"));
        }
        let mean = x.column_means();
        let scales = column_scales(x, &mean);
        Ok(Standardizer { mean, scales })
    }

    pub fn apply(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.mean.len() {
            return Err(Error::Dimension {
                expected: self.mean.len(),
                got: x.cols(),
            });
        }
        let mut data = Vec::with_capacity(x.rows() * x.cols());
        for row in x.row_iter() {
            data.extend(
                row.iter()
                    .zip(&self.mean)
                    .zip(&self.scales)
                    .map(|((v, m), s)| (v - m) / s),
            );
        }
        Matrix::new(x.rows(), x.cols(), data)
    }

    /// ```text
    /// standardizer 1
    /// dims <p>
    /// mean <p reals>
    /// scales <p reals>
    /// ```
    pub fn to_text(&self) -> String {
        format!(
            "standardizer 1\ndims {}\nmean {}\nscales {}\n",
            self.mean.len(),
            fmt_reals(&self.mean),
            fmt_reals(&self.scales)
        )
    }

    pub fn read_text(r: &mut TextReader<'_>) -> Result<Self> {
        let version: u32 = r.expect_value("standardizer")?;
        if version != 1 {
            return Err(r.error(0, "unsupported standardizer format version"));
        }
        let p: usize = r.expect_value("dims")?;
        let mean = r.expect_reals("mean", p)?;
        let scales = r.expect_reals("scales", p)?;
        Ok(Standardizer { mean, scales })
    }
}
