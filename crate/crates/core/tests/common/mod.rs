//! Independent oracles and data generators shared by the integration tests.
#![allow(dead_code)]

use pcarf::data::LabeledDataset;
use pcarf::forest::gini;
use pcarf::metrics::ConfusionMatrix;
use pcarf::mlp::MlpModel;
use pcarf::rng::SplitMix64;
use pcarf::Matrix;

/// Exhaustive split search: every feature, every midpoint, counts taken by
/// scanning all rows. Returns (feature, threshold, decrease) of the best
/// split under the same tie rule as the library, or `None` if nothing
/// decreases impurity by more than `min_decrease`.
pub fn brute_force_split(
    ds: &LabeledDataset,
    rows: &[usize],
    features: &[usize],
    min_decrease: f64,
) -> Option<(usize, f64, f64)> {
    let n = rows.len();
    if n < 2 {
        return None;
    }
    let x = ds.features();
    let y = ds.labels();
    let count = |subset: &[usize]| {
        let ones = subset.iter().filter(|&&r| y[r] == 1).count();
        [subset.len() - ones, ones]
    };
    let parent = count(rows);
    if parent[0] == 0 || parent[1] == 0 {
        return None;
    }
    let parent_gini = gini(parent).unwrap();
    let mut feats = features.to_vec();
    feats.sort_unstable();
    feats.dedup();
    let mut best: Option<(usize, f64, f64)> = None;
    for &f in &feats {
        let mut values: Vec<f64> = rows.iter().map(|&r| x.get(r, f)).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        for w in values.windows(2) {
            let mut thr = (w[0] + w[1]) / 2.0;
            if thr >= w[1] {
                thr = w[0];
            }
            let left: Vec<usize> = rows.iter().copied().filter(|&r| x.get(r, f) <= thr).collect();
            let right: Vec<usize> = rows.iter().copied().filter(|&r| x.get(r, f) > thr).collect();
            let (nl, nr) = (left.len(), right.len());
            let weighted = (nl as f64 * gini(count(&left)).unwrap()
                + nr as f64 * gini(count(&right)).unwrap())
                / n as f64;
            let dec = parent_gini - weighted;
            if dec > min_decrease && best.is_none_or(|b| dec > b.2) {
                best = Some((f, thr, dec));
            }
        }
    }
    best
}

/// AUC as the probability that a random positive outscores a random
/// negative, ties counted half. O(P·N).
pub fn pair_counting_auc(scores: &[f64], labels: &[u8], positive_label: u8) -> f64 {
    let pos: Vec<f64> = scores
        .iter()
        .zip(labels)
        .filter(|(_, &l)| l == positive_label)
        .map(|(&s, _)| s)
        .collect();
    let neg: Vec<f64> = scores
        .iter()
        .zip(labels)
        .filter(|(_, &l)| l != positive_label)
        .map(|(&s, _)| s)
        .collect();
    let mut wins = 0.0;
    for &p in &pos {
        for &q in &neg {
            if p > q {
                wins += 1.0;
            } else if p == q {
                wins += 0.5;
            }
        }
    }
    wins / (pos.len() * neg.len()) as f64
}

/// Central finite-difference gradient of the mean loss.
pub fn finite_difference_gradient(model: &MlpModel, x: &Matrix, y: &[u8], h: f64) -> Vec<f64> {
    let theta = model.parameters();
    (0..theta.len())
        .map(|i| {
            let mut plus = theta.clone();
            plus[i] += h;
            let mut minus = theta.clone();
            minus[i] -= h;
            let lp = model.with_parameters(&plus).unwrap().loss(x, y).unwrap();
            let lm = model.with_parameters(&minus).unwrap().loss(x, y).unwrap();
            (lp - lm) / (2.0 * h)
        })
        .collect()
}

/// Network with every weight and bias drawn uniformly from [-1, 1].
/// Nonzero biases keep pre-activations away from the rectifier kink, where
/// finite differences say nothing about the gradient.
pub fn random_network(sizes: &[usize], rng: &mut SplitMix64) -> MlpModel {
    let shape = MlpModel::zeros(sizes).unwrap();
    let params: Vec<f64> = (0..shape.n_parameters()).map(|_| rng.uniform(-1.0, 1.0)).collect();
    shape.with_parameters(&params).unwrap()
}

pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

/// Reference metrics, each a percentage truncated to three decimals, stored as integers in thousandths of a percent.
#[derive(Debug, Clone, Copy)]
pub struct ReferenceMetrics {
    pub accuracy: u64,
    pub sensitivity: u64,
    pub specificity: u64,
    pub precision: Option<u64>,
    pub f1: u64,
}

fn truncated(num: u64, den: u64) -> Option<u64> {
    (den > 0).then(|| 100_000 * num / den)
}

/// Every confusion matrix with at most `max_total` samples whose metrics
/// truncate to the reference values, smallest total first. Exact integer
/// arithmetic throughout. When `precision` is `None` it is left
/// unconstrained.
pub fn invert_confusion(reference: ReferenceMetrics, max_total: u64) -> Vec<ConfusionMatrix> {
    // (negatives, tn) pairs matching the reference specificity.
    let negatives: Vec<(u64, u64)> = (1..max_total)
        .flat_map(|neg| (0..=neg).map(move |tn| (neg, tn)))
        .filter(|&(neg, tn)| truncated(tn, neg) == Some(reference.specificity))
        .collect();
    let mut found = Vec::new();
    for pos in 1..max_total {
        for tp in (0..=pos).filter(|&tp| truncated(tp, pos) == Some(reference.sensitivity)) {
            let fn_ = pos - tp;
            for &(neg, tn) in negatives.iter().filter(|&&(neg, _)| pos + neg <= max_total) {
                let fp = neg - tn;
                let fits = truncated(tp + tn, pos + neg) == Some(reference.accuracy)
                    && truncated(2 * tp, 2 * tp + fp + fn_) == Some(reference.f1)
                    && reference
                        .precision
                        .is_none_or(|prec| truncated(tp, tp + fp) == Some(prec));
                if fits {
                    found.push(ConfusionMatrix::new(tp as usize, fp as usize, tn as usize, fn_ as usize));
                }
            }
        }
    }
    found.sort_by_key(|c| (c.total(), c.tp, c.fp, c.tn));
    found
}

/// Two Gaussian blobs in `p` dimensions, centres `±separation/2` on every
/// axis, unit variance, `n` rows alternating between the classes.
pub fn gaussian_blobs(n: usize, p: usize, separation: f64, seed: u64) -> LabeledDataset {
    let mut rng = SplitMix64::new(seed);
    let mut data = Vec::with_capacity(n * p);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let label = (i % 2) as u8;
        let centre = if label == 1 { separation / 2.0 } else { -separation / 2.0 };
        for _ in 0..p {
            data.push(centre + normal(&mut rng));
        }
        labels.push(label);
    }
    LabeledDataset::unnamed(Matrix::new(n, p, data).unwrap(), labels).unwrap()
}

/// Standard normal draw by Box-Muller.
pub fn normal(rng: &mut SplitMix64) -> f64 {
    let u1 = 1.0 - rng.next_f64();
    let u2 = rng.next_f64();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Random symmetric matrix with entries in [-1, 1].
pub fn random_symmetric(n: usize, rng: &mut SplitMix64) -> Matrix {
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let v = rng.uniform(-1.0, 1.0);
            data[i * n + j] = v;
            data[j * n + i] = v;
        }
    }
    Matrix::new(n, n, data).unwrap()
}

/// Random small-integer dataset, so duplicate values and ties are common.
pub fn random_integer_dataset(n: usize, p: usize, levels: usize, rng: &mut SplitMix64) -> LabeledDataset {
    let data: Vec<f64> = (0..n * p).map(|_| rng.below(levels) as f64).collect();
    let labels: Vec<u8> = (0..n).map(|_| rng.below(2) as u8).collect();
    LabeledDataset::unnamed(Matrix::new(n, p, data).unwrap(), labels).unwrap()
}

/// Writes a dataset as CSV with an `id` column, features `f0..`, and a
/// `class` column.
pub fn write_csv(ds: &LabeledDataset, path: &std::path::Path) {
    let mut s = String::from("id");
    for j in 0..ds.n_features() {
        s.push_str(&format!(",f{j}"));
    }
    s.push_str(",class\n");
    for i in 0..ds.n_samples() {
        s.push_str(&i.to_string());
        for v in ds.features().row(i) {
            s.push_str(&format!(",{v}"));
        }
        s.push_str(&format!(",{}\n", ds.labels()[i]));
    }
    std::fs::write(path, s).unwrap();
}
