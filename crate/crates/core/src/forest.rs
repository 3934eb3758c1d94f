//! CART decision trees with Gini splitting and a bagged random forest.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::data::LabeledDataset;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, SplitMix64};
use crate::textfmt::{fmt_real, TextReader};

/// Splits must lower impurity by more than this to be accepted.
pub const MIN_IMPURITY_DECREASE: f64 = 1e-12;

/// Gini impurity `1 - (p0² + p1²)` of a node with the given class counts.
pub fn gini(counts: [usize; 2]) -> Result<f64> {
    let total = counts[0] + counts[1];
    if total == 0 {
        return Err(Error::domain("gini impurity of an empty node"));
    }
    Ok(gini_unchecked(counts, total))
}

#[inline]
fn gini_unchecked(counts: [usize; 2], total: usize) -> f64 {
    let t = total as f64;
    let p0 = counts[0] as f64 / t;
    let p1 = counts[1] as f64 / t;
    1.0 - (p0 * p0 + p1 * p1)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitChoice {
    pub feature: usize,
    pub threshold: f64,
    pub impurity_decrease: f64,
}

fn class_counts(rows: &[usize], labels: &[u8]) -> [usize; 2] {
    let ones = rows.iter().filter(|&&r| labels[r] == 1).count();
    [rows.len() - ones, ones]
}

/// Best axis-aligned split of `rows` over the candidate `features`.
///
/// Candidate thresholds are midpoints `(a + b) / 2` of consecutive distinct
/// sorted values; rows with `x[feature] <= threshold` go left. The score of
/// a split is
///
/// ```text
/// gini(parent) - (n_left * gini(left) + n_right * gini(right)) / n
/// ```
///
/// The highest score wins; ties go to the lower feature index, then the
/// lower threshold. Returns `None` when no split scores above
/// [`MIN_IMPURITY_DECREASE`].
pub fn best_split(rows: &[usize], features: &[usize], ds: &LabeledDataset) -> Option<SplitChoice> {
    let labels = ds.labels();
    let x = ds.features();
    let n = rows.len();
    if n < 2 {
        return None;
    }
    let parent = class_counts(rows, labels);
    if parent[0] == 0 || parent[1] == 0 {
        return None;
    }
    let parent_gini = gini_unchecked(parent, n);

    let mut sorted_features = features.to_vec();
    sorted_features.sort_unstable();
    sorted_features.dedup();

    let mut best: Option<SplitChoice> = None;
    let mut column: Vec<(f64, u8)> = Vec::with_capacity(n);
    for &feature in &sorted_features {
        column.clear();
        column.extend(rows.iter().map(|&r| (x.get(r, feature), labels[r])));
        column.sort_by(|a, b| a.0.total_cmp(&b.0));

        let mut left = [0usize; 2];
        for i in 0..n - 1 {
            left[column[i].1 as usize] += 1;
            let (a, b) = (column[i].0, column[i + 1].0);
            if a == b {
                continue;
            }
            let right = [parent[0] - left[0], parent[1] - left[1]];
            let n_left = i + 1;
            let n_right = n - n_left;
            let weighted = (n_left as f64 * gini_unchecked(left, n_left)
                + n_right as f64 * gini_unchecked(right, n_right))
                / n as f64;
            let decrease = parent_gini - weighted;
            if decrease > MIN_IMPURITY_DECREASE
                && best.is_none_or(|bs| decrease > bs.impurity_decrease)
            {
                let mut threshold = (a + b) / 2.0;
                if threshold >= b {
                    // a and b are adjacent floats.
                    threshold = a;
                }
                best = Some(SplitChoice {
                    feature,
                    threshold,
                    impurity_decrease: decrease,
                });
            }
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Leaf {
        class_counts: [usize; 2],
    },
    Internal {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

impl TreeNode {
    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Internal { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Internal { left, right, .. } => 1 + left.node_count() + right.node_count(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeParams {
    /// `None` grows until the other stopping rules apply.
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    /// Features drawn per node; `None` uses all features.
    pub features_per_split: Option<usize>,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: Some(16),
            min_samples_split: 2,
            features_per_split: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    pub root: TreeNode,
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
}

impl DecisionTree {
    fn leaf(&self, x: &[f64]) -> [usize; 2] {
        let mut node = &self.root;
        loop {
            match node {
                TreeNode::Leaf { class_counts } => return *class_counts,
                TreeNode::Internal {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if x[*feature] <= *threshold { left } else { right };
                }
            }
        }
    }

    /// Majority label of the leaf reached by `x`; ties go to 0.
    pub fn predict(&self, x: &[f64]) -> u8 {
        let c = self.leaf(x);
        u8::from(c[1] > c[0])
    }
}

/// Grows a CART tree on `rows` (indices into `ds`, repeats allowed).
///
/// A node becomes a leaf at `max_depth`, when it is pure, when it holds
/// fewer than `min_samples_split` rows, or when [`best_split`] finds
/// nothing on the node's feature subset. Every node draws a fresh subset
/// of `features_per_split` features from `rng`.
pub fn grow_tree(
    rows: &[usize],
    ds: &LabeledDataset,
    params: &TreeParams,
    rng: &mut SplitMix64,
) -> Result<DecisionTree> {
    if rows.is_empty() {
        return Err(Error::domain("cannot grow a tree on zero rows"));
    }
    let p = ds.n_features();
    let m = params.features_per_split.unwrap_or(p);
    if m == 0 || m > p {
        return Err(Error::domain(format!(
            "features_per_split = {m} must lie in 1..={p}"
        )));
    }
    let mut rows = rows.to_vec();
    let root = grow_node(&mut rows, 0, ds, params, m, rng);
    Ok(DecisionTree {
        root,
        max_depth: params.max_depth,
        min_samples_split: params.min_samples_split,
    })
}

fn grow_node(
    rows: &mut [usize],
    depth: usize,
    ds: &LabeledDataset,
    params: &TreeParams,
    m: usize,
    rng: &mut SplitMix64,
) -> TreeNode {
    let counts = class_counts(rows, ds.labels());
    let stop = params.max_depth.is_some_and(|d| depth >= d)
        || counts[0] == 0
        || counts[1] == 0
        || rows.len() < params.min_samples_split;
    if stop {
        return TreeNode::Leaf {
            class_counts: counts,
        };
    }
    let p = ds.n_features();
    let features = if m == p {
        (0..p).collect()
    } else {
        rng.sample_distinct(p, m)
    };
    let Some(choice) = best_split(rows, &features, ds) else {
        return TreeNode::Leaf {
            class_counts: counts,
        };
    };
    let x = ds.features();
    let mut boundary = 0;
    for i in 0..rows.len() {
        if x.get(rows[i], choice.feature) <= choice.threshold {
            rows.swap(i, boundary);
            boundary += 1;
        }
    }
    let (left_rows, right_rows) = rows.split_at_mut(boundary);
    let left = grow_node(left_rows, depth + 1, ds, params, m, rng);
    let right = grow_node(right_rows, depth + 1, ds, params, m, rng);
    TreeNode::Internal {
        feature: choice.feature,
        threshold: choice.threshold,
        left: Box::new(left),
        right: Box::new(right),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForestParams {
    pub n_trees: usize,
    /// `None` means `floor(sqrt(p))`, at least 1.
    pub features_per_split: Option<usize>,
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    /// When false every tree sees the full training set (test hook).
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            features_per_split: None,
            max_depth: Some(16),
            min_samples_split: 2,
            bootstrap: true,
        }
    }
}

impl ForestParams {
    pub fn resolved_features_per_split(&self, p: usize) -> usize {
        self.features_per_split
            .unwrap_or_else(|| ((p as f64).sqrt().floor() as usize).max(1))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestModel {
    pub trees: Vec<DecisionTree>,
    pub n_features: usize,
    pub features_per_split: usize,
    pub bootstrap: bool,
    pub seed: u64,
    pub positive_label: u8,
}

/// Trains a random forest.
///
/// Tree `i` draws its bootstrap sample and its per-node feature subsets
/// from `SplitMix64::new(derive_seed(seed, i))`, so trees are trained in
/// parallel and the forest is identical to a serial build.
pub fn fit_forest(
    ds: &LabeledDataset,
    params: &ForestParams,
    seed: u64,
    positive_label: u8,
) -> Result<ForestModel> {
    let n = ds.n_samples();
    let p = ds.n_features();
    if n == 0 {
        return Err(Error::domain("cannot fit a forest on an empty dataset"));
    }
    if params.n_trees == 0 {
        return Err(Error::domain("n_trees must be at least 1"));
    }
    if positive_label > 1 {
        return Err(Error::domain("positive_label must be 0 or 1"));
    }
    let m = params.resolved_features_per_split(p);
    let tree_params = TreeParams {
        max_depth: params.max_depth,
        min_samples_split: params.min_samples_split,
        features_per_split: Some(m),
    };
    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|i| {
            let mut rng = SplitMix64::new(derive_seed(seed, i as u64));
            let rows: Vec<usize> = if params.bootstrap {
                (0..n).map(|_| rng.below(n)).collect()
            } else {
                (0..n).collect()
            };
            grow_tree(&rows, ds, &tree_params, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ForestModel {
        trees,
        n_features: p,
        features_per_split: m,
        bootstrap: params.bootstrap,
        seed,
        positive_label,
    })
}

impl ForestModel {
    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    /// Number of trees whose leaf majority is the positive label.
    pub fn positive_votes(&self, x: &[f64]) -> Result<usize> {
        if x.len() != self.n_features {
            return Err(Error::Dimension {
                expected: self.n_features,
                got: x.len(),
            });
        }
        Ok(self
            .trees
            .iter()
            .filter(|t| t.predict(x) == self.positive_label)
            .count())
    }

    /// Plain-text export, one node per line in pre-order.
    ///
    /// ```text
    /// forest 1
    /// n_features <p>
    /// features_per_split <m>
    /// bootstrap <true|false>
    /// seed <u64>
    /// positive_label <0|1>
    /// n_trees <t>
    /// tree <index> <node_count> <max_depth|none> <min_samples_split>
    /// split <feature> <threshold>   (left subtree follows, then right)
    /// leaf <count0> <count1>
    /// end forest
    /// ```
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "forest 1");
        let _ = writeln!(s, "n_features {}", self.n_features);
        let _ = writeln!(s, "features_per_split {}", self.features_per_split);
        let _ = writeln!(s, "bootstrap {}", self.bootstrap);
        let _ = writeln!(s, "seed {}", self.seed);
        let _ = writeln!(s, "positive_label {}", self.positive_label);
        let _ = writeln!(s, "n_trees {}", self.trees.len());
        for (i, tree) in self.trees.iter().enumerate() {
            let depth = tree
                .max_depth
                .map_or_else(|| "none".to_string(), |d| d.to_string());
            let _ = writeln!(
                s,
                "tree {i} {} {depth} {}",
                tree.root.node_count(),
                tree.min_samples_split
            );
            write_node(&tree.root, &mut s);
        }
        let _ = writeln!(s, "end forest");
        s
    }

    pub fn read_text(r: &mut TextReader<'_>) -> Result<Self> {
        let version: u32 = r.expect_value("forest")?;
        if version != 1 {
            return Err(r.error(0, format!("unsupported forest format version {version}")));
        }
        let n_features: usize = r.expect_value("n_features")?;
        let features_per_split: usize = r.expect_value("features_per_split")?;
        let bootstrap: bool = r.expect_value("bootstrap")?;
        let seed: u64 = r.expect_value("seed")?;
        let positive_label: u8 = r.expect_value("positive_label")?;
        if positive_label > 1 {
            return Err(r.error(0, "positive_label must be 0 or 1"));
        }
        let n_trees: usize = r.expect_value("n_trees")?;
        let mut trees = Vec::with_capacity(n_trees);
        for i in 0..n_trees {
            let header = r.expect("tree")?;
            if header.rest.len() != 4 {
                return Err(r.error(header.number, "`tree` takes 4 values"));
            }
            let index: usize = r.parse(header.number, header.rest[0])?;
            if index != i {
                return Err(r.error(header.number, format!("expected tree {i}")));
            }
            let node_count: usize = r.parse(header.number, header.rest[1])?;
            let max_depth = match header.rest[2] {
                "none" => None,
                t => Some(r.parse(header.number, t)?),
            };
            let min_samples_split = r.parse(header.number, header.rest[3])?;
            let root = read_node(r, n_features)?;
            if root.node_count() != node_count {
                return Err(r.error(header.number, "node count does not match"));
            }
            trees.push(DecisionTree {
                root,
                max_depth,
                min_samples_split,
            });
        }
        let end = r.expect("end")?;
        if end.rest != ["forest"] {
            return Err(r.error(end.number, "expected `end forest`"));
        }
        Ok(ForestModel {
            trees,
            n_features,
            features_per_split,
            bootstrap,
            seed,
            positive_label,
        })
    }

    pub fn from_text(source_name: &str, text: &str) -> Result<Self> {
        let mut r = TextReader::new(source_name, text);
        let model = ForestModel::read_text(&mut r)?;
        r.expect_done()?;
        Ok(model)
    }
}

fn write_node(node: &TreeNode, s: &mut String) {
    match node {
        TreeNode::Leaf { class_counts } => {
            let _ = writeln!(s, "leaf {} {}", class_counts[0], class_counts[1]);
        }
        TreeNode::Internal {
            feature,
            threshold,
            left,
            right,
        } => {
            let _ = writeln!(s, "split {feature} {}", fmt_real(*threshold));
            write_node(left, s);
            write_node(right, s);
        }
    }
}

fn read_node(r: &mut TextReader<'_>, n_features: usize) -> Result<TreeNode> {
    let line = r.next_line()?;
    if line.rest.len() != 2 {
        return Err(r.error(line.number, "node lines take 2 values"));
    }
    match line.key {
        "leaf" => {
            let c0: usize = r.parse(line.number, line.rest[0])?;
            let c1: usize = r.parse(line.number, line.rest[1])?;
            if c0 + c1 == 0 {
                return Err(r.error(line.number, "empty leaf"));
            }
            Ok(TreeNode::Leaf {
                class_counts: [c0, c1],
            })
        }
        "split" => {
            let feature: usize = r.parse(line.number, line.rest[0])?;
            if feature >= n_features {
                return Err(r.error(line.number, "feature index out of range"));
            }
            let threshold: f64 = r.parse(line.number, line.rest[1])?;
            if !threshold.is_finite() {
                return Err(r.error(line.number, "non-finite threshold"));
            }
            let left = read_node(r, n_features)?;
            let right = read_node(r, n_features)?;
            Ok(TreeNode::Internal {
                feature,
                threshold,
                left: Box::new(left),
                right: Box::new(right),
            })
        }
        other => Err(r.error(line.number, format!("unknown node kind `{other}`"))),
    }
}

/// Fraction of trees voting for the positive label.
pub fn predict_score(model: &ForestModel, x: &[f64]) -> Result<f64> {
    Ok(model.positive_votes(x)? as f64 / model.n_trees() as f64)
}

/// Positive label when [`predict_score`] is at least 0.5.
pub fn predict(model: &ForestModel, x: &[f64]) -> Result<u8> {
    let score = predict_score(model, x)?;
    Ok(if score >= 0.5 {
        model.positive_label
    } else {
        1 - model.positive_label
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;

    fn ds(rows: &[&[f64]], labels: &[u8]) -> LabeledDataset {
        let m = Matrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap();
        LabeledDataset::unnamed(m, labels.to_vec()).unwrap()
    }

    fn four_points() -> LabeledDataset {
        ds(&[&[1.0], &[2.0], &[3.0], &[4.0]], &[0, 0, 1, 1])
    }

    #[test]
    fn gini_values() {
        assert_eq!(gini([10, 0]).unwrap(), 0.0);
        assert_eq!(gini([5, 5]).unwrap(), 0.5);
        assert_eq!(gini([3, 1]).unwrap(), 0.375);
        assert!(gini([0, 0]).is_err());
    }

    #[test]
    fn best_split_four_points() {
        let d = four_points();
        let s = best_split(&[0, 1, 2, 3], &[0], &d).unwrap();
        assert_eq!(s.feature, 0);
        assert_eq!(s.threshold, 2.5);
        assert_eq!(s.impurity_decrease, 0.5);
    }

    #[test]
    fn best_split_none_cases() {
        let d = ds(&[&[1.0, 5.0], &[2.0, 5.0], &[3.0, 5.0]], &[1, 1, 1]);
        assert!(best_split(&[0, 1, 2], &[0, 1], &d).is_none());
        let d = ds(&[&[1.0, 5.0], &[1.0, 5.0], &[1.0, 5.0]], &[0, 1, 0]);
        assert!(best_split(&[0, 1, 2], &[0, 1], &d).is_none());
    }

    #[test]
    fn ties_prefer_lower_feature() {
        // Both features separate the classes perfectly.
        let d = ds(&[&[1.0, 10.0], &[2.0, 20.0], &[3.0, 30.0], &[4.0, 40.0]], &[0, 0, 1, 1]);
        let s = best_split(&[0, 1, 2, 3], &[1, 0], &d).unwrap();
        assert_eq!(s.feature, 0);
    }

    #[test]
    fn grow_pure_and_depth_zero() {
        let d = ds(&[&[1.0], &[2.0]], &[1, 1]);
        let mut rng = SplitMix64::new(0);
        let t = grow_tree(&[0, 1], &d, &TreeParams::default(), &mut rng).unwrap();
        assert_eq!(t.root, TreeNode::Leaf { class_counts: [0, 2] });

        let d = ds(&[&[1.0], &[2.0], &[3.0]], &[0, 1, 1]);
        let params = TreeParams {
            max_depth: Some(0),
            ..TreeParams::default()
        };
        let t = grow_tree(&[0, 1, 2], &d, &params, &mut rng).unwrap();
        assert_eq!(t.root, TreeNode::Leaf { class_counts: [1, 2] });
        assert_eq!(t.predict(&[0.0]), 1);
    }

    #[test]
    fn grow_four_points() {
        let d = four_points();
        let mut rng = SplitMix64::new(0);
        let t = grow_tree(&[0, 1, 2, 3], &d, &TreeParams::default(), &mut rng).unwrap();
        assert_eq!(
            t.root,
            TreeNode::Internal {
                feature: 0,
                threshold: 2.5,
                left: Box::new(TreeNode::Leaf { class_counts: [2, 0] }),
                right: Box::new(TreeNode::Leaf { class_counts: [0, 2] }),
            }
        );
    }

    #[test]
    fn min_samples_split_stops_growth() {
        let d = four_points();
        let params = TreeParams {
            min_samples_split: 5,
            ..TreeParams::default()
        };
        let t = grow_tree(&[0, 1, 2, 3], &d, &params, &mut SplitMix64::new(0)).unwrap();
        assert_eq!(t.root.node_count(), 1);
    }

    #[test]
    fn leaf_ties_vote_zero() {
        let t = DecisionTree {
            root: TreeNode::Leaf { class_counts: [3, 3] },
            max_depth: None,
            min_samples_split: 2,
        };
        assert_eq!(t.predict(&[0.0]), 0);
    }

    #[test]
    fn vote_fraction_and_threshold() {
        let pos = DecisionTree {
            root: TreeNode::Leaf { class_counts: [0, 1] },
            max_depth: None,
            min_samples_split: 2,
        };
        let neg = DecisionTree {
            root: TreeNode::Leaf { class_counts: [1, 0] },
            ..pos.clone()
        };
        let mut trees = vec![pos.clone(); 55];
        trees.extend(vec![neg; 45]);
        let model = ForestModel {
            trees,
            n_features: 1,
            features_per_split: 1,
            bootstrap: true,
            seed: 0,
            positive_label: 1,
        };
        assert_eq!(predict_score(&model, &[0.0]).unwrap(), 0.55);
        assert_eq!(predict(&model, &[0.0]).unwrap(), 1);
        assert!(predict_score(&model, &[0.0, 1.0]).is_err());

        let flipped = ForestModel {
            positive_label: 0,
            ..model.clone()
        };
        assert!((predict_score(&flipped, &[0.0]).unwrap() - 0.45).abs() < 1e-15);
        assert_eq!(predict(&flipped, &[0.0]).unwrap(), 1);

        let all = ForestModel {
            trees: vec![pos; 7],
            ..model
        };
        assert_eq!(predict_score(&all, &[3.0]).unwrap(), 1.0);
    }

    #[test]
    fn forest_errors() {
        let d = four_points();
        let zero = ForestParams {
            n_trees: 0,
            ..ForestParams::default()
        };
        assert!(fit_forest(&d, &zero, 1, 1).is_err());
        let too_many = ForestParams {
            features_per_split: Some(2),
            ..ForestParams::default()
        };
        assert!(fit_forest(&d, &too_many, 1, 1).is_err());
    }

    #[test]
    fn text_round_trip() {
        let d = ds(
            &[&[0.1, 3.0], &[0.7, 1.0], &[0.2, 2.5], &[0.9, 0.3], &[0.5, 0.5], &[0.4, 2.0]],
            &[0, 1, 0, 1, 1, 0],
        );
        let params = ForestParams {
            n_trees: 5,
            max_depth: None,
            ..ForestParams::default()
        };
        let model = fit_forest(&d, &params, 3, 1).unwrap();
        let back = ForestModel::from_text("f", &model.to_text()).unwrap();
        assert_eq!(back, model);

        let broken = model.to_text().replace("leaf", "leef");
        assert!(ForestModel::from_text("f", &broken).is_err());
    }
}
