//! Confusion-matrix metrics, ROC curves and AUC.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionMatrix {
    pub fn new(tp: usize, fp: usize, tn: usize, fn_: usize) -> Self {
        ConfusionMatrix { tp, fp, tn, fn_ }
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn positives(&self) -> usize {
        self.tp + self.fn_
    }

    pub fn negatives(&self) -> usize {
        self.tn + self.fp
    }
}

/// Counts predictions against labels, treating `positive_label` as positive.
pub fn confusion(labels: &[u8], predictions: &[u8], positive_label: u8) -> Result<ConfusionMatrix> {
    if labels.len() != predictions.len() {
        return Err(Error::Dimension {
            expected: labels.len(),
            got: predictions.len(),
        });
    }
    if labels.is_empty() {
        return Err(Error::domain("confusion matrix of zero samples"));
    }
    if positive_label > 1 {
        return Err(Error::domain("positive_label must be 0 or 1"));
    }
    let mut cm = ConfusionMatrix::default();
    for (&y, &p) in labels.iter().zip(predictions) {
        if y > 1 || p > 1 {
            return Err(Error::domain(format!(
                "labels must be 0 or 1, got label {y} prediction {p}"
            )));
        }
        match (y == positive_label, p == positive_label) {
            (true, true) => cm.tp += 1,
            (false, true) => cm.fp += 1,
            (false, false) => cm.tn += 1,
            (true, false) => cm.fn_ += 1,
        }
    }
    Ok(cm)
}

/// Which ratios had a zero denominator (and were reported as 0).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct DegenerateFlags {
    pub sensitivity: bool,
    pub specificity: bool,
    pub precision: bool,
    pub f1: bool,
}

impl DegenerateFlags {
    pub fn any(&self) -> bool {
        self.sensitivity || self.specificity || self.precision || self.f1
    }

    /// `;`-separated names of the flagged metrics, empty when none.
    pub fn describe(&self) -> String {
        let names = [
            (self.sensitivity, "sensitivity"),
            (self.specificity, "specificity"),
            (self.precision, "precision"),
            (self.f1, "f1"),
        ];
        names
            .iter()
            .filter(|(f, _)| *f)
            .map(|(_, n)| *n)
            .collect::<Vec<_>>()
            .join(";")
    }
}

/// Metrics as percentages in `[0, 100]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub sensitivity: f64,
    pub specificity: f64,
    pub precision: f64,
    pub f1: f64,
    pub degenerate: DegenerateFlags,
}

/// Row labels used in every report table, in table order.
pub const METRIC_NAMES: [&str; 5] = ["Accuracy", "Sensitivity", "Specificity", "Precision", "F1 Score"];

impl MetricsReport {
    pub fn values(&self) -> [f64; 5] {
        [
            self.accuracy,
            self.sensitivity,
            self.specificity,
            self.precision,
            self.f1,
        ]
    }
}

fn percent(num: usize, den: usize, flag: &mut bool) -> f64 {
    if den == 0 {
        *flag = true;
        0.0
    } else {
        100.0 * num as f64 / den as f64
    }
}

/// Accuracy, sensitivity, specificity, precision and F1 of a confusion
/// matrix. A ratio with a zero denominator is reported as 0 and flagged.
pub fn metrics_report(cm: &ConfusionMatrix) -> MetricsReport {
    let mut flags = DegenerateFlags::default();
    let mut no_flag = false;
    MetricsReport {
        accuracy: percent(cm.tp + cm.tn, cm.total(), &mut no_flag),
        sensitivity: percent(cm.tp, cm.tp + cm.fn_, &mut flags.sensitivity),
        specificity: percent(cm.tn, cm.tn + cm.fp, &mut flags.specificity),
        precision: percent(cm.tp, cm.tp + cm.fp, &mut flags.precision),
        f1: percent(2 * cm.tp, 2 * cm.tp + cm.fp + cm.fn_, &mut flags.f1),
        degenerate: flags,
    }
}

/// Formats a percentage with three decimals, truncating toward zero the
/// way the published result tables do (55.5556 prints as `55.555`).
pub fn format_percent(v: f64) -> String {
    // The nudge keeps values such as 28.999999999999996 (= 0.29 * 100)
    // from truncating a whole digit low.
    let thousandths = (v * 1000.0 + 1e-6).floor() as i64;
    let sign = if thousandths < 0 { "-" } else { "" };
    let t = thousandths.unsigned_abs();
    format!("{sign}{}.{:03}", t / 1000, t % 1000)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    /// `(fpr, tpr)` from `(0, 0)` to `(1, 1)`.
    pub points: Vec<(f64, f64)>,
    pub auc: f64,
}

/// ROC curve over all distinct score thresholds, highest first.
///
/// A sample is predicted positive when its score is at least the
/// threshold, so tied scores enter the curve together as one step.
/// The AUC is the trapezoidal area under the points.
pub fn roc_curve(scores: &[f64], labels: &[u8], positive_label: u8) -> Result<RocCurve> {
    if scores.len() != labels.len() {
        return Err(Error::Dimension {
            expected: labels.len(),
            got: scores.len(),
        });
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::domain("ROC scores must be finite"));
    }
    if labels.iter().any(|&l| l > 1) || positive_label > 1 {
        return Err(Error::domain("labels must be 0 or 1"));
    }
    let n_pos = labels.iter().filter(|&&l| l == positive_label).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::domain(
            "ROC curve needs both positive and negative samples",
        ));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut points = Vec::with_capacity(scores.len() + 1);
    points.push((0.0, 0.0));
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if labels[order[i]] == positive_label {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push((fp as f64 / n_neg as f64, tp as f64 / n_pos as f64));
    }
    let auc = points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0)
        .sum();
    Ok(RocCurve { points, auc })
}

impl RocCurve {
    /// Two-column CSV with an AUC footer:
    ///
    /// ```text
    /// fpr,tpr
    /// 0,0
    /// ...
    /// 1,1
    /// # auc,<value>
    /// ```
    ///
    /// Reals use Rust's shortest round-trip formatting.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("fpr,tpr\n");
        for (x, y) in &self.points {
            let _ = writeln!(s, "{x},{y}");
        }
        let _ = writeln!(s, "# auc,{}", self.auc);
        s
    }

    pub fn from_csv(source_name: &str, text: &str) -> Result<RocCurve> {
        let err = |line: usize, message: String| Error::Format {
            source_name: source_name.to_owned(),
            line,
            message,
        };
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
        match lines.next() {
            Some((_, "fpr,tpr")) => {}
            Some((n, other)) => return Err(err(n, format!("expected header `fpr,tpr`, found `{other}`"))),
            None => return Err(err(0, "empty file".into())),
        }
        let parse = |n: usize, t: &str| -> Result<f64> {
            let v: f64 = t
                .trim()
                .parse()
                .map_err(|_| err(n, format!("cannot parse `{t}`")))?;
            if !(0.0..=1.0).contains(&v) {
                return Err(err(n, format!("value {v} outside [0, 1]")));
            }
            Ok(v)
        };
        let mut points = Vec::new();
        let mut auc = None;
        for (n, line) in lines {
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let rest = rest.trim();
                if let Some(v) = rest.strip_prefix("auc,") {
                    auc = Some(parse(n, v)?);
                    continue;
                }
                return Err(err(n, format!("unknown footer `{line}`")));
            }
            let (x, y) = line
                .split_once(',')
                .ok_or_else(|| err(n, "expected `fpr,tpr`".into()))?;
            let p = (parse(n, x)?, parse(n, y)?);
            if let Some(&(px, py)) = points.last() {
                if p.0 < px || p.1 < py {
                    return Err(err(n, "ROC points must be non-decreasing".into()));
                }
            }
            points.push(p);
        }
        if points.len() < 2 {
            return Err(err(0, "ROC file needs at least two points".into()));
        }
        let auc = match auc {
            Some(a) => a,
            None => points
                .windows(2)
                .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0)
                .sum(),
        };
        Ok(RocCurve { points, auc })
    }

    pub fn load(path: &Path) -> Result<RocCurve> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        RocCurve::from_csv(&path.display().to_string(), &text)
    }
}
