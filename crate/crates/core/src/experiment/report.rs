use std::fmt::Write as _;

use super::{PcaArm, RunReport, Stat};
use crate::metrics::{format_percent, METRIC_NAMES};
use crate::pipeline::ModelKind;

/// One row per cell:
///
/// ```text
/// model,pca,seed,n_train,n_test,n_inputs,tp,fp,tn,fn,accuracy,sensitivity,specificity,precision,f1,auc,degenerate
/// ```
///
/// Metrics are percentages truncated to three decimals; `auc`
/// has six decimals and is empty when the test set had a single class;
/// `degenerate` lists metrics whose denominator was zero, `;`-separated.
pub fn metrics_csv(report: &RunReport) -> String {
    let mut s = String::from(
        "model,pca,seed,n_train,n_test,n_inputs,tp,fp,tn,fn,\
         accuracy,sensitivity,specificity,precision,f1,auc,degenerate\n",
    );
    for c in &report.cells {
        let m = c.metrics.values().map(format_percent);
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            c.model,
            c.pca.as_str(),
            c.seed,
            c.n_train,
            c.n_test,
            c.n_inputs,
            c.confusion.tp,
            c.confusion.fp,
            c.confusion.tn,
            c.confusion.fn_,
            m[0],
            m[1],
            m[2],
            m[3],
            m[4],
            c.auc.map_or_else(String::new, |a| format!("{a:.6}")),
            c.metrics.degenerate.describe(),
        );
    }
    s
}

fn mean_sd(stat: Stat) -> String {
    format!("{} ± {}", format_percent(stat.mean), format_percent(stat.sd))
}

fn render(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| {
            rows.iter()
                .filter_map(|r| r.get(c))
                .map(|cell| cell.chars().count())
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut s = String::new();
    for row in rows {
        let mut line = String::new();
        for (c, cell) in row.iter().enumerate() {
            if c > 0 {
                line.push_str("  ");
            }
            line.push_str(cell);
            let pad = widths[c] - cell.chars().count();
            line.extend(std::iter::repeat_n(' ', pad));
        }
        s.push_str(line.trim_end());
        s.push('\n');
    }
    s
}

/// Aligned comparison table, PCA arm "on" first, ANN before Random Forest.
pub fn comparison_table(report: &RunReport) -> String {
    let mut columns: Vec<(PcaArm, ModelKind)> = Vec::new();
    for arm in [PcaArm::On, PcaArm::Off] {
        for model in [ModelKind::Mlp, ModelKind::Forest] {
            if report.aggregate(model, arm).is_some() {
                columns.push((arm, model));
            }
        }
    }
    let seeds = &report.settings.seeds;
    let mut s = String::new();
    let _ = writeln!(
        s,
        "Test-set metrics in percent, mean ± sd over {} seed(s)",
        seeds.len()
    );
    let _ = writeln!(
        s,
        "dataset: {} ({} samples, {} features, class counts 0:{} 1:{}), positive label {}",
        report.dataset.file,
        report.dataset.samples,
        report.dataset.features,
        report.dataset.class_counts[0],
        report.dataset.class_counts[1],
        report.settings.positive_label
    );
    if let Some(first) = report.cells.first() {
        let _ = writeln!(
            s,
            "split: {} train / {} test, stratified {}",
            first.n_train, first.n_test, report.settings.split.stratified
        );
    }
    if report.settings.pca.arms.contains(&PcaArm::On) {
        let comps: Vec<f64> = report
            .cells
            .iter()
            .filter(|c| c.pca == PcaArm::On)
            .map(|c| c.n_inputs as f64)
            .collect();
        let policy = match (
            report.settings.pca.fixed_k,
            report.settings.pca.variance_threshold,
        ) {
            (Some(k), _) => format!("fixed_k {k}"),
            (None, Some(t)) => format!("variance_threshold {t}"),
            (None, None) => "variance_threshold 0.95".to_string(),
        };
        let _ = writeln!(
            s,
            "pca: {policy}, standardize {}, components mean {:.1}",
            report.settings.pca.standardize,
            Stat::of(&comps).mean
        );
    }
    s.push('\n');

    let mut rows = Vec::new();
    let mut group = vec![String::new()];
    let mut head = vec!["Metrics".to_string()];
    for (arm, model) in &columns {
        group.push(match arm {
            PcaArm::On => "with PCA".into(),
            PcaArm::Off => "without PCA".into(),
        });
        head.push(model.display_name().into());
    }
    rows.push(group);
    rows.push(head);
    for (i, name) in METRIC_NAMES.iter().enumerate() {
        let mut row = vec![name.to_string()];
        for &(arm, model) in &columns {
            let agg = report.aggregate(model, arm).expect("column exists");
            row.push(mean_sd(agg.stats()[i]));
        }
        rows.push(row);
    }
    let mut auc_row = vec!["AUC".to_string()];
    for &(arm, model) in &columns {
        let agg = report.aggregate(model, arm).expect("column exists");
        auc_row.push(agg.auc.map_or_else(
            || "n/a".to_string(),
            |a| format!("{:.4} ± {:.4}", a.mean, a.sd),
        ));
    }
    rows.push(auc_row);
    s.push_str(&render(&rows));

    if let Some(dir) = &report.direction_check {
        s.push('\n');
        let _ = writeln!(s, "Random Forest accuracy without vs with PCA");
        let mut rows = vec![vec![
            "seed".to_string(),
            "without PCA".to_string(),
            "with PCA".to_string(),
            "without > with".to_string(),
        ]];
        for d in &dir.per_seed {
            rows.push(vec![
                d.seed.to_string(),
                format_percent(d.accuracy_without_pca),
                format_percent(d.accuracy_with_pca),
                if d.without_pca_better { "yes" } else { "no" }.to_string(),
            ]);
        }
        s.push_str(&render(&rows));
        let _ = writeln!(
            s,
            "without > with on {}/{} seeds (means {} vs {})",
            dir.holds_on,
            dir.seeds,
            format_percent(dir.mean_accuracy_without_pca),
            format_percent(dir.mean_accuracy_with_pca)
        );
    }
    s
}
