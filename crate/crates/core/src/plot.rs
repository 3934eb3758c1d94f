//! SVG rendering of ROC curves.

use std::fmt::Write as _;

use crate::metrics::RocCurve;

const SIZE: f64 = 480.0;
const MARGIN: f64 = 60.0;

fn px(v: f64) -> f64 {
    MARGIN + v * SIZE
}

fn py(v: f64) -> f64 {
    MARGIN + (1.0 - v) * SIZE
}

/// Standalone SVG: unit-square axes with ticks every 0.2, a dashed chance
/// diagonal, the curve as a polyline, and the AUC in the legend.
pub fn roc_svg(roc: &RocCurve, title: &str) -> String {
    let total = SIZE + 2.0 * MARGIN;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{total}" height="{total}" viewBox="0 0 {total} {total}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="16" text-anchor="middle">{}</text>"#,
        total / 2.0,
        MARGIN / 2.0,
        escape(title)
    );
    // Frame.
    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{SIZE}" height="{SIZE}" fill="none" stroke="black"/>"#
    );
    for i in 0..=5 {
        let t = i as f64 / 5.0;
        let _ = writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{y0:.2}" x2="{x:.2}" y2="{y1:.2}" stroke="black"/><text x="{x:.2}" y="{ty:.2}" font-family="sans-serif" font-size="12" text-anchor="middle">{t:.1}</text>"#,
            x = px(t),
            y0 = py(0.0),
            y1 = py(0.0) + 6.0,
            ty = py(0.0) + 20.0,
        );
        let _ = writeln!(
            s,
            r#"<line x1="{x0:.2}" y1="{y:.2}" x2="{x1:.2}" y2="{y:.2}" stroke="black"/><text x="{tx:.2}" y="{ty:.2}" font-family="sans-serif" font-size="12" text-anchor="end">{t:.1}</text>"#,
            x0 = px(0.0) - 6.0,
            x1 = px(0.0),
            y = py(t),
            tx = px(0.0) - 9.0,
            ty = py(t) + 4.0,
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="14" text-anchor="middle">False positive rate</text>"#,
        px(0.5),
        py(0.0) + 45.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{x:.2}" y="{y:.2}" font-family="sans-serif" font-size="14" text-anchor="middle" transform="rotate(-90 {x:.2} {y:.2})">True positive rate</text>"#,
        x = MARGIN - 40.0,
        y = py(0.5)
    );
    let _ = writeln!(
        s,
        r##"<line id="baseline" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#888888" stroke-dasharray="6 4"/>"##,
        px(0.0),
        py(0.0),
        px(1.0),
        py(1.0)
    );
    let points: Vec<String> = roc
        .points
        .iter()
        .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
        .collect();
    let _ = writeln!(
        s,
        r##"<polyline id="roc" points="{}" fill="none" stroke="#1f77b4" stroke-width="2"/>"##,
        points.join(" ")
    );
    // Legend, lower right.
    let lx = px(0.55);
    let ly = py(0.12);
    let _ = writeln!(
        s,
        r##"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="#1f77b4" stroke-width="2"/><text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="13">ROC (AUC = {:.3})</text>"##,
        lx + 24.0,
        lx + 30.0,
        ly + 4.0,
        roc.auc
    );
    let _ = writeln!(
        s,
        r##"<line x1="{lx:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#888888" stroke-dasharray="6 4"/><text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="13">Chance</text>"##,
        lx + 24.0,
        lx + 30.0,
        ly + 24.0,
        y = ly + 20.0,
    );
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
