//! Standalone SVG rendering of a ROC curve plus sensitivity and
//! specificity against the decision threshold.

use std::fmt::Write as _;
use std::path::Path;

use crate::eval::RocCurve;

const PANEL: f64 = 360.0;
const LEFT: f64 = 60.0;
const TOP: f64 = 50.0;
const GAP: f64 = 120.0;

fn roc_xy(fpr: f64, tpr: f64) -> (f64, f64) {
    (LEFT + fpr * PANEL, TOP + (1.0 - tpr) * PANEL)
}

fn polyline(out: &mut String, pts: &[(f64, f64)], stroke: &str, extra: &str) {
    let coords: Vec<String> = pts.iter().map(|(x, y)| format!("{:.2},{:.2}", x, y)).collect();
    let _ = writeln!(
        out,
        r#"  <polyline fill="none" stroke="{}" stroke-width="2"{} points="{}"/>"#,
        stroke,
        extra,
        coords.join(" ")
    );
}

fn axes(out: &mut String, x0: f64, xlabel: &str, ylabel: &str, ticks: &[(f64, String)]) {
    let _ = writeln!(
        out,
        r#"  <rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
        x0, TOP, PANEL, PANEL
    );
    for i in 0..=4 {
        let v = i as f64 / 4.0;
        let y = TOP + (1.0 - v) * PANEL;
        let _ = writeln!(
            out,
            r#"  <text x="{:.2}" y="{:.2}" font-size="11" text-anchor="end">{:.2}</text>"#,
            x0 - 6.0,
            y + 4.0,
            v
        );
    }
    for (x, label) in ticks {
        let _ = writeln!(
            out,
            r#"  <text x="{:.2}" y="{:.2}" font-size="11" text-anchor="middle">{}</text>"#,
            x,
            TOP + PANEL + 16.0,
            label
        );
    }
    let _ = writeln!(
        out,
        r#"  <text x="{:.2}" y="{:.2}" font-size="13" text-anchor="middle">{}</text>"#,
        x0 + PANEL / 2.0,
        TOP + PANEL + 36.0,
        xlabel
    );
    let _ = writeln!(
        out,
        r#"  <text x="{:.2}" y="{:.2}" font-size="13" text-anchor="middle" transform="rotate(-90 {:.2} {:.2})">{}</text>"#,
        x0 - 40.0,
        TOP + PANEL / 2.0,
        x0 - 40.0,
        TOP + PANEL / 2.0,
        ylabel
    );
}

/// SVG document text. Output depends only on the curve.
pub fn render_roc_svg(curve: &RocCurve) -> String {
    let width = LEFT + PANEL + GAP + PANEL + 40.0;
    let height = TOP + PANEL + 60.0;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#,
        w = width,
        h = height
    );
    let _ = writeln!(out, r#"  <rect width="100%" height="100%" fill="white"/>"#);

    // ROC panel
    let ticks: Vec<(f64, String)> = (0..=4)
        .map(|i| {
            let v = i as f64 / 4.0;
            (LEFT + v * PANEL, format!("{:.2}", v))
        })
        .collect();
    axes(&mut out, LEFT, "1 - specificity (FP rate)", "sensitivity (TP rate)", &ticks);
    let _ = writeln!(
        out,
        r#"  <text x="{:.2}" y="{:.2}" font-size="14" text-anchor="middle">ROC curve</text>"#,
        LEFT + PANEL / 2.0,
        TOP - 20.0
    );
    polyline(&mut out, &[roc_xy(0.0, 0.0), roc_xy(1.0, 1.0)], "gray", r#" stroke-dasharray="6,4""#);
    if !curve.points.is_empty() {
        let pts: Vec<(f64, f64)> = curve.points.iter().map(|p| roc_xy(p.fp_rate, p.tp_rate)).collect();
        polyline(&mut out, &pts, "#1f77b4", "");
    }
    let _ = writeln!(
        out,
        r#"  <text x="{:.2}" y="{:.2}" font-size="13" text-anchor="end">AUC = {:.3}</text>"#,
        LEFT + PANEL - 10.0,
        TOP + PANEL - 12.0,
        curve.auc
    );

    // sensitivity / specificity against threshold
    let x0 = LEFT + PANEL + GAP;
    let thresholds: Vec<(f64, f64, f64)> = curve
        .points
        .iter()
        .rev()
        .filter_map(|p| p.threshold.map(|t| (t, p.tp_rate, 1.0 - p.fp_rate)))
        .filter(|(t, _, _)| t.is_finite())
        .collect();
    let (lo, hi) = thresholds
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (t, _, _)| (lo.min(*t), hi.max(*t)));
    let tx = |t: f64| {
        if hi > lo {
            x0 + (t - lo) / (hi - lo) * PANEL
        } else {
            x0 + PANEL / 2.0
        }
    };
    let ticks: Vec<(f64, String)> = if thresholds.is_empty() {
        Vec::new()
    } else if hi > lo {
        (0..=4)
            .map(|i| {
                let t = lo + (hi - lo) * i as f64 / 4.0;
                (tx(t), format!("{:.3}", t))
            })
            .collect()
    } else {
        vec![(tx(lo), format!("{:.3}", lo))]
    };
    axes(&mut out, x0, "threshold", "rate", &ticks);
    let _ = writeln!(
        out,
        r#"  <text x="{:.2}" y="{:.2}" font-size="14" text-anchor="middle">Sensitivity and specificity</text>"#,
        x0 + PANEL / 2.0,
        TOP - 20.0
    );
    let y = |v: f64| TOP + (1.0 - v) * PANEL;
    if !thresholds.is_empty() {
        let sens: Vec<(f64, f64)> = thresholds.iter().map(|(t, s, _)| (tx(*t), y(*s))).collect();
        let spec: Vec<(f64, f64)> = thresholds.iter().map(|(t, _, s)| (tx(*t), y(*s))).collect();
        polyline(&mut out, &sens, "#d62728", "");
        polyline(&mut out, &spec, "#2ca02c", "");
    }
    for (i, (name, color)) in [("sensitivity", "#d62728"), ("specificity", "#2ca02c")].iter().enumerate() {
        let ly = TOP + 16.0 + 18.0 * i as f64;
        let _ = writeln!(
            out,
            r#"  <line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{}" stroke-width="2"/>"#,
            x0 + 10.0,
            ly - 4.0,
            x0 + 30.0,
            ly - 4.0,
            color
        );
        let _ = writeln!(out, r#"  <text x="{:.2}" y="{:.2}" font-size="12">{}</text>"#, x0 + 36.0, ly, name);
    }
    out.push_str("</svg>\n");
    out
}

pub fn emit_roc_svg(curve: &RocCurve, path: &Path) -> std::io::Result<()> {
    std::fs::write(path, render_roc_svg(curve))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Label;
    use crate::eval::{roc_curve, RocPoint};

    #[test]
    fn degenerate_curve_still_renders() {
        let curve = RocCurve {
            points: vec![RocPoint { threshold: None, fp_rate: 0.0, tp_rate: 0.0 }],
            auc: 0.0,
        };
        let svg = render_roc_svg(&curve);
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains(r#"stroke-dasharray="6,4" points="60.00,410.00 420.00,50.00""#));
    }

    #[test]
    fn perfect_curve_hits_top_left() {
        let curve = roc_curve(&[0.9, 0.8, 0.1], &[Label::Positive, Label::Positive, Label::Negative]).unwrap();
        let svg = render_roc_svg(&curve);
        let (x, y) = roc_xy(0.0, 1.0);
        assert!(svg.contains(&format!("{:.2},{:.2}", x, y)));
        assert!(svg.contains("AUC = 1.000"));
    }

    #[test]
    fn annotates_auc() {
        use Label::*;
        let curve = roc_curve(&[0.9, 0.8, 0.7, 0.6], &[Positive, Negative, Positive, Negative]).unwrap();
        let svg = render_roc_svg(&curve);
        assert!(svg.contains("AUC = 0.750"));
        assert_eq!(svg, render_roc_svg(&curve));
    }
}
