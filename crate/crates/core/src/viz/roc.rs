use std::fmt::Write as _;

use super::num;
use crate::scoring::RocReport;

const SIZE: f64 = 500.0;
const MARGIN: f64 = 60.0;

fn plot_xy(fpr: f64, tpr: f64) -> (f64, f64) {
    let side = SIZE - 2.0 * MARGIN;
    (MARGIN + fpr * side, MARGIN + (1.0 - tpr) * side)
}

/// Text of the AUC annotation, rounded half away from zero.
pub(crate) fn auc_label(auc: f64) -> String {
    format!("AUC = {:.2}", (auc * 100.0).round() / 100.0)
}

/// ROC curve over the unit square with the chance diagonal dashed.
pub fn roc_svg(report: &RocReport) -> String {
    let mut out = String::new();
    let (x0, y0) = plot_xy(0.0, 0.0);
    let (x1, y1) = plot_xy(1.0, 1.0);
    writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#).expect("write");
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    )
    .expect("write");
    writeln!(out, r#"<rect x="0" y="0" width="{SIZE}" height="{SIZE}" fill="white"/>"#).expect("write");
    writeln!(
        out,
        r#"<rect class="axes" x="{}" y="{}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        num(x0),
        num(y1),
        num(x1 - x0),
        num(y0 - y1)
    )
    .expect("write");
    for t in [0.0, 0.5, 1.0] {
        let (tx, _) = plot_xy(t, 0.0);
        let (_, ty) = plot_xy(0.0, t);
        writeln!(
            out,
            r#"<text class="tick" x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">{t:.1}</text>"#,
            num(tx),
            num(y0 + 18.0)
        )
        .expect("write");
        writeln!(
            out,
            r#"<text class="tick" x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="end">{t:.1}</text>"#,
            num(x0 - 8.0),
            num(ty + 4.0)
        )
        .expect("write");
    }
    writeln!(
        out,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="14" text-anchor="middle">False positive rate</text>"#,
        num((x0 + x1) / 2.0),
        num(y0 + 40.0)
    )
    .expect("write");
    writeln!(
        out,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="14" text-anchor="middle" transform="rotate(-90 {} {})">True positive rate</text>"#,
        num(x0 - 36.0),
        num((y0 + y1) / 2.0),
        num(x0 - 36.0),
        num((y0 + y1) / 2.0)
    )
    .expect("write");
    writeln!(
        out,
        r#"<line class="chance" x1="{}" y1="{}" x2="{}" y2="{}" stroke="gray" stroke-dasharray="6,4"/>"#,
        num(x0),
        num(y0),
        num(x1),
        num(y1)
    )
    .expect("write");
    let pts: Vec<String> = report
        .points
        .iter()
        .map(|p| {
            let (x, y) = plot_xy(p.fpr, p.tpr);
            format!("{},{}", num(x), num(y))
        })
        .collect();
    writeln!(out, r#"<polyline class="roc" points="{}" fill="none" stroke="blue" stroke-width="2"/>"#, pts.join(" "))
        .expect("write");
    writeln!(
        out,
        r#"<text class="auc" x="{}" y="{}" font-family="sans-serif" font-size="14" text-anchor="end">{}</text>"#,
        num(x1 - 10.0),
        num(y0 - 12.0),
        auc_label(report.auc)
    )
    .expect("write");
    out.push_str("</svg>\n");
    out
}
