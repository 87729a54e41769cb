use std::fmt::Write as _;

use super::{escape_attr, num, Marker, PlotStyle, VizError};
use crate::patchio::Label;
use crate::tsne::Embedding;

/// Linear map from a data interval onto a canvas interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisMap {
    lo: f64,
    hi: f64,
    canvas_lo: f64,
    canvas_hi: f64,
}

impl AxisMap {
    /// Covers `[min, max]` widened by `padding` of the extent on each side.
    /// A zero extent is widened to one unit so the map stays invertible.
    pub fn covering(min: f64, max: f64, padding: f64, canvas_lo: f64, canvas_hi: f64) -> Self {
        let extent = if max > min { max - min } else { 1.0 };
        let (lo, hi) = if max > min { (min, max) } else { (min - 0.5, min + 0.5) };
        AxisMap { lo: lo - padding * extent, hi: hi + padding * extent, canvas_lo, canvas_hi }
    }

    pub fn map(&self, v: f64) -> f64 {
        self.canvas_lo + (v - self.lo) / (self.hi - self.lo) * (self.canvas_hi - self.canvas_lo)
    }
}

fn marker_element(out: &mut String, class: &str, marker: Marker, x: f64, y: f64, r: f64, colour: &str) {
    let (xs, ys) = (num(x), num(y));
    match marker {
        Marker::Cross => writeln!(
            out,
            r#"<path class="{class} cross" d="M{} {} L{} {} M{} {} L{} {}" stroke="{colour}" stroke-width="1.5" fill="none"/>"#,
            num(x - r),
            num(y - r),
            num(x + r),
            num(y + r),
            num(x - r),
            num(y + r),
            num(x + r),
            num(y - r),
        ),
        Marker::Circle => writeln!(
            out,
            r#"<circle class="{class} circle" cx="{xs}" cy="{ys}" r="{}" stroke="{colour}" stroke-width="1.5" fill="none"/>"#,
            num(r),
        ),
        Marker::Triangle => writeln!(
            out,
            r#"<polygon class="{class} triangle" points="{},{} {},{} {},{}" stroke="{colour}" stroke-width="1.5" fill="none"/>"#,
            xs,
            num(y - r),
            num(x - r),
            num(y + r),
            num(x + r),
            num(y + r),
        ),
    }
    .expect("write to string");
}

/// Scatter plot of a 2-D embedding, one marker per point in row order and
/// a legend of the labels present.
pub fn scatter_svg(embedding: &Embedding, style: &PlotStyle) -> Result<String, VizError> {
    let points = &embedding.points;
    let n = points.nrows();
    if n == 0 {
        return Err(VizError::Empty);
    }
    if points.ncols() != 2 || embedding.labels.len() != n {
        return Err(VizError::Shape);
    }
    style.check(&embedding.labels)?;
    if let Some(row) = (0..n).find(|&i| !(points[[i, 0]].is_finite() && points[[i, 1]].is_finite())) {
        return Err(VizError::NonFinite { row });
    }

    let column_range = |c: usize| {
        points.column(c).iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    };
    let (w, h) = (style.width as f64, style.height as f64);
    let (x_min, x_max) = column_range(0);
    let (y_min, y_max) = column_range(1);
    let x_axis = AxisMap::covering(x_min, x_max, style.padding, 0.0, w);
    // Canvas y grows downwards.
    let y_axis = AxisMap::covering(y_min, y_max, style.padding, h, 0.0);

    let mut out = String::new();
    writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#).expect("write");
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{}" height="{}" viewBox="0 0 {} {}">"#,
        style.width, style.height, style.width, style.height
    )
    .expect("write");
    writeln!(out, r#"<rect x="0" y="0" width="{}" height="{}" fill="white"/>"#, style.width, style.height)
        .expect("write");
    out.push_str("<g class=\"points\">\n");
    for (i, label) in embedding.labels.iter().enumerate() {
        let m = &style.markers[label];
        let colour = escape_attr(&m.colour);
        marker_element(
            &mut out,
            "point",
            m.marker,
            x_axis.map(points[[i, 0]]),
            y_axis.map(points[[i, 1]]),
            style.marker_radius,
            &colour,
        );
    }
    out.push_str("</g>\n");

    let present: Vec<Label> = Label::ALL.into_iter().filter(|l| embedding.labels.contains(l)).collect();
    out.push_str("<g class=\"legend\">\n");
    let row_h = 18.0;
    writeln!(
        out,
        r#"<rect x="8" y="8" width="170" height="{}" fill="white" stroke="black" stroke-width="0.5"/>"#,
        num(row_h * present.len() as f64 + 8.0)
    )
    .expect("write");
    for (k, label) in present.iter().enumerate() {
        let m = &style.markers[label];
        let y = 8.0 + row_h * (k as f64 + 0.5) + 4.0;
        marker_element(&mut out, "legend-marker", m.marker, 22.0, y, 5.0, &escape_attr(&m.colour));
        writeln!(
            out,
            r#"<text x="36" y="{}" font-family="sans-serif" font-size="12" dominant-baseline="middle">{}</text>"#,
            num(y),
            label.token()
        )
        .expect("write");
    }
    out.push_str("</g>\n</svg>\n");
    Ok(out)
}
