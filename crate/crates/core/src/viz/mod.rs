//! Deterministic figure output: embedding scatter and ROC curve as SVG,
//! patch montages as a single [`Patch`](crate::Patch).

mod montage;
mod roc;
mod scatter;

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::patchio::Label;

pub use montage::montage;
pub use roc::roc_svg;
pub use scatter::{scatter_svg, AxisMap};

#[derive(Debug, Error, PartialEq)]
pub enum VizError {
    #[error("no plot style for label(s): {}", join_labels(.0))]
    UnknownLabel(Vec<Label>),
    #[error("nothing to plot")]
    Empty,
    #[error("embedding is not N x 2 with one label per row")]
    Shape,
    #[error("non-finite coordinate in row {row}")]
    NonFinite { row: usize },
    #[error("patch {index} is {found:?}, expected {expected:?}")]
    PatchSize { index: usize, expected: (usize, usize), found: (usize, usize) },
    #[error("montage needs at least one column")]
    ZeroColumns,
    #[error("invalid plot style: {0}")]
    Style(String),
}

fn join_labels(labels: &[Label]) -> String {
    labels.iter().map(|l| l.token()).collect::<Vec<_>>().join(", ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Marker {
    Cross,
    Circle,
    Triangle,
}

impl Marker {
    pub fn class(self) -> &'static str {
        match self {
            Marker::Cross => "cross",
            Marker::Circle => "circle",
            Marker::Triangle => "triangle",
        }
    }
}

impl fmt::Display for Marker {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.class())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarkerStyle {
    pub marker: Marker,
    /// Any SVG paint value.
    pub colour: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotStyle {
    pub markers: BTreeMap<Label, MarkerStyle>,
    pub width: u32,
    pub height: u32,
    /// Fraction of the data extent added on each side.
    pub padding: f64,
    pub marker_radius: f64,
}

impl Default for PlotStyle {
    /// Real lesions as red crosses, synthetic lesions as green circles,
    /// normal tissue as purple triangles.
    fn default() -> Self {
        let markers = [
            (Label::RealLesion, Marker::Cross, "red"),
            (Label::SyntheticLesion, Marker::Circle, "green"),
            (Label::Normal, Marker::Triangle, "purple"),
        ]
        .into_iter()
        .map(|(label, marker, colour)| (label, MarkerStyle { marker, colour: colour.to_string() }))
        .collect();
        PlotStyle { markers, width: 800, height: 800, padding: 0.05, marker_radius: 4.0 }
    }
}

impl PlotStyle {
    /// Checks that the canvas is usable and that every label in `labels`
    /// has a marker.
    pub fn check(&self, labels: &[Label]) -> Result<(), VizError> {
        if self.width == 0 || self.height == 0 {
            return Err(VizError::Style("canvas must be non-empty".into()));
        }
        if !(self.padding.is_finite() && self.padding >= 0.0) {
            return Err(VizError::Style(format!("padding {} must be >= 0", self.padding)));
        }
        if !(self.marker_radius.is_finite() && self.marker_radius > 0.0) {
            return Err(VizError::Style(format!("marker radius {} must be > 0", self.marker_radius)));
        }
        let mut missing: Vec<Label> = labels.iter().copied().filter(|l| !self.markers.contains_key(l)).collect();
        missing.sort();
        missing.dedup();
        if missing.is_empty() {
            Ok(())
        } else {
            Err(VizError::UnknownLabel(missing))
        }
    }
}

/// Formats a canvas coordinate with fixed precision.
pub(crate) fn num(v: f64) -> String {
    let s = format!("{v:.2}");
    if s == "-0.00" {
        "0.00".to_string()
    } else {
        s
    }
}

pub(crate) fn escape_attr(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}
