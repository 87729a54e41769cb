use std::fmt::Write as _;

use thiserror::Error;

use super::Embedding;
use crate::patchio::Label;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("label file line {line}: unknown label {token:?}")]
pub struct LabelError {
    pub line: usize,
    pub token: String,
}

/// One label token per line; blank lines are skipped.
pub fn read_labels(text: &str) -> Result<Vec<Label>, LabelError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| l.trim().parse().map_err(|_| LabelError { line: i + 1, token: l.trim().to_string() }))
        .collect()
}

impl Embedding {
    /// `x,y,label` rows under a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y,label\n");
        for (row, label) in self.points.rows().into_iter().zip(&self.labels) {
            writeln!(out, "{},{},{label}", row[0], row[1]).expect("writing to a String");
        }
        out
    }

    /// `iter,kl` rows under a header line.
    pub fn kl_trace_csv(&self) -> String {
        let mut out = String::from("iter,kl\n");
        for (i, kl) in self.kl_trace.iter().enumerate() {
            writeln!(out, "{i},{kl}").expect("writing to a String");
        }
        out
    }
}
