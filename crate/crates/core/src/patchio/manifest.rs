//! Dataset manifests: UTF-8 CSV with header `path,label,x,y`, where `x,y`
//! is an optional lesion centre in source-image coordinates.

use std::collections::HashSet;
use std::fmt::Write as _;

use super::{Label, PatchError, Result};

pub const MANIFEST_HEADER: &str = "path,label,x,y";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub path: String,
    pub label: Label,
    pub center: Option<(u32, u32)>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Manifest {
    entries: Vec<ManifestEntry>,
}

impl Manifest {
    /// Builds a manifest, rejecting duplicate paths.
    pub fn from_entries(entries: Vec<ManifestEntry>) -> Result<Self> {
        let mut seen = HashSet::new();
        for (i, e) in entries.iter().enumerate() {
            if !seen.insert(e.path.as_str()) {
                return Err(PatchError::Manifest { line: i + 2, reason: format!("duplicate path {:?}", e.path) });
            }
        }
        Ok(Manifest { entries })
    }

    pub fn entries(&self) -> &[ManifestEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn with_label(&self, label: Label) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(move |e| e.label == label)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(MANIFEST_HEADER);
        out.push('\n');
        for e in &self.entries {
            match e.center {
                Some((x, y)) => writeln!(out, "{},{},{x},{y}", e.path, e.label),
                None => writeln!(out, "{},{},,", e.path, e.label),
            }
            .expect("writing to a String");
        }
        out
    }
}

fn line_err(line: usize, reason: impl Into<String>) -> PatchError {
    PatchError::Manifest { line, reason: reason.into() }
}

fn parse_coord(line: usize, name: &str, text: &str) -> Result<u32> {
    text.trim().parse().map_err(|_| line_err(line, format!("{name} coordinate {text:?} is not a non-negative integer")))
}

/// Parses manifest text. The header line is optional; blank lines are
/// skipped. Line numbers in errors are 1-based.
pub fn load_manifest(text: &str) -> Result<Manifest> {
    let mut entries = Vec::new();
    let mut seen = HashSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let row = raw.trim_end_matches('\r');
        if row.trim().is_empty() || (idx == 0 && row.trim() == MANIFEST_HEADER) {
            continue;
        }
        let fields: Vec<&str> = row.split(',').collect();
        let (path, label, center) = match fields.as_slice() {
            [path, label] => (*path, *label, None),
            [path, label, x, y] => {
                let center = match (x.trim().is_empty(), y.trim().is_empty()) {
                    (true, true) => None,
                    (false, false) => Some((parse_coord(line, "x", x)?, parse_coord(line, "y", y)?)),
                    _ => return Err(line_err(line, "x and y must both be present or both empty")),
                };
                (*path, *label, center)
            }
            _ => return Err(line_err(line, format!("expected 2 or 4 fields, found {}", fields.len()))),
        };
        let path = path.trim();
        if path.is_empty() {
            return Err(line_err(line, "empty path"));
        }
        let label: Label = label.trim().parse().map_err(|e: super::UnknownLabel| line_err(line, e.to_string()))?;
        if !seen.insert(path.to_string()) {
            return Err(line_err(line, format!("duplicate path {path:?}")));
        }
        entries.push(ManifestEntry { path: path.to_string(), label, center });
    }
    Ok(Manifest { entries })
}
