//! Grayscale patch containers and their on-disk formats.

mod equalize;
mod extract;
mod f32raw;
mod manifest;
mod pgm;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use equalize::{histogram_equalize, DEFAULT_BINS};
pub use extract::{extract_patch, DEFAULT_PATCH_SIZE};
pub use f32raw::{read_f32raw, read_f32raw_prefix, write_f32raw, F32Raw, F32RAW_MAGIC};
pub use manifest::{load_manifest, Manifest, ManifestEntry, MANIFEST_HEADER};
pub use pgm::{read_pgm, write_pgm};

#[derive(Debug, Error, PartialEq)]
pub enum PatchError {
    #[error("malformed data at byte {offset}: {reason}")]
    Parse { offset: usize, reason: String },
    #[error("invalid patch: {0}")]
    Invalid(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("image is {width}x{height}, smaller than the requested {size}x{size} window")]
    TooSmall { width: usize, height: usize, size: usize },
    #[error("center ({x}, {y}) lies outside the {width}x{height} image")]
    CenterOutside { x: i64, y: i64, width: usize, height: usize },
    #[error("manifest line {line}: {reason}")]
    Manifest { line: usize, reason: String },
}

pub type Result<T, E = PatchError> = std::result::Result<T, E>;

/// Provenance of a patch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    RealLesion,
    SyntheticLesion,
    Normal,
    Unlabeled,
}

impl Label {
    pub const ALL: [Label; 4] = [Label::RealLesion, Label::SyntheticLesion, Label::Normal, Label::Unlabeled];

    pub fn token(self) -> &'static str {
        match self {
            Label::RealLesion => "real_lesion",
            Label::SyntheticLesion => "synthetic_lesion",
            Label::Normal => "normal",
            Label::Unlabeled => "unlabeled",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("unknown label token {0:?}")]
pub struct UnknownLabel(pub String);

impl FromStr for Label {
    type Err = UnknownLabel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Label::ALL.into_iter().find(|l| l.token() == s).ok_or_else(|| UnknownLabel(s.to_string()))
    }
}

/// A grayscale tile with row-major pixels in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
    label: Label,
}

impl Patch {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>, label: Label) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(PatchError::Invalid(format!("dimensions must be positive, got {width}x{height}")));
        }
        let expected = width
            .checked_mul(height)
            .ok_or_else(|| PatchError::Invalid(format!("{width}x{height} overflows the pixel count")))?;
        if pixels.len() != expected {
            return Err(PatchError::Invalid(format!(
                "{width}x{height} patch needs {expected} pixels, got {}",
                pixels.len()
            )));
        }
        if let Some(i) = pixels.iter().position(|p| !(0.0..=1.0).contains(p)) {
            return Err(PatchError::Invalid(format!("pixel {i} = {} is outside [0, 1]", pixels[i])));
        }
        Ok(Patch { width, height, pixels, label })
    }

    pub fn filled(width: usize, height: usize, value: f64, label: Label) -> Result<Self> {
        Patch::new(width, height, vec![value; width * height], label)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<f64> {
        self.pixels
    }

    pub fn label(&self) -> Label {
        self.label
    }

    pub fn with_label(mut self, label: Label) -> Self {
        self.label = label;
        self
    }

    /// Pixel at column `x`, row `y`.
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.pixels[y * self.width + x]
    }

    /// Pixels quantised to 8 bits with the same rounding as [`write_pgm`].
    pub fn to_u8(&self) -> Vec<u8> {
        self.pixels.iter().map(|&p| quantize_u8(p)).collect()
    }
}

/// Round half away from zero onto 0..=255.
pub(crate) fn quantize_u8(p: f64) -> u8 {
    (p * 255.0).round().clamp(0.0, 255.0) as u8
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_patches() {
        assert!(Patch::new(0, 1, vec![], Label::Normal).is_err());
        assert!(Patch::new(2, 2, vec![0.0; 3], Label::Normal).is_err());
        assert!(Patch::new(1, 1, vec![1.5], Label::Normal).is_err());
        assert!(Patch::new(1, 1, vec![f64::NAN], Label::Normal).is_err());
        assert!(Patch::new(1, 2, vec![0.0, 1.0], Label::Normal).is_ok());
    }

    #[test]
    fn label_tokens_round_trip() {
        for label in Label::ALL {
            assert_eq!(label.token().parse::<Label>(), Ok(label));
        }
        assert!("lesion".parse::<Label>().is_err());
    }
}
