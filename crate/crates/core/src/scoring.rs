//! Observer-study mathematics.
//!
//! Observers answer on a closed six-level confidence scale which is mapped
//! to a probability of "real". Real is the positive class throughout: TPR
//! is the fraction of real images called real.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use chrono::{DateTime, Utc};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::patchio::{Label, Manifest, ManifestEntry};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ScoringError {
    #[error("no ratings to score")]
    Empty,
    #[error("ROC needs both real and synthetic items (real: {n_real}, synthetic: {n_fake})")]
    SingleClass { n_real: usize, n_fake: usize },
    #[error("manifest has {available} {label} entries, {requested} requested")]
    Insufficient { label: Label, available: usize, requested: usize },
}

pub type Result<T, E = ScoringError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConfidenceLevel {
    ExtremelyReal,
    ModeratelyReal,
    SlightlyReal,
    SlightlyFake,
    ModeratelyFake,
    ExtremelyFake,
}

impl ConfidenceLevel {
    /// Display order, most confident "real" first.
    pub const ALL: [ConfidenceLevel; 6] = [
        ConfidenceLevel::ExtremelyReal,
        ConfidenceLevel::ModeratelyReal,
        ConfidenceLevel::SlightlyReal,
        ConfidenceLevel::SlightlyFake,
        ConfidenceLevel::ModeratelyFake,
        ConfidenceLevel::ExtremelyFake,
    ];

    pub fn token(self) -> &'static str {
        match self {
            ConfidenceLevel::ExtremelyReal => "extremely_real",
            ConfidenceLevel::ModeratelyReal => "moderately_real",
            ConfidenceLevel::SlightlyReal => "slightly_real",
            ConfidenceLevel::SlightlyFake => "slightly_fake",
            ConfidenceLevel::ModeratelyFake => "moderately_fake",
            ConfidenceLevel::ExtremelyFake => "extremely_fake",
        }
    }

    /// The level with the same confidence on the opposite side.
    pub fn mirror(self) -> Self {
        let i = Self::ALL.iter().position(|&l| l == self).expect("listed");
        Self::ALL[5 - i]
    }
}

impl fmt::Display for ConfidenceLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for ConfidenceLevel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Self::ALL.into_iter().find(|l| l.token() == s).ok_or_else(|| format!("unknown confidence level {s:?}"))
    }
}

/// Probability of "real" assigned to each answer.
pub fn level_to_prob(level: ConfidenceLevel) -> f64 {
    match level {
        ConfidenceLevel::ExtremelyReal => 0.95,
        ConfidenceLevel::ModeratelyReal => 0.77,
        ConfidenceLevel::SlightlyReal => 0.59,
        ConfidenceLevel::SlightlyFake => 0.41,
        ConfidenceLevel::ModeratelyFake => 0.23,
        ConfidenceLevel::ExtremelyFake => 0.05,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Truth {
    Real,
    Synthetic,
}

impl Truth {
    /// Study truth for a patch label; only lesion labels take part.
    pub fn from_label(label: Label) -> Option<Self> {
        match label {
            Label::RealLesion => Some(Truth::Real),
            Label::SyntheticLesion => Some(Truth::Synthetic),
            Label::Normal | Label::Unlabeled => None,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Truth::Real => Truth::Synthetic,
            Truth::Synthetic => Truth::Real,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rating {
    pub item_id: String,
    pub truth: Truth,
    pub level: ConfidenceLevel,
    pub observer_id: String,
    pub timestamp: DateTime<Utc>,
}

impl Rating {
    pub fn score(&self) -> f64 {
        level_to_prob(self.level)
    }
}

/// Fraction of ratings whose prediction (real iff score > `threshold`)
/// matches the truth.
pub fn accuracy(ratings: &[Rating], threshold: f64) -> Result<f64> {
    if ratings.is_empty() {
        return Err(ScoringError::Empty);
    }
    let correct = ratings.iter().filter(|r| (r.score() > threshold) == (r.truth == Truth::Real)).count();
    Ok(correct as f64 / ratings.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
}

/// ROC points from `(truth, score)` pairs, sweeping each distinct score
/// from high to low. Items sharing a score enter together.
pub fn roc_from_scores(scored: &[(Truth, f64)]) -> Result<Vec<RocPoint>> {
    let n_real = scored.iter().filter(|(t, _)| *t == Truth::Real).count();
    let n_fake = scored.len() - n_real;
    if n_real == 0 || n_fake == 0 {
        return Err(ScoringError::SingleClass { n_real, n_fake });
    }
    let mut sorted: Vec<(Truth, f64)> = scored.to_vec();
    sorted.sort_by(|a, b| b.1.total_cmp(&a.1));
    let mut points = vec![RocPoint { fpr: 0.0, tpr: 0.0 }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < sorted.len() {
        let score = sorted[i].1;
        while i < sorted.len() && sorted[i].1 == score {
            match sorted[i].0 {
                Truth::Real => tp += 1,
                Truth::Synthetic => fp += 1,
            }
            i += 1;
        }
        points.push(RocPoint { fpr: fp as f64 / n_fake as f64, tpr: tp as f64 / n_real as f64 });
    }
    let end = RocPoint { fpr: 1.0, tpr: 1.0 };
    if points.last() != Some(&end) {
        points.push(end);
    }
    Ok(points)
}

pub fn roc_curve(ratings: &[Rating]) -> Result<Vec<RocPoint>> {
    let scored: Vec<(Truth, f64)> = ratings.iter().map(|r| (r.truth, r.score())).collect();
    roc_from_scores(&scored)
}

/// Trapezoidal area under an ROC polyline.
pub fn auc(points: &[RocPoint]) -> f64 {
    points.windows(2).map(|w| (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) / 2.0).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocReport {
    pub points: Vec<RocPoint>,
    pub auc: f64,
    pub accuracy: f64,
    pub n_real: usize,
    pub n_fake: usize,
    pub level_counts: BTreeMap<ConfidenceLevel, usize>,
}

/// Threshold separating "real" from "synthetic" predictions.
pub const ACCURACY_THRESHOLD: f64 = 0.5;

impl RocReport {
    pub fn from_ratings(ratings: &[Rating]) -> Result<Self> {
        let points = roc_curve(ratings)?;
        let n_real = ratings.iter().filter(|r| r.truth == Truth::Real).count();
        let mut level_counts: BTreeMap<ConfidenceLevel, usize> = ConfidenceLevel::ALL.iter().map(|&l| (l, 0)).collect();
        for r in ratings {
            *level_counts.entry(r.level).or_default() += 1;
        }
        Ok(RocReport {
            auc: auc(&points),
            accuracy: accuracy(ratings, ACCURACY_THRESHOLD)?,
            points,
            n_real,
            n_fake: ratings.len() - n_real,
            level_counts,
        })
    }

    /// `key: value` lines, then the ROC points as `fpr,tpr` rows.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "accuracy: {}", self.accuracy).expect("string");
        writeln!(out, "auc: {}", self.auc).expect("string");
        writeln!(out, "n_real: {}", self.n_real).expect("string");
        writeln!(out, "n_fake: {}", self.n_fake).expect("string");
        for (level, count) in &self.level_counts {
            writeln!(out, "count_{level}: {count}").expect("string");
        }
        out.push_str(&self.points_csv());
        out
    }

    pub fn points_csv(&self) -> String {
        let mut out = String::from("fpr,tpr\n");
        for p in &self.points {
            writeln!(out, "{},{}", p.fpr, p.tpr).expect("string");
        }
        out
    }
}

/// Draws `n_per_class` real-lesion and `n_per_class` synthetic-lesion
/// entries without replacement and shuffles them together.
pub fn sample_balanced(manifest: &Manifest, n_per_class: usize, rng: &mut impl Rng) -> Result<Vec<ManifestEntry>> {
    let mut picked = Vec::with_capacity(2 * n_per_class);
    for label in [Label::RealLesion, Label::SyntheticLesion] {
        let pool: Vec<&ManifestEntry> = manifest.with_label(label).collect();
        if pool.len() < n_per_class {
            return Err(ScoringError::Insufficient { label, available: pool.len(), requested: n_per_class });
        }
        let chosen = rand::seq::index::sample(rng, pool.len(), n_per_class);
        picked.extend(chosen.into_iter().map(|i| pool[i].clone()));
    }
    picked.shuffle(rng);
    Ok(picked)
}
