//! Evaluation workbench for synthetic mammography lesion patches.
//!
//! The crate is split along the stages of the evaluation pipeline:
//!
//! * [`patchio`] reads and writes grayscale patches (binary PGM and a raw
//!   `f32` planar format), equalises their histograms, crops fixed-size
//!   windows and parses dataset manifests.
//! * [`gan`] is a small fully-connected adversarial trainer with hand-written
//!   backpropagation and a finite-difference gradient checker.
//! * [`tsne`] is an exact (O(N²)) t-SNE used to project patches to 2-D.
//! * [`scoring`] holds the observer-study mathematics: the six-level
//!   confidence scale, accuracy, ROC curve and AUC.
//! * [`viz`] emits deterministic SVG scatter and ROC plots and patch montages.
//! * [`fixtures`] synthesises lesion-like source images so the whole pipeline
//!   runs without access to clinical data.

pub mod fixtures;
pub mod gan;
pub mod kv;
pub mod patchio;
pub mod rng;
pub mod scoring;
pub mod tsne;
pub mod viz;

pub use patchio::{Label, Manifest, ManifestEntry, Patch};
