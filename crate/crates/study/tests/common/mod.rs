#![allow(dead_code)]

use std::sync::atomic::{AtomicI64, Ordering};
use std::sync::Arc;

use chrono::{DateTime, TimeDelta, Utc};
use lesionbench::patchio::{Label, Manifest, ManifestEntry, Patch};
use lesionbench_study::{MemoryLog, StudyService, StudyState};

/// `n` real and `n` synthetic lesion entries plus a few normals, whose
/// file names reveal the label (so leaks are easy to spot).
pub fn manifest(n: usize) -> Manifest {
    let mut entries = Vec::new();
    for (label, count) in [(Label::RealLesion, n), (Label::SyntheticLesion, n), (Label::Normal, 3)] {
        for i in 0..count {
            entries.push(ManifestEntry { path: format!("{}_{i:03}.pgm", label.token()), label, center: None });
        }
    }
    Manifest::from_entries(entries).unwrap()
}

pub fn stub_image(path: &str) -> Result<Patch, String> {
    let shade = (path.len() % 7) as f64 / 7.0;
    Ok(Patch::filled(4, 3, shade, Label::Unlabeled).unwrap())
}

/// Clock that ticks one second per call from the epoch.
pub fn ticking_clock() -> Box<dyn Fn() -> DateTime<Utc> + Send + Sync> {
    let t = Arc::new(AtomicI64::new(0));
    Box::new(move || DateTime::<Utc>::UNIX_EPOCH + TimeDelta::seconds(t.fetch_add(1, Ordering::SeqCst)))
}

pub fn memory_service(n: usize) -> (StudyService, MemoryLog) {
    let log = MemoryLog::default();
    let svc = StudyService::with_clock(
        Box::new(log.clone()),
        StudyState::default(),
        manifest(n),
        Box::new(stub_image),
        ticking_clock(),
    )
    .unwrap();
    (svc, log)
}
