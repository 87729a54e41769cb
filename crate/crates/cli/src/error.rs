use std::fmt;
use std::path::Path;

use lesionbench::gan::GanError;
use lesionbench::patchio::PatchError;
use lesionbench::tsne::TsneError;
use lesionbench::viz::VizError;
use lesionbench_study::StudyError;

/// Failure classes with stable exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, configuration or request (exit 1).
    Usage(String),
    /// Unreadable, unwritable or malformed files (exit 2).
    Io(String),
    /// Divergence or other numeric breakdown (exit 3).
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Io(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }

    pub fn io(path: &Path, err: impl fmt::Display) -> Self {
        CliError::Io(format!("{}: {err}", path.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Io(m) | CliError::Numeric(m) => f.write_str(m),
        }
    }
}

pub type CliResult<T = ()> = Result<T, CliError>;

impl From<GanError> for CliError {
    fn from(e: GanError) -> Self {
        match e {
            GanError::NonFinite { .. } => CliError::Numeric(e.to_string()),
            GanError::Checkpoint(_) => CliError::Io(e.to_string()),
            GanError::Config(_) | GanError::Dimension { .. } | GanError::Kv(_) => CliError::Usage(e.to_string()),
        }
    }
}

impl From<TsneError> for CliError {
    fn from(e: TsneError) -> Self {
        match e {
            TsneError::Config(_) | TsneError::Kv(_) => CliError::Usage(e.to_string()),
            TsneError::NonFiniteInput { .. } | TsneError::Calibration { .. } | TsneError::Divergence { .. } => {
                CliError::Numeric(e.to_string())
            }
        }
    }
}

impl From<VizError> for CliError {
    fn from(e: VizError) -> Self {
        match e {
            VizError::NonFinite { .. } => CliError::Numeric(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<StudyError> for CliError {
    fn from(e: StudyError) -> Self {
        match e {
            StudyError::Storage(_) | StudyError::Image { .. } | StudyError::Replay(_) => CliError::Io(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

/// Attaches the offending file to a patch-format error.
pub fn patch_err(path: &Path) -> impl FnOnce(PatchError) -> CliError + '_ {
    move |e| match e {
        PatchError::Config(_) => CliError::Usage(format!("{}: {e}", path.display())),
        _ => CliError::io(path, e),
    }
}
