use std::fs;
use std::path::{Path, PathBuf};

use lesionbench::patchio::{load_manifest, read_f32raw, read_pgm, F32Raw, Manifest, Patch};
use ndarray::Array2;

use crate::error::{patch_err, CliError, CliResult};

pub fn read(path: &Path) -> CliResult<Vec<u8>> {
    fs::read(path).map_err(|e| CliError::io(path, e))
}

pub fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn write(path: &Path, bytes: impl AsRef<[u8]>) -> CliResult {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

pub fn create_dir(dir: &Path) -> CliResult {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

pub fn read_pgm_file(path: &Path) -> CliResult<Patch> {
    read_pgm(&read(path)?).map_err(patch_err(path))
}

pub fn read_manifest(path: &Path) -> CliResult<Manifest> {
    load_manifest(&read_text(path)?).map_err(patch_err(path))
}

/// Directory that manifest paths are relative to.
pub fn manifest_root(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

/// A data matrix stored as f32raw: one sample per row.
pub fn read_matrix(path: &Path) -> CliResult<Array2<f64>> {
    let m = read_f32raw(&read(path)?).map_err(patch_err(path))?;
    Ok(matrix_from_raw(&m))
}

pub fn matrix_from_raw(m: &F32Raw) -> Array2<f64> {
    Array2::from_shape_fn((m.height, m.width), |(r, c)| m.data[r * m.width + c] as f64)
}
