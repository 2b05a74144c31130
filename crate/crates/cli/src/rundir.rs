//! File layout of a run directory.

use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use qniff::ShotEnsemble;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{CliError, CliResult};

pub const CONFIG: &str = "config.json";
pub const PROVENANCE: &str = "provenance.json";
pub const ENSEMBLES: &str = "ensembles.csv";
pub const TEST_ENSEMBLES: &str = "test_ensembles.csv";
pub const SENSITIVITY_CSV: &str = "sensitivity.csv";
pub const SENSITIVITY_JSON: &str = "sensitivity.json";

/// Main-circuit data for a time slot. Slot 0 is the ground truth.
pub fn slot_file(t: usize) -> String {
    if t == 0 {
        ENSEMBLES.to_string()
    } else {
        format!("ensembles_slot{t}.csv")
    }
}

pub fn calibration_file(basis: &str) -> String {
    format!("calibration_{basis}.csv")
}

pub fn posterior_file(label: &str) -> String {
    format!("posterior_{label}.json")
}

pub fn kde_file(label: &str) -> String {
    format!("kde_{label}.csv")
}

pub fn filtered_file(mode: &str) -> String {
    format!("filtered_{mode}.csv")
}

pub fn filter_summary_file(mode: &str) -> String {
    format!("filter_summary_{mode}.json")
}

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> CliResult<()> {
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    write_bytes(path, s.as_bytes())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let f = fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_reader(BufReader::new(f))
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

pub fn write_ensemble(path: &Path, e: &ShotEnsemble) -> CliResult<()> {
    let mut buf = Vec::new();
    e.write_csv(&mut buf)?;
    write_bytes(path, &buf)
}

pub fn read_ensemble(path: &Path, seed: u64) -> CliResult<ShotEnsemble> {
    let f = fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    Ok(ShotEnsemble::read_csv(BufReader::new(f), seed)?)
}

/// Sorted file names in `dir` with the given prefix and suffix.
pub fn list(dir: &Path, prefix: &str, suffix: &str) -> CliResult<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| CliError::io(dir, e))? {
        let entry = entry.map_err(|e| CliError::io(dir, e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if name.starts_with(prefix) && name.ends_with(suffix) {
            out.push(entry.path());
        }
    }
    out.sort();
    Ok(out)
}

/// The part of a file name between `prefix` and `suffix`.
pub fn stem_between(path: &Path, prefix: &str, suffix: &str) -> String {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    name.strip_prefix(prefix).and_then(|s| s.strip_suffix(suffix)).unwrap_or(&name).to_string()
}
