//! Crash-consistent file output and run provenance.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

/// Write to `<path>.tmp`, then rename over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        }
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    let mut f = fs::File::create(&tmp).map_err(|e| io_err(&tmp, e))?;
    f.write_all(bytes).map_err(|e| io_err(&tmp, e))?;
    f.sync_all().map_err(|e| io_err(&tmp, e))?;
    drop(f);
    fs::rename(&tmp, path).map_err(|e| io_err(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable output");
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub(crate) fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// File-name-safe form of a partition label: `3|3|4` → `3-3-4`,
/// `{0,2}|{1,3}` → `0.2-1.3`.
pub fn label_slug(label: &str) -> String {
    label
        .chars()
        .filter_map(|c| match c {
            '|' => Some('-'),
            ',' => Some('.'),
            '{' | '}' | ' ' => None,
            c => Some(c),
        })
        .collect()
}

/// Everything needed to rerun a command bit-identically.
#[derive(Clone, Debug, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config_sha256: String,
    pub measurement_seed: u64,
    pub train_seed: u64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub run_seeds: Vec<RunSeed>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dataset_sha256: Option<String>,
    pub dataset_format: &'static str,
    pub checkpoint_format: &'static str,
    pub nll_units: &'static str,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunSeed {
    pub label: String,
    pub replica: usize,
    pub seed: u64,
}
