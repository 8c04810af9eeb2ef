use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    /// Finished, but probability reached the top of the Fock basis.
    TruncationUnsafe,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemEcho {
    pub chi: f64,
    pub period: f64,
    pub epsilon: f64,
    pub delta_eps: f64,
    pub dim: usize,
    pub buffer: usize,
    pub kicks: usize,
    pub stride: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunEntry {
    pub key: String,
    pub sweep_value: Option<f64>,
    pub system: SystemEcho,
    pub status: RunStatus,
    pub message: Option<String>,
    pub file: Option<String>,
    pub elapsed_ms: u128,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    /// Relative to the output directory.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub config_hash: String,
    pub mode: String,
    pub config: BTreeMap<String, String>,
    pub workers: usize,
    pub files: Vec<FileEntry>,
    pub runs: Vec<RunEntry>,
    pub wall_ms: u128,
    /// Set when an earlier identical run was found and nothing was recomputed.
    #[serde(default)]
    pub reused: bool,
}

impl RunManifest {
    pub fn all_ok(&self) -> bool {
        self.runs.iter().all(|r| r.status == RunStatus::Ok)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Hash over the canonical config text and the library version.
pub fn config_hash(config: &RunConfig) -> String {
    let mut text = format!("version={}\n", kicked_kerr::VERSION);
    for (k, v) in config.canonical() {
        text.push_str(&format!("{k}={v}\n"));
    }
    sha256_hex(text.as_bytes())
}

pub fn manifest_path(out: &Path, hash: &str) -> PathBuf {
    out.join(format!("manifest_{}.json", &hash[..16]))
}

/// Writes `bytes` to `path` through a temporary file in the same
/// directory, so the final path never holds a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .map_err(|e| CliError::Io(format!("{}: {}", path.display(), e.error)))?;
    Ok(())
}

pub fn file_entry(out: &Path, rel: &str) -> Result<FileEntry, CliError> {
    let bytes = fs::read(out.join(rel))?;
    Ok(FileEntry {
        path: rel.to_string(),
        sha256: sha256_hex(&bytes),
        bytes: bytes.len() as u64,
    })
}

pub fn load(path: &Path) -> Result<RunManifest, CliError> {
    let text =
        fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn save(out: &Path, manifest: &RunManifest) -> Result<PathBuf, CliError> {
    let path = manifest_path(out, &manifest.config_hash);
    let text = serde_json::to_string_pretty(manifest).map_err(|e| CliError::Io(e.to_string()))?;
    write_atomic(&path, text.as_bytes())?;
    Ok(path)
}

/// An earlier manifest for the same config whose files are all still
/// present and unchanged.
pub fn find_complete(out: &Path, hash: &str) -> Option<RunManifest> {
    let m = load(&manifest_path(out, hash)).ok()?;
    if m.config_hash != hash {
        return None;
    }
    let intact = m.files.iter().all(|f| {
        fs::read(out.join(&f.path))
            .is_ok_and(|b| b.len() as u64 == f.bytes && sha256_hex(&b) == f.sha256)
    });
    intact.then_some(m)
}

/// All manifests in `out`, sorted by file name.
pub fn load_all(out: &Path) -> Result<Vec<RunManifest>, CliError> {
    let mut paths: Vec<PathBuf> = fs::read_dir(out)
        .map_err(|e| CliError::Io(format!("{}: {e}", out.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("manifest_") && n.ends_with(".json"))
        })
        .collect();
    paths.sort();
    paths.iter().map(|p| load(p)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_replaces_whole_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub/a.csv");
        write_atomic(&p, b"first version, long").unwrap();
        write_atomic(&p, b"second").unwrap();
        assert_eq!(fs::read(&p).unwrap(), b"second");
        // no stray temporaries left behind
        assert_eq!(fs::read_dir(dir.path().join("sub")).unwrap().count(), 1);
    }

    #[test]
    fn sha256_known_value() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
