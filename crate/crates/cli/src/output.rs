//! Writing artifacts with a manifest.
//!
//! Every file is first written to a temporary file in the output directory
//! and renamed into place only after all of them were staged, so a failed
//! run leaves no partial results. `manifest.json` is renamed last.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};
use tempfile::NamedTempFile;

use crate::config::ExperimentConfig;
use crate::run::Artifact;

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ManifestEntry {
    pub name: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub experiment: String,
    pub config_sha256: String,
    pub modes: Vec<&'static str>,
    pub files: Vec<ManifestEntry>,
}

pub fn hex_sha256(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Creates `dir` and checks that files can be created in it.
pub fn prepare_dir(dir: &Path) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    NamedTempFile::new_in(dir).map(drop)
}

fn stage(dir: &Path, bytes: &[u8]) -> io::Result<NamedTempFile> {
    let mut tmp = NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    // temporary files are created owner-only
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        tmp.as_file().set_permissions(fs::Permissions::from_mode(0o644))?;
    }
    Ok(tmp)
}

/// Writes `artifacts` plus a manifest into `dir`; returns the written paths.
pub fn write_all(dir: &Path, cfg: &ExperimentConfig, artifacts: &[Artifact]) -> io::Result<Vec<PathBuf>> {
    prepare_dir(dir)?;
    let manifest = Manifest {
        experiment: cfg.name.clone(),
        config_sha256: cfg.hash.clone(),
        modes: cfg.modes.iter().map(|m| m.name()).collect(),
        files: artifacts
            .iter()
            .map(|a| ManifestEntry {
                name: a.name.clone(),
                bytes: a.bytes.len(),
                sha256: hex_sha256(&a.bytes),
            })
            .collect(),
    };
    let mut manifest_bytes = serde_json::to_vec_pretty(&manifest).expect("serializable");
    manifest_bytes.push(b'\n');

    let staged = artifacts
        .iter()
        .map(|a| stage(dir, &a.bytes).map(|t| (dir.join(&a.name), t)))
        .collect::<io::Result<Vec<_>>>()?;
    let manifest_tmp = stage(dir, &manifest_bytes)?;
    let mut written = Vec::new();
    for (path, tmp) in staged {
        tmp.persist(&path).map_err(|e| e.error)?;
        written.push(path);
    }
    let path = dir.join(MANIFEST);
    manifest_tmp.persist(&path).map_err(|e| e.error)?;
    written.push(path);
    Ok(written)
}
