//! Run manifests: what was run, with which config and seed, and the hashes
//! of every file read or written.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::Failure;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: PathBuf,
    pub bytes: u64,
    pub sha256: String,
}

impl FileDigest {
    pub fn of(path: &Path) -> Result<Self, Failure> {
        let data = fs::read(path).map_err(|e| Failure::data(format!("{}: {e}", path.display())))?;
        Ok(Self {
            path: path.to_path_buf(),
            bytes: data.len() as u64,
            sha256: hex::encode(Sha256::digest(&data)),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigSnapshot {
    /// Where the config was read from; `None` for the built-in bench.
    pub path: Option<PathBuf>,
    /// Canonical text of the parsed config.
    pub text: String,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command_line: Vec<String>,
    pub subcommand: String,
    pub config: Option<ConfigSnapshot>,
    pub seed: Option<u64>,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub started_at: String,
    pub finished_at: String,
}

impl RunManifest {
    pub fn path_for(output: &Path) -> PathBuf {
        let mut name = output.as_os_str().to_owned();
        name.push(".manifest.json");
        PathBuf::from(name)
    }

    pub fn write(&self, path: &Path) -> Result<(), Failure> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        fs::write(path, text + "\n").map_err(|e| Failure::data(format!("{}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = fs::read_to_string(path)
            .map_err(|e| Failure::data(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| Failure::data(format!("{}: not a run manifest: {e}", path.display())))
    }
}

/// One file whose recorded hash no longer matches.
#[derive(Debug)]
pub struct Mismatch {
    pub path: PathBuf,
    pub expected: String,
    pub found: Option<String>,
}

pub fn verify(files: &[FileDigest]) -> Vec<Mismatch> {
    files
        .iter()
        .filter_map(|f| {
            let found = FileDigest::of(&f.path).ok().map(|d| d.sha256);
            (found.as_deref() != Some(f.sha256.as_str())).then(|| Mismatch {
                path: f.path.clone(),
                expected: f.sha256.clone(),
                found,
            })
        })
        .collect()
}
