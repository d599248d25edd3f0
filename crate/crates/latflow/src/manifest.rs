//! Run manifests: the resolved invocation, seed, code version, timestamps,
//! and digests of every output file. Re-running the recorded invocation
//! must reproduce the outputs bit-exactly; the digests are the witness.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

use crate::error::Result;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutputRecord {
    /// File name relative to the output directory.
    pub name: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Fully resolved argument vector; re-dispatching it reproduces the run.
    pub argv: Vec<String>,
    pub seed: u64,
    pub version: String,
    pub started_at: String,
    pub finished_at: String,
    pub outputs: Vec<OutputRecord>,
}

impl RunManifest {
    pub fn start(command: &str, argv: Vec<String>, seed: u64) -> Self {
        RunManifest {
            command: command.to_string(),
            argv,
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            started_at: chrono::Utc::now().to_rfc3339(),
            finished_at: String::new(),
            outputs: Vec::new(),
        }
    }

    /// Record digests for the named files under the output directory and
    /// stamp the end time.
    pub fn finish(&mut self, dir: &Path, names: &[&str]) -> Result<()> {
        for name in names {
            self.outputs.push(OutputRecord {
                name: name.to_string(),
                sha256: sha256_file(&dir.join(name))?,
            });
        }
        self.finished_at = chrono::Utc::now().to_rfc3339();
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<RunManifest> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn manifest_name(command: &str) -> String {
        format!("{command}_manifest.json")
    }
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Compare recorded digests against the files in `dir`; returns the names
/// that differ or are missing.
pub fn diff_outputs(manifest: &RunManifest, dir: &Path) -> Result<Vec<String>> {
    let mut bad = Vec::new();
    for rec in &manifest.outputs {
        let path: PathBuf = dir.join(&rec.name);
        match sha256_file(&path) {
            Ok(digest) if digest == rec.sha256 => {}
            _ => bad.push(rec.name.clone()),
        }
    }
    Ok(bad)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("a.csv"), b"1,2,3\n").unwrap();
        let mut m = RunManifest::start("flow", vec!["flow".into(), "--m".into(), "1".into()], 7);
        m.finish(dir.path(), &["a.csv"]).unwrap();
        let path = dir.path().join("flow_manifest.json");
        m.write(&path).unwrap();
        let back = RunManifest::load(&path).unwrap();
        assert_eq!(back.command, "flow");
        assert_eq!(back.seed, 7);
        assert_eq!(back.outputs.len(), 1);
        assert!(diff_outputs(&back, dir.path()).unwrap().is_empty());

        std::fs::write(dir.path().join("a.csv"), b"changed").unwrap();
        let bad = diff_outputs(&back, dir.path()).unwrap();
        assert_eq!(bad, vec!["a.csv".to_string()]);
    }
}
