//! Run manifests and atomic output writing.
//!
//! Every emitted file is written temp-then-rename and its SHA-256 recorded;
//! the manifest's output inventory is what the determinism contract is
//! checked against. Cache statistics and timings live only in the manifest,
//! never in hashed outputs.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Records dropped or degraded during a run, by cause.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkipAccounting {
    /// Records dropped because a backend call failed after retries.
    pub backend_failures: usize,
    /// Records whose reference reply parsed to no score.
    pub reference_nn: usize,
    /// Individual stochastic samples that parsed to no score.
    pub sample_nn: usize,
    /// Records whose verbalized-certainty reply parsed to no score.
    pub verbalized_nn: usize,
    /// Records left with fewer than two usable samples.
    pub too_few_samples: usize,
}

impl SkipAccounting {
    pub fn merge(&mut self, other: &SkipAccounting) {
        self.backend_failures += other.backend_failures;
        self.reference_nn += other.reference_nn;
        self.sample_nn += other.sample_nn;
        self.verbalized_nn += other.verbalized_nn;
        self.too_few_samples += other.too_few_samples;
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub code_version: String,
    pub backend: String,
    /// Resolved configuration snapshot.
    pub config: serde_json::Value,
    pub record_count: usize,
    pub skipped: SkipAccounting,
    pub cache_hits: u64,
    pub cache_entries: usize,
    pub stage_timings_ms: BTreeMap<String, u128>,
    /// Output file name -> SHA-256 of its bytes.
    pub outputs: BTreeMap<String, String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Atomic write: temp file in the target directory, then rename.
pub fn write_atomic(path: &Path, content: &str) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let name = path
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| Error::Invalid {
            what: "output path",
            reason: format!("{} has no file name", path.display()),
        })?;
    let tmp = dir.join(format!(".{name}.tmp"));
    std::fs::write(&tmp, content).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Collects a run's output files and their hashes.
pub struct OutputWriter {
    dir: PathBuf,
    outputs: BTreeMap<String, String>,
}

impl OutputWriter {
    pub fn create(dir: impl Into<PathBuf>) -> Result<OutputWriter> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(OutputWriter {
            dir,
            outputs: BTreeMap::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, name: &str, content: &str) -> Result<()> {
        write_atomic(&self.dir.join(name), content)?;
        self.outputs
            .insert(name.to_string(), sha256_hex(content.as_bytes()));
        Ok(())
    }

    pub fn outputs(&self) -> BTreeMap<String, String> {
        self.outputs.clone()
    }

    /// Write `manifest.json` (itself excluded from the inventory).
    pub fn finish(self, mut manifest: RunManifest) -> Result<RunManifest> {
        manifest.outputs = self.outputs;
        let json = serde_json::to_string_pretty(&manifest)?;
        write_atomic(&self.dir.join("manifest.json"), &json)?;
        Ok(manifest)
    }
}

/// Wall-clock stage timer feeding the manifest.
#[derive(Default)]
pub struct StageTimer {
    timings: BTreeMap<String, u128>,
}

impl StageTimer {
    pub fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.timings
            .insert(stage.to_string(), start.elapsed().as_millis());
        out
    }

    pub fn into_timings(self) -> BTreeMap<String, u128> {
        self.timings
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn writer_hashes_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let mut writer = OutputWriter::create(dir.path().join("run")).unwrap();
        writer.write("table.csv", "a,b\n1,2\n").unwrap();
        let outputs = writer.outputs();
        assert_eq!(outputs.len(), 1);
        assert_eq!(outputs["table.csv"], sha256_hex(b"a,b\n1,2\n"));
        assert_eq!(
            std::fs::read_to_string(dir.path().join("run/table.csv")).unwrap(),
            "a,b\n1,2\n"
        );
        // no stray temp files
        let leftovers: Vec<_> = std::fs::read_dir(dir.path().join("run"))
            .unwrap()
            .filter_map(|e| e.ok())
            .filter(|e| e.file_name().to_string_lossy().ends_with(".tmp"))
            .collect();
        assert!(leftovers.is_empty());
    }

    #[test]
    fn finish_writes_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let mut writer = OutputWriter::create(dir.path()).unwrap();
        writer.write("x.csv", "x\n").unwrap();
        let manifest = writer
            .finish(RunManifest {
                command: "methods".into(),
                code_version: "0.1.0".into(),
                backend: "simulator".into(),
                config: serde_json::Value::Null,
                record_count: 1,
                skipped: SkipAccounting::default(),
                cache_hits: 0,
                cache_entries: 0,
                stage_timings_ms: BTreeMap::new(),
                outputs: BTreeMap::new(),
            })
            .unwrap();
        assert!(manifest.outputs.contains_key("x.csv"));
        let reloaded: RunManifest = serde_json::from_str(
            &std::fs::read_to_string(dir.path().join("manifest.json")).unwrap(),
        )
        .unwrap();
        assert_eq!(reloaded.outputs, manifest.outputs);
    }
}
