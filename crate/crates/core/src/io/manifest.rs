use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::RunConfig;
use crate::error::{Error, Result};
use crate::optimize::EvalCounts;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    /// What the file holds: `diagnostics`, `snapshot`, `history`, ...
    pub kind: String,
    /// Path relative to the campaign directory.
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    pub cost_calls: usize,
    pub gradient_calls: usize,
}

impl From<EvalCounts> for Counters {
    fn from(c: EvalCounts) -> Self {
        Self {
            cost_calls: c.cost,
            gradient_calls: c.gradient,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignManifest {
    pub command: String,
    pub status: String,
    pub code_version: String,
    pub config_hash: String,
    pub config: serde_json::Value,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub artifacts: Vec<Artifact>,
    pub counters: Counters,
    /// Headline numbers of the run (final cost ratio, cosine similarity, ...).
    pub summary: serde_json::Map<String, serde_json::Value>,
}

pub fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

fn file_sha256(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path)?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

impl CampaignManifest {
    pub fn start(command: &str, config: &RunConfig) -> Self {
        Self {
            command: command.to_string(),
            status: "running".into(),
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: config.hash(),
            config: serde_json::to_value(config).expect("configuration serializes"),
            started_unix: unix_now(),
            finished_unix: 0,
            artifacts: Vec::new(),
            counters: Counters::default(),
            summary: serde_json::Map::new(),
        }
    }

    /// Registers an existing file below `dir`.
    pub fn add(&mut self, dir: &Path, kind: &str, relative: &str) -> Result<()> {
        let sha256 = file_sha256(&dir.join(relative))?;
        self.artifacts.retain(|a| a.path != relative);
        self.artifacts.push(Artifact {
            kind: kind.to_string(),
            path: relative.to_string(),
            sha256,
        });
        Ok(())
    }

    pub fn note(&mut self, key: &str, value: impl Serialize) {
        self.summary
            .insert(key.to_string(), serde_json::to_value(value).unwrap_or(serde_json::Value::Null));
    }

    pub fn finish(&mut self, dir: &Path, status: &str) -> Result<()> {
        self.status = status.to_string();
        self.finished_unix = unix_now();
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::Parse(e.to_string()))?;
        std::fs::write(dir.join(MANIFEST_FILE), text)?;
        Ok(())
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        if !path.exists() {
            return Err(Error::Domain(format!("no campaign manifest in {}", dir.display())));
        }
        serde_json::from_str(&std::fs::read_to_string(path)?).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Every artifact exists and still has its recorded checksum.
    pub fn verify(&self, dir: &Path) -> Result<()> {
        for a in &self.artifacts {
            let p = dir.join(&a.path);
            if !p.exists() {
                return Err(Error::Domain(format!("manifest names missing file {}", a.path)));
            }
            if file_sha256(&p)? != a.sha256 {
                return Err(Error::Domain(format!("{} changed since the campaign wrote it", a.path)));
            }
        }
        Ok(())
    }

    pub fn label(&self) -> &str {
        &self.config_hash[..12.min(self.config_hash.len())]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::Profile;

    #[test]
    fn manifest_round_trip_and_verification() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = RunConfig::profile(Profile::Desk);
        let mut m = CampaignManifest::start("forward", &cfg);
        std::fs::write(dir.path().join("a.csv"), "x\n1\n").unwrap();
        m.add(dir.path(), "diagnostics", "a.csv").unwrap();
        m.note("answer", 42.0);
        m.finish(dir.path(), "complete").unwrap();
        let back = CampaignManifest::read(dir.path()).unwrap();
        assert_eq!(back, m);
        back.verify(dir.path()).unwrap();
        std::fs::write(dir.path().join("a.csv"), "x\n2\n").unwrap();
        assert!(back.verify(dir.path()).is_err());
        assert!(m.add(dir.path(), "snapshot", "missing.txt").is_err());
        assert!(CampaignManifest::read(&dir.path().join("nowhere")).is_err());
    }
}
