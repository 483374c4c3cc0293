//! Artifact store: versioned JSON files plus an index, written by the
//! coordinator only.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

pub const ARTIFACT_SCHEMA: &str = "sigma.artifact.v1";

/// Envelope written to disk: the payload plus enough scenario data for
/// standalone re-verification. `created` is excluded from the content hash.
#[derive(Debug, Serialize, Deserialize)]
pub struct Artifact {
    pub schema: String,
    pub kind: String,
    pub scenario_name: String,
    pub scenario_hash: String,
    /// Scenario file content embedded verbatim so `verify` can rebuild the
    /// complex and control model without external files.
    pub scenario_toml: String,
    pub n: i64,
    pub dir: Option<String>,
    pub payload: Value,
    pub content_hash: String,
    pub created: String,
}

impl Artifact {
    pub fn new(
        kind: &str,
        scenario_name: &str,
        scenario_hash: &str,
        scenario_toml: &str,
        n: i64,
        dir: Option<String>,
        payload: Value,
    ) -> Self {
        let mut art = Artifact {
            schema: ARTIFACT_SCHEMA.to_string(),
            kind: kind.to_string(),
            scenario_name: scenario_name.to_string(),
            scenario_hash: scenario_hash.to_string(),
            scenario_toml: scenario_toml.to_string(),
            n,
            dir,
            payload,
            content_hash: String::new(),
            created: now_stamp(),
        };
        art.content_hash = art.compute_hash();
        art
    }

    /// Hash over everything except `created` (and the hash field itself).
    pub fn compute_hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.schema.as_bytes());
        hasher.update(self.kind.as_bytes());
        hasher.update(self.scenario_hash.as_bytes());
        hasher.update(self.n.to_le_bytes());
        if let Some(d) = &self.dir {
            hasher.update(d.as_bytes());
        }
        hasher.update(self.payload.to_string().as_bytes());
        hasher
            .finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

fn now_stamp() -> String {
    let secs = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    format!("unix:{secs}")
}

#[derive(Debug, Default, Serialize, Deserialize)]
pub struct Index {
    pub entries: Vec<IndexEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct IndexEntry {
    pub file: String,
    pub kind: String,
    pub scenario_hash: String,
    pub dir: Option<String>,
    pub n: i64,
}

pub struct Store {
    pub root: PathBuf,
}

impl Store {
    /// `--out` flag, then `SIGMA_CERT_DIR`, then `./sigma-artifacts`.
    pub fn open(out: Option<&Path>) -> Result<Self> {
        let root = match out {
            Some(p) => p.to_path_buf(),
            None => std::env::var_os("SIGMA_CERT_DIR")
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from("sigma-artifacts")),
        };
        std::fs::create_dir_all(&root)
            .with_context(|| format!("cannot create store {}", root.display()))?;
        Ok(Store { root })
    }

    pub fn write(&self, artifact: &Artifact) -> Result<PathBuf> {
        let slug: String = artifact
            .dir
            .as_deref()
            .unwrap_or("all")
            .chars()
            .map(|c| if c.is_alphanumeric() { c } else { '_' })
            .collect();
        let name = format!(
            "{}-{}-{}-n{}.json",
            artifact.kind,
            &artifact.content_hash[..12],
            slug,
            artifact.n
        );
        let path = self.root.join(&name);
        let json = serde_json::to_string_pretty(artifact)?;
        std::fs::write(&path, json)
            .with_context(|| format!("cannot write {}", path.display()))?;
        self.index_add(IndexEntry {
            file: name,
            kind: artifact.kind.clone(),
            scenario_hash: artifact.scenario_hash.clone(),
            dir: artifact.dir.clone(),
            n: artifact.n,
        })?;
        Ok(path)
    }

    fn index_add(&self, entry: IndexEntry) -> Result<()> {
        let path = self.root.join("index.json");
        let mut index: Index = match std::fs::read_to_string(&path) {
            Ok(text) => serde_json::from_str(&text).unwrap_or_default(),
            Err(_) => Index::default(),
        };
        index.entries.retain(|e| e.file != entry.file);
        index.entries.push(entry);
        index.entries.sort_by(|a, b| a.file.cmp(&b.file));
        std::fs::write(&path, serde_json::to_string_pretty(&index)?)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Artifact> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read {}", path.display()))?;
        let artifact: Artifact = serde_json::from_str(&text).context("artifact parse error")?;
        Ok(artifact)
    }
}
