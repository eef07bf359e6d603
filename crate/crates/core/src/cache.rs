//! Content-addressed cache for per-point sweep records.
//!
//! The key is a digest of the full per-point model configuration plus the
//! frozen flag, so any parameter change invalidates the entry. Only the
//! derived scalar record is stored, never ground-state vectors.

use crate::error::Result;
use crate::ircheck::IrRecord;
use crate::model::ModelConfig;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone)]
pub struct Cache {
    dir: PathBuf,
    enabled: bool,
}

impl Cache {
    pub fn new(dir: &Path, enabled: bool) -> Result<Self> {
        if enabled {
            std::fs::create_dir_all(dir)?;
        }
        Ok(Cache {
            dir: dir.to_path_buf(),
            enabled,
        })
    }

    pub fn disabled() -> Self {
        Cache {
            dir: PathBuf::new(),
            enabled: false,
        }
    }

    pub fn key(cfg: &ModelConfig, frozen: bool) -> String {
        let mut hasher = Sha256::new();
        hasher.update(serde_json::to_vec(cfg).expect("config serializes"));
        hasher.update([frozen as u8]);
        hex(&hasher.finalize())
    }

    fn path_for(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    pub fn get(&self, cfg: &ModelConfig, frozen: bool) -> Option<IrRecord> {
        if !self.enabled {
            return None;
        }
        let text = std::fs::read_to_string(self.path_for(&Self::key(cfg, frozen))).ok()?;
        serde_json::from_str(&text).ok()
    }

    pub fn put(&self, cfg: &ModelConfig, frozen: bool, record: &IrRecord) -> Result<()> {
        if !self.enabled {
            return Ok(());
        }
        let path = self.path_for(&Self::key(cfg, frozen));
        let tmp = path.with_extension("json.tmp");
        std::fs::write(&tmp, serde_json::to_vec_pretty(record).expect("record serializes"))?;
        std::fs::rename(&tmp, &path)?;
        Ok(())
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
