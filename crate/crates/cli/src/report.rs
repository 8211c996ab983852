//! Run reports: deterministic JSON with inputs digest and verdicts, the
//! timing kept in a separate field, written atomically.

use anyhow::Result;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

#[derive(Serialize)]
pub struct RunReport {
    pub command: String,
    pub inputs_digest: String,
    pub outputs: serde_json::Value,
    pub verdicts: serde_json::Map<String, serde_json::Value>,
    /// Wall time; excluded from the deterministic content.
    pub timing_ms: u128,
}

impl RunReport {
    pub fn new(command: &str, digest_input: &[u8]) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(digest_input);
        RunReport {
            command: command.to_string(),
            inputs_digest: hex::encode(&hasher.finalize()[..16]),
            outputs: serde_json::Value::Null,
            verdicts: serde_json::Map::new(),
            timing_ms: 0,
        }
    }

    pub fn verdict(&mut self, name: &str, pass: bool) {
        self.verdicts.insert(name.to_string(), serde_json::Value::Bool(pass));
    }

    pub fn all_pass(&self) -> bool {
        self.verdicts.values().all(|v| v.as_bool().unwrap_or(false))
    }

    /// Write `<command>.json` into the output directory via a temp file.
    pub fn write(&self, out_dir: &Path) -> Result<PathBuf> {
        std::fs::create_dir_all(out_dir)?;
        let path = out_dir.join(format!("{}.json", self.command));
        let tmp = out_dir.join(format!(".{}.json.tmp", self.command));
        std::fs::write(&tmp, serde_json::to_string_pretty(self)?)?;
        std::fs::rename(&tmp, &path)?;
        Ok(path)
    }
}

/// Write a CSV file atomically.
pub fn write_csv(out_dir: &Path, name: &str, header: &str, rows: &[String]) -> Result<PathBuf> {
    std::fs::create_dir_all(out_dir)?;
    let path = out_dir.join(name);
    let tmp = out_dir.join(format!(".{name}.tmp"));
    let mut text = String::from(header);
    text.push('\n');
    for r in rows {
        text.push_str(r);
        text.push('\n');
    }
    std::fs::write(&tmp, text)?;
    std::fs::rename(&tmp, &path)?;
    Ok(path)
}
