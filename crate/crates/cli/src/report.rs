//! Report emission: CSV files with declared header order plus a JSON
//! metadata sidecar carrying the full configuration, its hash, grid
//! hashes and the pass/fail summary. Byte output is deterministic for a
//! fixed configuration.

use crate::config::RunConfig;
use nelson_core::experiments::SweepRecord;
use serde_json::json;
use sha2::{Digest, Sha256};
use std::io::Write;
use std::path::{Path, PathBuf};

pub struct Reporter {
    out_dir: PathBuf,
    config: RunConfig,
    config_hash: String,
}

impl Reporter {
    pub fn new(config: &RunConfig) -> std::io::Result<Reporter> {
        let out_dir = PathBuf::from(&config.out_dir);
        std::fs::create_dir_all(&out_dir)?;
        let mut hasher = Sha256::new();
        hasher.update(config.to_file_string().as_bytes());
        let config_hash = hex_digest(hasher);
        Ok(Reporter {
            out_dir,
            config: config.clone(),
            config_hash,
        })
    }

    pub fn out_path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    pub fn write_records(&self, name: &str, records: &[SweepRecord]) -> std::io::Result<PathBuf> {
        let mut body = String::from(SweepRecord::CSV_HEADER);
        body.push('\n');
        for r in records {
            body.push_str(&r.to_csv_row());
            body.push('\n');
        }
        let path = self.out_path(name);
        write_atomic(&path, body.as_bytes())?;
        Ok(path)
    }

    /// Arbitrary CSV with an explicit header (used by `integrals`).
    pub fn write_csv(&self, name: &str, header: &str, rows: &[String]) -> std::io::Result<PathBuf> {
        let mut body = String::from(header);
        body.push('\n');
        for r in rows {
            body.push_str(r);
            body.push('\n');
        }
        let path = self.out_path(name);
        write_atomic(&path, body.as_bytes())?;
        Ok(path)
    }

    pub fn write_metadata(
        &self,
        name: &str,
        subcommand: &str,
        passed: bool,
        grid_hashes: &[u64],
        summary: serde_json::Value,
    ) -> std::io::Result<PathBuf> {
        let meta = json!({
            "subcommand": subcommand,
            "version": env!("CARGO_PKG_VERSION"),
            "config_hash": self.config_hash,
            "config": serde_json::to_value(&self.config).unwrap(),
            "grid_hashes": grid_hashes,
            "passed": passed,
            "summary": summary,
        });
        let path = self.out_path(name);
        write_atomic(&path, serde_json::to_string_pretty(&meta).unwrap().as_bytes())?;
        Ok(path)
    }

    pub fn config_hash(&self) -> &str {
        &self.config_hash
    }
}

fn hex_digest(hasher: Sha256) -> String {
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = std::fs::File::create(&tmp).map_err(|e| {
            std::io::Error::new(e.kind(), format!("{}: {e}", tmp.display()))
        })?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)
        .map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}
