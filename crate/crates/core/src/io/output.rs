//! Run directories, CSV tables and manifests.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::{Config, OmegaConvention};
use crate::physparams::FluxConvention;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const SUMMARY_FILE: &str = "summary.json";
pub const SCAN_FILE: &str = "scan.csv";
pub const RINGDOWN_FILE: &str = "ringdown.csv";

/// Shortest representation that round-trips: 17 significant digits.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Serialization(format!("{}: {e}", path.display())))?;
    w.write_record(header)?;
    for row in rows {
        debug_assert_eq!(row.len(), header.len());
        w.write_record(row.iter().map(|v| fmt17(*v)))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Read back a numeric CSV written by [`write_csv`].
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::Serialization(format!("{}: {e}", path.display())))?;
    let header = r.headers()?.iter().map(String::from).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|e| Error::Serialization(format!("{}: `{s}`: {e}", path.display())))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conventions {
    pub omega: OmegaConvention,
    pub flux: FluxConvention,
}

/// Everything needed to replay a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub command: String,
    /// Wall-clock creation time; the only field that differs between replays.
    pub timestamp: String,
    pub tool_version: String,
    pub conventions: Conventions,
    /// Fully resolved configuration: every derived value written out.
    pub config: Config,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, config: &Config, outputs: Vec<String>) -> Result<Self> {
        Ok(Self {
            run_id: run_id(command, config)?,
            command: command.to_string(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            conventions: Conventions {
                omega: config.drive.omega_convention,
                flux: config.drive.flux_convention,
            },
            config: config.clone(),
            outputs,
        })
    }
}

/// `<command>-<12 hex digits of sha256(command, config)>`; the output
/// directory is not part of the identity.
pub fn run_id(command: &str, config: &Config) -> Result<String> {
    let mut c = config.clone();
    c.run.output_dir = None;
    let mut h = Sha256::new();
    h.update(command.as_bytes());
    h.update([0u8]);
    h.update(serde_json::to_vec(&c)?);
    let digest = hex::encode(h.finalize());
    Ok(format!("{command}-{}", &digest[..12]))
}

pub fn ensure_dir(path: &Path) -> Result<PathBuf> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))?;
    Ok(path.to_path_buf())
}
