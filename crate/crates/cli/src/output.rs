//! Report files: content-addressed names, JSON always, CSV when there are series.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::CliError;

/// Hex SHA-256 of the compact JSON encoding of `config`.
pub fn config_hash(config: &Value) -> String {
    let bytes = serde_json::to_vec(config).expect("serializable");
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Serialize)]
pub struct Written {
    pub report: PathBuf,
    pub csv: Option<PathBuf>,
    pub manifest: PathBuf,
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

/// Writes `<stem>.json`, `<stem>.csv` (when `csv` is given) and `<stem>.manifest.json`
/// with `stem = <name>-seed<seed>-<first 16 hex digits of the config hash>`.
pub fn write_report(
    dir: &Path,
    command: &str,
    name: &str,
    seed: u64,
    config: &Value,
    report: &Value,
    csv: Option<&[u8]>,
) -> Result<Written, CliError> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
    let hash = config_hash(config);
    let stem = format!("{name}-seed{seed}-{}", &hash[..16]);
    let report_path = dir.join(format!("{stem}.json"));
    let mut body = serde_json::to_vec_pretty(report).expect("serializable");
    body.push(b'\n');
    write(&report_path, &body)?;
    let csv_path = match csv {
        Some(bytes) => {
            let p = dir.join(format!("{stem}.csv"));
            write(&p, bytes)?;
            Some(p)
        }
        None => None,
    };
    let manifest_path = dir.join(format!("{stem}.manifest.json"));
    let file_name = |p: &Path| p.file_name().map(|f| f.to_string_lossy().into_owned());
    let manifest = json!({
        "command": command,
        "name": name,
        "seed": seed,
        "config": config,
        "config_sha256": hash,
        "versions": {
            "escape-cli": env!("CARGO_PKG_VERSION"),
            "escape-core": escape_core::VERSION,
        },
        "files": {
            "report": file_name(&report_path),
            "csv": csv_path.as_deref().and_then(file_name),
        },
    });
    let mut body = serde_json::to_vec_pretty(&manifest).expect("serializable");
    body.push(b'\n');
    write(&manifest_path, &body)?;
    Ok(Written {
        report: report_path,
        csv: csv_path,
        manifest: manifest_path,
    })
}
