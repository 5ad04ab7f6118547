//! Run manifests: next to every output file goes a JSON record of the full
//! resolved configuration and a content hash, enough to reproduce the file
//! exactly. Timestamps live only here, never in the data files.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Serialize)]
struct OutputRecord {
    path: String,
    sha256: String,
    bytes: usize,
}

#[derive(Serialize)]
struct Manifest<'a> {
    version: &'static str,
    command: &'a str,
    flags: &'a BTreeMap<String, String>,
    outputs: Vec<OutputRecord>,
    created_unix_ms: u128,
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out
        .file_name()
        .map(|s| s.to_os_string())
        .unwrap_or_default();
    name.push(".manifest.json");
    out.with_file_name(name)
}

pub fn write(
    primary_out: &Path,
    command: &str,
    flags: BTreeMap<String, String>,
    outputs: &[(PathBuf, Vec<u8>)],
) -> std::io::Result<()> {
    let records = outputs
        .iter()
        .map(|(path, bytes)| {
            let mut hasher = Sha256::new();
            hasher.update(bytes);
            OutputRecord {
                path: path.display().to_string(),
                sha256: format!("{:x}", hasher.finalize()),
                bytes: bytes.len(),
            }
        })
        .collect();
    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION"),
        command,
        flags: &flags,
        outputs: records,
        created_unix_ms: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_millis())
            .unwrap_or(0),
    };
    let text = serde_json::to_string_pretty(&manifest).expect("serializable");
    std::fs::write(manifest_path(primary_out), text)
}
