//! Provenance records: every command writes what it ran on, keyed by
//! content hash, so outputs can be traced back to exact inputs. No
//! timestamps; reruns must be byte-identical.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct InputRecord {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct Provenance {
    pub command: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub params: serde_json::Value,
    pub inputs: Vec<InputRecord>,
}

pub fn hash_file(path: &Path) -> Result<InputRecord> {
    let bytes =
        fs::read(path).with_context(|| format!("reading input {}", path.display()))?;
    let digest = Sha256::digest(&bytes);
    Ok(InputRecord { path: path.display().to_string(), sha256: hex::encode(digest) })
}

/// The manifest file itself plus every file it references.
pub fn manifest_inputs(manifest_path: &Path) -> Result<Vec<InputRecord>> {
    let mut records = vec![hash_file(manifest_path)?];
    let text = fs::read_to_string(manifest_path)
        .with_context(|| format!("reading manifest {}", manifest_path.display()))?;
    let manifest: gapkit::io::PairManifest =
        serde_json::from_str(&text).context("parsing manifest")?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let resolve = |entry: &str| -> PathBuf {
        let p = Path::new(entry);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            base.join(p)
        }
    };
    records.push(hash_file(&resolve(&manifest.images))?);
    records.push(hash_file(&resolve(&manifest.texts))?);
    if let Some(ids) = &manifest.ids {
        records.push(hash_file(&resolve(ids))?);
    }
    Ok(records)
}

/// Pretty JSON with a trailing newline, full float precision.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn write_provenance(out_dir: &Path, p: &Provenance) -> Result<()> {
    write_json(&out_dir.join("provenance.json"), p)
}
