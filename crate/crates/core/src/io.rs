//! Loading and saving embedding matrices and pair manifests.

pub mod container;
pub mod npy;

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::embedding::{EmbeddingMatrix, Modality, PairedDataset};
use crate::error::{GapError, Result};

/// JSON pair manifest: paths to the image and text matrices, plus an
/// optional newline-separated id sidecar shared by both sides.
#[derive(Debug, Clone, Deserialize)]
pub struct PairManifest {
    pub images: String,
    pub texts: String,
    #[serde(default)]
    pub ids: Option<String>,
}

/// Load a matrix file, validating it as an [`EmbeddingMatrix`].
/// Ids default to row indices as decimal strings.
pub fn load_matrix(path: &Path, modality: Modality) -> Result<EmbeddingMatrix> {
    let data = npy::read(path)?;
    EmbeddingMatrix::with_default_ids(data, modality)
}

/// Persist a matrix. `load_matrix` of the result is bit-exact.
pub fn save_matrix(m: &EmbeddingMatrix, path: &Path) -> Result<()> {
    npy::write(path, m.data())
}

/// Relative manifest entries resolve against the manifest's directory.
fn resolve(base: &Path, entry: &str) -> PathBuf {
    let p = Path::new(entry);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Load the dataset a manifest describes, enforcing pairing invariants.
pub fn load_paired_dataset(manifest_path: &Path) -> Result<PairedDataset> {
    let text = fs::read_to_string(manifest_path)
        .map_err(|e| GapError::Io { path: manifest_path.to_path_buf(), source: e })?;
    let manifest: PairManifest = serde_json::from_str(&text).map_err(|e| {
        GapError::NpyFormat {
            path: manifest_path.to_path_buf(),
            reason: format!("manifest is not valid JSON: {e}"),
        }
    })?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));

    let x = npy::read(&resolve(base, &manifest.images))?;
    let y = npy::read(&resolve(base, &manifest.texts))?;

    let ids = match &manifest.ids {
        Some(rel) => {
            let id_path = resolve(base, rel);
            let raw = fs::read_to_string(&id_path)
                .map_err(|e| GapError::Io { path: id_path.clone(), source: e })?;
            Some(raw.lines().map(str::to_string).collect::<Vec<_>>())
        }
        None => None,
    };

    let (images, texts) = match ids {
        Some(ids) => (
            EmbeddingMatrix::new(x, Modality::Image, ids.clone())?,
            EmbeddingMatrix::new(y, Modality::Text, ids)?,
        ),
        None => (
            EmbeddingMatrix::with_default_ids(x, Modality::Image)?,
            EmbeddingMatrix::with_default_ids(y, Modality::Text)?,
        ),
    };
    PairedDataset::new(images, texts)
}
