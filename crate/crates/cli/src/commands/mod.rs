//! Subcommand implementations and the file-shape helpers they share.

pub mod align;
pub mod eval;
pub mod report;
pub mod synth;
pub mod tune;

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use gapkit::embedding::PairedDataset;
use gapkit::io::npy;
use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub(crate) fn load_dataset(manifest: &Path, normalize: bool) -> Result<PairedDataset> {
    let ds = gapkit::io::load_paired_dataset(manifest)
        .with_context(|| format!("loading {}", manifest.display()))?;
    if normalize {
        Ok(ds.normalized()?)
    } else {
        Ok(ds)
    }
}

/// images.npy + texts.npy + ids.txt + manifest.json under `out`.
pub(crate) fn write_pair_files(
    out: &Path,
    images: &Array2<f64>,
    texts: &Array2<f64>,
    ids: &[String],
) -> Result<PathBuf> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    npy::write(&out.join("images.npy"), images)?;
    npy::write(&out.join("texts.npy"), texts)?;
    let mut id_text = ids.join("\n");
    id_text.push('\n');
    fs::write(out.join("ids.txt"), id_text)?;
    let manifest = out.join("manifest.json");
    crate::provenance::write_json(
        &manifest,
        &serde_json::json!({
            "images": "images.npy",
            "texts": "texts.npy",
            "ids": "ids.txt",
        }),
    )?;
    Ok(manifest)
}

pub(crate) fn select_rows(m: &Array2<f64>, idx: &[usize]) -> Array2<f64> {
    m.select(Axis(0), idx)
}

pub(crate) fn parse_comma_list<T: FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for part in s.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        match part.parse::<T>() {
            Ok(v) => out.push(v),
            Err(_) => bail!("bad {what} value '{part}'"),
        }
    }
    Ok(out)
}

/// 0..n in a seed-determined order; the train split takes a prefix.
pub(crate) fn shuffled_indices(n: usize, seed: u64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    idx
}
