//! Embedding matrices, paired datasets and mixed corpora.
//!
//! All data is 64-bit floating point and immutable after construction;
//! 32-bit inputs are widened on load. Pairing is positional: row `i` of
//! the image matrix corresponds to row `i` of the text matrix.

use std::collections::HashSet;

use ndarray::{s, Array2};

use crate::error::{GapError, Result};

/// Which modality a matrix (or a mixed-corpus row) carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Modality {
    Image,
    Text,
    Joint,
}

impl std::fmt::Display for Modality {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Modality::Image => write!(f, "image"),
            Modality::Text => write!(f, "text"),
            Modality::Joint => write!(f, "joint"),
        }
    }
}

/// A dense (n x d) matrix of row embeddings with a modality tag and one
/// opaque id per row.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    data: Array2<f64>,
    modality: Modality,
    ids: Vec<String>,
}

impl EmbeddingMatrix {
    /// Validates shape, finiteness and id uniqueness.
    pub fn new(data: Array2<f64>, modality: Modality, ids: Vec<String>) -> Result<Self> {
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(GapError::EmptyMatrix);
        }
        for (row, r) in data.outer_iter().enumerate() {
            if r.iter().any(|v| !v.is_finite()) {
                return Err(GapError::NonFinite { row });
            }
        }
        if ids.len() != data.nrows() {
            return Err(GapError::IdCountMismatch { ids: ids.len(), rows: data.nrows() });
        }
        let mut seen = HashSet::with_capacity(ids.len());
        for (row, id) in ids.iter().enumerate() {
            if !seen.insert(id.as_str()) {
                return Err(GapError::DuplicateId { id: id.clone(), row });
            }
        }
        Ok(Self { data, modality, ids })
    }

    /// Like [`EmbeddingMatrix::new`] with row indices as ids.
    pub fn with_default_ids(data: Array2<f64>, modality: Modality) -> Result<Self> {
        let ids = (0..data.nrows()).map(|i| i.to_string()).collect();
        Self::new(data, modality, ids)
    }

    pub fn data(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn modality(&self) -> Modality {
        self.modality
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn nrows(&self) -> usize {
        self.data.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.data.ncols()
    }

    /// Same data under a different modality tag.
    pub fn retagged(&self, modality: Modality) -> Self {
        Self { data: self.data.clone(), modality, ids: self.ids.clone() }
    }
}

/// Rescale every row to unit Euclidean norm. Fails on a zero-norm row.
pub fn l2_normalize_rows(m: &EmbeddingMatrix) -> Result<EmbeddingMatrix> {
    let mut data = m.data.clone();
    for (row, mut r) in data.outer_iter_mut().enumerate() {
        let norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(GapError::ZeroNormRow { row });
        }
        r.mapv_inplace(|v| v / norm);
    }
    EmbeddingMatrix::new(data, m.modality, m.ids.clone())
}

/// Image and text embeddings with positional row pairing.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedDataset {
    images: EmbeddingMatrix,
    texts: EmbeddingMatrix,
}

impl PairedDataset {
    pub fn new(images: EmbeddingMatrix, texts: EmbeddingMatrix) -> Result<Self> {
        if images.ncols() != texts.ncols() {
            return Err(GapError::DimensionMismatch {
                left: images.ncols(),
                right: texts.ncols(),
            });
        }
        if images.nrows() != texts.nrows() {
            return Err(GapError::PairCountMismatch {
                left: images.nrows(),
                right: texts.nrows(),
            });
        }
        Ok(Self { images, texts })
    }

    pub fn images(&self) -> &EmbeddingMatrix {
        &self.images
    }

    pub fn texts(&self) -> &EmbeddingMatrix {
        &self.texts
    }

    /// Number of pairs.
    pub fn len(&self) -> usize {
        self.images.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.images.nrows() == 0
    }

    /// Embedding dimension shared by both sides.
    pub fn dim(&self) -> usize {
        self.images.ncols()
    }

    /// L2-normalize both sides.
    pub fn normalized(&self) -> Result<Self> {
        Ok(Self {
            images: l2_normalize_rows(&self.images)?,
            texts: l2_normalize_rows(&self.texts)?,
        })
    }
}

/// The stacked matrix Z = [X; Y] with per-row modality labels and the
/// index of each row's paired partner.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedCorpus {
    z: Array2<f64>,
    labels: Vec<Modality>,
    pair_of: Vec<usize>,
}

impl MixedCorpus {
    pub fn z(&self) -> &Array2<f64> {
        &self.z
    }

    pub fn labels(&self) -> &[Modality] {
        &self.labels
    }

    pub fn pair_of(&self) -> &[usize] {
        &self.pair_of
    }

    /// Number of pairs (rows are 2n: images first, then texts).
    pub fn n_pairs(&self) -> usize {
        self.z.nrows() / 2
    }

    pub fn n_rows(&self) -> usize {
        self.z.nrows()
    }
}

/// Stack a paired dataset into a mixed corpus: images occupy rows
/// `0..n-1`, texts rows `n..2n-1`, and `pair_of(i)` points at row i's
/// partner.
pub fn stack_mixed(ds: &PairedDataset) -> MixedCorpus {
    let n = ds.len();
    let d = ds.dim();
    let mut z = Array2::<f64>::zeros((2 * n, d));
    z.slice_mut(s![..n, ..]).assign(ds.images().data());
    z.slice_mut(s![n.., ..]).assign(ds.texts().data());
    let mut labels = vec![Modality::Image; 2 * n];
    labels[n..].fill(Modality::Text);
    let pair_of = (0..2 * n).map(|i| if i < n { i + n } else { i - n }).collect();
    MixedCorpus { z, labels, pair_of }
}

/// Split a mixed corpus back into the paired dataset it was stacked from.
pub fn split_mixed(mc: &MixedCorpus) -> Result<PairedDataset> {
    let n = mc.n_pairs();
    let images = mc.z.slice(s![..n, ..]).to_owned();
    let texts = mc.z.slice(s![n.., ..]).to_owned();
    PairedDataset::new(
        EmbeddingMatrix::with_default_ids(images, Modality::Image)?,
        EmbeddingMatrix::with_default_ids(texts, Modality::Text)?,
    )
}
