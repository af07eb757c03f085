//! Spectral alignment of a paired dataset.
//!
//! Pipeline: cross-modal similarity W between images and texts, bipartite
//! adjacency A = [[0, W], [W^T, 0]], random-walk Laplacian eigenproblem
//! L u = lambda D u, and finally the k lowest non-null eigenvectors as
//! joint coordinates. Images and texts end up in one k-dimensional space
//! where cross-modal neighbors sit close together, because low-eigenvalue
//! eigenvectors vary slowly across heavy edges.

use ndarray::{s, Array1, Array2};

use crate::embedding::{EmbeddingMatrix, Modality, PairedDataset};
use crate::error::{GapError, Result};
use crate::numerics::{similarity_matrix, smallest_eigenpairs, SimilarityMetric};

/// Edge-weight rule for the cross-modal graph. Negative similarities are
/// clamped to zero in both modes: edge weights are affinities, and
/// negative weights would break degree positivity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightMode {
    ClampDot,
    ClampCosine,
}

/// Bipartite cross-modal graph. The (2n x 2n) adjacency is implicit:
/// rows 0..n are images, n..2n texts, and the only edges run between the
/// two sides with weights W.
#[derive(Debug, Clone)]
pub struct BipartiteGraph {
    w: Array2<f64>,
    degrees: Array1<f64>,
}

impl BipartiteGraph {
    /// Cross-modal weight block (n x n).
    pub fn w(&self) -> &Array2<f64> {
        &self.w
    }

    /// Node degrees over the implicit adjacency, images first.
    pub fn degrees(&self) -> &Array1<f64> {
        &self.degrees
    }

    pub fn n_pairs(&self) -> usize {
        self.w.nrows()
    }

    /// Number of connected components, counting both node sets.
    /// Anything above 1 means the embedding treats parts of the corpus
    /// independently, which is worth a warning upstream.
    pub fn component_count(&self) -> usize {
        let n = self.n_pairs();
        let mut parent: Vec<usize> = (0..2 * n).collect();
        fn find(parent: &mut Vec<usize>, mut i: usize) -> usize {
            while parent[i] != i {
                parent[i] = parent[parent[i]];
                i = parent[i];
            }
            i
        }
        for i in 0..n {
            for j in 0..n {
                if self.w[[i, j]] > 0.0 {
                    let (a, b) = (find(&mut parent, i), find(&mut parent, n + j));
                    if a != b {
                        parent[a] = b;
                    }
                }
            }
        }
        (0..2 * n).filter(|&i| find(&mut parent, i) == i).count()
    }
}

/// Build the bipartite cross-modal graph of a paired dataset.
/// Fails when any node ends up with zero degree after clamping.
pub fn build_bipartite_graph(ds: &PairedDataset, mode: WeightMode) -> Result<BipartiteGraph> {
    let metric = match mode {
        WeightMode::ClampDot => SimilarityMetric::Dot,
        WeightMode::ClampCosine => SimilarityMetric::Cosine,
    };
    let mut w = similarity_matrix(
        ds.images().data().view(),
        ds.texts().data().view(),
        metric,
    )?;
    w.mapv_inplace(|v| v.max(0.0));

    let n = ds.len();
    let mut degrees = Array1::zeros(2 * n);
    for i in 0..n {
        degrees[i] = w.row(i).sum();
    }
    for j in 0..n {
        degrees[n + j] = w.column(j).sum();
    }
    let isolated: Vec<usize> =
        (0..2 * n).filter(|&i| degrees[i] <= 0.0).collect();
    if !isolated.is_empty() {
        return Err(GapError::IsolatedNodes { rows: isolated });
    }
    Ok(BipartiteGraph { w, degrees })
}

/// Joint spectral coordinates for both modalities.
#[derive(Debug, Clone)]
pub struct SpectralAlignment {
    /// (n x k) image coordinates: rows 0..n of the eigenvector matrix.
    pub f_img: Array2<f64>,
    /// (n x k) text coordinates: rows n..2n of the eigenvector matrix.
    pub f_txt: Array2<f64>,
    /// Ascending, all above the null cutoff.
    pub eigenvalues: Vec<f64>,
    pub k: usize,
}

/// Re-embed a paired dataset as the k lowest non-null eigenvectors of
/// the random-walk Laplacian of its cross-modal graph.
pub fn spectral_embed(
    ds: &PairedDataset,
    k: usize,
    mode: WeightMode,
    null_tol: f64,
) -> Result<SpectralAlignment> {
    let graph = build_bipartite_graph(ds, mode)?;
    let components = graph.component_count();
    if components > 1 {
        return Err(GapError::Validation(format!(
            "similarity graph splits into {components} disconnected components"
        )));
    }
    let n = graph.n_pairs();
    let m = 2 * n;

    let mut l = Array2::zeros((m, m));
    for i in 0..n {
        for j in 0..n {
            let wij = graph.w[[i, j]];
            l[[i, n + j]] = -wij;
            l[[n + j, i]] = -wij;
        }
    }
    for i in 0..m {
        l[[i, i]] = graph.degrees[i];
    }

    let eig = smallest_eigenpairs(l.view(), Some(&graph.degrees), k, null_tol)?;
    Ok(SpectralAlignment {
        f_img: eig.eigenvectors.slice(s![..n, ..]).to_owned(),
        f_txt: eig.eigenvectors.slice(s![n.., ..]).to_owned(),
        eigenvalues: eig.eigenvalues,
        k,
    })
}

/// Wrap spectral coordinates as a paired dataset in the k-dimensional
/// joint space, so every metric applies unchanged.
pub fn alignment_as_dataset(sa: &SpectralAlignment) -> Result<PairedDataset> {
    PairedDataset::new(
        EmbeddingMatrix::with_default_ids(sa.f_img.clone(), Modality::Image)?,
        EmbeddingMatrix::with_default_ids(sa.f_txt.clone(), Modality::Text)?,
    )
}
