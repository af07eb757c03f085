//! gapkit: quantify and reduce the image-text modality gap in paired
//! embedding spaces.
//!
//! The crate takes paired image/text embedding matrices, measures how far
//! apart the two modalities sit (retrieval heterogeneity, mean ranks,
//! distribution distance, paired-distance statistics), and produces
//! aligned embeddings via spectral re-embedding of the cross-modal graph
//! or Laplacian-regularized optimal transport.

pub mod embedding;
pub mod error;
pub mod io;
mod parallel;
pub mod metrics;
pub mod numerics;
pub mod ot;
pub mod report;
pub mod spectral;
pub mod stats;
pub mod synth;

pub use embedding::{
    l2_normalize_rows, split_mixed, stack_mixed, EmbeddingMatrix, MixedCorpus, Modality,
    PairedDataset,
};
pub use error::{GapError, Result};
