//! Synthetic paired datasets with a controllable modality gap.
//!
//! The generator plants a shared semantic latent per pair and pushes the
//! two modalities apart by a constant offset:
//!
//! ```text
//! x_i = R_img z_i + gap * u + noise * e_i
//! y_i = R_txt z_i - gap * u + noise * e'_i
//! ```
//!
//! followed by row L2 normalization. `R_img`/`R_txt` are fixed random
//! orthonormal maps from the latent space into the embedding space and
//! `u` is a fixed unit offset direction, orthogonal to the latent image
//! whenever the embedding dimension leaves room for it (so the offset
//! shifts the clusters without distorting within-cluster geometry).
//!
//! Latents are drawn on a cone: z_i = sqrt(d_latent) * e + w_i with `e` a
//! random unit direction and `w_i` standard Gaussian. Real encoder
//! outputs concentrate in a narrow cone, and the positive mean pairwise
//! dot product that the cone produces is what keeps cross-modal affinity
//! graphs connected once negatives are clamped; zero-mean latents would
//! not survive clamping at realistic gap sizes.
//!
//! Randomness comes from ChaCha8 seeded with `spec.seed`; normal deviates
//! use the ziggurat sampler. Identical specs produce identical bytes.

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::embedding::{l2_normalize_rows, EmbeddingMatrix, Modality, PairedDataset};
use crate::error::{GapError, Result};

/// Whether both modalities share one latent-to-embedding map.
///
/// `Shared` keeps cross-modal geometry intact so alignment methods have
/// signal to recover; `Independent` scrambles it, modelling encoders
/// trained without a common backbone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RotationMode {
    #[default]
    Shared,
    Independent,
}

/// Parameters of the synthetic generator.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthSpec {
    /// Pair count, at least 2.
    pub n: usize,
    /// Shared semantic dimension.
    pub d_latent: usize,
    /// Output dimension, at least `d_latent`.
    pub d_embed: usize,
    /// Magnitude of the constant modality offset, >= 0.
    pub gap: f64,
    /// Isotropic per-modality noise scale, >= 0.
    pub noise: f64,
    pub seed: u64,
    #[serde(default)]
    pub rotation: RotationMode,
}

impl SynthSpec {
    fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(GapError::InvalidParameter {
                name: "n",
                reason: format!("need at least 2 pairs, got {}", self.n),
            });
        }
        if self.d_latent == 0 {
            return Err(GapError::InvalidParameter {
                name: "d_latent",
                reason: "must be at least 1".into(),
            });
        }
        if self.d_embed < self.d_latent {
            return Err(GapError::InvalidParameter {
                name: "d_embed",
                reason: format!("{} is smaller than d_latent {}", self.d_embed, self.d_latent),
            });
        }
        if !(self.gap >= 0.0) || !(self.noise >= 0.0) {
            return Err(GapError::InvalidParameter {
                name: "gap/noise",
                reason: "must be finite and non-negative".into(),
            });
        }
        Ok(())
    }
}

fn normal_vec(rng: &mut ChaCha8Rng, len: usize) -> Array1<f64> {
    Array1::from_iter((0..len).map(|_| rng.sample::<f64, _>(StandardNormal)))
}

fn normal_mat(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
    let mut m = Array2::zeros((rows, cols));
    for v in m.iter_mut() {
        *v = rng.sample::<f64, _>(StandardNormal);
    }
    m
}

/// In-place modified Gram-Schmidt over columns. Columns whose residual
/// collapses are zeroed; returns the rank found.
fn orthonormalize_columns(m: &mut Array2<f64>) -> usize {
    let cols = m.ncols();
    let mut rank = 0;
    for j in 0..cols {
        for i in 0..j {
            let proj = m.column(i).dot(&m.column(j));
            let basis = m.column(i).to_owned();
            m.column_mut(j).scaled_add(-proj, &basis);
        }
        let norm = m.column(j).dot(&m.column(j)).sqrt();
        if norm < 1e-10 {
            m.column_mut(j).fill(0.0);
        } else {
            m.column_mut(j).mapv_inplace(|v| v / norm);
            rank += 1;
        }
    }
    rank
}

/// Orthonormal columns: first the offset direction (when there is room
/// for one outside the latent image), then the d_latent map columns.
fn offset_and_map(
    rng: &mut ChaCha8Rng,
    d_embed: usize,
    d_latent: usize,
    u: Option<&Array1<f64>>,
) -> (Array1<f64>, Array2<f64>) {
    let keep_u = d_embed > d_latent;
    let extra = usize::from(keep_u);
    let mut basis = Array2::zeros((d_embed, d_latent + extra));
    let g_u = match u {
        Some(u) => u.clone(),
        None => normal_vec(rng, d_embed),
    };
    if keep_u {
        basis.column_mut(0).assign(&g_u);
    }
    let g = normal_mat(rng, d_embed, d_latent);
    basis
        .slice_mut(ndarray::s![.., extra..])
        .assign(&g);
    orthonormalize_columns(&mut basis);
    let u_out = if keep_u {
        basis.column(0).to_owned()
    } else {
        // No direction orthogonal to a full-rank map exists; the offset
        // then necessarily bleeds into the latent image.
        let norm = g_u.dot(&g_u).sqrt();
        if norm < 1e-10 {
            let mut e0 = Array1::zeros(d_embed);
            e0[0] = 1.0;
            e0
        } else {
            g_u.mapv(|v| v / norm)
        }
    };
    (u_out, basis.slice(ndarray::s![.., extra..]).to_owned())
}

/// Generate a paired dataset. Pure function of `spec`'s fields.
pub fn generate_paired(spec: &SynthSpec) -> Result<PairedDataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (n, dl, de) = (spec.n, spec.d_latent, spec.d_embed);

    // Draw order is part of the format: cone axis, image map (+ offset),
    // optional text map, latents, image noise, text noise.
    let mut e = normal_vec(&mut rng, dl);
    let e_norm = e.dot(&e).sqrt();
    if e_norm < 1e-10 {
        e.fill(0.0);
        e[0] = 1.0;
    } else {
        e.mapv_inplace(|v| v / e_norm);
    }

    let (u, r_img) = offset_and_map(&mut rng, de, dl, None);
    let r_txt = match spec.rotation {
        RotationMode::Shared => r_img.clone(),
        RotationMode::Independent => offset_and_map(&mut rng, de, dl, Some(&u)).1,
    };

    let cone = (dl as f64).sqrt();
    let mut latents = normal_mat(&mut rng, n, dl);
    for mut row in latents.outer_iter_mut() {
        row.scaled_add(cone, &e);
    }

    let noise_img = normal_mat(&mut rng, n, de);
    let noise_txt = normal_mat(&mut rng, n, de);

    let mut x = latents.dot(&r_img.t());
    let mut y = latents.dot(&r_txt.t());
    for i in 0..n {
        for k in 0..de {
            x[[i, k]] += spec.gap * u[k] + spec.noise * noise_img[[i, k]];
            y[[i, k]] += -spec.gap * u[k] + spec.noise * noise_txt[[i, k]];
        }
    }

    let images = l2_normalize_rows(&EmbeddingMatrix::with_default_ids(x, Modality::Image)?)?;
    let texts = l2_normalize_rows(&EmbeddingMatrix::with_default_ids(y, Modality::Text)?)?;
    PairedDataset::new(images, texts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{similarity_matrix, SimilarityMetric};

    fn spec() -> SynthSpec {
        SynthSpec {
            n: 40,
            d_latent: 8,
            d_embed: 16,
            gap: 2.0,
            noise: 0.05,
            seed: 7,
            rotation: RotationMode::Shared,
        }
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let a = generate_paired(&spec()).unwrap();
        let b = generate_paired(&spec()).unwrap();
        assert_eq!(a.images().data(), b.images().data());
        assert_eq!(a.texts().data(), b.texts().data());
        for (p, q) in a.images().data().iter().zip(b.images().data().iter()) {
            assert_eq!(p.to_bits(), q.to_bits());
        }
    }

    #[test]
    fn different_seeds_differ() {
        let a = generate_paired(&spec()).unwrap();
        let b = generate_paired(&SynthSpec { seed: 8, ..spec() }).unwrap();
        assert_ne!(a.images().data(), b.images().data());
    }

    #[test]
    fn degenerate_spec_collapses_modalities() {
        let s = SynthSpec { gap: 0.0, noise: 0.0, ..spec() };
        let ds = generate_paired(&s).unwrap();
        assert_eq!(ds.images().data(), ds.texts().data());
        let d = crate::numerics::pairwise_sq_euclidean(
            ds.images().data().view(),
            ds.texts().data().view(),
        )
        .unwrap();
        for i in 0..s.n {
            assert_eq!(d[[i, i]], 0.0);
        }
    }

    #[test]
    fn rows_are_unit_norm() {
        let ds = generate_paired(&spec()).unwrap();
        for m in [ds.images(), ds.texts()] {
            for row in m.data().outer_iter() {
                let norm = row.dot(&row).sqrt();
                assert!((norm - 1.0).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn validation_catches_bad_specs() {
        assert!(generate_paired(&SynthSpec { n: 1, ..spec() }).is_err());
        assert!(generate_paired(&SynthSpec { d_embed: 4, d_latent: 8, ..spec() }).is_err());
        assert!(generate_paired(&SynthSpec { gap: -1.0, ..spec() }).is_err());
        assert!(generate_paired(&SynthSpec { noise: f64::NAN, ..spec() }).is_err());
    }

    #[test]
    fn rotation_modes_diverge() {
        let shared = generate_paired(&spec()).unwrap();
        let indep =
            generate_paired(&SynthSpec { rotation: RotationMode::Independent, ..spec() })
                .unwrap();
        assert_ne!(shared.texts().data(), indep.texts().data());
    }

    #[test]
    fn d_embed_equal_to_d_latent_is_allowed() {
        let s = SynthSpec { d_embed: 8, d_latent: 8, ..spec() };
        let ds = generate_paired(&s).unwrap();
        assert_eq!(ds.dim(), 8);
    }

    #[test]
    fn shared_rotation_pairs_are_mutual_nearest() {
        // The offset is common to a modality, so relative geometry
        // survives it; pairing must dominate cross-modal similarity.
        for gap in [1.0, 5.0, 10.0] {
            let s = SynthSpec {
                n: 100,
                d_latent: 64,
                d_embed: 128,
                gap,
                noise: 0.05,
                seed: 11,
                rotation: RotationMode::Shared,
            };
            let ds = generate_paired(&s).unwrap();
            let sim = similarity_matrix(
                ds.images().data().view(),
                ds.texts().data().view(),
                SimilarityMetric::Dot,
            )
            .unwrap();
            let mut hits = 0;
            for i in 0..s.n {
                let row = sim.row(i);
                let best = (0..s.n).max_by(|&a, &b| row[a].total_cmp(&row[b])).unwrap();
                if best == i {
                    hits += 1;
                }
            }
            assert!(
                hits * 100 >= 95 * s.n,
                "gap={gap}: only {hits}/{} images match their own text",
                s.n
            );
        }
    }
}
