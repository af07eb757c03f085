//! Modality-gap measures on mixed corpora and paired datasets.
//!
//! Ranking metrics (top-1 modality bias, cross-modal mean ranks,
//! recall@K) all rank by raw dot product on the stacked corpus Z with the
//! self-similarity masked out; callers wanting cosine semantics normalize
//! rows first. Ties break toward the lowest row index, which keeps every
//! metric deterministic.
//!
//! One pass over the corpus computes everything each query needs (top-1
//! neighbor, rank of the first cross-modal item, rank of the paired
//! partner), so evaluating the full metric suite costs a single scan of
//! the similarity structure and never materializes the (2n x 2n) matrix.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::embedding::{EmbeddingMatrix, MixedCorpus, Modality, PairedDataset};
use crate::error::{GapError, Result};
use crate::numerics::{gaussian_summary, psd_sqrt};
use crate::parallel;

/// A ratio that may be infinite (denominator 0) or undefined (0/0).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RatioValue {
    Finite(f64),
    Infinite,
    Undefined,
}

impl RatioValue {
    pub fn from_counts(num: usize, den: usize) -> Self {
        match (num, den) {
            (0, 0) => RatioValue::Undefined,
            (_, 0) => RatioValue::Infinite,
            (n, d) => RatioValue::Finite(n as f64 / d as f64),
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, RatioValue::Infinite)
    }

    pub fn as_finite(&self) -> Option<f64> {
        match self {
            RatioValue::Finite(v) => Some(*v),
            _ => None,
        }
    }
}

impl std::fmt::Display for RatioValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RatioValue::Finite(v) => write!(f, "{v:.2}"),
            RatioValue::Infinite => write!(f, "inf"),
            RatioValue::Undefined => write!(f, "undef"),
        }
    }
}

impl Serialize for RatioValue {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            RatioValue::Finite(v) => s.serialize_f64(*v),
            RatioValue::Infinite => s.serialize_str("inf"),
            RatioValue::Undefined => s.serialize_str("undefined"),
        }
    }
}

impl<'de> Deserialize<'de> for RatioValue {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl serde::de::Visitor<'_> for V {
            type Value = RatioValue;
            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                write!(f, "a number, \"inf\", or \"undefined\"")
            }
            fn visit_f64<E: serde::de::Error>(self, v: f64) -> std::result::Result<RatioValue, E> {
                Ok(RatioValue::Finite(v))
            }
            fn visit_u64<E: serde::de::Error>(self, v: u64) -> std::result::Result<RatioValue, E> {
                Ok(RatioValue::Finite(v as f64))
            }
            fn visit_i64<E: serde::de::Error>(self, v: i64) -> std::result::Result<RatioValue, E> {
                Ok(RatioValue::Finite(v as f64))
            }
            fn visit_str<E: serde::de::Error>(self, v: &str) -> std::result::Result<RatioValue, E> {
                match v {
                    "inf" => Ok(RatioValue::Infinite),
                    "undefined" => Ok(RatioValue::Undefined),
                    other => Err(E::custom(format!("bad ratio value '{other}'"))),
                }
            }
        }
        d.deserialize_any(V)
    }
}

/// Top-1 neighbor tallies per query modality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeterogeneityCounts {
    /// Image queries whose top neighbor is an image.
    pub image_to_image: usize,
    /// Image queries whose top neighbor is a text.
    pub image_to_text: usize,
    /// Text queries whose top neighbor is a text.
    pub text_to_text: usize,
    /// Text queries whose top neighbor is an image.
    pub text_to_image: usize,
}

/// Modality bias of top-1 retrieval. A perfectly mixed space scores near
/// n_text_hits == n, i.e. small ratios; complete separation is infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeterogeneityResult {
    pub counts: HeterogeneityCounts,
    /// image_to_image / image_to_text.
    pub itr: RatioValue,
    /// text_to_text / text_to_image.
    pub tir: RatioValue,
}

/// Mean rank of the first cross-modal item per query side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankResult {
    /// Mean over image queries of the first text's rank.
    pub tmr: f64,
    /// Mean over text queries of the first image's rank.
    pub imr: f64,
    /// Per image query: 1-based rank of its best text.
    pub text_rank_per_image_query: Vec<usize>,
    /// Per text query: 1-based rank of its best image.
    pub image_rank_per_text_query: Vec<usize>,
}

/// Everything the ranking metrics need, computed in one corpus scan.
#[derive(Debug, Clone)]
pub struct RankingPass {
    n: usize,
    /// Per query: is the top-1 neighbor of the query's own modality?
    top1_same_modality: Vec<bool>,
    /// Per query: 1-based rank of the best other-modality item.
    first_other_rank: Vec<usize>,
    /// Per query: 1-based rank of the paired partner.
    partner_rank: Vec<usize>,
}

/// Rank position of item `target` in the descending similarity order of
/// `sims` with `skip` (the query itself) excluded. Ties order by index.
fn rank_of(sims: &[f64], skip: usize, target: usize) -> usize {
    let st = sims[target];
    let mut before = 0usize;
    for (l, &s) in sims.iter().enumerate() {
        if l == skip || l == target {
            continue;
        }
        if s > st || (s == st && l < target) {
            before += 1;
        }
    }
    before + 1
}

impl RankingPass {
    pub fn new(mc: &MixedCorpus) -> Result<Self> {
        let n = mc.n_pairs();
        if n < 2 {
            return Err(GapError::TooFewSamples { min: 2, got: n });
        }
        let z = mc.z().as_standard_layout().to_owned();
        let m = 2 * n;
        let labels = mc.labels().to_vec();
        let pair_of = mc.pair_of().to_vec();

        let stats = parallel::map_indexed(m, |i| {
            let qi = z.row(i);
            let qi = qi.as_slice().expect("standard layout");
            let mut sims = vec![0.0f64; m];
            for l in 0..m {
                let row = z.row(l);
                let row = row.as_slice().expect("standard layout");
                let mut acc = 0.0;
                for k in 0..qi.len() {
                    acc += qi[k] * row[k];
                }
                sims[l] = acc;
            }

            let my_label = labels[i];
            let mut top1: Option<usize> = None;
            let mut best_other: Option<usize> = None;
            for l in 0..m {
                if l == i {
                    continue;
                }
                if top1.map_or(true, |t| sims[l] > sims[t]) {
                    top1 = Some(l);
                }
                if labels[l] != my_label && best_other.map_or(true, |t| sims[l] > sims[t]) {
                    best_other = Some(l);
                }
            }
            let top1 = top1.expect("m >= 4");
            let best_other = best_other.expect("both modalities present");
            (
                labels[top1] == my_label,
                rank_of(&sims, i, best_other),
                rank_of(&sims, i, pair_of[i]),
            )
        });

        let mut pass = RankingPass {
            n,
            top1_same_modality: Vec::with_capacity(m),
            first_other_rank: Vec::with_capacity(m),
            partner_rank: Vec::with_capacity(m),
        };
        for (same, first_other, partner) in stats {
            pass.top1_same_modality.push(same);
            pass.first_other_rank.push(first_other);
            pass.partner_rank.push(partner);
        }
        Ok(pass)
    }

    pub fn heterogeneity(&self) -> HeterogeneityResult {
        let n = self.n;
        let image_to_image = self.top1_same_modality[..n].iter().filter(|&&b| b).count();
        let text_to_text = self.top1_same_modality[n..].iter().filter(|&&b| b).count();
        let counts = HeterogeneityCounts {
            image_to_image,
            image_to_text: n - image_to_image,
            text_to_text,
            text_to_image: n - text_to_text,
        };
        HeterogeneityResult {
            counts,
            itr: RatioValue::from_counts(counts.image_to_image, counts.image_to_text),
            tir: RatioValue::from_counts(counts.text_to_text, counts.text_to_image),
        }
    }

    pub fn mean_ranks(&self) -> RankResult {
        let n = self.n;
        let text_rank_per_image_query = self.first_other_rank[..n].to_vec();
        let image_rank_per_text_query = self.first_other_rank[n..].to_vec();
        let mean = |v: &[usize]| v.iter().sum::<usize>() as f64 / v.len() as f64;
        RankResult {
            tmr: mean(&text_rank_per_image_query),
            imr: mean(&image_rank_per_text_query),
            text_rank_per_image_query,
            image_rank_per_text_query,
        }
    }

    /// recall@K of the unique paired partner for queries of `modality`.
    pub fn recall_at_k(
        &self,
        modality: Modality,
        ks: &[usize],
    ) -> Result<BTreeMap<usize, f64>> {
        if ks.is_empty() {
            return Err(GapError::InvalidParameter {
                name: "ks",
                reason: "at least one K required".into(),
            });
        }
        let n = self.n;
        for &k in ks {
            if k == 0 || k > 2 * n - 1 {
                return Err(GapError::InvalidParameter {
                    name: "K",
                    reason: format!("{k} outside 1..={}", 2 * n - 1),
                });
            }
        }
        let ranks = match modality {
            Modality::Image => &self.partner_rank[..n],
            Modality::Text => &self.partner_rank[n..],
            Modality::Joint => {
                return Err(GapError::InvalidParameter {
                    name: "modality",
                    reason: "queries must be image or text".into(),
                })
            }
        };
        let mut out = BTreeMap::new();
        for &k in ks {
            let hits = ranks.iter().filter(|&&r| r <= k).count();
            out.insert(k, hits as f64 / n as f64);
        }
        Ok(out)
    }
}

/// Top-1 modality-bias ratios of a mixed corpus.
pub fn heterogeneity_indices(mc: &MixedCorpus) -> Result<HeterogeneityResult> {
    Ok(RankingPass::new(mc)?.heterogeneity())
}

/// Mean rank of the first cross-modal item, both query directions.
pub fn mean_ranks(mc: &MixedCorpus) -> Result<RankResult> {
    Ok(RankingPass::new(mc)?.mean_ranks())
}

/// recall@K of the paired partner for queries of one modality.
pub fn recall_at_k(
    mc: &MixedCorpus,
    modality: Modality,
    ks: &[usize],
) -> Result<BTreeMap<usize, f64>> {
    RankingPass::new(mc)?.recall_at_k(modality, ks)
}

/// Squared Frechet distance between Gaussians fitted to the two clouds.
/// The cross term is evaluated as sqrt(S_x^{1/2} S_y S_x^{1/2}), which is
/// symmetric in exact arithmetic and stable in floating point.
pub fn fid(x: &EmbeddingMatrix, y: &EmbeddingMatrix) -> Result<f64> {
    if x.ncols() != y.ncols() {
        return Err(GapError::DimensionMismatch { left: x.ncols(), right: y.ncols() });
    }
    let gx = gaussian_summary(x)?;
    let gy = gaussian_summary(y)?;
    let mean_term = (&gx.mean - &gy.mean).mapv(|v| v * v).sum();
    let trace = |m: &ndarray::Array2<f64>| m.diag().sum();

    let root_x = psd_sqrt(gx.covariance.view())?;
    let mut inner = root_x.dot(&gy.covariance).dot(&root_x);
    let d = inner.nrows();
    for i in 0..d {
        for j in (i + 1)..d {
            let avg = 0.5 * (inner[[i, j]] + inner[[j, i]]);
            inner[[i, j]] = avg;
            inner[[j, i]] = avg;
        }
    }
    let cross = psd_sqrt(inner.view())?;
    let value =
        mean_term + trace(&gx.covariance) + trace(&gy.covariance) - 2.0 * trace(&cross);
    Ok(value.max(0.0))
}

/// Distance used for paired-distance statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceMetric {
    Cosine,
    Euclidean,
    SqEuclidean,
}

impl std::fmt::Display for DistanceMetric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DistanceMetric::Cosine => write!(f, "cosine"),
            DistanceMetric::Euclidean => write!(f, "euclidean"),
            DistanceMetric::SqEuclidean => write!(f, "sq_euclidean"),
        }
    }
}

/// Per-pair distances plus the paired and cross-pair means.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairedDistanceStats {
    pub metric: DistanceMetric,
    /// d(x_i, y_i) per pair, histogram-ready.
    pub per_pair: Vec<f64>,
    /// Mean of the per-pair distances.
    pub paired_mean: f64,
    /// Mean of d(x_i, y_j) over cross pairs; whether matching pairs are
    /// included is recorded alongside.
    pub cross_mean: f64,
    pub cross_excludes_matching: bool,
}

fn pair_distance(x: &[f64], y: &[f64], metric: DistanceMetric) -> f64 {
    match metric {
        DistanceMetric::Cosine => {
            let mut dot = 0.0;
            let mut nx = 0.0;
            let mut ny = 0.0;
            for k in 0..x.len() {
                dot += x[k] * y[k];
                nx += x[k] * x[k];
                ny += y[k] * y[k];
            }
            1.0 - dot / (nx.sqrt() * ny.sqrt())
        }
        DistanceMetric::Euclidean | DistanceMetric::SqEuclidean => {
            let mut acc = 0.0;
            for k in 0..x.len() {
                let d = x[k] - y[k];
                acc += d * d;
            }
            if metric == DistanceMetric::Euclidean {
                acc.sqrt()
            } else {
                acc
            }
        }
    }
}

/// Distance statistics between paired rows and across all row pairs.
/// `exclude_matching` drops the (i, i) terms from the cross-pair mean.
pub fn paired_distance_stats(
    ds: &PairedDataset,
    metric: DistanceMetric,
    exclude_matching: bool,
) -> Result<PairedDistanceStats> {
    let n = ds.len();
    let x = ds.images().data().as_standard_layout().to_owned();
    let y = ds.texts().data().as_standard_layout().to_owned();

    if metric == DistanceMetric::Cosine {
        for (row, r) in x.outer_iter().enumerate() {
            if r.dot(&r) == 0.0 {
                return Err(GapError::ZeroNormRow { row });
            }
        }
        for (row, r) in y.outer_iter().enumerate() {
            if r.dot(&r) == 0.0 {
                return Err(GapError::ZeroNormRow { row });
            }
        }
    }

    let row_sums = parallel::map_indexed(n, |i| {
        let xi = x.row(i);
        let xi = xi.as_slice().expect("standard layout");
        let mut sum = 0.0;
        let mut diag = 0.0;
        for j in 0..n {
            let yj = y.row(j);
            let d = pair_distance(xi, yj.as_slice().expect("standard layout"), metric);
            sum += d;
            if j == i {
                diag = d;
            }
        }
        (sum, diag)
    });

    let per_pair: Vec<f64> = row_sums.iter().map(|&(_, d)| d).collect();
    let total: f64 = row_sums.iter().map(|&(s, _)| s).sum();
    let paired_sum: f64 = per_pair.iter().sum();
    let cross_mean = if exclude_matching {
        (total - paired_sum) / (n * n - n) as f64
    } else {
        total / (n * n) as f64
    };
    Ok(PairedDistanceStats {
        metric,
        paired_mean: paired_sum / n as f64,
        per_pair,
        cross_mean,
        cross_excludes_matching: exclude_matching,
    })
}
