//! Dense linear-algebra kernels shared by the alignment and metric layers.
//!
//! Similarity and distance kernels use explicit loops with a fixed
//! summation order (ascending column index) instead of a blocked gemm, so
//! `similarity_matrix(A, B, Dot)` is exactly the transpose of
//! `similarity_matrix(B, A, Dot)` and `pairwise_sq_euclidean(A, A)` has an
//! exactly zero diagonal. Row blocks may still be computed in parallel;
//! each output entry has a fixed evaluation order either way.

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array1, Array2, ArrayView2};

use crate::embedding::EmbeddingMatrix;
use crate::error::{GapError, Result};
use crate::parallel;

/// Similarity kernel for [`similarity_matrix`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimilarityMetric {
    Dot,
    Cosine,
}

fn check_same_cols(a: ArrayView2<f64>, b: ArrayView2<f64>) -> Result<()> {
    if a.ncols() != b.ncols() {
        return Err(GapError::DimensionMismatch { left: a.ncols(), right: b.ncols() });
    }
    Ok(())
}

fn row_norms(a: ArrayView2<f64>) -> Result<Vec<f64>> {
    let mut norms = Vec::with_capacity(a.nrows());
    for (row, r) in a.outer_iter().enumerate() {
        let n = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if n == 0.0 {
            return Err(GapError::ZeroNormRow { row });
        }
        norms.push(n);
    }
    Ok(norms)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for k in 0..a.len() {
        acc += a[k] * b[k];
    }
    acc
}

/// (n x m) matrix of pairwise similarities between rows of `a` and `b`.
pub fn similarity_matrix(
    a: ArrayView2<f64>,
    b: ArrayView2<f64>,
    metric: SimilarityMetric,
) -> Result<Array2<f64>> {
    check_same_cols(a, b)?;
    let (norms_a, norms_b) = match metric {
        SimilarityMetric::Dot => (None, None),
        SimilarityMetric::Cosine => (Some(row_norms(a)?), Some(row_norms(b)?)),
    };
    let a = a.as_standard_layout();
    let b = b.as_standard_layout();
    let mut out = Array2::zeros((a.nrows(), b.nrows()));
    parallel::for_each_row(&mut out, |i, mut row| {
        let ai = a.row(i);
        let ai = ai.as_slice().expect("standard layout");
        for (j, slot) in row.iter_mut().enumerate() {
            let bj = b.row(j);
            let mut s = dot(ai, bj.as_slice().expect("standard layout"));
            if let (Some(na), Some(nb)) = (&norms_a, &norms_b) {
                s /= na[i] * nb[j];
            }
            *slot = s;
        }
    });
    Ok(out)
}

/// (n x m) matrix of squared Euclidean distances between rows of `a`
/// and `b`. Computed as an explicit difference sum, so entries are never
/// negative and the diagonal of `pairwise_sq_euclidean(A, A)` is exactly 0.
pub fn pairwise_sq_euclidean(a: ArrayView2<f64>, b: ArrayView2<f64>) -> Result<Array2<f64>> {
    check_same_cols(a, b)?;
    let a = a.as_standard_layout();
    let b = b.as_standard_layout();
    let mut out = Array2::zeros((a.nrows(), b.nrows()));
    parallel::for_each_row(&mut out, |i, mut row| {
        let ai = a.row(i);
        let ai = ai.as_slice().expect("standard layout");
        for (j, slot) in row.iter_mut().enumerate() {
            let bj = b.row(j);
            let bj = bj.as_slice().expect("standard layout");
            let mut acc = 0.0;
            for k in 0..ai.len() {
                let d = ai[k] - bj[k];
                acc += d * d;
            }
            *slot = acc;
        }
    });
    Ok(out)
}

/// Eigenpairs of a symmetric (possibly generalized) problem, ascending.
#[derive(Debug, Clone)]
pub struct SymmetricEigenResult {
    /// Ascending eigenvalues.
    pub eigenvalues: Vec<f64>,
    /// Column j pairs with eigenvalue j. D-orthonormal when a mass
    /// diagonal was supplied, Euclidean-orthonormal otherwise.
    pub eigenvectors: Array2<f64>,
}

pub(crate) fn to_dmatrix(a: ArrayView2<f64>) -> DMatrix<f64> {
    DMatrix::from_row_iterator(a.nrows(), a.ncols(), a.iter().copied())
}

/// All eigenpairs of a symmetric matrix, ascending. Backed by a dense
/// symmetric eigensolver; callers slice what they need.
fn dense_symmetric_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let SymmetricEigen { eigenvalues, eigenvectors } = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eigenvalues[i].total_cmp(&eigenvalues[j]));
    let vals: Vec<f64> = order.iter().map(|&i| eigenvalues[i]).collect();
    let mut vecs = DMatrix::zeros(eigenvectors.nrows(), eigenvectors.ncols());
    for (dst, &src) in order.iter().enumerate() {
        vecs.set_column(dst, &eigenvectors.column(src));
    }
    (vals, vecs)
}

fn check_symmetric(l: ArrayView2<f64>, tol: f64) -> Result<()> {
    if l.nrows() != l.ncols() {
        return Err(GapError::Validation(format!(
            "matrix is {}x{}, expected square",
            l.nrows(),
            l.ncols()
        )));
    }
    let mut max_asym = 0.0f64;
    for i in 0..l.nrows() {
        for j in (i + 1)..l.ncols() {
            max_asym = max_asym.max((l[[i, j]] - l[[j, i]]).abs());
        }
    }
    if max_asym > tol {
        return Err(GapError::NotSymmetric { max_asym });
    }
    Ok(())
}

/// The k smallest eigenpairs with eigenvalue >= `null_tol` of
/// `L u = lambda D u`, where `d_diag` is the diagonal of a positive mass
/// matrix (absent means D = I).
///
/// Solved on the symmetric similarity D^{-1/2} L D^{-1/2}; eigenvectors
/// map back as u = D^{-1/2} v, which makes the returned columns
/// D-orthonormal.
pub fn smallest_eigenpairs(
    l: ArrayView2<f64>,
    d_diag: Option<&Array1<f64>>,
    k: usize,
    null_tol: f64,
) -> Result<SymmetricEigenResult> {
    check_symmetric(l, 1e-10)?;
    let m = l.nrows();
    if k == 0 {
        return Err(GapError::InvalidParameter {
            name: "k",
            reason: "must be at least 1".into(),
        });
    }
    let d_inv_sqrt: Option<Vec<f64>> = match d_diag {
        Some(d) => {
            if d.len() != m {
                return Err(GapError::DimensionMismatch { left: d.len(), right: m });
            }
            let mut out = Vec::with_capacity(m);
            for (index, &v) in d.iter().enumerate() {
                if v <= 0.0 {
                    return Err(GapError::NonPositiveMass { index, value: v });
                }
                out.push(1.0 / v.sqrt());
            }
            Some(out)
        }
        None => None,
    };

    let mut b = to_dmatrix(l);
    if let Some(s) = &d_inv_sqrt {
        for i in 0..m {
            for j in 0..m {
                b[(i, j)] *= s[i] * s[j];
            }
        }
    }
    // Rounding in the scaling can leave a tiny asymmetry; fold it out so
    // the symmetric solver sees an exactly symmetric input.
    for i in 0..m {
        for j in (i + 1)..m {
            let avg = 0.5 * (b[(i, j)] + b[(j, i)]);
            b[(i, j)] = avg;
            b[(j, i)] = avg;
        }
    }

    let (vals, vecs) = dense_symmetric_eigen(&b);
    let first = vals.partition_point(|&v| v < null_tol);
    let available = m - first;
    if k > available {
        return Err(GapError::InsufficientSpectrum { requested: k, available });
    }

    let mut eigenvectors = Array2::zeros((m, k));
    for j in 0..k {
        let col = vecs.column(first + j);
        for i in 0..m {
            let scale = d_inv_sqrt.as_ref().map_or(1.0, |s| s[i]);
            eigenvectors[[i, j]] = col[i] * scale;
        }
    }
    Ok(SymmetricEigenResult { eigenvalues: vals[first..first + k].to_vec(), eigenvectors })
}

/// Mean vector and unbiased sample covariance of a point cloud.
#[derive(Debug, Clone)]
pub struct GaussianSummary {
    pub mean: Array1<f64>,
    pub covariance: Array2<f64>,
}

/// Column means and unbiased (n-1 divisor) covariance of the rows.
pub fn gaussian_summary(m: &EmbeddingMatrix) -> Result<GaussianSummary> {
    let x = m.data();
    let n = x.nrows();
    if n < 2 {
        return Err(GapError::TooFewSamples { min: 2, got: n });
    }
    let d = x.ncols();
    let mean = x.mean_axis(ndarray::Axis(0)).expect("n >= 2");
    let centered = x - &mean.view().insert_axis(ndarray::Axis(0));
    let mut cov = centered.t().dot(&centered) / (n as f64 - 1.0);
    // Exact symmetry: gemm rounding may differ across the diagonal.
    for i in 0..d {
        for j in (i + 1)..d {
            let avg = 0.5 * (cov[[i, j]] + cov[[j, i]]);
            cov[[i, j]] = avg;
            cov[[j, i]] = avg;
        }
    }
    Ok(GaussianSummary { mean, covariance: cov })
}

/// Symmetric PSD square root: returns R with R.R = S.
/// Eigenvalues in [-1e-6, 0) are treated as rounding noise and clamped.
pub fn psd_sqrt(s: ArrayView2<f64>) -> Result<Array2<f64>> {
    check_symmetric(s, 1e-8)?;
    let d = s.nrows();
    let (vals, vecs) = dense_symmetric_eigen(&to_dmatrix(s));
    if let Some(&min) = vals.first() {
        if min < -1e-6 {
            return Err(GapError::NotPsd { value: min });
        }
    }
    let mut out = Array2::zeros((d, d));
    for (j, &lambda) in vals.iter().enumerate() {
        let root = lambda.max(0.0).sqrt();
        if root == 0.0 {
            continue;
        }
        let v = vecs.column(j);
        for r in 0..d {
            let vr = root * v[r];
            for c in r..d {
                out[[r, c]] += vr * v[c];
            }
        }
    }
    for r in 0..d {
        for c in (r + 1)..d {
            out[[c, r]] = out[[r, c]];
        }
    }
    Ok(out)
}

/// A fitted PCA basis.
#[derive(Debug, Clone)]
pub struct Pca {
    /// Column means of the fitted data.
    pub mean: Array1<f64>,
    /// (d x k) orthonormal components, descending explained variance.
    /// Sign convention: each component's largest-magnitude loading is
    /// positive.
    pub components: Array2<f64>,
    /// Covariance eigenvalue per component, descending.
    pub explained_variance: Vec<f64>,
}

impl Pca {
    pub fn fit(z: ArrayView2<f64>, k: usize) -> Result<Self> {
        let (m, d) = (z.nrows(), z.ncols());
        if k == 0 || k > m.min(d) {
            return Err(GapError::InvalidParameter {
                name: "k",
                reason: format!("must be in 1..={} for a {m}x{d} input", m.min(d)),
            });
        }
        let mean = z.mean_axis(ndarray::Axis(0)).ok_or(GapError::EmptyMatrix)?;
        let centered = &z - &mean.view().insert_axis(ndarray::Axis(0));
        let denom = if m > 1 { m as f64 - 1.0 } else { 1.0 };
        let cov = centered.t().dot(&centered) / denom;
        let (vals, vecs) = dense_symmetric_eigen(&to_dmatrix(cov.view()));

        let mut components = Array2::zeros((d, k));
        let mut explained = Vec::with_capacity(k);
        for j in 0..k {
            let src = d - 1 - j; // descending eigenvalue order
            explained.push(vals[src].max(0.0));
            let col = vecs.column(src);
            let mut peak = 0usize;
            for i in 1..d {
                if col[i].abs() > col[peak].abs() {
                    peak = i;
                }
            }
            let sign = if col[peak] < 0.0 { -1.0 } else { 1.0 };
            for i in 0..d {
                components[[i, j]] = sign * col[i];
            }
        }
        Ok(Self { mean, components, explained_variance: explained })
    }

    /// Project rows of `z` onto the fitted basis.
    pub fn transform(&self, z: ArrayView2<f64>) -> Result<Array2<f64>> {
        if z.ncols() != self.mean.len() {
            return Err(GapError::DimensionMismatch {
                left: z.ncols(),
                right: self.mean.len(),
            });
        }
        let centered = &z - &self.mean.view().insert_axis(ndarray::Axis(0));
        Ok(centered.dot(&self.components))
    }
}

/// Center, fit and project in one step: the k leading principal
/// coordinates of the rows of `z`.
pub fn pca_fit_transform(z: ArrayView2<f64>, k: usize) -> Result<Array2<f64>> {
    let pca = Pca::fit(z, k)?;
    pca.transform(z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::Modality;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn dot_similarity_identity() {
        let i2 = Array2::<f64>::eye(2);
        let s = similarity_matrix(i2.view(), i2.view(), SimilarityMetric::Dot).unwrap();
        assert_eq!(s, i2);
    }

    #[test]
    fn cosine_orthogonal_rows() {
        let a = array![[1.0, 0.0]];
        let b = array![[0.0, 1.0]];
        let s = similarity_matrix(a.view(), b.view(), SimilarityMetric::Cosine).unwrap();
        assert_eq!(s[[0, 0]], 0.0);
    }

    #[test]
    fn similarity_matches_triple_loop() {
        let a = array![
            [0.3, -1.2, 2.0],
            [4.0, 0.5, -0.7],
            [1.1, 1.2, 1.3],
            [-2.0, 0.0, 0.25],
            [0.9, -0.9, 0.9]
        ];
        let b = array![[1.0, 2.0, 3.0], [-1.0, 0.5, 0.0], [0.0, 0.0, 1.0], [2.0, 2.0, 2.0], [
            0.1, 0.2, 0.3
        ]];
        let s = similarity_matrix(a.view(), b.view(), SimilarityMetric::Dot).unwrap();
        for i in 0..a.nrows() {
            for j in 0..b.nrows() {
                let mut want = 0.0;
                for k in 0..3 {
                    want += a[[i, k]] * b[[j, k]];
                }
                assert!((s[[i, j]] - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn dot_similarity_transpose_exact() {
        let a = array![[0.3, -1.2, 2.0], [4.0, 0.5, -0.7]];
        let b = array![[1.0, 2.0, 3.0], [-1.0, 0.5, 0.0], [0.7, 0.7, 0.7]];
        let ab = similarity_matrix(a.view(), b.view(), SimilarityMetric::Dot).unwrap();
        let ba = similarity_matrix(b.view(), a.view(), SimilarityMetric::Dot).unwrap();
        assert_eq!(ab, ba.t().to_owned());
    }

    #[test]
    fn cosine_rejects_zero_row() {
        let a = array![[0.0, 0.0]];
        let b = array![[1.0, 0.0]];
        let err = similarity_matrix(a.view(), b.view(), SimilarityMetric::Cosine).unwrap_err();
        assert_eq!(err.to_string(), "zero-norm row 0");
    }

    #[test]
    fn sq_euclidean_three_four_five() {
        let a = array![[0.0, 0.0]];
        let b = array![[3.0, 4.0]];
        let d = pairwise_sq_euclidean(a.view(), b.view()).unwrap();
        assert_eq!(d[[0, 0]], 25.0);
    }

    #[test]
    fn sq_euclidean_self_diagonal_exact_zero() {
        let a = array![[0.1, 0.7, -3.0], [2.0, 2.0, 2.0], [1e-8, 5.0, -5.0]];
        let d = pairwise_sq_euclidean(a.view(), a.view()).unwrap();
        for i in 0..3 {
            assert_eq!(d[[i, i]], 0.0);
            for j in 0..3 {
                assert!(d[[i, j]] >= 0.0);
                assert_eq!(d[[i, j]], d[[j, i]]);
            }
        }
    }

    #[test]
    fn sq_euclidean_matches_loop_oracle() {
        let a = array![
            [0.3, -1.2, 2.0, 0.4],
            [4.0, 0.5, -0.7, 1.0],
            [1.1, 1.2, 1.3, 1.4],
            [-2.0, 0.0, 0.25, 0.5],
            [0.9, -0.9, 0.9, -0.9],
            [3.0, 1.0, 4.0, 1.0]
        ];
        let b = a.slice(ndarray::s![..4, ..]).to_owned();
        let d = pairwise_sq_euclidean(a.view(), b.view()).unwrap();
        for i in 0..a.nrows() {
            for j in 0..b.nrows() {
                let mut want = 0.0;
                for k in 0..4 {
                    let diff = a[[i, k]] - b[[j, k]];
                    want += diff * diff;
                }
                assert!((d[[i, j]] - want).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn single_edge_laplacian_eigenpair() {
        let l = array![[1.0, -1.0], [-1.0, 1.0]];
        let r = smallest_eigenpairs(l.view(), None, 1, 1e-8).unwrap();
        assert_abs_diff_eq!(r.eigenvalues[0], 2.0, epsilon = 1e-10);
        let v = r.eigenvectors.column(0);
        assert!((v[0] + v[1]).abs() < 1e-10);
        assert!(v[0].abs() > 0.1);
    }

    #[test]
    fn diagonal_matrix_skips_null() {
        let l = Array2::from_diag(&array![0.0, 1.0, 3.0]);
        let r = smallest_eigenpairs(l.view(), None, 2, 1e-8).unwrap();
        assert_abs_diff_eq!(r.eigenvalues[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.eigenvalues[1], 3.0, epsilon = 1e-12);
    }

    #[test]
    fn insufficient_spectrum_is_an_error() {
        let l = Array2::from_diag(&array![0.0, 1.0, 3.0]);
        let err = smallest_eigenpairs(l.view(), None, 3, 1e-8).unwrap_err();
        assert!(matches!(err, GapError::InsufficientSpectrum { requested: 3, available: 2 }));
    }

    #[test]
    fn rejects_asymmetric_input() {
        let l = array![[1.0, 0.5], [0.0, 1.0]];
        assert!(matches!(
            smallest_eigenpairs(l.view(), None, 1, 1e-8).unwrap_err(),
            GapError::NotSymmetric { .. }
        ));
    }

    #[test]
    fn rejects_non_positive_mass() {
        let l = array![[1.0, -1.0], [-1.0, 1.0]];
        let d = array![1.0, 0.0];
        assert!(matches!(
            smallest_eigenpairs(l.view(), Some(&d), 1, 1e-8).unwrap_err(),
            GapError::NonPositiveMass { index: 1, .. }
        ));
    }

    #[test]
    fn generalized_eigenvectors_are_mass_orthonormal() {
        // Path graph on 3 nodes: L from A = 0-1-2 chain, D = degree diag.
        let l = array![[1.0, -1.0, 0.0], [-1.0, 2.0, -1.0], [0.0, -1.0, 1.0]];
        let d = array![1.0, 2.0, 1.0];
        let r = smallest_eigenpairs(l.view(), Some(&d), 2, 1e-8).unwrap();
        for a in 0..2 {
            for b in 0..2 {
                let mut ip = 0.0;
                for i in 0..3 {
                    ip += r.eigenvectors[[i, a]] * d[i] * r.eigenvectors[[i, b]];
                }
                let want = if a == b { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(ip, want, epsilon = 1e-10);
            }
        }
        // Generalized residual per returned pair.
        for j in 0..2 {
            let lambda = r.eigenvalues[j];
            let mut res = 0.0f64;
            let mut unorm = 0.0f64;
            for i in 0..3 {
                let mut lu = 0.0;
                for t in 0..3 {
                    lu += l[[i, t]] * r.eigenvectors[[t, j]];
                }
                let diff = lu - lambda * d[i] * r.eigenvectors[[i, j]];
                res += diff * diff;
                unorm += d[i] * r.eigenvectors[[i, j]] * r.eigenvectors[[i, j]];
            }
            assert!(res.sqrt() <= 1e-8 * unorm.sqrt());
        }
    }

    #[test]
    fn gaussian_summary_two_points() {
        let m = EmbeddingMatrix::with_default_ids(array![[0.0, 0.0], [2.0, 0.0]], Modality::Image)
            .unwrap();
        let g = gaussian_summary(&m).unwrap();
        assert_eq!(g.mean, array![1.0, 0.0]);
        assert_eq!(g.covariance, array![[2.0, 0.0], [0.0, 0.0]]);
    }

    #[test]
    fn gaussian_summary_constant_rows() {
        let m = EmbeddingMatrix::with_default_ids(
            array![[5.0, -1.0], [5.0, -1.0], [5.0, -1.0]],
            Modality::Text,
        )
        .unwrap();
        let g = gaussian_summary(&m).unwrap();
        assert_eq!(g.covariance, Array2::<f64>::zeros((2, 2)));
    }

    #[test]
    fn gaussian_summary_needs_two_rows() {
        let m = EmbeddingMatrix::with_default_ids(array![[1.0]], Modality::Image).unwrap();
        assert!(matches!(
            gaussian_summary(&m).unwrap_err(),
            GapError::TooFewSamples { min: 2, got: 1 }
        ));
    }

    #[test]
    fn gaussian_summary_matches_two_pass_oracle() {
        let mut x = Array2::zeros((50, 3));
        let mut state = 42u64;
        for v in x.iter_mut() {
            // Small xorshift; the values just need to be uneven.
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            *v = (state % 1000) as f64 / 250.0 - 2.0;
        }
        let m = EmbeddingMatrix::with_default_ids(x.clone(), Modality::Image).unwrap();
        let g = gaussian_summary(&m).unwrap();
        for c in 0..3 {
            let mean = x.column(c).sum() / 50.0;
            assert!((g.mean[c] - mean).abs() < 1e-10);
        }
        for a in 0..3 {
            for b in 0..3 {
                let (ma, mb) = (g.mean[a], g.mean[b]);
                let mut acc = 0.0;
                for i in 0..50 {
                    acc += (x[[i, a]] - ma) * (x[[i, b]] - mb);
                }
                assert!((g.covariance[[a, b]] - acc / 49.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn psd_sqrt_identity_and_diagonal() {
        let r = psd_sqrt(Array2::eye(3).view()).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_abs_diff_eq!(r[[i, j]], if i == j { 1.0 } else { 0.0 }, epsilon = 1e-10);
            }
        }
        let s = Array2::from_diag(&array![4.0, 9.0]);
        let r = psd_sqrt(s.view()).unwrap();
        assert_abs_diff_eq!(r[[0, 0]], 2.0, epsilon = 1e-10);
        assert_abs_diff_eq!(r[[1, 1]], 3.0, epsilon = 1e-10);
    }

    #[test]
    fn psd_sqrt_reconstructs() {
        let a = array![[1.0, 2.0, 0.5], [-1.0, 0.3, 2.0], [0.0, 1.0, 1.0]];
        let s = a.dot(&a.t());
        let r = psd_sqrt(s.view()).unwrap();
        let rr = r.dot(&r);
        let mut num = 0.0f64;
        let mut den = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                num += (rr[[i, j]] - s[[i, j]]).powi(2);
                den += s[[i, j]].powi(2);
                assert_eq!(r[[i, j]], r[[j, i]]);
            }
        }
        assert!(num.sqrt() <= 1e-8 * den.sqrt());
    }

    #[test]
    fn psd_sqrt_rejects_indefinite() {
        let s = Array2::from_diag(&array![1.0, -0.5]);
        let err = psd_sqrt(s.view()).unwrap_err();
        assert!(err.to_string().starts_with("not PSD"));
    }

    #[test]
    fn pca_rank_one_line() {
        // Points on the line through the origin with direction (3,4)/5.
        let t = [0.0, 1.0, 2.0, -1.0];
        let mut z = Array2::zeros((4, 2));
        for (i, ti) in t.iter().enumerate() {
            z[[i, 0]] = 3.0 / 5.0 * ti;
            z[[i, 1]] = 4.0 / 5.0 * ti;
        }
        let scores = pca_fit_transform(z.view(), 1).unwrap();
        let mean_t = 0.5;
        for (i, ti) in t.iter().enumerate() {
            assert_abs_diff_eq!(scores[[i, 0]].abs(), (ti - mean_t).abs(), epsilon = 1e-10);
        }
        // All rows share one global sign.
        let signs: Vec<f64> = t
            .iter()
            .enumerate()
            .filter(|(_, ti)| (**ti - mean_t).abs() > 0.1)
            .map(|(i, ti)| scores[[i, 0]] / (ti - mean_t))
            .collect();
        for w in signs.windows(2) {
            assert_abs_diff_eq!(w[0], w[1], epsilon = 1e-10);
        }
    }

    #[test]
    fn full_pca_preserves_distances() {
        let z = array![
            [1.0, 0.0, 2.0],
            [0.0, 1.0, -1.0],
            [2.0, 2.0, 0.0],
            [-1.0, 0.5, 0.5],
            [0.3, -0.7, 1.2]
        ];
        let s = pca_fit_transform(z.view(), 3).unwrap();
        let d0 = pairwise_sq_euclidean(z.view(), z.view()).unwrap();
        let d1 = pairwise_sq_euclidean(s.view(), s.view()).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                assert_abs_diff_eq!(d0[[i, j]], d1[[i, j]], epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn pca_variances_non_increasing_components_orthonormal() {
        let z = array![
            [1.0, 0.0, 2.0, 1.0],
            [0.0, 1.0, -1.0, 0.5],
            [2.0, 2.0, 0.0, -0.5],
            [-1.0, 0.5, 0.5, 2.0],
            [0.3, -0.7, 1.2, 0.0],
            [1.5, 0.5, 0.5, 0.5]
        ];
        let pca = Pca::fit(z.view(), 3).unwrap();
        for w in pca.explained_variance.windows(2) {
            assert!(w[0] >= w[1] - 1e-12);
        }
        for a in 0..3 {
            for b in 0..3 {
                let ip = pca.components.column(a).dot(&pca.components.column(b));
                let want = if a == b { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(ip, want, epsilon = 1e-10);
            }
        }
        // Sign rule: largest-magnitude loading positive.
        for j in 0..3 {
            let col = pca.components.column(j);
            let peak = (0..4).max_by(|&a, &b| col[a].abs().total_cmp(&col[b].abs())).unwrap();
            assert!(col[peak] > 0.0);
        }
    }

    #[test]
    fn pca_rejects_out_of_range_k() {
        let z = Array2::<f64>::zeros((3, 2));
        assert!(pca_fit_transform(z.view(), 0).is_err());
        assert!(pca_fit_transform(z.view(), 3).is_err());
    }
}
