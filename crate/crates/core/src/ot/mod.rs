//! Laplacian-regularized optimal transport between paired embedding sets.
//!
//! The objective is
//!
//! ```text
//!   J(gamma) = <gamma, C>_F
//!            + (eta / n^2) * ( lambda_s * sum_ij S^s_ij ||d_i - d_j||^2
//!                            + lambda_t * sum_ij S^t_ij ||d'_i - d'_j||^2 )
//! ```
//!
//! minimized over the transportation polytope {gamma >= 0, gamma 1 = mu,
//! gamma^T 1 = nu} with uniform marginals and C the squared Euclidean
//! cost. The d_i are rows of the mapped source: the barycentric image
//! n*gamma*Y minus X under displacement regularization, or the image
//! itself under position regularization; d'_j symmetrically for the
//! target side via n*gamma^T*X. S^s and S^t are symmetrized kNN cosine
//! graphs over X and Y.
//!
//! The solver is a generalized conditional gradient: each iteration
//! linearizes the quadratic term, solves the resulting exact EMD
//! subproblem, and takes the exact minimizing step on the segment
//! (the restricted objective is a 1-D convex quadratic). With eta = 0
//! the first subproblem is the plain EMD and the loop stops after one
//! step.

pub mod emd;

use std::path::Path;

use ndarray::{Array1, Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::embedding::PairedDataset;
use crate::error::{GapError, Result};
use crate::io::{container, npy};
use crate::numerics::{similarity_matrix, pairwise_sq_euclidean, SimilarityMetric};
use crate::parallel;

pub use emd::{solve_emd, transport_cost};

/// Which quantity the graph term smooths across neighbors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegMode {
    /// Penalize differences of displacements T(x_i) - x_i.
    #[default]
    Displacement,
    /// Penalize differences of mapped positions T(x_i).
    Position,
}

impl std::fmt::Display for RegMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RegMode::Displacement => write!(f, "displacement"),
            RegMode::Position => write!(f, "position"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OtParams {
    pub eta: f64,
    pub lambda_s: f64,
    pub lambda_t: f64,
    /// Neighbor count for the similarity graphs; capped at n-1 during a
    /// solve so small instances work with the default.
    pub sim_k: usize,
    pub reg_mode: RegMode,
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for OtParams {
    fn default() -> Self {
        OtParams {
            eta: 1.0,
            lambda_s: 1.0,
            lambda_t: 1.0,
            sim_k: 10,
            reg_mode: RegMode::Displacement,
            max_iters: 50,
            tol: 1e-7,
        }
    }
}

impl OtParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("eta", self.eta),
            ("lambda_s", self.lambda_s),
            ("lambda_t", self.lambda_t),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(GapError::InvalidParameter {
                    name,
                    reason: format!("must be finite and >= 0, got {v}"),
                });
            }
        }
        if self.sim_k < 1 {
            return Err(GapError::InvalidParameter {
                name: "sim_k",
                reason: "must be >= 1".into(),
            });
        }
        if !(self.tol > 0.0) {
            return Err(GapError::InvalidParameter {
                name: "tol",
                reason: format!("must be > 0, got {}", self.tol),
            });
        }
        if self.max_iters == 0 {
            return Err(GapError::InvalidParameter {
                name: "max_iters",
                reason: "must be >= 1".into(),
            });
        }
        Ok(())
    }
}

/// Fitted coupling plus everything needed to map new points.
#[derive(Debug, Clone)]
pub struct TransportPlan {
    pub gamma: Array2<f64>,
    pub mu: Array1<f64>,
    pub nu: Array1<f64>,
    pub x_train: Array2<f64>,
    pub y_train: Array2<f64>,
    pub objective_trace: Vec<f64>,
    pub params: OtParams,
    pub converged: bool,
}

#[derive(Serialize, Deserialize)]
struct PlanMeta {
    params: OtParams,
    objective_trace: Vec<f64>,
    converged: bool,
    solver: String,
    version: String,
}

impl TransportPlan {
    pub fn n_train(&self) -> usize {
        self.x_train.nrows()
    }

    pub fn final_objective(&self) -> f64 {
        *self.objective_trace.last().expect("trace always holds the start value")
    }

    /// Container layout: NPY members for the arrays plus a JSON metadata
    /// record. Marginals are stored as single-row matrices.
    pub fn save(&self, path: &Path) -> Result<()> {
        let meta = PlanMeta {
            params: self.params.clone(),
            objective_trace: self.objective_trace.clone(),
            converged: self.converged,
            solver: "gcg-transportation-simplex".into(),
            version: env!("CARGO_PKG_VERSION").into(),
        };
        let meta_bytes = serde_json::to_vec_pretty(&meta)
            .map_err(|e| GapError::Validation(format!("plan metadata serialization: {e}")))?;
        let row = |v: &Array1<f64>| {
            Array2::from_shape_vec((1, v.len()), v.to_vec()).expect("row reshape")
        };
        container::write(
            path,
            &[
                ("gamma.npy", npy::to_bytes(&self.gamma)),
                ("mu.npy", npy::to_bytes(&row(&self.mu))),
                ("nu.npy", npy::to_bytes(&row(&self.nu))),
                ("x_train.npy", npy::to_bytes(&self.x_train)),
                ("y_train.npy", npy::to_bytes(&self.y_train)),
                ("meta.json", meta_bytes),
            ],
        )
    }

    pub fn load(path: &Path) -> Result<TransportPlan> {
        let entries = container::read(path)?;
        let find = |name: &str| -> Result<&Vec<u8>> {
            entries
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, b)| b)
                .ok_or_else(|| GapError::NpyFormat {
                    path: path.to_path_buf(),
                    reason: format!("container is missing member '{name}'"),
                })
        };
        let arr = |name: &str| -> Result<Array2<f64>> { npy::from_bytes(find(name)?, path) };
        let vector = |name: &str| -> Result<Array1<f64>> {
            let m = arr(name)?;
            if m.nrows() == 1 || m.ncols() == 1 {
                Ok(Array1::from_iter(m.iter().copied()))
            } else {
                Err(GapError::NpyFormat {
                    path: path.to_path_buf(),
                    reason: format!("member '{name}' is not a vector: {}x{}", m.nrows(), m.ncols()),
                })
            }
        };
        let meta: PlanMeta = serde_json::from_slice(find("meta.json")?).map_err(|e| {
            GapError::NpyFormat {
                path: path.to_path_buf(),
                reason: format!("meta.json is not a valid plan record: {e}"),
            }
        })?;
        Ok(TransportPlan {
            gamma: arr("gamma.npy")?,
            mu: vector("mu.npy")?,
            nu: vector("nu.npy")?,
            x_train: arr("x_train.npy")?,
            y_train: arr("y_train.npy")?,
            objective_trace: meta.objective_trace,
            params: meta.params,
            converged: meta.converged,
        })
    }
}

/// Symmetrized (union) kNN graph with cosine weights clamped to >= 0 and
/// a zero diagonal. Neighbor ties break toward the lower index.
pub fn build_knn_similarity(x: ArrayView2<f64>, k: usize) -> Result<Array2<f64>> {
    let n = x.nrows();
    if k < 1 || k >= n {
        return Err(GapError::InvalidParameter {
            name: "sim_k",
            reason: format!("need 1 <= k < n, got k={k} with n={n}"),
        });
    }
    let cos = similarity_matrix(x, x, SimilarityMetric::Cosine)?;
    let neighbor_rows: Vec<Vec<usize>> = parallel::map_indexed(n, |i| {
        let mut order: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        order.sort_by(|&a, &b| {
            cos[[i, b]].total_cmp(&cos[[i, a]]).then(a.cmp(&b))
        });
        order.truncate(k);
        order
    });
    let mut w = Array2::zeros((n, n));
    for (i, neighbors) in neighbor_rows.iter().enumerate() {
        for &j in neighbors {
            let weight = cos[[i, j]].max(0.0);
            w[[i, j]] = weight;
            w[[j, i]] = weight;
        }
    }
    Ok(w)
}

fn laplacian(w: &Array2<f64>) -> Array2<f64> {
    let n = w.nrows();
    let mut l = w.mapv(|v| -v);
    for i in 0..n {
        l[[i, i]] += w.row(i).sum();
    }
    l
}

fn frob(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// One side of the quadratic term: lambda * 2 * Tr(M^T L M) where M is
/// the mapped matrix (P for the source side, Q for the target side).
/// `mapped` and `lap_mapped` advance linearly with the line-search step,
/// so the loop never recomputes them from gamma.
struct RegSide {
    lambda: f64,
    lap: Array2<f64>,
    mapped: Array2<f64>,
    lap_mapped: Array2<f64>,
}

impl RegSide {
    fn new(lambda: f64, lap: Array2<f64>, mapped: Array2<f64>) -> RegSide {
        let lap_mapped = lap.dot(&mapped);
        RegSide { lambda, lap, mapped, lap_mapped }
    }

    fn energy(&self) -> f64 {
        2.0 * self.lambda * frob(&self.mapped, &self.lap_mapped)
    }

    fn advance(&mut self, alpha: f64, d_mapped: &Array2<f64>, lap_d: &Array2<f64>) {
        self.mapped.zip_mut_with(d_mapped, |m, d| *m += alpha * d);
        self.lap_mapped.zip_mut_with(lap_d, |m, d| *m += alpha * d);
    }
}

pub fn solve_laplace_ot(ds: &PairedDataset, params: &OtParams) -> Result<TransportPlan> {
    params.validate()?;
    let n = ds.len();
    if n < 2 {
        return Err(GapError::TooFewSamples { min: 2, got: n });
    }
    let x = ds.images().data();
    let y = ds.texts().data();
    let d = ds.dim();
    let n_f = n as f64;
    let cost = pairwise_sq_euclidean(x.view(), y.view())?;
    let mu = Array1::from_elem(n, 1.0 / n_f);
    let nu = mu.clone();
    let scale = params.eta / (n_f * n_f);

    let offset = |base: &Array2<f64>| match params.reg_mode {
        RegMode::Displacement => base.clone(),
        RegMode::Position => Array2::zeros((n, d)),
    };
    let graph_k = params.sim_k.min(n - 1);
    let mut gamma = Array2::from_elem((n, n), 1.0 / (n_f * n_f));

    // mapped source P = n*gamma*Y - c_s, mapped target Q = n*gamma^T*X - c_t
    let mut source = if params.eta > 0.0 && params.lambda_s > 0.0 {
        let lap = laplacian(&build_knn_similarity(x.view(), graph_k)?);
        let p = gamma.dot(y) * n_f - offset(x);
        Some(RegSide::new(params.lambda_s, lap, p))
    } else {
        None
    };
    let mut target = if params.eta > 0.0 && params.lambda_t > 0.0 {
        let lap = laplacian(&build_knn_similarity(y.view(), graph_k)?);
        let q = gamma.t().dot(x) * n_f - offset(y);
        Some(RegSide::new(params.lambda_t, lap, q))
    } else {
        None
    };

    let energy = |source: &Option<RegSide>, target: &Option<RegSide>| {
        scale
            * (source.as_ref().map_or(0.0, RegSide::energy)
                + target.as_ref().map_or(0.0, RegSide::energy))
    };
    let mut objective = frob(&gamma, &cost) + energy(&source, &target);
    let mut trace = vec![objective];
    let mut converged = false;

    for _ in 0..params.max_iters {
        let mut grad = cost.clone();
        if let Some(s) = &source {
            grad.scaled_add(scale * 4.0 * n_f * s.lambda, &s.lap_mapped.dot(&y.t()));
        }
        if let Some(t) = &target {
            grad.scaled_add(scale * 4.0 * n_f * t.lambda, &x.dot(&t.lap_mapped.t()));
        }
        let vertex = solve_emd(&mu, &nu, grad.view())?;
        let delta = &vertex - &gamma;

        // J(gamma + a*delta) = J(gamma) + a*b + a^2*quad
        let mut b = frob(&delta, &cost);
        let mut quad = 0.0;
        let step_s = source.as_ref().map(|s| {
            let dm = delta.dot(y) * n_f;
            let lap_d = s.lap.dot(&dm);
            b += scale * 4.0 * s.lambda * frob(&dm, &s.lap_mapped);
            quad += scale * 2.0 * s.lambda * frob(&dm, &lap_d);
            (dm, lap_d)
        });
        let step_t = target.as_ref().map(|t| {
            let dm = delta.t().dot(x) * n_f;
            let lap_d = t.lap.dot(&dm);
            b += scale * 4.0 * t.lambda * frob(&dm, &t.lap_mapped);
            quad += scale * 2.0 * t.lambda * frob(&dm, &lap_d);
            (dm, lap_d)
        });

        let alpha = if quad > f64::MIN_POSITIVE {
            (-b / (2.0 * quad)).clamp(0.0, 1.0)
        } else if b < 0.0 {
            1.0
        } else {
            0.0
        };
        if alpha <= 0.0 {
            converged = true;
            break;
        }

        gamma.zip_mut_with(&delta, |g, dv| *g += alpha * dv);
        if let (Some(s), Some((dm, lap_d))) = (&mut source, &step_s) {
            s.advance(alpha, dm, lap_d);
        }
        if let (Some(t), Some((dm, lap_d))) = (&mut target, &step_t) {
            t.advance(alpha, dm, lap_d);
        }

        let next = frob(&gamma, &cost) + energy(&source, &target);
        trace.push(next);
        let decrease = objective - next;
        objective = next;
        if decrease <= params.tol * objective.abs().max(1.0) {
            converged = true;
            break;
        }
    }

    Ok(TransportPlan {
        gamma,
        mu,
        nu,
        x_train: x.clone(),
        y_train: y.clone(),
        objective_trace: trace,
        params: params.clone(),
        converged,
    })
}

/// Barycentric image of the training sources: row i is
/// (1/mu_i) * sum_j gamma_ij * y_j. Zero-weight terms are skipped so a
/// permutation plan reproduces Y rows bit-exactly.
pub fn transport_in_sample(plan: &TransportPlan) -> Result<Array2<f64>> {
    let n = plan.gamma.nrows();
    let d = plan.y_train.ncols();
    for (index, &m) in plan.mu.iter().enumerate() {
        if m <= 0.0 {
            return Err(GapError::NonPositiveMass { index, value: m });
        }
    }
    let mut out = Array2::zeros((n, d));
    let y = &plan.y_train;
    let gamma = &plan.gamma;
    let mu = &plan.mu;
    parallel::for_each_row(&mut out, |i, mut row| {
        for j in 0..gamma.ncols() {
            let w = gamma[[i, j]] / mu[i];
            if w != 0.0 {
                for (c, out_c) in row.iter_mut().enumerate() {
                    *out_c += w * y[[j, c]];
                }
            }
        }
    });
    Ok(out)
}

/// Maps new source points by adding the mean displacement of the `nn`
/// nearest training sources (squared Euclidean, ties to the lower
/// index). `nn` is capped at the training-set size.
pub fn transport_out_of_sample(
    plan: &TransportPlan,
    x_new: ArrayView2<f64>,
    nn: usize,
) -> Result<Array2<f64>> {
    let n = plan.x_train.nrows();
    let d = plan.x_train.ncols();
    if n == 0 {
        return Err(GapError::EmptyMatrix);
    }
    if nn < 1 {
        return Err(GapError::InvalidParameter {
            name: "nn",
            reason: "must be >= 1".into(),
        });
    }
    if x_new.ncols() != d {
        return Err(GapError::DimensionMismatch { left: x_new.ncols(), right: d });
    }
    let nn = nn.min(n);
    let mapped = transport_in_sample(plan)?;
    let displacement = &mapped - &plan.x_train;
    let x_train = &plan.x_train;

    let rows: Vec<Vec<f64>> = parallel::map_indexed(x_new.nrows(), |r| {
        let point = x_new.row(r);
        let mut by_dist: Vec<(f64, usize)> = (0..n)
            .map(|i| {
                let dist = x_train
                    .row(i)
                    .iter()
                    .zip(point.iter())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>();
                (dist, i)
            })
            .collect();
        by_dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut row = vec![0.0f64; d];
        for &(_, i) in by_dist.iter().take(nn) {
            for (c, row_c) in row.iter_mut().enumerate() {
                *row_c += displacement[[i, c]];
            }
        }
        let inv = 1.0 / nn as f64;
        for (c, row_c) in row.iter_mut().enumerate() {
            *row_c = point[c] + *row_c * inv;
        }
        row
    });
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    Ok(Array2::from_shape_vec((x_new.nrows(), d), flat).expect("row-major reshape"))
}
