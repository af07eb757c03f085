//! Exact discrete optimal transport via the transportation simplex.
//!
//! The basis is a spanning tree over the bipartite (source, target) node
//! set. Each pivot prices every non-basic cell against the dual
//! potentials (Dantzig rule, ties to the lowest row-major cell), walks
//! the unique tree cycle the entering cell closes, and moves mass around
//! it. Everything is deterministic: fixed scan order, fixed tie breaks.
//! Returned plans are vertices of the transportation polytope, optimal
//! to within 1e-9 of the LP optimum.

use ndarray::{Array1, Array2, ArrayView2};

use crate::error::{GapError, Result};

#[derive(Debug, Clone, Copy)]
struct Cell {
    i: usize,
    j: usize,
    mass: f64,
}

/// Minimize <gamma, C> over gamma >= 0 with row sums `mu` and column
/// sums `nu`. Requires balanced non-negative marginals.
pub fn solve_emd(
    mu: &Array1<f64>,
    nu: &Array1<f64>,
    c: ArrayView2<f64>,
) -> Result<Array2<f64>> {
    let n = mu.len();
    let m = nu.len();
    if n == 0 || m == 0 {
        return Err(GapError::EmptyMatrix);
    }
    if c.nrows() != n || c.ncols() != m {
        return Err(GapError::Validation(format!(
            "cost matrix is {}x{}, marginals imply {n}x{m}",
            c.nrows(),
            c.ncols()
        )));
    }
    for (index, &v) in mu.iter().enumerate() {
        if v < 0.0 || !v.is_finite() {
            return Err(GapError::NegativeMass { index });
        }
    }
    for (index, &v) in nu.iter().enumerate() {
        if v < 0.0 || !v.is_finite() {
            return Err(GapError::NegativeMass { index });
        }
    }
    if c.iter().any(|v| !v.is_finite()) {
        return Err(GapError::Validation("cost matrix has non-finite entries".into()));
    }
    let source_mass: f64 = mu.sum();
    let target_mass: f64 = nu.sum();
    if (source_mass - target_mass).abs() > 1e-10 * source_mass.max(target_mass).max(1.0) {
        return Err(GapError::MarginalMismatch { source_mass, target_mass });
    }

    // Northwest-corner start: exactly n+m-1 basic cells, zero-mass
    // degenerates included.
    let mut cells: Vec<Cell> = Vec::with_capacity(n + m - 1);
    {
        let mut row_rem = mu.to_vec();
        let mut col_rem = nu.to_vec();
        let (mut i, mut j) = (0usize, 0usize);
        loop {
            let a = row_rem[i].min(col_rem[j]);
            cells.push(Cell { i, j, mass: a });
            row_rem[i] -= a;
            col_rem[j] -= a;
            if i == n - 1 && j == m - 1 {
                break;
            }
            if row_rem[i] <= 0.0 && i < n - 1 {
                i += 1;
            } else {
                j += 1;
            }
        }
    }

    let mut in_basis = vec![false; n * m];
    for cell in &cells {
        in_basis[cell.i * m + cell.j] = true;
    }

    let cost_scale = c.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
    let opt_tol = 1e-12 * cost_scale;
    // Worst-case pivot budget; hitting it means cycling, which the
    // Bland fallback below rules out for all practical purposes.
    let max_pivots = 200 * (n + m) + 20_000;
    let bland_after = 6 * (n + m) + 200;
    let mut degenerate_streak = 0usize;

    let mut u = vec![0.0f64; n];
    let mut v = vec![0.0f64; m];
    let mut row_adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut col_adj: Vec<Vec<usize>> = vec![Vec::new(); m];

    for pivot in 0..=max_pivots {
        if pivot == max_pivots {
            return Err(GapError::Validation(
                "transportation simplex exceeded its pivot budget".into(),
            ));
        }

        for a in row_adj.iter_mut() {
            a.clear();
        }
        for a in col_adj.iter_mut() {
            a.clear();
        }
        for (idx, cell) in cells.iter().enumerate() {
            row_adj[cell.i].push(idx);
            col_adj[cell.j].push(idx);
        }

        // Dual potentials: u_i + v_j = c_ij on basic cells, u_0 = 0,
        // propagated over the spanning tree.
        let mut u_set = vec![false; n];
        let mut v_set = vec![false; m];
        u[0] = 0.0;
        u_set[0] = true;
        let mut queue: Vec<usize> = vec![0]; // node ids: rows 0..n, cols n..n+m
        while let Some(node) = queue.pop() {
            if node < n {
                for &idx in &row_adj[node] {
                    let cell = cells[idx];
                    if !v_set[cell.j] {
                        v[cell.j] = c[[cell.i, cell.j]] - u[cell.i];
                        v_set[cell.j] = true;
                        queue.push(n + cell.j);
                    }
                }
            } else {
                let jcol = node - n;
                for &idx in &col_adj[jcol] {
                    let cell = cells[idx];
                    if !u_set[cell.i] {
                        u[cell.i] = c[[cell.i, cell.j]] - v[cell.j];
                        u_set[cell.i] = true;
                        queue.push(cell.i);
                    }
                }
            }
        }
        debug_assert!(u_set.iter().all(|&b| b) && v_set.iter().all(|&b| b));

        // Entering cell: most negative reduced cost (Dantzig), or the
        // first negative one in scan order once Bland mode kicks in.
        let bland = degenerate_streak >= bland_after;
        let mut entering: Option<(usize, usize, f64)> = None;
        'scan: for i in 0..n {
            for j in 0..m {
                if in_basis[i * m + j] {
                    continue;
                }
                let rc = c[[i, j]] - u[i] - v[j];
                if rc < -opt_tol {
                    match &entering {
                        Some((_, _, best)) if !bland && rc >= *best => {}
                        _ => {
                            entering = Some((i, j, rc));
                            if bland {
                                break 'scan;
                            }
                        }
                    }
                }
            }
        }
        let Some((ei, ej, _)) = entering else {
            break; // optimal
        };

        // Unique tree path from row node ei to col node ej.
        let mut prev: Vec<Option<(usize, usize)>> = vec![None; n + m]; // (node, cell idx)
        let mut seen = vec![false; n + m];
        seen[ei] = true;
        let mut queue = std::collections::VecDeque::from([ei]);
        while let Some(node) = queue.pop_front() {
            if node == n + ej {
                break;
            }
            let neighbors: &[usize] =
                if node < n { &row_adj[node] } else { &col_adj[node - n] };
            for &idx in neighbors {
                let cell = cells[idx];
                let other = if node < n { n + cell.j } else { cell.i };
                if !seen[other] {
                    seen[other] = true;
                    prev[other] = Some((node, idx));
                    queue.push_back(other);
                }
            }
        }
        let mut path: Vec<usize> = Vec::new(); // cell indices ei -> ej
        let mut node = n + ej;
        while let Some((parent, idx)) = prev[node] {
            path.push(idx);
            node = parent;
        }
        path.reverse();
        debug_assert!(path.len() % 2 == 1, "bipartite row->col path has odd length");

        // Around the cycle the entering cell gains mass and path cells
        // alternate starting with a loss at the cell touching row ei.
        let mut theta = f64::INFINITY;
        let mut leaving: Option<usize> = None;
        for (pos, &idx) in path.iter().enumerate() {
            if pos % 2 == 0 && cells[idx].mass < theta {
                theta = cells[idx].mass;
                leaving = Some(idx);
            }
        }
        let leaving = leaving.expect("cycle has a decreasing cell");

        if theta <= 1e-15 {
            degenerate_streak += 1;
        } else {
            degenerate_streak = 0;
        }

        for (pos, &idx) in path.iter().enumerate() {
            if pos % 2 == 0 {
                cells[idx].mass = (cells[idx].mass - theta).max(0.0);
            } else {
                cells[idx].mass += theta;
            }
        }
        let out = cells[leaving];
        in_basis[out.i * m + out.j] = false;
        in_basis[ei * m + ej] = true;
        cells[leaving] = Cell { i: ei, j: ej, mass: theta };
    }

    let mut gamma = Array2::zeros((n, m));
    for cell in &cells {
        gamma[[cell.i, cell.j]] = cell.mass;
    }
    Ok(gamma)
}

/// Transport cost <gamma, C>.
pub fn transport_cost(gamma: &Array2<f64>, c: ArrayView2<f64>) -> f64 {
    gamma.iter().zip(c.iter()).map(|(g, cv)| g * cv).sum()
}
