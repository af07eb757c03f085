//! Execution helpers: data-parallel row loops with a sequential fallback.
//!
//! With the `parallel` feature (default) the helpers run on a rayon pool
//! whose size is capped by the `GAPKIT_THREADS` environment variable
//! (unset or `0` means rayon's default). Without the feature everything
//! runs sequentially on the calling thread. Either way the output is
//! identical: each unit of work writes only to its own row or slot, so
//! no reduction order is schedule-dependent.

use ndarray::{Array2, ArrayViewMut1, Axis};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[cfg(feature = "parallel")]
fn thread_pool() -> &'static rayon::ThreadPool {
    use std::sync::OnceLock;
    static POOL: OnceLock<rayon::ThreadPool> = OnceLock::new();
    POOL.get_or_init(|| {
        let threads = std::env::var("GAPKIT_THREADS")
            .ok()
            .and_then(|v| v.parse::<usize>().ok())
            .unwrap_or(0);
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .expect("failed to build rayon thread pool")
    })
}

/// Apply `f` to every row of `out`, indexed from 0.
pub(crate) fn for_each_row<F>(out: &mut Array2<f64>, f: F)
where
    F: Fn(usize, ArrayViewMut1<'_, f64>) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        let rows: Vec<(usize, ArrayViewMut1<'_, f64>)> =
            out.axis_iter_mut(Axis(0)).enumerate().collect();
        thread_pool().install(|| {
            rows.into_par_iter().for_each(|(i, row)| f(i, row));
        });
    }
    #[cfg(not(feature = "parallel"))]
    {
        out.axis_iter_mut(Axis(0)).enumerate().for_each(|(i, row)| f(i, row));
    }
}

/// Map `f` over `0..n`, collecting results in index order.
pub(crate) fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        thread_pool().install(|| (0..n).into_par_iter().map(f).collect())
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}
