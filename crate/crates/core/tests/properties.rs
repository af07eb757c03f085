//! Randomized invariants: serialization round trips, metric symmetries,
//! and feasibility guarantees that must hold on every input, not just the
//! fixtures the unit tests pin down.

use gapkit::embedding::{
    l2_normalize_rows, split_mixed, stack_mixed, EmbeddingMatrix, Modality, PairedDataset,
};
use gapkit::io::{container, npy};
use gapkit::metrics::{heterogeneity_indices, recall_at_k};
use gapkit::numerics::{similarity_matrix, SimilarityMetric};
use gapkit::ot::{solve_emd, solve_laplace_ot, OtParams};
use ndarray::{Array1, Array2};
use proptest::prelude::*;
use std::collections::BTreeMap;

fn matrix(max_n: usize, max_d: usize) -> impl Strategy<Value = Array2<f64>> {
    (1..=max_n, 1..=max_d).prop_flat_map(|(n, d)| {
        proptest::collection::vec(-1.0e6..1.0e6f64, n * d)
            .prop_map(move |v| Array2::from_shape_vec((n, d), v).unwrap())
    })
}

// Every element bounded away from zero, so no row can be a zero vector.
fn nonzero_matrix(max_n: usize, max_d: usize) -> impl Strategy<Value = Array2<f64>> {
    let cell = prop_oneof![-5.0..-0.05f64, 0.05..5.0f64];
    (1..=max_n, 1..=max_d).prop_flat_map(move |(n, d)| {
        proptest::collection::vec(cell.clone(), n * d)
            .prop_map(move |v| Array2::from_shape_vec((n, d), v).unwrap())
    })
}

fn paired(max_n: usize, max_d: usize) -> impl Strategy<Value = PairedDataset> {
    (2..=max_n, 1..=max_d).prop_flat_map(|(n, d)| {
        let cell = prop_oneof![-5.0..-0.05f64, 0.05..5.0f64];
        (
            proptest::collection::vec(cell.clone(), n * d),
            proptest::collection::vec(cell, n * d),
        )
            .prop_map(move |(xv, yv)| {
                let x = Array2::from_shape_vec((n, d), xv).unwrap();
                let y = Array2::from_shape_vec((n, d), yv).unwrap();
                PairedDataset::new(
                    EmbeddingMatrix::with_default_ids(x, Modality::Image).unwrap(),
                    EmbeddingMatrix::with_default_ids(y, Modality::Text).unwrap(),
                )
                .unwrap()
            })
    })
}

fn bits(m: &Array2<f64>) -> Vec<u64> {
    m.iter().map(|v| v.to_bits()).collect()
}

proptest! {
    #[test]
    fn npy_bytes_round_trip_bit_exactly(m in matrix(8, 6)) {
        let encoded = npy::to_bytes(&m);
        let decoded = npy::from_bytes(&encoded, std::path::Path::new("mem")).unwrap();
        prop_assert_eq!(decoded.dim(), m.dim());
        prop_assert_eq!(bits(&decoded), bits(&m));
    }

    #[test]
    fn container_preserves_entries_verbatim(
        entries in proptest::collection::btree_map(
            "[a-z]{1,8}\\.bin",
            proptest::collection::vec(any::<u8>(), 0..200),
            1..5,
        )
    ) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bundle.npz");
        let flat: Vec<(&str, Vec<u8>)> =
            entries.iter().map(|(k, v)| (k.as_str(), v.clone())).collect();
        container::write(&path, &flat).unwrap();
        let back = container::read(&path).unwrap();
        prop_assert_eq!(back.len(), flat.len());
        for ((name, data), (want_name, want_data)) in back.iter().zip(&flat) {
            prop_assert_eq!(name.as_str(), *want_name);
            prop_assert_eq!(data, want_data);
        }
    }

    #[test]
    fn row_normalization_is_idempotent(m in nonzero_matrix(8, 6)) {
        let e = EmbeddingMatrix::with_default_ids(m, Modality::Image).unwrap();
        let once = l2_normalize_rows(&e).unwrap();
        let twice = l2_normalize_rows(&once).unwrap();
        for row in once.data().rows() {
            let norm: f64 = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            prop_assert!((norm - 1.0).abs() < 1e-12);
        }
        for (a, b) in once.data().iter().zip(twice.data().iter()) {
            prop_assert!((a - b).abs() <= 1e-15);
        }
    }

    #[test]
    fn similarity_of_swapped_inputs_is_the_exact_transpose(
        a in nonzero_matrix(6, 4),
        b in nonzero_matrix(6, 4),
    ) {
        prop_assume!(a.ncols() == b.ncols());
        for metric in [SimilarityMetric::Dot, SimilarityMetric::Cosine] {
            let ab = similarity_matrix(a.view(), b.view(), metric).unwrap();
            let ba = similarity_matrix(b.view(), a.view(), metric).unwrap();
            prop_assert_eq!(bits(&ab), bits(&ba.t().to_owned()));
        }
    }

    #[test]
    fn recall_never_drops_as_k_grows(ds in paired(6, 4)) {
        let mc = stack_mixed(&ds);
        let n = ds.len();
        let ks: Vec<usize> = (1..=2 * n - 1).collect();
        for modality in [Modality::Image, Modality::Text] {
            let curve: BTreeMap<usize, f64> = recall_at_k(&mc, modality, &ks).unwrap();
            let mut prev = 0.0;
            for &k in &ks {
                prop_assert!(curve[&k] >= prev);
                prev = curve[&k];
            }
            // Every ranking contains the partner somewhere.
            prop_assert_eq!(curve[&(2 * n - 1)], 1.0);
        }
    }

    #[test]
    fn top1_counts_split_each_query_side_exactly(ds in paired(7, 4)) {
        let het = heterogeneity_indices(&stack_mixed(&ds)).unwrap();
        let n = ds.len();
        prop_assert_eq!(het.counts.image_to_image + het.counts.image_to_text, n);
        prop_assert_eq!(het.counts.text_to_text + het.counts.text_to_image, n);
    }

    #[test]
    fn stack_then_split_returns_the_same_dataset(ds in paired(6, 4)) {
        let back = split_mixed(&stack_mixed(&ds)).unwrap();
        prop_assert_eq!(back, ds);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn emd_plans_are_feasible_and_beat_the_independent_coupling(
        (mu_raw, nu_raw, costs) in (1..=5usize, 1..=5usize).prop_flat_map(|(n, m)| {
            (
                proptest::collection::vec(0.1..1.0f64, n),
                proptest::collection::vec(0.1..1.0f64, m),
                proptest::collection::vec(0.0..10.0f64, n * m),
            )
        })
    ) {
        let n = mu_raw.len();
        let m = nu_raw.len();
        let mu_sum: f64 = mu_raw.iter().sum();
        let nu_sum: f64 = nu_raw.iter().sum();
        let mu = Array1::from_vec(mu_raw.iter().map(|v| v / mu_sum).collect());
        let nu = Array1::from_vec(nu_raw.iter().map(|v| v / nu_sum).collect());
        let c = Array2::from_shape_vec((n, m), costs).unwrap();

        let gamma = solve_emd(&mu, &nu, c.view()).unwrap();
        for i in 0..n {
            prop_assert!((gamma.row(i).sum() - mu[i]).abs() <= 1e-9);
        }
        for j in 0..m {
            prop_assert!((gamma.column(j).sum() - nu[j]).abs() <= 1e-9);
        }
        for &g in gamma.iter() {
            prop_assert!(g >= 0.0);
        }
        let cost = gapkit::ot::transport_cost(&gamma, c.view());
        let independent: f64 = (0..n)
            .map(|i| (0..m).map(|j| mu[i] * nu[j] * c[[i, j]]).sum::<f64>())
            .sum();
        prop_assert!(cost <= independent + 1e-9);
    }

    #[test]
    fn regularized_solver_descends_and_stays_feasible(
        ds in paired(5, 3),
        eta in 0.0..2.0f64,
    ) {
        let params = OtParams {
            eta,
            sim_k: 2.min(ds.len() - 1).max(1),
            max_iters: 30,
            tol: 1e-9,
            ..OtParams::default()
        };
        let plan = solve_laplace_ot(&ds, &params).unwrap();
        let n = plan.n_train();
        for i in 0..n {
            prop_assert!((plan.gamma.row(i).sum() - plan.mu[i]).abs() <= 1e-8);
            prop_assert!((plan.gamma.column(i).sum() - plan.nu[i]).abs() <= 1e-8);
        }
        for &g in plan.gamma.iter() {
            prop_assert!(g >= -1e-12);
        }
        for w in plan.objective_trace.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-10 * w[0].abs().max(1.0));
        }
    }
}
