use anyhow::{bail, Context, Result};
use gapkit::embedding::{stack_mixed, EmbeddingMatrix, Modality, PairedDataset};
use gapkit::numerics::pca_fit_transform;
use gapkit::ot::{solve_laplace_ot, transport_in_sample, transport_out_of_sample, OtParams};
use gapkit::spectral::{spectral_embed, WeightMode};
use ndarray::{s, Array2};

use crate::commands::{load_dataset, select_rows, shuffled_indices, write_pair_files};
use crate::method::Method;
use crate::provenance::{manifest_inputs, write_provenance, Provenance};
use crate::AlignArgs;

pub fn run(args: AlignArgs) -> Result<()> {
    let method = Method::parse(&args.method, args.k)?;
    let ds = load_dataset(&args.manifest, args.normalize)?;

    let (images, texts, params) = match method {
        Method::Orig => (
            ds.images().data().clone(),
            ds.texts().data().clone(),
            serde_json::json!({}),
        ),
        Method::Spec(k) => {
            let sa = spectral_embed(&ds, k, WeightMode::ClampCosine, 1e-8)
                .context("spectral alignment")?;
            let params = serde_json::json!({
                "k": k,
                "weights": "clamp_cosine",
                "eigenvalues": sa.eigenvalues,
            });
            (sa.f_img, sa.f_txt, params)
        }
        Method::Pca(k) => {
            let mc = stack_mixed(&ds);
            let projected = pca_fit_transform(mc.z().view(), k).context("pca")?;
            let n = ds.len();
            let images = projected.slice(s![..n, ..]).to_owned();
            let texts = projected.slice(s![n.., ..]).to_owned();
            (images, texts, serde_json::json!({ "k": k }))
        }
        Method::Ot => align_ot(&args, &ds)?,
    };

    let manifest = write_pair_files(&args.out, &images, &texts, ds.images().ids())?;
    write_provenance(
        &args.out,
        &Provenance {
            command: "align",
            method: Some(method.label()),
            seed: Some(args.seed),
            params,
            inputs: manifest_inputs(&args.manifest)?,
        },
    )?;
    println!("wrote {} aligned pairs to {}", images.nrows(), manifest.display());
    Ok(())
}

/// Fit the plan on a (possibly proper) training prefix of a seeded
/// shuffle, map training images through the plan and the rest through
/// nearest-neighbor displacements, then restore the original row order.
fn align_ot(
    args: &AlignArgs,
    ds: &PairedDataset,
) -> Result<(Array2<f64>, Array2<f64>, serde_json::Value)> {
    let n = ds.len();
    let m = args.train_pairs.unwrap_or(n);
    if m < 2 || m > n {
        bail!("--train-pairs must be in 2..={n}, got {m}");
    }
    let order = shuffled_indices(n, args.seed);
    let (train_idx, rest_idx) = order.split_at(m);

    let take = |em: &EmbeddingMatrix, idx: &[usize], modality| -> Result<EmbeddingMatrix> {
        let ids = idx.iter().map(|&i| em.ids()[i].clone()).collect();
        Ok(EmbeddingMatrix::new(select_rows(em.data(), idx), modality, ids)?)
    };
    let train = PairedDataset::new(
        take(ds.images(), train_idx, Modality::Image)?,
        take(ds.texts(), train_idx, Modality::Text)?,
    )?;

    let params = OtParams {
        eta: args.eta,
        lambda_s: args.lambda_s,
        lambda_t: args.lambda_t,
        sim_k: args.sim_k,
        reg_mode: args.reg_mode.to_core(),
        max_iters: args.max_iters,
        tol: args.tol,
    };
    params.validate()?;
    let plan = solve_laplace_ot(&train, &params).context("transport solve")?;
    if !plan.converged {
        eprintln!(
            "gapkit: warning: transport solver stopped at {} iterations without converging",
            params.max_iters
        );
    }

    let mapped_train = transport_in_sample(&plan)?;
    let mut images = Array2::zeros((n, ds.dim()));
    for (row, &i) in train_idx.iter().enumerate() {
        images.row_mut(i).assign(&mapped_train.row(row));
    }
    if !rest_idx.is_empty() {
        let x_rest = select_rows(ds.images().data(), rest_idx);
        let mapped_rest = transport_out_of_sample(&plan, x_rest.view(), args.nn)?;
        for (row, &i) in rest_idx.iter().enumerate() {
            images.row_mut(i).assign(&mapped_rest.row(row));
        }
    }

    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    plan.save(&args.out.join("plan.npz"))?;

    let meta = serde_json::json!({
        "ot": params,
        "train_pairs": m,
        "nn": args.nn,
        "converged": plan.converged,
        "final_objective": plan.final_objective(),
    });
    Ok((images, ds.texts().data().clone(), meta))
}
