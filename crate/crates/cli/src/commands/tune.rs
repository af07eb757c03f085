use std::fs;

use anyhow::{bail, Context, Result};
use gapkit::embedding::{stack_mixed, EmbeddingMatrix, Modality, PairedDataset};
use gapkit::ot::{solve_laplace_ot, transport_out_of_sample, OtParams};
use serde::Serialize;

use crate::commands::{load_dataset, parse_comma_list, select_rows, shuffled_indices};
use crate::provenance::{manifest_inputs, write_json, write_provenance, Provenance};
use crate::TuneArgs;

#[derive(Debug, Clone, Serialize)]
struct Cell {
    eta: f64,
    lambda_s: f64,
    lambda_t: f64,
    recall_at_5: f64,
    final_objective: f64,
    converged: bool,
}

pub fn run(args: TuneArgs) -> Result<()> {
    let etas = parse_comma_list::<f64>(&args.eta, "--eta")?;
    let lambda_s = parse_comma_list::<f64>(&args.lambda_s, "--lambda-s")?;
    let lambda_t = parse_comma_list::<f64>(&args.lambda_t, "--lambda-t")?;
    if etas.is_empty() || lambda_s.is_empty() || lambda_t.is_empty() {
        bail!("empty grid");
    }

    let ds = load_dataset(&args.manifest, args.normalize)?;
    let n = ds.len();
    let m = args.train_pairs;
    if m < 2 || m >= n {
        bail!("--train-pairs must be in 2..{n}, got {m}");
    }
    if n - m < 20 {
        bail!("validation too small (< 20 pairs)");
    }

    let order = shuffled_indices(n, args.seed);
    let (train_idx, val_idx) = order.split_at(m);
    let take = |em: &EmbeddingMatrix, idx: &[usize], modality| -> Result<EmbeddingMatrix> {
        let ids = idx.iter().map(|&i| em.ids()[i].clone()).collect();
        Ok(EmbeddingMatrix::new(select_rows(em.data(), idx), modality, ids)?)
    };
    let train = PairedDataset::new(
        take(ds.images(), train_idx, Modality::Image)?,
        take(ds.texts(), train_idx, Modality::Text)?,
    )?;
    let x_val = select_rows(ds.images().data(), val_idx);
    let y_val = take(ds.texts(), val_idx, Modality::Text)?;

    let mut leaderboard = Vec::new();
    for &eta in &etas {
        for &ls in &lambda_s {
            for &lt in &lambda_t {
                let params = OtParams {
                    eta,
                    lambda_s: ls,
                    lambda_t: lt,
                    sim_k: args.sim_k,
                    reg_mode: args.reg_mode.to_core(),
                    max_iters: args.max_iters,
                    tol: args.tol,
                };
                params.validate()?;
                let plan = solve_laplace_ot(&train, &params)
                    .with_context(|| format!("cell eta={eta} ls={ls} lt={lt}"))?;
                let mapped = transport_out_of_sample(&plan, x_val.view(), args.nn)?;
                let val = PairedDataset::new(
                    EmbeddingMatrix::new(mapped, Modality::Image, y_val.ids().to_vec())?,
                    y_val.clone(),
                )?;
                let recall =
                    gapkit::metrics::recall_at_k(&stack_mixed(&val), Modality::Image, &[5])?;
                leaderboard.push((
                    Cell {
                        eta,
                        lambda_s: ls,
                        lambda_t: lt,
                        recall_at_5: recall[&5],
                        final_objective: plan.final_objective(),
                        converged: plan.converged,
                    },
                    params,
                ));
            }
        }
    }

    // Best validation recall first; deterministic tie order by cell.
    leaderboard.sort_by(|(a, _), (b, _)| {
        b.recall_at_5
            .total_cmp(&a.recall_at_5)
            .then(a.eta.total_cmp(&b.eta))
            .then(a.lambda_s.total_cmp(&b.lambda_s))
            .then(a.lambda_t.total_cmp(&b.lambda_t))
    });

    fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    let cells: Vec<&Cell> = leaderboard.iter().map(|(c, _)| c).collect();
    write_json(&args.out.join("leaderboard.json"), &cells)?;
    let (best, best_params) = &leaderboard[0];
    write_json(
        &args.out.join("best_params.json"),
        &serde_json::json!({ "params": best_params, "recall_at_5": best.recall_at_5 }),
    )?;

    write_provenance(
        &args.out,
        &Provenance {
            command: "tune-ot",
            method: Some("OT".into()),
            seed: Some(args.seed),
            params: serde_json::json!({
                "eta": etas,
                "lambda_s": lambda_s,
                "lambda_t": lambda_t,
                "sim_k": args.sim_k,
                "reg_mode": args.reg_mode.to_core(),
                "nn": args.nn,
                "max_iters": args.max_iters,
                "tol": args.tol,
                "train_pairs": m,
                "validation_pairs": n - m,
                "normalize": args.normalize,
            }),
            inputs: manifest_inputs(&args.manifest)?,
        },
    )?;
    println!(
        "searched {} cells, best recall@5 {:.4} at eta={} lambda_s={} lambda_t={}",
        cells.len(),
        best.recall_at_5,
        best.eta,
        best.lambda_s,
        best.lambda_t
    );
    Ok(())
}
