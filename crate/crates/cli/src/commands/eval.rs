use std::fs;

use anyhow::{bail, Context, Result};
use gapkit::embedding::{stack_mixed, Modality};
use gapkit::metrics::{self, DistanceMetric, RankingPass};
use gapkit::report::{
    histogram_csv, merge_reports, render_comparison_text, render_json, MetricReport,
    RankSection, RecallSection,
};

use crate::commands::{load_dataset, parse_comma_list};
use crate::provenance::{manifest_inputs, write_provenance, Provenance};
use crate::EvalArgs;

#[derive(Debug, Clone, Copy)]
struct MetricSet {
    heterogeneity: bool,
    ranks: bool,
    fid: bool,
    recall: bool,
    distances: bool,
}

impl MetricSet {
    fn all() -> Self {
        MetricSet { heterogeneity: true, ranks: true, fid: true, recall: true, distances: true }
    }

    fn parse(spec: &str) -> Result<Self> {
        let mut set =
            MetricSet { heterogeneity: false, ranks: false, fid: false, recall: false, distances: false };
        for name in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            match name {
                "heterogeneity" => set.heterogeneity = true,
                "ranks" => set.ranks = true,
                "fid" => set.fid = true,
                "recall" => set.recall = true,
                "distances" => set.distances = true,
                other => bail!(
                    "unknown metric '{other}', expected heterogeneity, ranks, fid, recall, or distances"
                ),
            }
        }
        Ok(set)
    }

    fn names(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if self.heterogeneity {
            out.push("heterogeneity");
        }
        if self.ranks {
            out.push("ranks");
        }
        if self.fid {
            out.push("fid");
        }
        if self.recall {
            out.push("recall");
        }
        if self.distances {
            out.push("distances");
        }
        out
    }
}

pub fn run(args: EvalArgs) -> Result<()> {
    let set = match &args.metrics {
        Some(spec) => MetricSet::parse(spec)?,
        None => MetricSet::all(),
    };
    let ks = parse_comma_list::<usize>(&args.recall_k, "--recall-k")?;
    if set.recall && ks.is_empty() {
        bail!("--recall-k must name at least one K");
    }
    let dataset = match &args.dataset {
        Some(label) => label.clone(),
        None => args
            .manifest
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "dataset".into()),
    };

    let ds = load_dataset(&args.manifest, args.normalize)?;
    let pass = if set.heterogeneity || set.ranks || set.recall {
        Some(RankingPass::new(&stack_mixed(&ds))?)
    } else {
        None
    };

    let mut report = MetricReport {
        dataset,
        method: args.method.clone(),
        n_pairs: ds.len(),
        heterogeneity: None,
        ranks: None,
        fid: None,
        recall: None,
        distances: None,
    };
    if let Some(pass) = &pass {
        if set.heterogeneity {
            report.heterogeneity = Some(pass.heterogeneity());
        }
        if set.ranks {
            let rr = pass.mean_ranks();
            report.ranks = Some(RankSection { imr: rr.imr, tmr: rr.tmr });
        }
        if set.recall {
            report.recall = Some(RecallSection {
                image_to_text: pass.recall_at_k(Modality::Image, &ks)?,
                text_to_image: pass.recall_at_k(Modality::Text, &ks)?,
            });
        }
    }
    if set.fid {
        report.fid = Some(metrics::fid(ds.images(), ds.texts())?);
    }
    if set.distances {
        let mut stats = Vec::new();
        for metric in
            [DistanceMetric::Cosine, DistanceMetric::Euclidean, DistanceMetric::SqEuclidean]
        {
            stats.push(metrics::paired_distance_stats(&ds, metric, args.exclude_matching)?);
        }
        report.distances = Some(stats);
    }

    fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    fs::write(args.out.join("report.json"), render_json(&report)?)?;
    if let Some(stats) = &report.distances {
        for s in stats {
            let name = format!("hist_{}_{}.csv", args.method, s.metric);
            fs::write(args.out.join(name), histogram_csv(s))?;
        }
    }
    // Same renderer the report command uses, degenerate single column.
    let solo = merge_reports(vec![report], false)?;
    fs::write(args.out.join("report.txt"), render_comparison_text(&solo))?;

    write_provenance(
        &args.out,
        &Provenance {
            command: "eval",
            method: Some(args.method.clone()),
            seed: None,
            params: serde_json::json!({
                "metrics": set.names(),
                "recall_k": ks,
                "normalize": args.normalize,
                "exclude_matching": args.exclude_matching,
            }),
            inputs: manifest_inputs(&args.manifest)?,
        },
    )?;
    println!(
        "wrote {} report to {}",
        args.method,
        args.out.join("report.json").display()
    );
    Ok(())
}
