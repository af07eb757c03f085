use std::fs;

use anyhow::{Context, Result};
use gapkit::report::{comparison_csv, merge_reports, render_comparison_text, render_json, MetricReport};

use crate::provenance::{hash_file, write_provenance, Provenance};
use crate::ReportArgs;

pub fn run(args: ReportArgs) -> Result<()> {
    let mut reports = Vec::new();
    for path in &args.reports {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading {}", path.display()))?;
        let report: MetricReport = serde_json::from_str(&text)
            .with_context(|| format!("parsing {}", path.display()))?;
        reports.push(report);
    }
    let cmp = merge_reports(reports, args.allow_mixed)?;

    fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    fs::write(args.out.join("report.json"), render_json(&cmp)?)?;
    fs::write(args.out.join("report.txt"), render_comparison_text(&cmp))?;
    fs::write(args.out.join("report.csv"), comparison_csv(&cmp))?;

    let mut inputs = Vec::new();
    for path in &args.reports {
        inputs.push(hash_file(path)?);
    }
    write_provenance(
        &args.out,
        &Provenance {
            command: "report",
            method: None,
            seed: None,
            params: serde_json::json!({ "allow_mixed": args.allow_mixed }),
            inputs,
        },
    )?;
    println!(
        "merged {} methods into {}",
        cmp.methods.len(),
        args.out.join("report.txt").display()
    );
    Ok(())
}
