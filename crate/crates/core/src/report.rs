//! Report records and their serialized forms: JSON for machines, aligned
//! column tables for humans, CSV for plotting.
//!
//! A `MetricReport` holds the metric subset computed for one method on
//! one dataset; absent metrics are absent fields. `merge_reports` lines
//! several methods up side by side and attaches paired significance
//! tests of the per-pair distance vectors against the first (baseline)
//! method. JSON output is full precision and byte-stable: floats round
//! trip exactly, map keys are ordered, nothing carries a timestamp.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{GapError, Result};
use crate::metrics::{DistanceMetric, HeterogeneityResult, PairedDistanceStats, RatioValue};
use crate::stats::{significance_test, SignificanceTest};

/// Mean first-hit rank of the other modality, both query directions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankSection {
    pub imr: f64,
    pub tmr: f64,
}

/// recall@K keyed by K, both query directions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecallSection {
    pub image_to_text: BTreeMap<usize, f64>,
    pub text_to_image: BTreeMap<usize, f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricReport {
    pub dataset: String,
    pub method: String,
    pub n_pairs: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heterogeneity: Option<HeterogeneityResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ranks: Option<RankSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fid: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recall: Option<RecallSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distances: Option<Vec<PairedDistanceStats>>,
}

/// Two-sided p-values for a method's per-pair distances against the
/// baseline method's, paired by index. `None` when a test is undefined
/// on the data (for instance zero variance).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SignificanceEntry {
    pub metric: DistanceMetric,
    pub baseline: String,
    pub method: String,
    pub wilcoxon_p: Option<f64>,
    pub paired_t_p: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MethodComparison {
    pub dataset: String,
    pub n_pairs: usize,
    pub methods: Vec<MetricReport>,
    pub significance: Vec<SignificanceEntry>,
}

/// Line reports up for side-by-side comparison. Without `allow_mixed`
/// every report must carry the same dataset label and pair count.
/// Source values are carried over untouched.
pub fn merge_reports(reports: Vec<MetricReport>, allow_mixed: bool) -> Result<MethodComparison> {
    let Some(first) = reports.first() else {
        return Err(GapError::Validation("no reports to merge".into()));
    };
    if !allow_mixed {
        for r in &reports[1..] {
            if r.dataset != first.dataset || r.n_pairs != first.n_pairs {
                return Err(GapError::Validation(format!(
                    "reports disagree on the dataset: '{}' ({} pairs) vs '{}' ({} pairs)",
                    first.dataset, first.n_pairs, r.dataset, r.n_pairs
                )));
            }
        }
    }
    let mut labels: Vec<&str> = Vec::new();
    for r in &reports {
        if !labels.contains(&r.dataset.as_str()) {
            labels.push(&r.dataset);
        }
    }
    let dataset = labels.join("+");
    let n_pairs = first.n_pairs;

    let mut significance = Vec::new();
    let base = first.clone();
    for r in &reports[1..] {
        if r.dataset != base.dataset || r.n_pairs != base.n_pairs {
            continue; // pairing across different datasets is meaningless
        }
        let (Some(base_stats), Some(stats)) = (&base.distances, &r.distances) else {
            continue;
        };
        for s in stats {
            let Some(b) = base_stats
                .iter()
                .find(|b| b.metric == s.metric && b.per_pair.len() == s.per_pair.len())
            else {
                continue;
            };
            significance.push(SignificanceEntry {
                metric: s.metric,
                baseline: base.method.clone(),
                method: r.method.clone(),
                wilcoxon_p: significance_test(&b.per_pair, &s.per_pair, SignificanceTest::Wilcoxon)
                    .ok(),
                paired_t_p: significance_test(&b.per_pair, &s.per_pair, SignificanceTest::PairedT)
                    .ok(),
            });
        }
    }

    Ok(MethodComparison { dataset, n_pairs, methods: reports, significance })
}

/// Pretty JSON with a trailing newline; byte-stable across runs.
pub fn render_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)
        .map_err(|e| GapError::Validation(format!("report serialization: {e}")))?;
    s.push('\n');
    Ok(s)
}

fn fmt_opt_ratio(v: Option<RatioValue>) -> String {
    v.map_or_else(|| "-".into(), |r| r.to_string())
}

fn fmt_rank(v: f64) -> String {
    format!("{}", v.round() as i64)
}

// Two decimals with "-0.00" folded into "0.00".
fn fmt2(v: f64) -> String {
    let s = format!("{v:.2}");
    if s == "-0.00" {
        "0.00".into()
    } else {
        s
    }
}

fn push_table(out: &mut String, title: &str, headers: &[String], rows: &[Vec<String>]) {
    let cols = headers.len();
    let mut widths: Vec<usize> = headers.iter().map(|h| h.len()).collect();
    for row in rows {
        for (c, cell) in row.iter().enumerate() {
            widths[c] = widths[c].max(cell.len());
        }
    }
    out.push_str(title);
    out.push('\n');
    let mut emit = |cells: &[String]| {
        for (c, cell) in cells.iter().enumerate() {
            if c == 0 {
                out.push_str(&format!("{:<width$}", cell, width = widths[0]));
            } else {
                out.push_str(&format!("  {:>width$}", cell, width = widths[c]));
            }
        }
        while out.ends_with(' ') {
            out.pop();
        }
        out.push('\n');
    };
    emit(headers);
    for row in rows {
        debug_assert_eq!(row.len(), cols);
        emit(row);
    }
    out.push('\n');
}

/// Aligned-column text: one table per metric family, methods as rows.
/// Ratios and recall round to 2 decimals, ranks to integers; JSON keeps
/// full precision.
pub fn render_comparison_text(cmp: &MethodComparison) -> String {
    let mut out = String::new();
    out.push_str(&format!("dataset: {}  pairs: {}\n\n", cmp.dataset, cmp.n_pairs));
    let methods = &cmp.methods;

    if methods.iter().any(|m| m.heterogeneity.is_some()) {
        let headers = vec!["method".to_string(), "ITR".into(), "TIR".into()];
        let rows: Vec<Vec<String>> = methods
            .iter()
            .map(|m| {
                vec![
                    m.method.clone(),
                    fmt_opt_ratio(m.heterogeneity.map(|h| h.itr)),
                    fmt_opt_ratio(m.heterogeneity.map(|h| h.tir)),
                ]
            })
            .collect();
        push_table(&mut out, "top-neighbor modality ratios", &headers, &rows);
    }

    if methods.iter().any(|m| m.ranks.is_some()) {
        let headers = vec!["method".to_string(), "IMR".into(), "TMR".into()];
        let rows: Vec<Vec<String>> = methods
            .iter()
            .map(|m| {
                vec![
                    m.method.clone(),
                    m.ranks.map_or_else(|| "-".into(), |r| fmt_rank(r.imr)),
                    m.ranks.map_or_else(|| "-".into(), |r| fmt_rank(r.tmr)),
                ]
            })
            .collect();
        push_table(&mut out, "mean first cross-modal rank", &headers, &rows);
    }

    if methods.iter().any(|m| m.fid.is_some()) {
        let headers = vec!["method".to_string(), "FID".into()];
        let rows: Vec<Vec<String>> = methods
            .iter()
            .map(|m| {
                vec![m.method.clone(), m.fid.map_or_else(|| "-".into(), fmt2)]
            })
            .collect();
        push_table(&mut out, "distribution distance", &headers, &rows);
    }

    if methods.iter().any(|m| m.recall.is_some()) {
        let mut ks: BTreeSet<usize> = BTreeSet::new();
        for m in methods {
            if let Some(r) = &m.recall {
                ks.extend(r.image_to_text.keys().copied());
                ks.extend(r.text_to_image.keys().copied());
            }
        }
        let mut headers = vec!["method".to_string()];
        for k in &ks {
            headers.push(format!("i2t R@{k}"));
        }
        for k in &ks {
            headers.push(format!("t2i R@{k}"));
        }
        let cell = |map: Option<&BTreeMap<usize, f64>>, k: &usize| {
            map.and_then(|m| m.get(k)).map_or_else(|| "-".into(), |v| fmt2(*v))
        };
        let rows: Vec<Vec<String>> = methods
            .iter()
            .map(|m| {
                let mut row = vec![m.method.clone()];
                for k in &ks {
                    row.push(cell(m.recall.as_ref().map(|r| &r.image_to_text), k));
                }
                for k in &ks {
                    row.push(cell(m.recall.as_ref().map(|r| &r.text_to_image), k));
                }
                row
            })
            .collect();
        push_table(&mut out, "cross-modal recall", &headers, &rows);
    }

    if methods.iter().any(|m| m.distances.is_some()) {
        let headers = vec![
            "method".to_string(),
            "metric".into(),
            "paired mean".into(),
            "cross mean".into(),
        ];
        let mut rows = Vec::new();
        for m in methods {
            for s in m.distances.iter().flatten() {
                rows.push(vec![
                    m.method.clone(),
                    s.metric.to_string(),
                    fmt2(s.paired_mean),
                    fmt2(s.cross_mean),
                ]);
            }
        }
        push_table(&mut out, "paired distances", &headers, &rows);
    }

    if !cmp.significance.is_empty() {
        let headers = vec![
            "method".to_string(),
            "baseline".into(),
            "metric".into(),
            "wilcoxon p".into(),
            "paired-t p".into(),
        ];
        let fmt_p =
            |p: Option<f64>| p.map_or_else(|| "-".to_string(), |v| format!("{v:.2e}"));
        let rows: Vec<Vec<String>> = cmp
            .significance
            .iter()
            .map(|e| {
                vec![
                    e.method.clone(),
                    e.baseline.clone(),
                    e.metric.to_string(),
                    fmt_p(e.wilcoxon_p),
                    fmt_p(e.paired_t_p),
                ]
            })
            .collect();
        push_table(&mut out, "paired-distance significance vs baseline", &headers, &rows);
    }

    out
}

/// Flat CSV, one row per method; full-precision values, empty cells for
/// absent metrics.
pub fn comparison_csv(cmp: &MethodComparison) -> String {
    let mut ks: BTreeSet<usize> = BTreeSet::new();
    let mut dist_metrics: Vec<DistanceMetric> = Vec::new();
    for m in &cmp.methods {
        if let Some(r) = &m.recall {
            ks.extend(r.image_to_text.keys().copied());
            ks.extend(r.text_to_image.keys().copied());
        }
        for s in m.distances.iter().flatten() {
            if !dist_metrics.contains(&s.metric) {
                dist_metrics.push(s.metric);
            }
        }
    }
    let mut header =
        vec!["method".to_string(), "dataset".into(), "n_pairs".into(), "itr".into(), "tir".into(), "imr".into(), "tmr".into(), "fid".into()];
    for k in &ks {
        header.push(format!("i2t_recall@{k}"));
    }
    for k in &ks {
        header.push(format!("t2i_recall@{k}"));
    }
    for d in &dist_metrics {
        header.push(format!("{d}_paired_mean"));
        header.push(format!("{d}_cross_mean"));
    }
    let mut out = header.join(",");
    out.push('\n');

    let ratio_cell = |v: Option<RatioValue>| match v {
        None => String::new(),
        Some(RatioValue::Finite(x)) => format!("{x}"),
        Some(RatioValue::Infinite) => "inf".into(),
        Some(RatioValue::Undefined) => "undefined".into(),
    };
    let num = |v: Option<f64>| v.map_or_else(String::new, |x| format!("{x}"));
    for m in &cmp.methods {
        let mut row = vec![
            m.method.clone(),
            m.dataset.clone(),
            m.n_pairs.to_string(),
            ratio_cell(m.heterogeneity.map(|h| h.itr)),
            ratio_cell(m.heterogeneity.map(|h| h.tir)),
            num(m.ranks.map(|r| r.imr)),
            num(m.ranks.map(|r| r.tmr)),
            num(m.fid),
        ];
        for k in &ks {
            row.push(num(m.recall.as_ref().and_then(|r| r.image_to_text.get(k)).copied()));
        }
        for k in &ks {
            row.push(num(m.recall.as_ref().and_then(|r| r.text_to_image.get(k)).copied()));
        }
        for d in &dist_metrics {
            let s = m.distances.iter().flatten().find(|s| s.metric == *d);
            row.push(num(s.map(|s| s.paired_mean)));
            row.push(num(s.map(|s| s.cross_mean)));
        }
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Per-pair distances as plot-ready CSV.
pub fn histogram_csv(stats: &PairedDistanceStats) -> String {
    let mut out = String::from("pair_index,distance\n");
    for (i, v) in stats.per_pair.iter().enumerate() {
        out.push_str(&format!("{i},{v}\n"));
    }
    out
}
