//! Deterministic JSON and CSV renderings.
//!
//! JSON output has sorted keys and ends in a newline. CSV numbers use six
//! fixed decimals.

use serde::Serialize;
use serde_json::json;

use crate::corpus::{Corpus, ValidationReport};
use crate::demo::{CurvePoint, DemoSummary};
use crate::depth::{DepthTable, MedianInfo, QStatistic};
use crate::metric::{EvaluationReport, Lambda, WeightTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

/// Sorted-key pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    // serde_json's default map is a BTreeMap, so round-tripping through
    // `Value` sorts every object's keys.
    let value = serde_json::to_value(value).expect("report types serialize to JSON");
    let mut out = serde_json::to_string_pretty(&value).expect("JSON values always render");
    out.push('\n');
    out
}

pub fn fixed(x: f64) -> String {
    format!("{x:.6}")
}

fn fixed_opt(x: Option<f64>) -> String {
    x.map(fixed).unwrap_or_default()
}

fn csv_table<const N: usize>(header: [&str; N], rows: impl IntoIterator<Item = [String; N]>) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(header).expect("in-memory CSV write");
    for row in rows {
        w.write_record(&row).expect("in-memory CSV write");
    }
    String::from_utf8(w.into_inner().expect("in-memory CSV flush")).expect("CSV of UTF-8 fields")
}

pub fn render_report(report: &EvaluationReport, format: OutputFormat) -> String {
    match format {
        OutputFormat::Json => to_json(report),
        OutputFormat::Csv => csv_table(
            ["lambda", "kept_count", "micro_f1", "df1", "degenerate"],
            report.rows.iter().map(|r| {
                [
                    r.lambda.to_string(),
                    r.kept_count.to_string(),
                    fixed(r.micro_f1),
                    fixed_opt(r.df1),
                    r.degenerate.to_string(),
                ]
            }),
        ),
    }
}

pub fn render_validation(report: &ValidationReport, format: OutputFormat) -> String {
    match format {
        OutputFormat::Json => to_json(report),
        OutputFormat::Csv => csv_table(
            ["id", "code", "message"],
            report.issues.iter().map(|i| {
                let code = serde_json::to_value(i.code).ok().and_then(|v| v.as_str().map(str::to_string));
                [i.id.clone(), code.unwrap_or_default(), i.message.clone()]
            }),
        ),
    }
}

pub fn render_depths(corpus: &Corpus, source: &DepthTable, target: &DepthTable, format: OutputFormat) -> String {
    let entries = |samples: &[crate::corpus::EmbeddedSample], table: &DepthTable| {
        samples
            .iter()
            .zip(&table.scores)
            .enumerate()
            .map(|(i, (s, d))| (i, s.id.clone(), *d))
            .collect::<Vec<_>>()
    };
    let source = entries(&corpus.source, source);
    let target = entries(&corpus.target, target);
    match format {
        OutputFormat::Json => {
            let list = |xs: &[(usize, String, f64)]| {
                xs.iter()
                    .map(|(i, id, d)| json!({"index": i, "id": id, "depth": d}))
                    .collect::<Vec<_>>()
            };
            to_json(&json!({
                "reference_size": corpus.source.len(),
                "source": list(&source),
                "target": list(&target),
            }))
        }
        OutputFormat::Csv => csv_table(
            ["role", "index", "id", "depth"],
            source
                .into_iter()
                .map(|e| ("source", e))
                .chain(target.into_iter().map(|e| ("target", e)))
                .map(|(role, (i, id, d))| [role.to_string(), i.to_string(), id, fixed(d)]),
        ),
    }
}

pub fn render_median(median: &MedianInfo, format: OutputFormat) -> String {
    match format {
        OutputFormat::Json => to_json(median),
        OutputFormat::Csv => csv_table(
            ["index", "id", "depth"],
            [[median.index.to_string(), median.id.clone(), fixed(median.depth)]],
        ),
    }
}

pub fn render_q(q: &QStatistic, format: OutputFormat) -> String {
    match format {
        OutputFormat::Json => to_json(&json!({"q": q.value, "pairs": q.pair_count})),
        OutputFormat::Csv => csv_table(["q", "pairs"], [[fixed(q.value), q.pair_count.to_string()]]),
    }
}

/// Weights for one λ; `None` marks a degenerate subset.
pub struct WeightsEntry {
    pub lambda: Lambda,
    pub kept_indices: Vec<usize>,
    pub table: Option<WeightTable>,
}

pub fn render_weights(corpus: &Corpus, depths: &DepthTable, entries: &[WeightsEntry], format: OutputFormat) -> String {
    let rows = |e: &WeightsEntry| {
        e.kept_indices
            .iter()
            .enumerate()
            .map(|(k, &i)| (i, corpus.target[i].id.clone(), depths.scores[i], e.table.as_ref().map(|t| t.weights[k])))
            .collect::<Vec<_>>()
    };
    match format {
        OutputFormat::Json => {
            let list: Vec<_> = entries
                .iter()
                .map(|e| {
                    let weights: Vec<_> = rows(e)
                        .into_iter()
                        .map(|(i, id, d, w)| json!({"index": i, "id": id, "depth": d, "weight": w}))
                        .collect();
                    json!({
                        "lambda": e.lambda.get(),
                        "kept_count": e.kept_indices.len(),
                        "clamped_count": e.table.as_ref().map(|t| t.clamped_count),
                        "degenerate": e.table.is_none(),
                        "weights": weights,
                    })
                })
                .collect();
            to_json(&list)
        }
        OutputFormat::Csv => csv_table(
            ["lambda", "index", "id", "depth", "weight"],
            entries.iter().flat_map(|e| {
                rows(e)
                    .into_iter()
                    .map(move |(i, id, d, w)| [e.lambda.to_string(), i.to_string(), id, fixed(d), fixed_opt(w)])
            }),
        ),
    }
}

const CURVE_HEADER: [&str; 7] = ["lambda", "kept_count", "f1_mean", "f1_std", "df1_mean", "df1_std", "degenerate_runs"];

fn curve_fields(p: &CurvePoint) -> [String; 7] {
    [
        p.lambda.to_string(),
        p.kept_count.to_string(),
        fixed(p.f1_mean),
        fixed(p.f1_std),
        fixed_opt(p.df1_mean),
        fixed_opt(p.df1_std),
        p.degenerate_runs.to_string(),
    ]
}

/// One model's curve as CSV.
pub fn render_curve(points: &[CurvePoint]) -> String {
    csv_table(CURVE_HEADER, points.iter().map(curve_fields))
}

/// Both curves in one stream: a JSON summary, or CSV with a leading
/// `model` column.
pub fn render_demo(summary: &DemoSummary, format: OutputFormat) -> String {
    match format {
        OutputFormat::Json => to_json(summary),
        OutputFormat::Csv => {
            let mut header = vec!["model"];
            header.extend(CURVE_HEADER);
            let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
            w.write_record(&header).expect("in-memory CSV write");
            for (model, points) in [("A", &summary.model_a), ("B", &summary.model_b)] {
                for p in points {
                    let mut rec = vec![model.to_string()];
                    rec.extend(curve_fields(p));
                    w.write_record(&rec).expect("in-memory CSV write");
                }
            }
            String::from_utf8(w.into_inner().expect("in-memory CSV flush")).expect("CSV of UTF-8 fields")
        }
    }
}
