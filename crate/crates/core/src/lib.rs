//! Depth-weighted F1 (DF1) for cross-domain text classification.
//!
//! Target samples are weighted by how far their TTE depth with respect to
//! the source domain falls below the depth of the source median, and F1 is
//! computed from the weighted confusion mass. A λ sweep re-evaluates on the
//! target samples that remain after dropping the λ% most source-similar.
//!
//! Modules:
//!
//! * [`corpus`] loads and validates JSONL embedding corpora and predictions.
//! * [`depth`] has cosine distance, TTE depth, the source median and Q.
//! * [`metric`] has weights, λ subsets, DF1, micro-F1 and the sweep.
//! * [`demo`] generates synthetic corpora and the model A / B illustration.
//! * [`report`] renders results as JSON or CSV.
//! * [`cli`] is the `df1` command-line front end.

pub mod cli;
pub mod corpus;
pub mod demo;
pub mod depth;
pub mod metric;
pub mod report;

pub use corpus::{attach_predictions, load_corpus, validate_corpus, Corpus, EmbeddedSample, Role};
pub use depth::{cosine_distance, depth_scores, q_statistic, source_median, DepthTable, MedianInfo, QStatistic};
pub use metric::{
    depth_f1, depth_weights, evaluate_sweep, lambda_subset, micro_f1, EvaluationReport, Lambda, LambdaGrid,
    LambdaSubset, WeightTable,
};
