//! Depth weights, λ-percentile subsets, DF1 and micro-F1.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Corpus;
use crate::depth::{self, DepthError, DepthTable, MedianInfo, QStatistic};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error(transparent)]
    Depth(#[from] DepthError),
    #[error("lambda must be an integer in [0, 100), got {0}")]
    InvalidLambda(String),
    #[error("lambda grid is empty")]
    EmptyGrid,
    #[error("lambda grid must be strictly increasing")]
    GridNotIncreasing,
    #[error("evaluation subset is empty")]
    EmptySubset,
    #[error("DEGENERATE_WEIGHTS: every kept sample is at least as deep as the source median")]
    DegenerateWeights,
    #[error("length mismatch: {labels} labels, {predictions} predictions, {weights} weights")]
    LengthMismatch { labels: usize, predictions: usize, weights: usize },
    #[error("missing prediction at position {0}")]
    MissingPrediction(usize),
    #[error("no samples to score")]
    EmptyInput,
}

/// Integer percentile in `[0, 100)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct Lambda(u8);

impl Lambda {
    pub const ZERO: Lambda = Lambda(0);

    pub fn new(value: u32) -> Result<Self, MetricError> {
        if value < 100 {
            Ok(Lambda(value as u8))
        } else {
            Err(MetricError::InvalidLambda(value.to_string()))
        }
    }

    pub fn get(self) -> u32 {
        self.0 as u32
    }

    /// How many of `n` samples this percentile removes: `floor(λ·n/100)`.
    pub fn removed_of(self, n: usize) -> usize {
        self.0 as usize * n / 100
    }
}

impl TryFrom<u32> for Lambda {
    type Error = MetricError;
    fn try_from(value: u32) -> Result<Self, Self::Error> {
        Lambda::new(value)
    }
}

impl From<Lambda> for u32 {
    fn from(l: Lambda) -> u32 {
        l.get()
    }
}

impl fmt::Display for Lambda {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Non-empty, strictly increasing list of percentiles.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LambdaGrid(Vec<Lambda>);

impl LambdaGrid {
    pub fn new(values: Vec<Lambda>) -> Result<Self, MetricError> {
        if values.is_empty() {
            return Err(MetricError::EmptyGrid);
        }
        if values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(MetricError::GridNotIncreasing);
        }
        Ok(LambdaGrid(values))
    }

    pub fn from_values(values: &[u32]) -> Result<Self, MetricError> {
        Self::new(values.iter().map(|&v| Lambda::new(v)).collect::<Result<_, _>>()?)
    }

    pub fn iter(&self) -> impl Iterator<Item = Lambda> + '_ {
        self.0.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl Default for LambdaGrid {
    /// `0, 25, 50, 75, 90`.
    fn default() -> Self {
        LambdaGrid([0, 25, 50, 75, 90].into_iter().map(Lambda).collect())
    }
}

impl FromStr for LambdaGrid {
    type Err = MetricError;

    /// Parses comma-separated integers, e.g. `0,25,50`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.trim().is_empty() {
            return Err(MetricError::EmptyGrid);
        }
        let values = s
            .split(',')
            .map(|part| {
                let part = part.trim();
                part.parse::<u32>()
                    .map_err(|_| MetricError::InvalidLambda(part.to_string()))
                    .and_then(Lambda::new)
            })
            .collect::<Result<Vec<_>, _>>()?;
        LambdaGrid::new(values)
    }
}

/// Target samples kept after dropping the λ% most source-similar ones.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LambdaSubset {
    pub lambda: Lambda,
    /// Ascending target indices.
    pub kept_indices: Vec<usize>,
    pub removed_count: usize,
}

/// Removes the `floor(λ·N/100)` highest-depth samples.
///
/// Samples are ranked by `(depth, index)` ascending and the first `N - m`
/// are kept, so among equal depths the later index is removed first.
pub fn lambda_subset(target_depths: &DepthTable, lambda: Lambda) -> LambdaSubset {
    let n = target_depths.len();
    let removed_count = lambda.removed_of(n);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        target_depths.scores[a]
            .total_cmp(&target_depths.scores[b])
            .then(a.cmp(&b))
    });
    order.truncate(n - removed_count);
    order.sort_unstable();
    LambdaSubset { lambda, kept_indices: order, removed_count }
}

/// Normalized dissimilarity weights over one subset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightTable {
    /// Target indices the weights refer to.
    pub indices: Vec<usize>,
    pub weights: Vec<f64>,
    /// Samples deeper than the source median whose raw weight was negative.
    pub clamped_count: usize,
}

impl WeightTable {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn uniform(n: usize) -> Self {
        WeightTable {
            indices: (0..n).collect(),
            weights: vec![1.0 / n as f64; n],
            clamped_count: 0,
        }
    }
}

/// `w_i = max(0, D(s0) - D(t_i)) / Σ max(0, D(s0) - D(t_j))` over the subset.
pub fn depth_weights(
    median_depth: f64,
    target_depths: &DepthTable,
    subset: &LambdaSubset,
) -> Result<WeightTable, MetricError> {
    if subset.kept_indices.is_empty() {
        return Err(MetricError::EmptySubset);
    }
    let mut clamped_count = 0;
    let raw: Vec<f64> = subset
        .kept_indices
        .iter()
        .map(|&i| {
            let gap = median_depth - target_depths.scores[i];
            if gap < 0.0 {
                clamped_count += 1;
                0.0
            } else {
                gap
            }
        })
        .collect();
    let total: f64 = raw.iter().sum();
    if total <= 0.0 {
        return Err(MetricError::DegenerateWeights);
    }
    Ok(WeightTable {
        indices: subset.kept_indices.clone(),
        weights: raw.into_iter().map(|r| r / total).collect(),
        clamped_count,
    })
}

/// Depth-weighted true positive, false positive and false negative mass.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ConfusionTally {
    pub dtp: f64,
    pub dfp: f64,
    pub dfn: f64,
}

impl ConfusionTally {
    /// `2·DTP / (2·DTP + DFP + DFN)`; `None` when all mass is zero.
    pub fn f1(&self) -> Option<f64> {
        let denom = 2.0 * self.dtp + self.dfp + self.dfn;
        (denom > 0.0).then(|| 2.0 * self.dtp / denom)
    }

    fn add(&mut self, other: &ConfusionTally) {
        self.dtp += other.dtp;
        self.dfp += other.dfp;
        self.dfn += other.dfn;
    }
}

fn check_aligned<L, P>(labels: &[L], predictions: &[Option<P>], weights: usize) -> Result<(), MetricError> {
    if labels.len() != predictions.len() || labels.len() != weights {
        return Err(MetricError::LengthMismatch {
            labels: labels.len(),
            predictions: predictions.len(),
            weights,
        });
    }
    if let Some(pos) = predictions.iter().position(Option::is_none) {
        return Err(MetricError::MissingPrediction(pos));
    }
    Ok(())
}

/// Per-class weighted tallies. A correct sample adds `w` to its class's TP;
/// a miss adds `w` to the predicted class's FP and the gold class's FN.
pub fn class_tallies<'a, L, P>(
    labels: &'a [L],
    predictions: &'a [Option<P>],
    weights: &WeightTable,
) -> Result<BTreeMap<&'a str, ConfusionTally>, MetricError>
where
    L: AsRef<str>,
    P: AsRef<str>,
{
    check_aligned(labels, predictions, weights.len())?;
    let mut per_class: BTreeMap<&str, ConfusionTally> = BTreeMap::new();
    for ((gold, pred), &w) in labels.iter().zip(predictions).zip(&weights.weights) {
        let gold = gold.as_ref();
        let pred = pred.as_ref().map(AsRef::as_ref).unwrap_or_default();
        if gold == pred {
            per_class.entry(gold).or_default().dtp += w;
        } else {
            per_class.entry(pred).or_default().dfp += w;
            per_class.entry(gold).or_default().dfn += w;
        }
    }
    Ok(per_class)
}

/// Micro-aggregated tally across classes.
pub fn micro_tally<L: AsRef<str>, P: AsRef<str>>(
    labels: &[L],
    predictions: &[Option<P>],
    weights: &WeightTable,
) -> Result<ConfusionTally, MetricError> {
    let mut total = ConfusionTally::default();
    for tally in class_tallies(labels, predictions, weights)?.values() {
        total.add(tally);
    }
    Ok(total)
}

/// Micro-averaged depth-weighted F1.
pub fn depth_f1<L: AsRef<str>, P: AsRef<str>>(
    labels: &[L],
    predictions: &[Option<P>],
    weights: &WeightTable,
) -> Result<f64, MetricError> {
    micro_tally(labels, predictions, weights)?
        .f1()
        .ok_or(MetricError::DegenerateWeights)
}

/// Micro-averaged F1 from integer per-class counts.
pub fn micro_f1<L: AsRef<str>, P: AsRef<str>>(labels: &[L], predictions: &[Option<P>]) -> Result<f64, MetricError> {
    check_aligned(labels, predictions, labels.len())?;
    if labels.is_empty() {
        return Err(MetricError::EmptyInput);
    }
    // (tp, fp, fn) per class
    let mut counts: BTreeMap<&str, (u64, u64, u64)> = BTreeMap::new();
    for (gold, pred) in labels.iter().zip(predictions) {
        let gold = gold.as_ref();
        let pred = pred.as_ref().map(AsRef::as_ref).unwrap_or_default();
        if gold == pred {
            counts.entry(gold).or_default().0 += 1;
        } else {
            counts.entry(pred).or_default().1 += 1;
            counts.entry(gold).or_default().2 += 1;
        }
    }
    let (tp, fp, fneg) = counts
        .values()
        .fold((0, 0, 0), |acc, c| (acc.0 + c.0, acc.1 + c.1, acc.2 + c.2));
    Ok(2.0 * tp as f64 / (2 * tp + fp + fneg) as f64)
}

/// Depth quantities shared by every λ row of one corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthAnalysis {
    pub source_depths: DepthTable,
    pub target_depths: DepthTable,
    pub median: MedianInfo,
    pub q: QStatistic,
}

/// Scores both domains against the source set and locates the median.
pub fn analyze(corpus: &Corpus) -> Result<DepthAnalysis, MetricError> {
    let source = corpus.source_vectors();
    let target = corpus.target_vectors();
    if target.is_empty() {
        return Err(MetricError::EmptyInput);
    }
    let source_depths = depth::depth_scores(&source, &source)?;
    let target_depths = depth::depth_scores(&target, &source)?;
    let ids: Vec<&str> = corpus.source.iter().map(|s| s.id.as_str()).collect();
    let median = depth::source_median(&source_depths, &ids)?;
    let q = depth::q_statistic(&source_depths, &target_depths)?;
    Ok(DepthAnalysis { source_depths, target_depths, median, q })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub lambda: Lambda,
    pub kept_count: usize,
    pub micro_f1: f64,
    /// `None` when the row's weights are degenerate.
    pub df1: Option<f64>,
    pub degenerate: bool,
    pub clamped_count: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub corpus: Option<String>,
    /// Unix seconds; absent unless explicitly requested.
    pub timestamp: Option<u64>,
    pub tool_version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub q: QStatistic,
    pub median: MedianInfo,
    pub rows: Vec<SweepRow>,
    pub metadata: ReportMetadata,
}

/// One λ row from precomputed depths.
pub fn evaluate_row<L: AsRef<str>, P: AsRef<str>>(
    analysis: &DepthAnalysis,
    labels: &[L],
    predictions: &[Option<P>],
    lambda: Lambda,
) -> Result<SweepRow, MetricError> {
    let subset = lambda_subset(&analysis.target_depths, lambda);
    let kept_labels: Vec<&str> = subset.kept_indices.iter().map(|&i| labels[i].as_ref()).collect();
    let kept_preds: Vec<Option<&str>> = subset
        .kept_indices
        .iter()
        .map(|&i| predictions[i].as_ref().map(AsRef::as_ref))
        .collect();
    let micro_f1 = micro_f1(&kept_labels, &kept_preds)?;
    let (df1, clamped_count) = match depth_weights(analysis.median.depth, &analysis.target_depths, &subset) {
        Ok(weights) => (Some(depth_f1(&kept_labels, &kept_preds, &weights)?), weights.clamped_count),
        Err(MetricError::DegenerateWeights) => {
            let deeper = subset
                .kept_indices
                .iter()
                .filter(|&&i| analysis.target_depths.scores[i] > analysis.median.depth)
                .count();
            (None, deeper)
        }
        Err(e) => return Err(e),
    };
    Ok(SweepRow {
        lambda,
        kept_count: subset.kept_indices.len(),
        micro_f1,
        degenerate: df1.is_none(),
        df1,
        clamped_count,
    })
}

/// Runs the λ sweep over labels and predictions aligned with the target set.
pub fn sweep<L: AsRef<str>, P: AsRef<str>>(
    analysis: &DepthAnalysis,
    labels: &[L],
    predictions: &[Option<P>],
    grid: &LambdaGrid,
) -> Result<EvaluationReport, MetricError> {
    let n = analysis.target_depths.len();
    check_aligned(labels, predictions, n)?;
    let rows = grid
        .iter()
        .map(|lambda| evaluate_row(analysis, labels, predictions, lambda))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(EvaluationReport {
        q: analysis.q,
        median: analysis.median.clone(),
        rows,
        metadata: ReportMetadata {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            ..Default::default()
        },
    })
}

/// Full evaluation of a corpus whose target samples carry predictions.
pub fn evaluate_sweep(corpus: &Corpus, grid: &LambdaGrid) -> Result<EvaluationReport, MetricError> {
    let analysis = analyze(corpus)?;
    sweep(&analysis, &corpus.target_labels(), &corpus.target_predictions(), grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn table(scores: &[f64]) -> DepthTable {
        DepthTable { scores: scores.to_vec(), reference_size: 10 }
    }

    fn all(n: usize) -> LambdaSubset {
        LambdaSubset { lambda: Lambda::ZERO, kept_indices: (0..n).collect(), removed_count: 0 }
    }

    fn some(xs: &[&'static str]) -> Vec<Option<&'static str>> {
        xs.iter().map(|x| Some(*x)).collect()
    }

    #[test]
    fn weights_by_hand() {
        let w = depth_weights(1.8, &table(&[1.6, 1.4]), &all(2)).unwrap();
        assert_abs_diff_eq!(w.weights[0], 1.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(w.weights[1], 2.0 / 3.0, epsilon = 1e-12);

        let w = depth_weights(1.8, &table(&[1.2]), &all(1)).unwrap();
        assert_eq!(w.weights, vec![1.0]);

        let w = depth_weights(1.8, &table(&[1.8, 1.4]), &all(2)).unwrap();
        assert_eq!(w.weights, vec![0.0, 1.0]);
        assert_eq!(w.clamped_count, 0);
    }

    #[test]
    fn negative_gaps_are_clamped() {
        let w = depth_weights(1.5, &table(&[1.9, 1.0, 1.25]), &all(3)).unwrap();
        assert_eq!(w.clamped_count, 1);
        assert_eq!(w.weights[0], 0.0);
        assert_abs_diff_eq!(w.weights[1], 2.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(w.weights.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_and_empty_weights() {
        assert_eq!(depth_weights(1.5, &table(&[1.5, 1.7]), &all(2)), Err(MetricError::DegenerateWeights));
        assert_eq!(depth_weights(1.5, &table(&[]), &all(0)), Err(MetricError::EmptySubset));
    }

    #[test]
    fn subset_removes_deepest() {
        let t = table(&[1.0, 1.2, 1.4, 1.6]);
        let s = lambda_subset(&t, Lambda::new(50).unwrap());
        assert_eq!(s.kept_indices, vec![0, 1]);
        assert_eq!(s.removed_count, 2);

        let shuffled = table(&[1.6, 1.0, 1.4, 1.2]);
        assert_eq!(lambda_subset(&shuffled, Lambda::new(50).unwrap()).kept_indices, vec![1, 3]);
        assert_eq!(lambda_subset(&shuffled, Lambda::ZERO).kept_indices, vec![0, 1, 2, 3]);
    }

    #[test]
    fn subset_ties_remove_later_index() {
        let t = table(&[1.0, 1.5, 1.5, 1.5]);
        let s = lambda_subset(&t, Lambda::new(50).unwrap());
        assert_eq!(s.kept_indices, vec![0, 1]);
    }

    #[test]
    fn ninety_percent_keeps_a_tenth() {
        let t = table(&(0..1000).map(|i| i as f64 / 1000.0).collect::<Vec<_>>());
        assert_eq!(lambda_subset(&t, Lambda::new(90).unwrap()).kept_indices.len(), 100);
    }

    #[test]
    fn df1_by_hand() {
        let w = WeightTable { indices: vec![0, 1], weights: vec![0.75, 0.25], clamped_count: 0 };
        let labels = ["a", "b"];
        let t = micro_tally(&labels, &some(&["a", "a"]), &w).unwrap();
        assert_eq!(t, ConfusionTally { dtp: 0.75, dfp: 0.25, dfn: 0.25 });
        assert_eq!(depth_f1(&labels, &some(&["a", "a"]), &w).unwrap(), 0.75);
        assert_eq!(depth_f1(&labels, &some(&["a", "b"]), &w).unwrap(), 1.0);
        assert_eq!(depth_f1(&labels, &some(&["b", "a"]), &w).unwrap(), 0.0);
    }

    #[test]
    fn df1_errors() {
        let w = WeightTable::uniform(2);
        assert!(matches!(depth_f1(&["a"], &some(&["a"]), &w), Err(MetricError::LengthMismatch { .. })));
        let preds = vec![Some("a"), None];
        assert_eq!(depth_f1(&["a", "b"], &preds, &w), Err(MetricError::MissingPrediction(1)));
    }

    #[test]
    fn per_class_attribution() {
        let w = WeightTable { indices: vec![0, 1, 2], weights: vec![0.5, 0.3, 0.2], clamped_count: 0 };
        let preds = some(&["x", "x", "y"]);
        let tallies = class_tallies(&["x", "y", "y"], &preds, &w).unwrap();
        assert_eq!(tallies["x"], ConfusionTally { dtp: 0.5, dfp: 0.3, dfn: 0.0 });
        assert_eq!(tallies["y"], ConfusionTally { dtp: 0.2, dfp: 0.0, dfn: 0.3 });
    }

    #[test]
    fn micro_f1_fixtures() {
        assert_eq!(micro_f1(&["a", "b", "a", "c"], &some(&["a", "b", "a", "a"])).unwrap(), 0.75);
        assert_eq!(micro_f1(&["a", "b"], &some(&["a", "b"])).unwrap(), 1.0);
        assert_eq!(micro_f1(&["a", "b"], &some(&["b", "a"])).unwrap(), 0.0);
        let none: [&str; 0] = [];
        assert_eq!(micro_f1(&none, &some(&[])), Err(MetricError::EmptyInput));
    }

    #[test]
    fn grid_parsing() {
        let g: LambdaGrid = "0,25,50,75,90".parse().unwrap();
        assert_eq!(g, LambdaGrid::default());
        assert_eq!("".parse::<LambdaGrid>(), Err(MetricError::EmptyGrid));
        assert_eq!("50,25".parse::<LambdaGrid>(), Err(MetricError::GridNotIncreasing));
        assert_eq!("25,25".parse::<LambdaGrid>(), Err(MetricError::GridNotIncreasing));
        assert!(matches!("100".parse::<LambdaGrid>(), Err(MetricError::InvalidLambda(_))));
        assert!(matches!("-5".parse::<LambdaGrid>(), Err(MetricError::InvalidLambda(_))));
        assert!(matches!("1.5".parse::<LambdaGrid>(), Err(MetricError::InvalidLambda(_))));
    }
}
