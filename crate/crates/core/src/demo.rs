//! Synthetic two-domain corpora and the stochastic demonstration models.
//!
//! Model A is right with a fixed probability on every target sample. Model B
//! starts out more accurate but its success probability falls linearly with
//! the sample's dissimilarity rank, so it looks as good as A under plain F1
//! while losing ground on the source-dissimilar tail that DF1 emphasizes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, EmbeddedSample, Role};
use crate::metric::{self, EvaluationReport, LambdaGrid, MetricError, WeightTable};

/// Distance of the source centroid from the origin, in Gaussian scale units.
pub const SOURCE_CENTROID_NORM: f64 = 2.0;

const CORPUS_STREAM: u64 = 0;
const MODEL_A_STREAM: u64 = 1;
const MODEL_B_STREAM: u64 = 2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DemoError {
    #[error("invalid demo config: {0}")]
    InvalidConfig(String),
    #[error("weights cover {weights} samples but the corpus has {targets} targets")]
    Misaligned { weights: usize, targets: usize },
    #[error("need at least two classes to draw a wrong label")]
    TooFewClasses,
    #[error(transparent)]
    Metric(#[from] MetricError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelKind {
    A,
    B,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemoConfig {
    pub gamma_a: f64,
    pub gamma_b: f64,
    /// Drop in model B's success probability per unit of dissimilarity rank.
    pub beta: f64,
    pub p_min: f64,
    pub n_source: usize,
    pub n_target: usize,
    pub n_classes: usize,
    pub dimension: usize,
    /// Distance between the source and target centroids.
    pub separation: f64,
    pub seed: u64,
}

impl Default for DemoConfig {
    fn default() -> Self {
        DemoConfig {
            gamma_a: 0.83,
            gamma_b: 0.95,
            beta: 0.24,
            p_min: 0.0,
            n_source: 1000,
            n_target: 1000,
            n_classes: 5,
            dimension: 32,
            // Q is about 0.34 at this separation.
            separation: 0.45,
            seed: 0,
        }
    }
}

impl DemoConfig {
    pub fn validate(&self) -> Result<(), DemoError> {
        let bad = |msg: &str| Err(DemoError::InvalidConfig(msg.to_string()));
        let unit = |p: f64| p > 0.0 && p <= 1.0;
        if !unit(self.gamma_a) || !unit(self.gamma_b) {
            return bad("gamma_a and gamma_b must lie in (0, 1]");
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return bad("beta must be a finite non-negative number");
        }
        if !(0.0..=self.gamma_b).contains(&self.p_min) {
            return bad("p_min must lie in [0, gamma_b]");
        }
        if self.n_source == 0 || self.n_target == 0 || self.dimension == 0 {
            return bad("n_source, n_target and dimension must be positive");
        }
        if self.n_classes < 2 {
            return bad("n_classes must be at least 2");
        }
        if !(self.separation >= 0.0 && self.separation.is_finite()) {
            return bad("separation must be a finite non-negative number");
        }
        Ok(())
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }
}

pub fn class_name(k: usize) -> String {
    format!("c{k}")
}

// Per-coordinate noise is N(0, 1/d), so the noise has unit expected squared
// norm in any dimension and `separation` is measured in that unit.
fn unit_gaussian_around(center: &[f64], rng: &mut ChaCha8Rng) -> Vec<f64> {
    let sigma = (center.len() as f64).sqrt().recip();
    loop {
        let v: Vec<f64> = center
            .iter()
            .map(|c| c + sigma * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Draws a labeled two-domain corpus with unit-length embeddings.
///
/// Source vectors scatter around `SOURCE_CENTROID_NORM · e0`; the target
/// centroid sits `separation` away along `e1` (along `e0` when the dimension
/// is 1).
pub fn synth_corpus(cfg: &DemoConfig) -> Result<Corpus, DemoError> {
    cfg.validate()?;
    let mut rng = cfg.rng(CORPUS_STREAM);
    let mut source_center = vec![0.0; cfg.dimension];
    source_center[0] = SOURCE_CENTROID_NORM;
    let mut target_center = source_center.clone();
    target_center[1.min(cfg.dimension - 1)] += cfg.separation;

    let mut samples = Vec::with_capacity(cfg.n_source + cfg.n_target);
    let plan = [(Role::Source, cfg.n_source, &source_center, "s"), (Role::Target, cfg.n_target, &target_center, "t")];
    for (role, count, center, prefix) in plan {
        for i in 0..count {
            let vector = unit_gaussian_around(center, &mut rng);
            let label = class_name(rng.random_range(0..cfg.n_classes));
            samples.push(EmbeddedSample { id: format!("{prefix}{i:06}"), role, label, prediction: None, vector });
        }
    }
    Ok(Corpus::from_samples(cfg.dimension, samples))
}

/// Fractional rank of each weight among all weights, ascending, in `[0, 1]`.
/// Equal weights are ranked by position.
pub fn dissimilarity_ranks(weights: &[f64]) -> Vec<f64> {
    let n = weights.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| weights[a].total_cmp(&weights[b]).then(a.cmp(&b)));
    let mut ranks = vec![0.0; n];
    let scale = if n > 1 { (n - 1) as f64 } else { 1.0 };
    for (rank, i) in order.into_iter().enumerate() {
        ranks[i] = rank as f64 / scale;
    }
    ranks
}

/// Success probability of each target sample under the given model.
pub fn success_probabilities(kind: ModelKind, weights_full: &WeightTable, cfg: &DemoConfig) -> Vec<f64> {
    match kind {
        ModelKind::A => vec![cfg.gamma_a; weights_full.len()],
        ModelKind::B => dissimilarity_ranks(&weights_full.weights)
            .into_iter()
            .map(|r| (cfg.gamma_b - cfg.beta * r).max(cfg.p_min))
            .collect(),
    }
}

/// Draws one prediction per target sample. Misses get a uniformly random
/// wrong label from the corpus label set.
pub fn demo_predict(
    kind: ModelKind,
    corpus: &Corpus,
    weights_full: &WeightTable,
    cfg: &DemoConfig,
) -> Result<Vec<String>, DemoError> {
    if weights_full.len() != corpus.target.len() {
        return Err(DemoError::Misaligned { weights: weights_full.len(), targets: corpus.target.len() });
    }
    let classes: Vec<&str> = corpus.label_set.iter().map(String::as_str).collect();
    if classes.len() < 2 {
        return Err(DemoError::TooFewClasses);
    }
    let mut rng = cfg.rng(match kind {
        ModelKind::A => MODEL_A_STREAM,
        ModelKind::B => MODEL_B_STREAM,
    });
    let probabilities = success_probabilities(kind, weights_full, cfg);
    let predictions = corpus
        .target
        .iter()
        .zip(probabilities)
        .map(|(sample, p)| {
            if rng.random_bool(p.clamp(0.0, 1.0)) {
                return sample.label.clone();
            }
            let wrong: Vec<&str> = classes.iter().copied().filter(|c| *c != sample.label).collect();
            wrong[rng.random_range(0..wrong.len())].to_string()
        })
        .collect();
    Ok(predictions)
}

/// Reports for both models on one synthetic corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct DemoRun {
    pub model_a: EvaluationReport,
    pub model_b: EvaluationReport,
}

pub fn run_demo(cfg: &DemoConfig, grid: &LambdaGrid) -> Result<DemoRun, DemoError> {
    let corpus = synth_corpus(cfg)?;
    let analysis = metric::analyze(&corpus)?;
    let full = metric::lambda_subset(&analysis.target_depths, metric::Lambda::ZERO);
    let weights_full = metric::depth_weights(analysis.median.depth, &analysis.target_depths, &full)?;
    let labels = corpus.target_labels();

    let report = |kind| -> Result<EvaluationReport, DemoError> {
        let predictions: Vec<Option<String>> =
            demo_predict(kind, &corpus, &weights_full, cfg)?.into_iter().map(Some).collect();
        Ok(metric::sweep(&analysis, &labels, &predictions, grid)?)
    };
    Ok(DemoRun { model_a: report(ModelKind::A)?, model_b: report(ModelKind::B)? })
}

/// Seed-aggregated statistics at one λ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub lambda: u32,
    pub kept_count: usize,
    pub f1_mean: f64,
    pub f1_std: f64,
    /// Over non-degenerate runs only; `None` if every run was degenerate.
    pub df1_mean: Option<f64>,
    pub df1_std: Option<f64>,
    pub degenerate_runs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemoSummary {
    pub config: DemoConfig,
    pub seeds: u64,
    pub q_mean: f64,
    pub model_a: Vec<CurvePoint>,
    pub model_b: Vec<CurvePoint>,
}

/// Mean and sample standard deviation (zero for a single value).
pub fn mean_std(xs: &[f64]) -> Option<(f64, f64)> {
    if xs.is_empty() {
        return None;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() == 1 {
        return Some((mean, 0.0));
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Some((mean, var.sqrt()))
}

fn curve(reports: &[EvaluationReport]) -> Vec<CurvePoint> {
    let n_rows = reports[0].rows.len();
    (0..n_rows)
        .map(|k| {
            let rows: Vec<_> = reports.iter().map(|r| &r.rows[k]).collect();
            let f1: Vec<f64> = rows.iter().map(|r| r.micro_f1).collect();
            let df1: Vec<f64> = rows.iter().filter_map(|r| r.df1).collect();
            let (f1_mean, f1_std) = mean_std(&f1).unwrap_or_default();
            let df1_stats = mean_std(&df1);
            CurvePoint {
                lambda: rows[0].lambda.get(),
                kept_count: rows[0].kept_count,
                f1_mean,
                f1_std,
                df1_mean: df1_stats.map(|s| s.0),
                df1_std: df1_stats.map(|s| s.1),
                degenerate_runs: rows.len() - df1.len(),
            }
        })
        .collect()
}

/// Runs the demonstration for seeds `cfg.seed .. cfg.seed + seeds` and
/// aggregates each model's curve.
pub fn run_demo_seeds(cfg: &DemoConfig, grid: &LambdaGrid, seeds: u64) -> Result<DemoSummary, DemoError> {
    if seeds == 0 {
        return Err(DemoError::InvalidConfig("seeds must be positive".into()));
    }
    let mut a = Vec::with_capacity(seeds as usize);
    let mut b = Vec::with_capacity(seeds as usize);
    for offset in 0..seeds {
        let run_cfg = DemoConfig { seed: cfg.seed.wrapping_add(offset), ..cfg.clone() };
        let run = run_demo(&run_cfg, grid)?;
        a.push(run.model_a);
        b.push(run.model_b);
    }
    let q: Vec<f64> = a.iter().map(|r| r.q.value).collect();
    Ok(DemoSummary {
        config: cfg.clone(),
        seeds,
        q_mean: mean_std(&q).map(|s| s.0).unwrap_or_default(),
        model_a: curve(&a),
        model_b: curve(&b),
    })
}
