//! Brute-force reference implementations used as test oracles. They follow
//! the textbook definitions with explicit loops and share no code with the
//! library paths they check.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn naive_cosine_distance(u: &[f64], v: &[f64]) -> f64 {
    let mut uv = 0.0;
    let mut uu = 0.0;
    let mut vv = 0.0;
    for k in 0..u.len() {
        uv += u[k] * v[k];
        uu += u[k] * u[k];
        vv += v[k] * v[k];
    }
    1.0 - uv / (uu.sqrt() * vv.sqrt())
}

/// `2 - mean_j cosdist(q, r_j)` by an explicit double loop.
pub fn naive_depths(queries: &[Vec<f64>], reference: &[Vec<f64>]) -> Vec<f64> {
    let mut out = Vec::with_capacity(queries.len());
    for q in queries {
        let mut total = 0.0;
        for r in reference {
            total += naive_cosine_distance(q, r);
        }
        out.push(2.0 - total / reference.len() as f64);
    }
    out
}

pub fn naive_argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for i in 1..xs.len() {
        if xs[i] > xs[best] {
            best = i;
        }
    }
    best
}

pub fn naive_q(source: &[f64], target: &[f64]) -> f64 {
    let mut hits = 0usize;
    for s in source {
        for t in target {
            if s <= t {
                hits += 1;
            }
        }
    }
    hits as f64 / (source.len() * target.len()) as f64
}

/// DF1 from per-class weighted counts, one pass over the samples per class.
pub fn naive_df1(labels: &[String], preds: &[String], weights: &[f64]) -> f64 {
    let mut classes: Vec<&String> = labels.iter().chain(preds.iter()).collect();
    classes.sort();
    classes.dedup();
    let (mut tp, mut fp, mut fneg) = (0.0, 0.0, 0.0);
    for c in classes {
        for i in 0..labels.len() {
            let gold = &labels[i] == c;
            let pred = &preds[i] == c;
            if gold && pred {
                tp += weights[i];
            } else if pred {
                fp += weights[i];
            } else if gold {
                fneg += weights[i];
            }
        }
    }
    2.0 * tp / (2.0 * tp + fp + fneg)
}

pub fn weighted_accuracy(labels: &[String], preds: &[String], weights: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 0..labels.len() {
        if labels[i] == preds[i] {
            acc += weights[i];
        }
    }
    acc
}

/// A small random instance: source and target vectors plus target labels,
/// predictions and a normalized weight vector.
pub struct Instance {
    pub source: Vec<Vec<f64>>,
    pub target: Vec<Vec<f64>>,
    pub labels: Vec<String>,
    pub preds: Vec<String>,
    pub weights: Vec<f64>,
}

pub fn random_vector(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        if v.iter().map(|x| x * x).sum::<f64>() > 1e-6 {
            return v;
        }
    }
}

pub fn random_instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = rng.random_range(1..=8);
    let n_s = rng.random_range(1..=20);
    let n_t = rng.random_range(1..=20);
    let n_classes = rng.random_range(2..=4);
    let source = (0..n_s).map(|_| random_vector(&mut rng, dim)).collect();
    let target = (0..n_t).map(|_| random_vector(&mut rng, dim)).collect();
    let label = |rng: &mut ChaCha8Rng| format!("c{}", rng.random_range(0..n_classes));
    let labels: Vec<String> = (0..n_t).map(|_| label(&mut rng)).collect();
    let preds: Vec<String> = (0..n_t).map(|_| label(&mut rng)).collect();
    let raw: Vec<f64> = (0..n_t).map(|_| rng.random_range(0.0..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let weights = raw.iter().map(|w| w / total).collect();
    Instance { source, target, labels, preds, weights }
}
