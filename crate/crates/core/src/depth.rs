//! Cosine distance, TTE depth, the source median and the Q statistic.
//!
//! The depth of `x` with respect to a reference set `R` is
//! `2 - mean_j cosdist(x, r_j)`, taking the expectation under the uniform
//! distribution over `R`. A query that is itself a member of `R` keeps its
//! zero self-distance in the mean.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DepthError {
    #[error("reference set is empty")]
    EmptyReference,
    #[error("empty input")]
    EmptyInput,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("vector has zero or non-finite norm")]
    ZeroNorm,
    #[error("ids ({ids}) and depth scores ({scores}) differ in length")]
    Misaligned { ids: usize, scores: usize },
}

fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

fn checked_norm(v: &[f64]) -> Result<f64, DepthError> {
    let n = dot(v, v).sqrt();
    if n == 0.0 || !n.is_finite() {
        return Err(DepthError::ZeroNorm);
    }
    Ok(n)
}

/// `1 - u.v / (|u| |v|)`, clamped to `[0, 2]` to absorb rounding.
pub fn cosine_distance(u: &[f64], v: &[f64]) -> Result<f64, DepthError> {
    if u.len() != v.len() {
        return Err(DepthError::DimensionMismatch { expected: u.len(), found: v.len() });
    }
    let nu = checked_norm(u)?;
    let nv = checked_norm(v)?;
    Ok((1.0 - dot(u, v) / (nu * nv)).clamp(0.0, 2.0))
}

/// Depth scores of a query list with respect to one reference set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthTable {
    pub scores: Vec<f64>,
    pub reference_size: usize,
}

impl DepthTable {
    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

/// Mean of the unit-normalized reference vectors, accumulated in input order.
fn mean_direction<R: AsRef<[f64]>>(reference: &[R]) -> Result<Vec<f64>, DepthError> {
    let dim = reference.first().ok_or(DepthError::EmptyReference)?.as_ref().len();
    let mut acc = vec![0.0; dim];
    for r in reference {
        let r = r.as_ref();
        if r.len() != dim {
            return Err(DepthError::DimensionMismatch { expected: dim, found: r.len() });
        }
        let n = checked_norm(r)?;
        for (a, x) in acc.iter_mut().zip(r) {
            *a += x / n;
        }
    }
    let count = reference.len() as f64;
    acc.iter_mut().for_each(|a| *a /= count);
    Ok(acc)
}

/// TTE depth of every query with respect to `reference`.
///
/// Since `cosdist(x, r) = 1 - x^.r^` for unit vectors, the mean distance
/// collapses to `1 - x^.c` where `c` is the mean reference direction, so
/// each score costs one dot product instead of `|reference|`.
pub fn depth_scores<Q, R>(queries: &[Q], reference: &[R]) -> Result<DepthTable, DepthError>
where
    Q: AsRef<[f64]>,
    R: AsRef<[f64]>,
{
    let center = mean_direction(reference)?;
    let scores = queries
        .iter()
        .map(|q| {
            let q = q.as_ref();
            if q.len() != center.len() {
                return Err(DepthError::DimensionMismatch { expected: center.len(), found: q.len() });
            }
            let n = checked_norm(q)?;
            Ok((1.0 + dot(q, &center) / n).clamp(0.0, 2.0))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(DepthTable { scores, reference_size: reference.len() })
}

/// The deepest source sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MedianInfo {
    pub index: usize,
    pub id: String,
    pub depth: f64,
}

/// Position and value of the maximum score; the earliest position wins ties.
pub fn argmax_depth(depths: &DepthTable) -> Result<(usize, f64), DepthError> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &d) in depths.scores.iter().enumerate() {
        match best {
            Some((_, b)) if d <= b => {}
            _ => best = Some((i, d)),
        }
    }
    best.ok_or(DepthError::EmptyInput)
}

/// Locates the source median from the source self-depth table. `ids` are
/// the source sample ids in the same order as the table.
pub fn source_median<S: AsRef<str>>(
    source_depths: &DepthTable,
    ids: &[S],
) -> Result<MedianInfo, DepthError> {
    if ids.len() != source_depths.len() {
        return Err(DepthError::Misaligned { ids: ids.len(), scores: source_depths.len() });
    }
    let (index, depth) = argmax_depth(source_depths)?;
    Ok(MedianInfo { index, id: ids[index].as_ref().to_string(), depth })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QStatistic {
    pub value: f64,
    /// Number of (source, target) pairs with `D(s) <= D(t)`.
    pub favorable_pairs: u64,
    pub pair_count: u64,
}

/// Exact fraction of (source, target) pairs with source depth at most the
/// target depth. Both tables must be scored against the same source set.
pub fn q_statistic(source_depths: &DepthTable, target_depths: &DepthTable) -> Result<QStatistic, DepthError> {
    if source_depths.is_empty() || target_depths.is_empty() {
        return Err(DepthError::EmptyInput);
    }
    let mut sorted = source_depths.scores.clone();
    sorted.sort_by(f64::total_cmp);
    let favorable_pairs: u64 = target_depths
        .scores
        .iter()
        .map(|&t| sorted.partition_point(|&s| s <= t) as u64)
        .sum();
    let pair_count = source_depths.len() as u64 * target_depths.len() as u64;
    Ok(QStatistic {
        value: favorable_pairs as f64 / pair_count as f64,
        favorable_pairs,
        pair_count,
    })
}
