//! On-disk data model for embedded corpora and prediction runs.
//!
//! A corpus file is JSONL: one object per line with keys `id`, `role`
//! (`"source"` or `"target"`), `label`, optional `prediction`, and `vector`.
//! A prediction file is JSONL of `{"id": ..., "prediction": ...}`.
//!
//! Sample order inside each role is file order. Every tie-break downstream
//! refers to this order.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Source,
    Target,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Role::Source => f.write_str("source"),
            Role::Target => f.write_str("target"),
        }
    }
}

/// Supported corpus encodings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CorpusFormat {
    #[default]
    Jsonl,
}

/// One embedded text: identity, domain role, gold label, optional predicted
/// label and its embedding coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddedSample {
    pub id: String,
    pub role: Role,
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prediction: Option<String>,
    pub vector: Vec<f64>,
}

impl EmbeddedSample {
    pub fn norm(&self) -> f64 {
        self.vector.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// Source and target samples sharing one embedding dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub dimension: usize,
    pub source: Vec<EmbeddedSample>,
    pub target: Vec<EmbeddedSample>,
    /// Gold labels observed in either role.
    pub label_set: BTreeSet<String>,
}

impl Corpus {
    /// Builds a corpus from samples in file order, splitting by role.
    ///
    /// Predictions on source samples are dropped: they never take part in
    /// evaluation.
    pub fn from_samples(dimension: usize, samples: impl IntoIterator<Item = EmbeddedSample>) -> Self {
        let mut source = Vec::new();
        let mut target = Vec::new();
        let mut label_set = BTreeSet::new();
        for mut sample in samples {
            label_set.insert(sample.label.clone());
            match sample.role {
                Role::Source => {
                    sample.prediction = None;
                    source.push(sample);
                }
                Role::Target => target.push(sample),
            }
        }
        Corpus { dimension, source, target, label_set }
    }

    pub fn source_vectors(&self) -> Vec<&[f64]> {
        self.source.iter().map(|s| s.vector.as_slice()).collect()
    }

    pub fn target_vectors(&self) -> Vec<&[f64]> {
        self.target.iter().map(|s| s.vector.as_slice()).collect()
    }

    pub fn target_labels(&self) -> Vec<&str> {
        self.target.iter().map(|s| s.label.as_str()).collect()
    }

    pub fn target_predictions(&self) -> Vec<Option<&str>> {
        self.target.iter().map(|s| s.prediction.as_deref()).collect()
    }

    /// All samples, source first, then target.
    pub fn samples(&self) -> impl Iterator<Item = &EmbeddedSample> {
        self.source.iter().chain(self.target.iter())
    }

    /// Serializes the corpus as JSONL, source samples first.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for sample in self.samples() {
            serde_json::to_writer(&mut out, sample)?;
            out.write_all(b"\n")?;
        }
        out.flush()
    }

    pub fn save(&self, path: &Path) -> Result<(), CorpusError> {
        let file = File::create(path).map_err(|e| CorpusError::io(path, e))?;
        self.write_jsonl(std::io::BufWriter::new(file))
            .map_err(|e| CorpusError::io(path, e))
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: invalid record: {message}")]
    Parse { line: usize, message: String },
    #[error("no records")]
    NoRecords,
    #[error("line {line}: vector has dimension {found}, expected {expected}")]
    DimensionMismatch { line: usize, expected: usize, found: usize },
    #[error("line {line}: empty vector for id '{id}'")]
    EmptyVector { line: usize, id: String },
    #[error("line {line}: duplicate id '{id}'")]
    DuplicateId { line: usize, id: String },
    #[error("line {line}: zero-norm vector for id '{id}'")]
    ZeroNorm { line: usize, id: String },
    #[error("line {line}: non-finite coordinate in vector for id '{id}'")]
    NonFinite { line: usize, id: String },
    #[error("MISSING_PREDICTION: no prediction for target id '{0}'")]
    MissingPrediction(String),
    #[error("UNKNOWN_ID: prediction for id '{0}' which is not a target sample")]
    UnknownId(String),
    #[error("line {line}: duplicate prediction for id '{id}'")]
    DuplicatePrediction { line: usize, id: String },
}

impl CorpusError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        CorpusError::Io { path: path.to_path_buf(), source }
    }
}

/// Loads and checks a corpus file.
pub fn load_corpus(path: &Path, format: CorpusFormat) -> Result<Corpus, CorpusError> {
    let file = File::open(path).map_err(|e| CorpusError::io(path, e))?;
    match format {
        CorpusFormat::Jsonl => read_corpus(BufReader::new(file)).map_err(|e| match e {
            CorpusError::Io { source, .. } => CorpusError::io(path, source),
            other => other,
        }),
    }
}

/// Reads a JSONL corpus. Blank lines are skipped; line numbers are 1-based
/// physical lines.
pub fn read_corpus<R: BufRead>(reader: R) -> Result<Corpus, CorpusError> {
    let mut samples = Vec::new();
    let mut seen = HashSet::new();
    let mut dimension = None;

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| CorpusError::Io { path: PathBuf::new(), source: e })?;
        if line.trim().is_empty() {
            continue;
        }
        let sample: EmbeddedSample = serde_json::from_str(&line)
            .map_err(|e| CorpusError::Parse { line: line_no, message: e.to_string() })?;

        if sample.vector.is_empty() {
            return Err(CorpusError::EmptyVector { line: line_no, id: sample.id });
        }
        let expected = *dimension.get_or_insert(sample.vector.len());
        if sample.vector.len() != expected {
            return Err(CorpusError::DimensionMismatch {
                line: line_no,
                expected,
                found: sample.vector.len(),
            });
        }
        if sample.vector.iter().any(|x| !x.is_finite()) {
            return Err(CorpusError::NonFinite { line: line_no, id: sample.id });
        }
        if sample.norm() == 0.0 {
            return Err(CorpusError::ZeroNorm { line: line_no, id: sample.id });
        }
        if !seen.insert(sample.id.clone()) {
            return Err(CorpusError::DuplicateId { line: line_no, id: sample.id });
        }
        samples.push(sample);
    }

    match dimension {
        Some(dimension) => Ok(Corpus::from_samples(dimension, samples)),
        None => Err(CorpusError::NoRecords),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub id: String,
    pub prediction: String,
}

/// Reads a prediction file into an id → label map.
pub fn read_predictions<R: BufRead>(reader: R) -> Result<HashMap<String, String>, CorpusError> {
    let mut map = HashMap::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| CorpusError::Io { path: PathBuf::new(), source: e })?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: PredictionRecord = serde_json::from_str(&line)
            .map_err(|e| CorpusError::Parse { line: line_no, message: e.to_string() })?;
        if map.contains_key(&rec.id) {
            return Err(CorpusError::DuplicatePrediction { line: line_no, id: rec.id });
        }
        map.insert(rec.id, rec.prediction);
    }
    Ok(map)
}

/// Returns a copy of `corpus` whose target samples carry the predictions
/// from the file at `path`. The file must cover exactly the target ids.
pub fn attach_predictions(corpus: &Corpus, path: &Path) -> Result<Corpus, CorpusError> {
    let file = File::open(path).map_err(|e| CorpusError::io(path, e))?;
    let predictions = read_predictions(BufReader::new(file)).map_err(|e| match e {
        CorpusError::Io { source, .. } => CorpusError::io(path, source),
        other => other,
    })?;
    with_predictions(corpus, predictions)
}

/// In-memory form of [`attach_predictions`].
pub fn with_predictions(
    corpus: &Corpus,
    mut predictions: HashMap<String, String>,
) -> Result<Corpus, CorpusError> {
    let mut out = corpus.clone();
    for sample in &mut out.target {
        match predictions.remove(&sample.id) {
            Some(p) => sample.prediction = Some(p),
            None => return Err(CorpusError::MissingPrediction(sample.id.clone())),
        }
    }
    // Whatever is left does not name a target sample. Report the smallest
    // id so the error is stable across runs.
    if let Some(id) = predictions.into_keys().min() {
        return Err(CorpusError::UnknownId(id));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum IssueCode {
    EmptySource,
    EmptyTarget,
    DimensionMismatch,
    NonFiniteCoordinate,
    ZeroNormVector,
    DuplicateId,
    RoleMismatch,
    SourcePrediction,
    UnknownPredictedLabel,
}

impl IssueCode {
    /// Warnings do not block evaluation.
    pub fn is_warning(self) -> bool {
        matches!(self, IssueCode::UnknownPredictedLabel | IssueCode::SourcePrediction)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Issue {
    /// Empty for corpus-level issues.
    pub id: String,
    pub code: IssueCode,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub ok: bool,
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    fn from_issues(issues: Vec<Issue>) -> Self {
        ValidationReport { ok: issues.is_empty(), issues }
    }

    pub fn has_errors(&self) -> bool {
        self.issues.iter().any(|i| !i.code.is_warning())
    }
}

/// Reports every invariant violation of an in-memory corpus.
pub fn validate_corpus(corpus: &Corpus) -> ValidationReport {
    let mut issues = Vec::new();
    let mut push = |id: &str, code: IssueCode, message: String| {
        issues.push(Issue { id: id.to_string(), code, message });
    };

    if corpus.source.is_empty() {
        push("", IssueCode::EmptySource, "corpus has no source samples".into());
    }
    if corpus.target.is_empty() {
        push("", IssueCode::EmptyTarget, "corpus has no target samples".into());
    }

    let mut seen = HashSet::new();
    let lists = [(Role::Source, &corpus.source), (Role::Target, &corpus.target)];
    for (role, list) in lists {
        for s in list.iter() {
            if s.role != role {
                push(&s.id, IssueCode::RoleMismatch, format!("sample has role {} but is stored as {role}", s.role));
            }
            if !seen.insert(s.id.as_str()) {
                push(&s.id, IssueCode::DuplicateId, "id appears more than once".into());
            }
            if s.vector.len() != corpus.dimension {
                push(
                    &s.id,
                    IssueCode::DimensionMismatch,
                    format!("vector has dimension {}, expected {}", s.vector.len(), corpus.dimension),
                );
            }
            if s.vector.iter().any(|x| !x.is_finite()) {
                push(&s.id, IssueCode::NonFiniteCoordinate, "vector has a non-finite coordinate".into());
            } else if s.norm() == 0.0 {
                push(&s.id, IssueCode::ZeroNormVector, "vector has zero norm".into());
            }
            match (&s.prediction, role) {
                (Some(_), Role::Source) => {
                    push(&s.id, IssueCode::SourcePrediction, "source sample carries a prediction; it is ignored".into())
                }
                (Some(p), Role::Target) if !corpus.label_set.contains(p) => push(
                    &s.id,
                    IssueCode::UnknownPredictedLabel,
                    format!("predicted label '{p}' is not a gold label; counted as incorrect"),
                ),
                _ => {}
            }
        }
    }

    ValidationReport::from_issues(issues)
}
