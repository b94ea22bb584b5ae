//! Dataset ingestion, text preprocessing and sparse TF-IDF vectors.
//!
//! Datasets are line-delimited JSON, one document per line with fields
//! `id` (required), `title`, `snippet` and an optional gold `label`.
//! Documents are tokenized, stopword-filtered and suffix-stemmed, then
//! weighted with `tf * ln(n / df)` and L2-normalized so that cosine
//! similarity reduces to a sparse dot product.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;
use thiserror::Error;

/// Stopword list shipped with the crate, one lowercase word per line.
const DEFAULT_STOPWORDS: &str = include_str!("stopwords.txt");

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("input is not valid UTF-8")]
    NotUtf8,
    #[error("line {line}: malformed record: {message}")]
    MalformedLine { line: usize, message: String },
    #[error("line {line}: duplicate document id \"{id}\"")]
    DuplicateId { line: usize, id: String },
    #[error("line {line}: document \"{id}\" has empty title and snippet")]
    EmptyDocument { line: usize, id: String },
    #[error("empty corpus")]
    EmptyCorpus,
}

/// One ingested search-result record.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawDocument {
    pub id: String,
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub snippet: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

/// An ordered, immutable set of documents. Index `i` identifies document
/// `i` everywhere downstream.
#[derive(Debug, Clone)]
pub struct Corpus {
    documents: Vec<RawDocument>,
}

impl Corpus {
    /// Builds a corpus from records, enforcing unique ids and non-empty
    /// text. Record numbers in errors are 1-based positions.
    pub fn new(documents: Vec<RawDocument>) -> Result<Self, CorpusError> {
        let mut seen = HashSet::new();
        for (pos, doc) in documents.iter().enumerate() {
            validate_document(doc, pos + 1, &mut seen)?;
        }
        if documents.is_empty() {
            return Err(CorpusError::EmptyCorpus);
        }
        Ok(Corpus { documents })
    }

    pub fn n(&self) -> usize {
        self.documents.len()
    }

    pub fn documents(&self) -> &[RawDocument] {
        &self.documents
    }
}

fn validate_document(
    doc: &RawDocument,
    line: usize,
    seen: &mut HashSet<String>,
) -> Result<(), CorpusError> {
    if !seen.insert(doc.id.clone()) {
        return Err(CorpusError::DuplicateId {
            line,
            id: doc.id.clone(),
        });
    }
    if doc.title.trim().is_empty() && doc.snippet.trim().is_empty() {
        return Err(CorpusError::EmptyDocument {
            line,
            id: doc.id.clone(),
        });
    }
    Ok(())
}

/// Parses a line-delimited JSON dataset. Blank lines are skipped; error
/// line numbers refer to the input text.
pub fn parse_corpus(text: &str) -> Result<Corpus, CorpusError> {
    let mut documents = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let doc: RawDocument =
            serde_json::from_str(line).map_err(|e| CorpusError::MalformedLine {
                line: line_no,
                message: e.to_string(),
            })?;
        validate_document(&doc, line_no, &mut seen)?;
        documents.push(doc);
    }
    if documents.is_empty() {
        return Err(CorpusError::EmptyCorpus);
    }
    Ok(Corpus { documents })
}

/// Loads a dataset file in the format accepted by [`parse_corpus`].
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus, CorpusError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_corpus(&text)
}

/// Tokenizer with configurable stopwords.
#[derive(Debug, Clone)]
pub struct Preprocessor {
    stopwords: HashSet<String>,
}

impl Default for Preprocessor {
    fn default() -> Self {
        Preprocessor::new(DEFAULT_STOPWORDS.lines().map(str::to_string))
    }
}

impl Preprocessor {
    pub fn new(stopwords: impl IntoIterator<Item = String>) -> Self {
        Preprocessor {
            stopwords: stopwords
                .into_iter()
                .map(|w| w.trim().to_lowercase())
                .filter(|w| !w.is_empty())
                .collect(),
        }
    }

    /// Reads a stopword file, one word per line.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, CorpusError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Ok(Preprocessor::new(text.lines().map(str::to_string)))
    }

    /// Lowercases, splits on non-alphanumeric characters, drops tokens
    /// shorter than two characters and stopwords, then applies light
    /// suffix stemming. The final filter keeps the output closed under
    /// re-tokenization, so `tokenize` is idempotent on its own output.
    pub fn tokenize(&self, text: &str) -> Vec<String> {
        let mut out = Vec::new();
        for raw in text.split(|c: char| !c.is_alphanumeric()) {
            if raw.is_empty() {
                continue;
            }
            let token = raw.to_lowercase();
            if token.chars().count() < 2 || self.stopwords.contains(&token) {
                continue;
            }
            let stemmed = stem(&token);
            if stemmed.chars().count() < 2 || self.stopwords.contains(&stemmed) {
                continue;
            }
            out.push(stemmed);
        }
        out
    }
}

/// Light suffix stemmer: `ies` -> `y`, `sses` -> `ss`, then a trailing
/// `s` unless the word ends in `ss`; afterwards `ing`/`ed` are stripped
/// when the remaining stem has at least three characters.
fn stem(token: &str) -> String {
    let mut t = token.to_string();
    if let Some(base) = t.strip_suffix("ies") {
        t = format!("{base}y");
    } else if let Some(base) = t.strip_suffix("sses") {
        t = format!("{base}ss");
    } else if t.ends_with('s') && !t.ends_with("ss") {
        t.truncate(t.len() - 1);
    }
    if let Some(base) = t.strip_suffix("ing") {
        if base.chars().count() >= 3 {
            t = base.to_string();
        }
    } else if let Some(base) = t.strip_suffix("ed") {
        if base.chars().count() >= 3 {
            t = base.to_string();
        }
    }
    t
}

/// Tokenizes with the shipped stopword list.
pub fn preprocess(text: &str) -> Vec<String> {
    Preprocessor::default().tokenize(text)
}

/// Term index and per-term document frequency over a corpus. Indices are
/// assigned in first-appearance order and are contiguous `0..len`.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    index: HashMap<String, usize>,
    terms: Vec<String>,
    df: Vec<usize>,
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn term(&self, index: usize) -> &str {
        &self.terms[index]
    }

    /// Number of documents containing the term.
    pub fn df(&self, index: usize) -> usize {
        self.df[index]
    }
}

/// Sparse non-negative term-weight vector, either all-zero or
/// L2-normalized. Entries are sorted by term index.
#[derive(Debug, Clone, PartialEq)]
pub struct DocVector {
    entries: Vec<(usize, f64)>,
}

impl DocVector {
    pub fn zero() -> Self {
        DocVector {
            entries: Vec::new(),
        }
    }

    /// Builds a vector from raw non-negative weights: duplicate indices
    /// are summed, zero weights dropped, and the result normalized.
    pub fn from_weights(weights: impl IntoIterator<Item = (usize, f64)>) -> Self {
        let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
        for (idx, w) in weights {
            assert!(w >= 0.0, "term weights must be non-negative");
            *acc.entry(idx).or_insert(0.0) += w;
        }
        let entries: Vec<(usize, f64)> = acc.into_iter().filter(|&(_, w)| w > 0.0).collect();
        let mut v = DocVector { entries };
        v.normalize();
        v
    }

    fn normalize(&mut self) {
        let norm = self
            .entries
            .iter()
            .map(|&(_, w)| w * w)
            .sum::<f64>()
            .sqrt();
        if norm > 0.0 {
            for (_, w) in &mut self.entries {
                *w /= norm;
            }
        }
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.entries
            .iter()
            .map(|&(_, w)| w * w)
            .sum::<f64>()
            .sqrt()
    }

    /// Sparse dot product by merging the sorted entry lists.
    pub fn dot(&self, other: &DocVector) -> f64 {
        let mut sum = 0.0;
        let (mut i, mut j) = (0, 0);
        let (a, b) = (&self.entries, &other.entries);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    sum += a[i].1 * b[j].1;
                    i += 1;
                    j += 1;
                }
            }
        }
        sum
    }
}

/// Cosine similarity of two unit-or-zero vectors, clamped to `[0, 1]`.
/// Zero vectors have similarity 0 to everything.
pub fn cosine(a: &DocVector, b: &DocVector) -> f64 {
    a.dot(b).clamp(0.0, 1.0)
}

/// Vectorizes with the shipped stopword list.
pub fn vectorize_corpus(corpus: &Corpus) -> Result<(Vocabulary, Vec<DocVector>), CorpusError> {
    vectorize_corpus_with(corpus, &Preprocessor::default())
}

/// Tokenizes `title + " " + snippet` per document and produces normalized
/// TF-IDF vectors with weight `tf * ln(n / df)`. A term present in every
/// document gets weight zero; a document whose terms all have `df = n`
/// yields the all-zero vector.
pub fn vectorize_corpus_with(
    corpus: &Corpus,
    preprocessor: &Preprocessor,
) -> Result<(Vocabulary, Vec<DocVector>), CorpusError> {
    let n = corpus.n();
    if n == 0 {
        return Err(CorpusError::EmptyCorpus);
    }
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut terms: Vec<String> = Vec::new();
    let mut df: Vec<usize> = Vec::new();
    let mut doc_tfs: Vec<HashMap<usize, usize>> = Vec::with_capacity(n);

    for doc in corpus.documents() {
        let text = format!("{} {}", doc.title, doc.snippet);
        let mut tf: HashMap<usize, usize> = HashMap::new();
        for token in preprocessor.tokenize(&text) {
            let idx = match index.get(&token) {
                Some(&i) => i,
                None => {
                    let i = terms.len();
                    index.insert(token.clone(), i);
                    terms.push(token);
                    df.push(0);
                    i
                }
            };
            *tf.entry(idx).or_insert(0) += 1;
        }
        for &idx in tf.keys() {
            df[idx] += 1;
        }
        doc_tfs.push(tf);
    }

    let vectors = doc_tfs
        .into_iter()
        .map(|tf| {
            DocVector::from_weights(tf.into_iter().map(|(idx, count)| {
                let idf = (n as f64 / df[idx] as f64).ln();
                (idx, count as f64 * idf)
            }))
        })
        .collect();

    Ok((Vocabulary { index, terms, df }, vectors))
}
