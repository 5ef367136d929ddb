// SPDX-License-Identifier: Apache-2.0

//! Deterministic text embeddings.
//!
//! The built-in embedder extracts word unigrams and padded character trigrams,
//! weights them by TF-IDF fitted on the corpus, hashes them into a fixed number
//! of signed buckets (FNV-1a) and L2-normalizes the result. Precomputed vectors
//! from any other encoder can be supplied instead through an NDJSON file.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::NormalizedText;

pub const DEFAULT_DIM: usize = 512;

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("embedding dimension must be at least 2, got {0}")]
    Dimension(usize),
    #[error("no external vector for tweets: {}", .0.join(", "))]
    MissingVectors(Vec<String>),
    #[error("{path}:{line}: {message}")]
    BadVectorFile {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingSource {
    #[default]
    Builtin,
    External,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector {
    pub values: Vec<f64>,
}

impl EmbeddingVector {
    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn cosine(&self, other: &Self) -> f64 {
        let dot: f64 = self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum();
        let n = self.norm() * other.norm();
        if n == 0.0 {
            0.0
        } else {
            dot / n
        }
    }

    fn l2_normalized(mut values: Vec<f64>) -> Self {
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            for v in &mut values {
                *v /= norm;
            }
        }
        Self { values }
    }
}

const WORD_PREFIX: &str = "w:";
const TRIGRAM_PREFIX: &str = "c:";

/// Feature counts of one document: `w:<token>` and `c:<trigram>` keys.
pub fn features(t: &NormalizedText) -> BTreeMap<String, u32> {
    let mut out = BTreeMap::new();
    for tok in &t.tokens {
        *out.entry(format!("{WORD_PREFIX}{tok}")).or_insert(0) += 1;
        let padded: Vec<char> = std::iter::once('^')
            .chain(tok.chars())
            .chain(std::iter::once('$'))
            .collect();
        for w in padded.windows(3) {
            let tri: String = w.iter().collect();
            *out.entry(format!("{TRIGRAM_PREFIX}{tri}")).or_insert(0) += 1;
        }
    }
    out
}

/// Strips the namespace of a word feature, if it is one.
pub fn word_of(feature: &str) -> Option<&str> {
    feature.strip_prefix(WORD_PREFIX)
}

/// Smoothed inverse document frequencies: `ln((1 + N) / (1 + df)) + 1`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IdfTable {
    pub documents: usize,
    pub document_frequency: HashMap<String, u32>,
}

impl IdfTable {
    pub fn fit<'a>(docs: impl IntoIterator<Item = &'a NormalizedText>) -> Self {
        let mut table = IdfTable::default();
        for d in docs {
            table.documents += 1;
            for f in features(d).into_keys() {
                *table.document_frequency.entry(f).or_insert(0) += 1;
            }
        }
        table
    }

    pub fn idf(&self, feature: &str) -> f64 {
        let df = self.document_frequency.get(feature).copied().unwrap_or(0) as f64;
        ((1.0 + self.documents as f64) / (1.0 + df)).ln() + 1.0
    }
}

/// TF-IDF weight of every feature of `t` before hashing (raw count × idf).
pub fn tfidf_weights(t: &NormalizedText, idf: &IdfTable) -> BTreeMap<String, f64> {
    features(t)
        .into_iter()
        .map(|(f, c)| {
            let w = c as f64 * idf.idf(&f);
            (f, w)
        })
        .collect()
}

pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Bucket and sign of a feature in a `dim`-dimensional hashed space.
pub fn feature_slot(feature: &str, dim: usize) -> (usize, f64) {
    let h = fnv1a(feature.as_bytes());
    let sign = if h >> 63 == 1 { -1.0 } else { 1.0 };
    ((h % dim as u64) as usize, sign)
}

#[derive(Debug, Clone)]
pub struct HashingEmbedder {
    dim: usize,
    idf: IdfTable,
}

impl HashingEmbedder {
    pub fn new(dim: usize, idf: IdfTable) -> Result<Self, EmbedError> {
        if dim < 2 {
            return Err(EmbedError::Dimension(dim));
        }
        Ok(Self { dim, idf })
    }

    pub fn idf(&self) -> &IdfTable {
        &self.idf
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn embed(&self, t: &NormalizedText) -> EmbeddingVector {
        let mut values = vec![0.0; self.dim];
        for (f, w) in tfidf_weights(t, &self.idf) {
            let (slot, sign) = feature_slot(&f, self.dim);
            values[slot] += sign * w;
        }
        EmbeddingVector::l2_normalized(values)
    }
}

#[derive(Deserialize)]
struct VectorLine {
    tweet_id: String,
    vector: Vec<f64>,
}

/// Reads an NDJSON file of `{"tweet_id": ..., "vector": [...]}` lines.
/// Every vector must have length `dim` and finite entries.
pub fn load_external_vectors(path: &Path, dim: usize) -> Result<HashMap<String, Vec<f64>>, EmbedError> {
    if dim < 2 {
        return Err(EmbedError::Dimension(dim));
    }
    let file = File::open(path).map_err(|source| EmbedError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut out = HashMap::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| EmbedError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |message: String| EmbedError::BadVectorFile {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        let v: VectorLine = serde_json::from_str(&line).map_err(|e| bad(e.to_string()))?;
        if v.vector.len() != dim {
            return Err(bad(format!("vector has length {}, expected {dim}", v.vector.len())));
        }
        if v.vector.iter().any(|x| !x.is_finite()) {
            return Err(bad("vector has non-finite entries".into()));
        }
        out.entry(v.tweet_id).or_insert(v.vector);
    }
    Ok(out)
}

/// Looks up and L2-normalizes external vectors for `tweet_ids`, in order.
pub fn external_embeddings<S: AsRef<str>>(
    tweet_ids: &[S],
    vectors: &HashMap<String, Vec<f64>>,
) -> Result<Vec<EmbeddingVector>, EmbedError> {
    let missing: Vec<String> = tweet_ids
        .iter()
        .map(AsRef::as_ref)
        .filter(|id| !vectors.contains_key(*id))
        .map(str::to_string)
        .collect();
    if !missing.is_empty() {
        return Err(EmbedError::MissingVectors(missing));
    }
    Ok(tweet_ids
        .iter()
        .map(|id| EmbeddingVector::l2_normalized(vectors[id.as_ref()].clone()))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topics::normalize_text;
    use std::io::Write;

    fn docs(texts: &[&str]) -> Vec<NormalizedText> {
        texts.iter().map(|t| normalize_text(t)).collect()
    }

    #[test]
    fn identical_texts_identical_vectors() {
        let d = docs(&["youth climate action", "youth climate action", "ocean"]);
        let e = HashingEmbedder::new(DEFAULT_DIM, IdfTable::fit(&d)).unwrap();
        let (a, b) = (e.embed(&d[0]), e.embed(&d[1]));
        assert_eq!(a, b);
        assert!((a.cosine(&b) - 1.0).abs() < 1e-12);
        assert!((a.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn disjoint_texts_are_orthogonal() {
        let d = docs(&["ab", "xy"]);
        let dim = 1 << 16;
        // Features: w:ab c:^ab c:ab$ / w:xy c:^xy c:xy$; no bucket collides.
        let slots = |t: &NormalizedText| -> Vec<usize> { features(t).keys().map(|f| feature_slot(f, dim).0).collect() };
        assert!(slots(&d[0]).iter().all(|s| !slots(&d[1]).contains(s)));
        let e = HashingEmbedder::new(dim, IdfTable::fit(&d)).unwrap();
        assert!(e.embed(&d[0]).cosine(&e.embed(&d[1])).abs() < 1e-9);
    }

    #[test]
    fn feature_extraction() {
        let f = features(&normalize_text("ab ab c"));
        let keys: Vec<_> = f.iter().map(|(k, &v)| (k.as_str(), v)).collect();
        assert_eq!(
            keys,
            [("c:^ab", 2), ("c:^c$", 1), ("c:ab$", 2), ("w:ab", 2), ("w:c", 1)]
        );
    }

    #[test]
    fn tfidf_two_document_hand_computation() {
        // doc0 "aa bb aa", doc1 "bb". N = 2.
        // df: w:aa 1, w:bb 2, c:^aa 1, c:aa$ 1, c:^bb 2, c:bb$ 2.
        // idf(df=1) = ln(3/2) + 1; idf(df=2) = ln(1) + 1 = 1.
        let d = docs(&["aa bb aa", "bb"]);
        let idf = IdfTable::fit(&d);
        let w = tfidf_weights(&d[0], &idf);
        let rare = (3.0f64 / 2.0).ln() + 1.0;
        let expected = [
            ("c:^aa", 2.0 * rare),
            ("c:^bb", 1.0),
            ("c:aa$", 2.0 * rare),
            ("c:bb$", 1.0),
            ("w:aa", 2.0 * rare),
            ("w:bb", 1.0),
        ];
        assert_eq!(w.len(), expected.len());
        for (k, v) in expected {
            assert!((w[k] - v).abs() < 1e-9, "{k}");
        }
    }

    #[test]
    fn corpus_order_does_not_change_vectors() {
        let d = docs(&["food security now", "ocean plastic", "climate youth", "food"]);
        let mut rev = d.clone();
        rev.reverse();
        let e1 = HashingEmbedder::new(64, IdfTable::fit(&d)).unwrap();
        let e2 = HashingEmbedder::new(64, IdfTable::fit(&rev)).unwrap();
        for t in &d {
            assert_eq!(e1.embed(t), e2.embed(t));
        }
    }

    #[test]
    fn empty_doc_is_zero_vector() {
        let e = HashingEmbedder::new(8, IdfTable::default()).unwrap();
        let v = e.embed(&normalize_text(""));
        assert!(v.values.iter().all(|&x| x == 0.0));
        assert!(HashingEmbedder::new(1, IdfTable::default()).is_err());
    }

    #[test]
    fn external_vectors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.ndjson");
        let mut f = File::create(&path).unwrap();
        writeln!(f, r#"{{"tweet_id":"a","vector":[3.0,4.0]}}"#).unwrap();
        writeln!(f, r#"{{"tweet_id":"b","vector":[0.0,2.0]}}"#).unwrap();
        drop(f);
        let v = load_external_vectors(&path, 2).unwrap();
        let e = external_embeddings(&["a", "b"], &v).unwrap();
        assert_eq!(e[0].values, vec![0.6, 0.8]);
        match external_embeddings(&["a", "zz"], &v) {
            Err(EmbedError::MissingVectors(ids)) => assert_eq!(ids, vec!["zz"]),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            load_external_vectors(&path, 3),
            Err(EmbedError::BadVectorFile { line: 1, .. })
        ));
    }
}
