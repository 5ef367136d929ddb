// SPDX-License-Identifier: Apache-2.0

//! Name-based race/ethnicity inference.
//!
//! Exact hits in user-supplied name lists take precedence. Otherwise a
//! multinomial naive-Bayes model over padded character n-grams, trained from a
//! labelled name list, produces a posterior over fine-grained origin labels;
//! those are folded into the four reportable categories and the best one is
//! accepted only if its posterior reaches the confidence threshold.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

#[derive(Debug, Error)]
pub enum NameModelError {
    #[error("unknown category `{0}`")]
    UnknownCategory(String),
    #[error("{path}: {message}")]
    Csv { path: PathBuf, message: String },
    #[error("confidence threshold must lie in (0, 1), got {0}")]
    Threshold(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RaceCategory {
    Asian,
    Hispanic,
    African,
    White,
    Inconclusive,
}

impl RaceCategory {
    pub const CLASSIFIED: [RaceCategory; 4] = [
        RaceCategory::Asian,
        RaceCategory::Hispanic,
        RaceCategory::African,
        RaceCategory::White,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            RaceCategory::Asian => "Asian",
            RaceCategory::Hispanic => "Hispanic",
            RaceCategory::African => "African",
            RaceCategory::White => "White",
            RaceCategory::Inconclusive => "Inconclusive",
        }
    }
}

impl fmt::Display for RaceCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

fn label_key(label: &str) -> String {
    label
        .trim()
        .to_lowercase()
        .chars()
        .map(|c| if c == '_' || c == '-' { ' ' } else { c })
        .collect::<String>()
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

/// Folds a list or classifier label into one of the four classified categories.
///
/// Indian, Japanese and East Asian fold into Asian; Latino voter lists and
/// Hispanic European into Hispanic; Black voter lists and Greater African into
/// African; white voter lists and other European labels into White.
impl FromStr for RaceCategory {
    type Err = NameModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match label_key(s).as_str() {
            "asian" | "east asian" | "indian" | "japanese" | "south asian" => RaceCategory::Asian,
            "hispanic" | "latino" | "latina" | "latinx" | "latino voters" | "hispanic european" => {
                RaceCategory::Hispanic
            }
            "african" | "black" | "black voters" | "greater african" | "african american" => RaceCategory::African,
            "white" | "white voters" | "european" | "british" | "non hispanic european" => RaceCategory::White,
            other => return Err(NameModelError::UnknownCategory(other.to_string())),
        })
    }
}

/// NFC, lowercase, whitespace-collapsed.
pub fn normalize_name(name: &str) -> String {
    name.nfc()
        .collect::<String>()
        .to_lowercase()
        .split_whitespace()
        .map(|t| t.trim_matches(|c: char| !c.is_alphanumeric()))
        .filter(|t| !t.is_empty())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Character n-grams of every token padded with `^`/`$`, for each order.
pub fn name_ngrams(name: &str, orders: &[usize]) -> Vec<String> {
    let mut out = Vec::new();
    for tok in normalize_name(name).split(' ').filter(|t| !t.is_empty()) {
        let padded: Vec<char> = std::iter::once('^')
            .chain(tok.chars())
            .chain(std::iter::once('$'))
            .collect();
        for &n in orders {
            if n == 0 || n > padded.len() {
                continue;
            }
            out.extend(padded.windows(n).map(|w| w.iter().collect::<String>()));
        }
    }
    out
}

/// Multinomial naive Bayes over character n-grams with additive smoothing.
///
/// `P(c | x) ∝ P(c) · Π_g P(g | c)^count(g, x)` with
/// `P(g | c) = (count(g, c) + α) / (total(c) + α·|V|)` and `P(c) = docs(c) / docs`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NgramClassifier {
    orders: Vec<usize>,
    alpha: f64,
    /// Fine-grained labels, sorted.
    labels: Vec<String>,
    folded: Vec<RaceCategory>,
    docs: Vec<u64>,
    counts: Vec<HashMap<String, u64>>,
    totals: Vec<u64>,
    vocabulary: usize,
}

impl NgramClassifier {
    pub const DEFAULT_ORDERS: [usize; 2] = [2, 3];

    pub fn train<'a>(
        examples: impl IntoIterator<Item = (&'a str, &'a str)>,
        orders: &[usize],
        alpha: f64,
    ) -> Result<Self, NameModelError> {
        let mut by_label: BTreeMap<String, Vec<&str>> = BTreeMap::new();
        for (name, label) in examples {
            by_label.entry(label_key(label)).or_default().push(name);
        }
        let mut vocab: BTreeSet<String> = BTreeSet::new();
        let mut model = Self {
            orders: orders.to_vec(),
            alpha,
            labels: Vec::new(),
            folded: Vec::new(),
            docs: Vec::new(),
            counts: Vec::new(),
            totals: Vec::new(),
            vocabulary: 0,
        };
        for (label, names) in by_label {
            model.folded.push(label.parse()?);
            let mut counts: HashMap<String, u64> = HashMap::new();
            let mut total = 0;
            for n in &names {
                for g in name_ngrams(n, orders) {
                    vocab.insert(g.clone());
                    *counts.entry(g).or_insert(0) += 1;
                    total += 1;
                }
            }
            model.labels.push(label);
            model.docs.push(names.len() as u64);
            model.counts.push(counts);
            model.totals.push(total);
        }
        model.vocabulary = vocab.len();
        Ok(model)
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Posterior over the fine-grained training labels (sorted by label).
    pub fn label_posterior(&self, name: &str) -> Vec<(String, f64)> {
        if self.is_empty() {
            return Vec::new();
        }
        let grams = name_ngrams(name, &self.orders);
        let total_docs: u64 = self.docs.iter().sum();
        let v = self.vocabulary as f64;
        let logs: Vec<f64> = (0..self.labels.len())
            .map(|c| {
                let denom = (self.totals[c] as f64 + self.alpha * v).ln();
                let mut lp = (self.docs[c] as f64 / total_docs as f64).ln();
                for g in &grams {
                    let count = self.counts[c].get(g).copied().unwrap_or(0) as f64;
                    lp += (count + self.alpha).ln() - denom;
                }
                lp
            })
            .collect();
        let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
        let z: f64 = exps.iter().sum();
        self.labels
            .iter()
            .cloned()
            .zip(exps.into_iter().map(|e| e / z))
            .collect()
    }

    /// Posterior folded onto the four classified categories; sums to 1.
    pub fn posterior(&self, name: &str) -> BTreeMap<RaceCategory, f64> {
        let mut out: BTreeMap<RaceCategory, f64> = RaceCategory::CLASSIFIED.iter().map(|&c| (c, 0.0)).collect();
        for ((_, p), cat) in self.label_posterior(name).into_iter().zip(&self.folded) {
            *out.get_mut(cat).expect("classified category") += p;
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RaceSource {
    NameList,
    Classifier { posterior: f64 },
    Fallback,
}

#[derive(Debug, Clone)]
pub struct NameModel {
    /// Normalized name → category; the first list to name it wins.
    lists: HashMap<String, RaceCategory>,
    classifier: NgramClassifier,
    threshold: f64,
}

pub const DEFAULT_THRESHOLD: f64 = 0.6;

impl NameModel {
    pub fn new(classifier: NgramClassifier, threshold: f64) -> Result<Self, NameModelError> {
        if !(threshold > 0.0 && threshold < 1.0) {
            return Err(NameModelError::Threshold(threshold));
        }
        Ok(Self {
            lists: HashMap::new(),
            classifier,
            threshold,
        })
    }

    /// Adds list entries; names already present keep their earlier category.
    pub fn add_list<'a>(&mut self, entries: impl IntoIterator<Item = (&'a str, RaceCategory)>) {
        for (name, cat) in entries {
            let key = normalize_name(name);
            if !key.is_empty() {
                self.lists.entry(key).or_insert(cat);
            }
        }
    }

    pub fn classifier(&self) -> &NgramClassifier {
        &self.classifier
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn list_lookup(&self, display_name: &str) -> Option<RaceCategory> {
        let norm = normalize_name(display_name);
        if norm.is_empty() {
            return None;
        }
        if let Some(&c) = self.lists.get(&norm) {
            return Some(c);
        }
        // Surname first, then earlier tokens.
        norm.split(' ').rev().find_map(|t| self.lists.get(t).copied())
    }

    pub fn classify_with_source(&self, display_name: &str) -> (RaceCategory, RaceSource) {
        if normalize_name(display_name).is_empty() {
            return (RaceCategory::Inconclusive, RaceSource::Fallback);
        }
        if let Some(c) = self.list_lookup(display_name) {
            return (c, RaceSource::NameList);
        }
        if !self.classifier.is_empty() {
            let mut best = (RaceCategory::Inconclusive, 0.0);
            for (c, p) in self.classifier.posterior(display_name) {
                if p > best.1 {
                    best = (c, p);
                }
            }
            if best.1 >= self.threshold {
                return (best.0, RaceSource::Classifier { posterior: best.1 });
            }
        }
        (RaceCategory::Inconclusive, RaceSource::Fallback)
    }
}

pub fn classify_race(display_name: &str, model: &NameModel) -> RaceCategory {
    model.classify_with_source(display_name).0
}

#[derive(Deserialize)]
struct NameRow {
    name: String,
    category: String,
}

/// Reads a `name,category` CSV.
pub fn read_name_csv(path: &Path) -> Result<Vec<(String, String)>, NameModelError> {
    let err = |message: String| NameModelError::Csv {
        path: path.to_path_buf(),
        message,
    };
    let mut r = csv::Reader::from_path(path).map_err(|e| err(e.to_string()))?;
    r.deserialize::<NameRow>()
        .map(|row| row.map(|r| (r.name, r.category)).map_err(|e| err(e.to_string())))
        .collect()
}

/// Builds a model from name-list CSVs (in precedence order) and a training CSV.
pub fn load_name_model(
    lists: &[PathBuf],
    training: Option<&Path>,
    threshold: f64,
) -> Result<NameModel, NameModelError> {
    let training_rows = match training {
        Some(p) => read_name_csv(p)?,
        None => Vec::new(),
    };
    let classifier = NgramClassifier::train(
        training_rows.iter().map(|(n, l)| (n.as_str(), l.as_str())),
        &NgramClassifier::DEFAULT_ORDERS,
        1.0,
    )?;
    let mut model = NameModel::new(classifier, threshold)?;
    for p in lists {
        let rows = read_name_csv(p)?;
        let parsed = rows
            .iter()
            .map(|(n, c)| Ok((n.as_str(), c.parse::<RaceCategory>()?)))
            .collect::<Result<Vec<_>, NameModelError>>()?;
        model.add_list(parsed);
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> NgramClassifier {
        NgramClassifier::train([("ab", "East Asian"), ("ba", "European")], &[2], 1.0).unwrap()
    }

    #[test]
    fn hand_worked_posterior() {
        // Bigrams of ^ab$: ^a ab b$; of ^ba$: ^b ba a$. |V| = 6, each class total 3.
        // P(g|EA) = 2/9 for g in "ab", P(g|Eu) = 1/9. Priors 1/2.
        // P(EA | "ab") = (2/9)^3 / ((2/9)^3 + (1/9)^3) = 8/9.
        let post = toy().posterior("ab");
        assert!((post[&RaceCategory::Asian] - 8.0 / 9.0).abs() < 1e-9);
        assert!((post[&RaceCategory::White] - 1.0 / 9.0).abs() < 1e-9);
        assert_eq!(post[&RaceCategory::African], 0.0);
    }

    #[test]
    fn folding_of_labels() {
        for (label, cat) in [
            ("Indian", RaceCategory::Asian),
            ("japanese", RaceCategory::Asian),
            ("East_Asian", RaceCategory::Asian),
            ("Hispanic European", RaceCategory::Hispanic),
            ("latino_voters", RaceCategory::Hispanic),
            ("Greater African", RaceCategory::African),
            ("black voters", RaceCategory::African),
            ("white_voters", RaceCategory::White),
            ("European", RaceCategory::White),
        ] {
            assert_eq!(label.parse::<RaceCategory>().unwrap(), cat, "{label}");
        }
        assert!("martian".parse::<RaceCategory>().is_err());
    }

    #[test]
    fn classifier_east_asian_folds_to_asian() {
        let m = NameModel::new(toy(), 0.6).unwrap();
        let (cat, source) = m.classify_with_source("Ab");
        assert_eq!(cat, RaceCategory::Asian);
        match source {
            RaceSource::Classifier { posterior } => assert!((posterior - 8.0 / 9.0).abs() < 1e-9),
            other => panic!("unexpected source {other:?}"),
        }
        assert_eq!(classify_race("ab", &m), RaceCategory::Asian);
    }

    #[test]
    fn list_hit_beats_classifier() {
        let mut m = NameModel::new(toy(), 0.6).unwrap();
        m.add_list([("ab", RaceCategory::Hispanic)]);
        assert_eq!(classify_race("AB", &m), RaceCategory::Hispanic);
        // Surname lookup on a full name.
        m.add_list([("Garcia", RaceCategory::Hispanic), ("garcia", RaceCategory::White)]);
        assert_eq!(classify_race("Maria Garcia", &m), RaceCategory::Hispanic);
    }

    #[test]
    fn low_confidence_is_inconclusive() {
        let m = NameModel::new(toy(), 0.6).unwrap();
        // No n-gram overlap with either class: posterior stays at the 1/2 prior.
        assert_eq!(classify_race("zz", &m), RaceCategory::Inconclusive);
        assert_eq!(classify_race("", &m), RaceCategory::Inconclusive);
        assert_eq!(classify_race("  !! ", &m), RaceCategory::Inconclusive);
        let empty = NameModel::new(NgramClassifier::train([], &[2], 1.0).unwrap(), 0.6).unwrap();
        assert_eq!(classify_race("anyone", &empty), RaceCategory::Inconclusive);
    }

    #[test]
    fn bad_threshold() {
        assert!(NameModel::new(toy(), 1.0).is_err());
    }
}
