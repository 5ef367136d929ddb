// SPDX-License-Identifier: Apache-2.0

//! Topic × demographic representation ratios and report emission.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::demographics::{DemographicAnnotation, DemographicAxis, Distribution};
use crate::influence::RankTable;
use crate::ingest::TweetRecord;
use crate::topics::TopicCluster;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("thresholds need over > 1 > under > 0, got over = {over}, under = {under}")]
    Thresholds { over: f64, under: f64 },
    #[error("cannot write {path}: {source}")]
    Unwritable { path: PathBuf, source: io::Error },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EngagementWeighting {
    /// Each authored tweet counts once.
    #[default]
    Authorship,
    /// Each authored tweet counts `1 + retweets`.
    RetweetWeighted,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicEngagement {
    pub cluster_id: usize,
    pub counts: BTreeMap<String, u64>,
    pub total: u64,
    /// Engagement from population members with no value on the axis.
    pub unclassified: u64,
}

/// Per-topic engagement by bucket. Only tweets whose author appears in
/// `population` count; tweets missing from `tweets` are ignored.
pub fn topic_engagement(
    clusters: &[TopicCluster],
    tweets: &[TweetRecord],
    population: &BTreeMap<String, DemographicAnnotation>,
    axis: DemographicAxis,
    weighting: EngagementWeighting,
) -> Vec<TopicEngagement> {
    let by_id: HashMap<&str, &TweetRecord> = tweets.iter().map(|t| (t.tweet_id.as_str(), t)).collect();
    clusters
        .iter()
        .map(|c| {
            let mut e = TopicEngagement {
                cluster_id: c.cluster_id,
                counts: BTreeMap::new(),
                total: 0,
                unclassified: 0,
            };
            for m in &c.members {
                let Some(t) = by_id.get(m.as_str()) else { continue };
                let Some(a) = population.get(&t.author_id) else {
                    continue;
                };
                let w = match weighting {
                    EngagementWeighting::Authorship => 1,
                    EngagementWeighting::RetweetWeighted => 1 + t.retweets,
                };
                e.total += w;
                match axis.bucket(a) {
                    Some(b) => *e.counts.entry(b).or_insert(0) += w,
                    None => e.unclassified += w,
                }
            }
            e
        })
        .collect()
}

/// `(topic[b] / Σ topic) / (corpus[b] / Σ corpus)`, computed as a single
/// quotient of integer products. `None` when either share is undefined or the
/// corpus share is zero.
pub fn representation_ratio(
    topic: &BTreeMap<String, u64>,
    corpus: &BTreeMap<String, u64>,
    bucket: &str,
) -> Option<f64> {
    let t_total: u64 = topic.values().sum();
    let c_total: u64 = corpus.values().sum();
    let c_b = corpus.get(bucket).copied().unwrap_or(0);
    if t_total == 0 || c_b == 0 {
        return None;
    }
    let t_b = topic.get(bucket).copied().unwrap_or(0);
    Some((t_b as f64 * c_total as f64) / (t_total as f64 * c_b as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub over: f64,
    pub under: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self { over: 1.25, under: 0.8 }
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<(), AnalysisError> {
        if self.over > 1.0 && self.under < 1.0 && self.under > 0.0 {
            Ok(())
        } else {
            Err(AnalysisError::Thresholds {
                over: self.over,
                under: self.under,
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Over,
    Under,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepresentationRow {
    pub axis: DemographicAxis,
    pub cluster_id: usize,
    pub bucket: String,
    pub topic_count: u64,
    pub topic_share: f64,
    pub corpus_share: f64,
    pub ratio: Option<f64>,
    pub flag: Option<Direction>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepresentationReport {
    pub rows: Vec<RepresentationRow>,
    pub thresholds: Thresholds,
}

impl RepresentationReport {
    pub fn flagged(&self) -> impl Iterator<Item = &RepresentationRow> {
        self.rows.iter().filter(|r| r.flag.is_some())
    }
}

fn deviation(r: &RepresentationRow) -> f64 {
    r.ratio.map_or(f64::NEG_INFINITY, |x| x.ln().abs())
}

/// Rows for every (topic, bucket) pair with corpus presence, on one axis.
/// The corpus counts are the sums over all given topics.
pub fn axis_rows(engagements: &[TopicEngagement], axis: DemographicAxis, t: Thresholds) -> Vec<RepresentationRow> {
    let mut corpus: BTreeMap<String, u64> = BTreeMap::new();
    for e in engagements {
        for (b, &n) in &e.counts {
            *corpus.entry(b.clone()).or_insert(0) += n;
        }
    }
    corpus.retain(|_, n| *n > 0);
    let c_total: u64 = corpus.values().sum();
    let mut rows = Vec::new();
    for e in engagements {
        let t_total: u64 = e.counts.values().sum();
        if t_total == 0 {
            continue;
        }
        for (b, &c_b) in &corpus {
            let topic_count = e.counts.get(b).copied().unwrap_or(0);
            let ratio = representation_ratio(&e.counts, &corpus, b);
            let flag = ratio.and_then(|r| {
                if r >= t.over {
                    Some(Direction::Over)
                } else if r <= t.under {
                    Some(Direction::Under)
                } else {
                    None
                }
            });
            rows.push(RepresentationRow {
                axis,
                cluster_id: e.cluster_id,
                bucket: b.clone(),
                topic_count,
                topic_share: topic_count as f64 / t_total as f64,
                corpus_share: c_b as f64 / c_total as f64,
                ratio,
                flag,
            });
        }
    }
    rows
}

/// Ratios for each axis, flagged against the thresholds and sorted by
/// `|ln ratio|` descending (then axis, topic, bucket).
pub fn disproportionality_report(
    engagements: &[(DemographicAxis, Vec<TopicEngagement>)],
    thresholds: Thresholds,
) -> Result<RepresentationReport, AnalysisError> {
    thresholds.validate()?;
    let mut rows: Vec<RepresentationRow> = engagements
        .iter()
        .flat_map(|(axis, e)| axis_rows(e, *axis, thresholds))
        .collect();
    rows.sort_by(|a, b| {
        deviation(b)
            .total_cmp(&deviation(a))
            .then_with(|| a.axis.cmp(&b.axis))
            .then_with(|| a.cluster_id.cmp(&b.cluster_id))
            .then_with(|| a.bucket.cmp(&b.bucket))
    });
    Ok(RepresentationReport { rows, thresholds })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Json,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(format!("unknown format `{other}` (expected csv or json)")),
        }
    }
}

fn opt_f64(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn distribution_csv(d: &Distribution) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([d.axis.as_str(), "count", "share"])
        .expect("in-memory write");
    for (b, s) in &d.buckets {
        w.write_record([b.as_str(), &s.count.to_string(), &s.share.to_string()])
            .expect("in-memory write");
    }
    w.write_record(["missing", &d.missing.to_string(), ""])
        .expect("in-memory write");
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

/// `topic_terms` labels each topic by its leading terms.
pub fn disproportionality_csv(r: &RepresentationReport, topic_terms: &BTreeMap<usize, Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "axis",
        "cluster_id",
        "topic_terms",
        "bucket",
        "topic_count",
        "topic_share",
        "corpus_share",
        "ratio",
        "flag",
    ])
    .expect("in-memory write");
    for row in &r.rows {
        let terms = topic_terms
            .get(&row.cluster_id)
            .map(|t| t.iter().take(3).cloned().collect::<Vec<_>>().join(" "))
            .unwrap_or_default();
        let flag = match row.flag {
            Some(Direction::Over) => "over",
            Some(Direction::Under) => "under",
            None => "",
        };
        w.write_record([
            row.axis.as_str(),
            &row.cluster_id.to_string(),
            &terms,
            &row.bucket,
            &row.topic_count.to_string(),
            &row.topic_share.to_string(),
            &row.corpus_share.to_string(),
            &opt_f64(row.ratio),
            flag,
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Run provenance carried into the manifest.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub config_hash: String,
    pub seed: u64,
    pub stage_seeds: BTreeMap<String, u64>,
    pub counts: BTreeMap<String, BTreeMap<String, u64>>,
    /// Data file name → sha256 of its bytes.
    pub data_files: BTreeMap<String, String>,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub name: String,
    pub sha256: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    #[serde(flatten)]
    pub run: RunMetadata,
    pub thresholds: Thresholds,
    /// Every emitted file, the manifest itself last (unhashed).
    pub files: Vec<FileEntry>,
}

pub struct ReportSet<'a> {
    pub rank_table: &'a RankTable,
    pub continent: &'a Distribution,
    pub ethnicity: &'a Distribution,
    pub disproportionality: &'a RepresentationReport,
    pub topic_terms: &'a BTreeMap<usize, Vec<String>>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<FileEntry, AnalysisError> {
    let path = dir.join(name);
    fs::write(&path, bytes).map_err(|source| AnalysisError::Unwritable { path, source })?;
    Ok(FileEntry {
        name: name.to_string(),
        sha256: Some(sha256_hex(bytes)),
    })
}

fn json_bytes<T: Serialize>(v: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s.into_bytes()
}

/// Writes every report in each requested format plus `manifest.json`, and
/// returns the manifest. Output bytes depend only on the arguments.
pub fn emit_reports(
    reports: &ReportSet<'_>,
    run: &RunMetadata,
    out_dir: &Path,
    formats: &BTreeSet<ReportFormat>,
) -> Result<Manifest, AnalysisError> {
    fs::create_dir_all(out_dir).map_err(|source| AnalysisError::Unwritable {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let mut files = Vec::new();
    if formats.contains(&ReportFormat::Csv) {
        files.push(write_file(
            out_dir,
            "rank_table.csv",
            reports.rank_table.to_csv().as_bytes(),
        )?);
        files.push(write_file(
            out_dir,
            "continent_distribution.csv",
            distribution_csv(reports.continent).as_bytes(),
        )?);
        files.push(write_file(
            out_dir,
            "ethnicity_distribution.csv",
            distribution_csv(reports.ethnicity).as_bytes(),
        )?);
        files.push(write_file(
            out_dir,
            "disproportionality.csv",
            disproportionality_csv(reports.disproportionality, reports.topic_terms).as_bytes(),
        )?);
    }
    if formats.contains(&ReportFormat::Json) {
        files.push(write_file(out_dir, "rank_table.json", &json_bytes(reports.rank_table))?);
        files.push(write_file(
            out_dir,
            "continent_distribution.json",
            &json_bytes(reports.continent),
        )?);
        files.push(write_file(
            out_dir,
            "ethnicity_distribution.json",
            &json_bytes(reports.ethnicity),
        )?);
        files.push(write_file(
            out_dir,
            "disproportionality.json",
            &json_bytes(reports.disproportionality),
        )?);
    }
    files.push(FileEntry {
        name: MANIFEST_FILE.to_string(),
        sha256: None,
    });
    let manifest = Manifest {
        run: run.clone(),
        thresholds: reports.disproportionality.thresholds,
        files,
    };
    write_file(out_dir, MANIFEST_FILE, &json_bytes(&manifest))?;
    Ok(manifest)
}
