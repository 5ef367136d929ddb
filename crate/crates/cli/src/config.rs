// SPDX-License-Identifier: Apache-2.0

//! Flat `key = value` run configuration.
//!
//! Blank lines and lines starting with `#` are ignored. List values are
//! comma-separated. Relative paths resolve against the config file's
//! directory. Stream keys take the form `stream.<name>.<field>`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use engagegraph::community::ImportanceMode;
use engagegraph::ingest::{BoundingBox, StreamKind, StreamSpec, TimeWindow};
use engagegraph::{EdgeDirection, EngagementWeighting, ReportFormat};
use sha2::{Digest, Sha256};

/// A value as written in the file (for hashing) and its resolved form.
#[derive(Debug, Clone, PartialEq)]
pub struct PathValue {
    pub written: String,
    pub resolved: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub corpus: Vec<PathValue>,
    pub users: Vec<PathValue>,
    pub streams: Vec<StreamSpec>,
    pub offtopic_keywords: Vec<String>,
    pub edge_direction: EdgeDirection,
    pub min_community_size: usize,
    pub importance: ImportanceMode,
    pub label_rounds: usize,
    pub damping: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub rank_rows: usize,
    pub privacy: bool,
    pub k: usize,
    pub kmeans_max_iter: usize,
    pub seed: u64,
    pub dim: usize,
    pub embeddings: Option<PathValue>,
    pub tau: f64,
    pub tau_hi: f64,
    pub tau_lo: f64,
    pub gazetteer: Option<PathValue>,
    pub name_lists: Vec<PathValue>,
    pub name_training: Option<PathValue>,
    pub proper_names: Option<PathValue>,
    pub engagement_weighting: EngagementWeighting,
    pub out: PathBuf,
    pub formats: BTreeSet<ReportFormat>,
    pub threads: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            corpus: Vec::new(),
            users: Vec::new(),
            streams: Vec::new(),
            offtopic_keywords: Vec::new(),
            edge_direction: EdgeDirection::InteractorToTarget,
            min_community_size: 120,
            importance: ImportanceMode::WeightedInDegree,
            label_rounds: 100,
            damping: 0.85,
            tol: 1e-9,
            max_iter: 100,
            rank_rows: 10,
            privacy: true,
            k: 250,
            kmeans_max_iter: 100,
            seed: 0,
            dim: 512,
            embeddings: None,
            tau: 0.6,
            tau_hi: 1.25,
            tau_lo: 0.8,
            gazetteer: None,
            name_lists: Vec::new(),
            name_training: None,
            proper_names: None,
            engagement_weighting: EngagementWeighting::Authorship,
            out: PathBuf::from("out"),
            formats: BTreeSet::from([ReportFormat::Csv]),
            threads: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldError {
    pub line: usize,
    pub key: String,
    pub message: String,
}

impl std::fmt::Display for FieldError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.line > 0 {
            write!(f, "line {}: `{}`: {}", self.line, self.key, self.message)
        } else {
            write!(f, "`{}`: {}", self.key, self.message)
        }
    }
}

#[derive(Default)]
struct StreamDraft {
    kind: Option<StreamKind>,
    keywords: Vec<String>,
    accounts: Vec<String>,
    bbox: Option<BoundingBox>,
    window_start: Option<i64>,
    window_end: Option<i64>,
    event: Option<i64>,
    window_hours: Option<i64>,
}

fn list(v: &str) -> Vec<String> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

fn parse<T: FromStr>(v: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    v.parse::<T>().map_err(|e| format!("`{v}`: {e}"))
}

fn parse_bool(v: &str) -> Result<bool, String> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(format!("`{v}` is not a boolean")),
    }
}

fn parse_kind(v: &str) -> Result<StreamKind, String> {
    match v {
        "keyword" => Ok(StreamKind::Keyword),
        "account" => Ok(StreamKind::Account),
        "mention" => Ok(StreamKind::Mention),
        "geo_window" => Ok(StreamKind::GeoWindow),
        _ => Err(format!(
            "unknown stream kind `{v}` (keyword, account, mention, geo_window)"
        )),
    }
}

fn parse_bbox(v: &str) -> Result<BoundingBox, String> {
    let n: Vec<f64> = v
        .split(|c: char| c == ',' || c == ';' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(parse::<f64>)
        .collect::<Result<_, _>>()?;
    if n.len() != 4 {
        return Err(format!(
            "expected `min_lat, min_lon, max_lat, max_lon`, got {} numbers",
            n.len()
        ));
    }
    let b = BoundingBox {
        min_lat: n[0],
        min_lon: n[1],
        max_lat: n[2],
        max_lon: n[3],
    };
    if b.is_valid() {
        Ok(b)
    } else {
        Err("invalid bounding box".into())
    }
}

impl RunConfig {
    /// Parses config text. `base` is the directory relative paths resolve against.
    pub fn parse(text: &str, base: &Path) -> Result<Self, Vec<FieldError>> {
        let mut cfg = RunConfig::default();
        let mut errors = Vec::new();
        let mut drafts: BTreeMap<String, StreamDraft> = BTreeMap::new();
        let mut seen: BTreeMap<String, usize> = BTreeMap::new();
        let path = |v: &str| PathValue {
            written: v.to_string(),
            resolved: base.join(v),
        };

        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let t = raw.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let Some((key, value)) = t.split_once('=') else {
                errors.push(FieldError {
                    line,
                    key: t.to_string(),
                    message: "expected `key = value`".into(),
                });
                continue;
            };
            let (key, v) = (key.trim(), value.trim());
            if let Some(first) = seen.insert(key.to_string(), line) {
                errors.push(FieldError {
                    line,
                    key: key.into(),
                    message: format!("duplicate key (first set on line {first})"),
                });
                continue;
            }
            let result: Result<(), String> = (|| {
                if let Some(rest) = key.strip_prefix("stream.") {
                    let Some((name, field)) = rest.rsplit_once('.') else {
                        return Err("expected `stream.<name>.<field>`".into());
                    };
                    if name.is_empty() {
                        return Err("empty stream name".into());
                    }
                    let d = drafts.entry(name.to_string()).or_default();
                    match field {
                        "kind" => d.kind = Some(parse_kind(v)?),
                        "keywords" => d.keywords = list(v),
                        "accounts" => d.accounts = list(v),
                        "bbox" => d.bbox = Some(parse_bbox(v)?),
                        "window_start" => d.window_start = Some(parse(v)?),
                        "window_end" => d.window_end = Some(parse(v)?),
                        "event" => d.event = Some(parse(v)?),
                        "window_hours" => d.window_hours = Some(parse(v)?),
                        _ => return Err(format!("unknown stream field `{field}`")),
                    }
                    return Ok(());
                }
                match key {
                    "corpus" => cfg.corpus = list(v).iter().map(|p| path(p)).collect(),
                    "users" => cfg.users = list(v).iter().map(|p| path(p)).collect(),
                    "offtopic_keywords" => cfg.offtopic_keywords = list(v),
                    "edge_direction" => {
                        cfg.edge_direction = match v {
                            "interactor_to_target" => EdgeDirection::InteractorToTarget,
                            "target_to_interactor" => EdgeDirection::TargetToInteractor,
                            _ => return Err(format!("`{v}`: expected interactor_to_target or target_to_interactor")),
                        }
                    }
                    "min_community_size" => cfg.min_community_size = parse(v)?,
                    "importance" => {
                        cfg.importance = match v {
                            "weighted_in_degree" => ImportanceMode::WeightedInDegree,
                            "pagerank" => ImportanceMode::Pagerank,
                            _ => return Err(format!("`{v}`: expected weighted_in_degree or pagerank")),
                        }
                    }
                    "label_rounds" => cfg.label_rounds = parse(v)?,
                    "damping" => cfg.damping = parse(v)?,
                    "tol" => cfg.tol = parse(v)?,
                    "max_iter" => cfg.max_iter = parse(v)?,
                    "rank_rows" => cfg.rank_rows = parse(v)?,
                    "privacy" => cfg.privacy = parse_bool(v)?,
                    "k" => cfg.k = parse(v)?,
                    "kmeans_max_iter" => cfg.kmeans_max_iter = parse(v)?,
                    "seed" => cfg.seed = parse(v)?,
                    "dim" => cfg.dim = parse(v)?,
                    "embeddings" => cfg.embeddings = Some(path(v)),
                    "tau" => cfg.tau = parse(v)?,
                    "tau_hi" => cfg.tau_hi = parse(v)?,
                    "tau_lo" => cfg.tau_lo = parse(v)?,
                    "gazetteer" => cfg.gazetteer = Some(path(v)),
                    "name_lists" => cfg.name_lists = list(v).iter().map(|p| path(p)).collect(),
                    "name_training" => cfg.name_training = Some(path(v)),
                    "proper_names" => cfg.proper_names = Some(path(v)),
                    "engagement_weighting" => {
                        cfg.engagement_weighting = match v {
                            "authorship" => EngagementWeighting::Authorship,
                            "retweet_weighted" => EngagementWeighting::RetweetWeighted,
                            _ => return Err(format!("`{v}`: expected authorship or retweet_weighted")),
                        }
                    }
                    "out" => cfg.out = base.join(v),
                    "formats" => cfg.formats = parse_formats(v)?,
                    "threads" => cfg.threads = parse(v)?,
                    _ => return Err("unknown key".into()),
                }
                Ok(())
            })();
            if let Err(message) = result {
                errors.push(FieldError {
                    line,
                    key: key.into(),
                    message,
                });
            }
        }

        for (name, d) in drafts {
            let key = format!("stream.{name}");
            let Some(kind) = d.kind else {
                errors.push(FieldError {
                    line: 0,
                    key: format!("{key}.kind"),
                    message: "missing".into(),
                });
                continue;
            };
            let window = match (d.window_start, d.window_end, d.event) {
                (Some(start), Some(end), None) => Some(TimeWindow { start, end }),
                (None, None, Some(event)) => Some(TimeWindow::before_event(event, d.window_hours.unwrap_or(48))),
                (None, None, None) => None,
                _ => {
                    errors.push(FieldError {
                        line: 0,
                        key: format!("{key}.window_start"),
                        message: "give window_start and window_end together, or event alone".into(),
                    });
                    continue;
                }
            };
            let spec = StreamSpec {
                name,
                kind,
                keywords: d.keywords,
                accounts: d.accounts,
                bounding_box: d.bbox,
                window,
            };
            match spec.validate() {
                Ok(()) => cfg.streams.push(spec),
                Err(e) => errors.push(FieldError {
                    line: 0,
                    key,
                    message: e.to_string(),
                }),
            }
        }
        errors.extend(cfg.check());
        if errors.is_empty() {
            Ok(cfg)
        } else {
            Err(errors)
        }
    }

    pub fn load(path: &Path) -> Result<Self, ConfigLoadError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigLoadError::Unreadable(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base).map_err(ConfigLoadError::Invalid)
    }

    /// Range checks on scalar fields.
    pub fn check(&self) -> Vec<FieldError> {
        let mut errors = Vec::new();
        let mut bad = |key: &str, message: String| {
            errors.push(FieldError {
                line: 0,
                key: key.into(),
                message,
            })
        };
        if self.corpus.is_empty() {
            bad("corpus", "at least one corpus file is required".into());
        }
        if !(self.damping > 0.0 && self.damping < 1.0) {
            bad("damping", format!("{} is outside (0, 1)", self.damping));
        }
        if !(self.tol > 0.0) {
            bad("tol", format!("{} must be positive", self.tol));
        }
        if self.max_iter == 0 {
            bad("max_iter", "must be at least 1".into());
        }
        if self.k == 0 {
            bad("k", "must be at least 1".into());
        }
        if self.dim < 2 {
            bad("dim", "must be at least 2".into());
        }
        if !(self.tau > 0.0 && self.tau < 1.0) {
            bad("tau", format!("{} is outside (0, 1)", self.tau));
        }
        if !(self.tau_hi > 1.0) {
            bad("tau_hi", format!("{} must exceed 1", self.tau_hi));
        }
        if !(self.tau_lo > 0.0 && self.tau_lo < 1.0) {
            bad("tau_lo", format!("{} is outside (0, 1)", self.tau_lo));
        }
        if self.threads == 0 {
            bad("threads", "must be at least 1".into());
        }
        if self.formats.is_empty() {
            bad("formats", "at least one format is required".into());
        }
        errors
    }

    /// Keywords used for off-topic flags: the explicit list, else every stream keyword.
    pub fn flag_keywords(&self) -> Vec<String> {
        if !self.offtopic_keywords.is_empty() {
            return self.offtopic_keywords.clone();
        }
        let mut all: Vec<String> = Vec::new();
        for s in &self.streams {
            for k in &s.keywords {
                if !all.contains(k) {
                    all.push(k.clone());
                }
            }
        }
        all
    }

    /// Every setting that affects results, one `key = value` per line.
    /// Output location and thread count are excluded.
    pub fn canonical(&self) -> String {
        let paths = |v: &[PathValue]| v.iter().map(|p| p.written.as_str()).collect::<Vec<_>>().join(",");
        let opt = |v: &Option<PathValue>| v.as_ref().map(|p| p.written.clone()).unwrap_or_default();
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("corpus", paths(&self.corpus));
        kv("users", paths(&self.users));
        for st in &self.streams {
            let p = format!("stream.{}", st.name);
            kv(&format!("{p}.kind"), format!("{:?}", st.kind));
            kv(&format!("{p}.keywords"), st.keywords.join(","));
            kv(&format!("{p}.accounts"), st.accounts.join(","));
            kv(&format!("{p}.bbox"), format!("{:?}", st.bounding_box));
            kv(&format!("{p}.window"), format!("{:?}", st.window));
        }
        kv("offtopic_keywords", self.offtopic_keywords.join(","));
        kv("edge_direction", format!("{:?}", self.edge_direction));
        kv("min_community_size", self.min_community_size.to_string());
        kv("importance", format!("{:?}", self.importance));
        kv("label_rounds", self.label_rounds.to_string());
        kv("damping", self.damping.to_string());
        kv("tol", self.tol.to_string());
        kv("max_iter", self.max_iter.to_string());
        kv("rank_rows", self.rank_rows.to_string());
        kv("privacy", self.privacy.to_string());
        kv("k", self.k.to_string());
        kv("kmeans_max_iter", self.kmeans_max_iter.to_string());
        kv("seed", self.seed.to_string());
        kv("dim", self.dim.to_string());
        kv("embeddings", opt(&self.embeddings));
        kv("tau", self.tau.to_string());
        kv("tau_hi", self.tau_hi.to_string());
        kv("tau_lo", self.tau_lo.to_string());
        kv("gazetteer", opt(&self.gazetteer));
        kv("name_lists", paths(&self.name_lists));
        kv("name_training", opt(&self.name_training));
        kv("proper_names", opt(&self.proper_names));
        kv("engagement_weighting", format!("{:?}", self.engagement_weighting));
        kv(
            "formats",
            self.formats
                .iter()
                .map(|f| format!("{f:?}"))
                .collect::<Vec<_>>()
                .join(","),
        );
        s
    }

    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical().as_bytes()))
    }
}

pub fn parse_formats(v: &str) -> Result<BTreeSet<ReportFormat>, String> {
    list(v).iter().map(|f| f.parse::<ReportFormat>()).collect()
}

#[derive(Debug)]
pub enum ConfigLoadError {
    Unreadable(String),
    Invalid(Vec<FieldError>),
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse_ok(text: &str) -> RunConfig {
        RunConfig::parse(text, Path::new("/cfg")).unwrap()
    }

    #[test]
    fn defaults_from_minimal_config() {
        let c = parse_ok("corpus = tweets.ndjson\n");
        let d = RunConfig::default();
        assert_eq!(c.min_community_size, 120);
        assert_eq!((c.damping, c.tol, c.max_iter), (0.85, 1e-9, 100));
        assert_eq!((c.k, c.dim, c.seed), (250, 512, 0));
        assert_eq!((c.tau, c.tau_hi, c.tau_lo), (0.6, 1.25, 0.8));
        assert_eq!(c.corpus[0].resolved, PathBuf::from("/cfg/tweets.ndjson"));
        assert_eq!(c.formats, d.formats);
        assert_eq!(c.threads, 1);
    }

    #[test]
    fn streams_and_lists() {
        let c = parse_ok(
            "# comment\ncorpus = a.ndjson, b.ndjson\nstream.s.kind = keyword\nstream.s.keywords = climate, youth\n\
             stream.g.kind = geo_window\nstream.g.bbox = -4.7, 33.9, 5.0, 41.9\nstream.g.event = 1000000\n\
             formats = csv, json\n",
        );
        assert_eq!(c.corpus.len(), 2);
        assert_eq!(c.streams.len(), 2);
        let g = c.streams.iter().find(|s| s.name == "g").unwrap();
        assert_eq!(
            g.window,
            Some(TimeWindow {
                start: 1_000_000 - 48 * 3600,
                end: 1_000_000
            })
        );
        assert_eq!(c.formats.len(), 2);
        assert_eq!(c.flag_keywords(), ["climate", "youth"]);
    }

    #[test]
    fn field_level_errors() {
        let errs = RunConfig::parse(
            "corpus = a\nbogus = 1\ndamping = 1.5\nk = many\nstream.x.kind = keyword\nk = 3\n",
            Path::new("."),
        )
        .unwrap_err();
        let keys: Vec<&str> = errs.iter().map(|e| e.key.as_str()).collect();
        assert!(keys.contains(&"bogus"));
        assert!(keys.contains(&"k"));
        assert!(keys.contains(&"stream.x"));
        assert!(keys.contains(&"damping"));
        assert!(errs.iter().any(|e| e.message.contains("duplicate")));
    }

    #[test]
    fn hash_ignores_out_and_threads() {
        let a = parse_ok("corpus = t\nout = x\nthreads = 4\n");
        let b = parse_ok("corpus = t\nout = y\n");
        assert_eq!(a.hash(), b.hash());
        let c = parse_ok("corpus = t\nseed = 1\n");
        assert_ne!(a.hash(), c.hash());
    }
}
