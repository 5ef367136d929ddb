// SPDX-License-Identifier: Apache-2.0

//! NDJSON corpus ingestion, filter-stream selection and engagement cleaning.
//!
//! Archives are read one JSON object per line. Malformed or invalid lines are
//! collected as [`RecordError`]s and never abort a run; only an unreadable file
//! is fatal. Multiple shards may be parsed concurrently, but records and errors
//! are always merged back in `(file, line)` order, and duplicate ids are
//! resolved first-occurrence-wins after the merge.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::topics::normalize_text;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Unreadable { path: PathBuf, source: io::Error },
    #[error("cannot write {path}: {source}")]
    Unwritable { path: PathBuf, source: io::Error },
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StreamError {
    #[error("stream `{0}` selects nothing: it needs at least one keyword or account")]
    Empty(String),
    #[error("geo-window stream `{0}` needs both a bounding box and a time window")]
    IncompleteGeoWindow(String),
    #[error("stream `{0}` has a window whose end is not after its start")]
    InvalidWindow(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coordinates {
    pub lat: f64,
    pub lon: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TweetRecord {
    pub tweet_id: String,
    pub author_id: String,
    pub text: String,
    /// UTC, seconds since the epoch.
    pub created_at: i64,
    pub likes: u64,
    pub retweets: u64,
    pub replies: u64,
    pub mentions: Vec<String>,
    pub reply_to: Option<String>,
    pub retweet_of: Option<String>,
    pub coordinates: Option<Coordinates>,
    pub place_name: Option<String>,
}

impl TweetRecord {
    /// Likes + retweets + replies. Replies are the platform's comments.
    pub fn engagement(&self) -> u64 {
        self.likes.saturating_add(self.retweets).saturating_add(self.replies)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gender {
    Female,
    Male,
    Unknown,
}

impl fmt::Display for Gender {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Gender::Female => "female",
            Gender::Male => "male",
            Gender::Unknown => "unknown",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AccountKind {
    Individual,
    Organization,
    #[default]
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserRecord {
    pub user_id: String,
    pub handle: String,
    pub display_name: String,
    pub followers: u64,
    pub has_profile_photo: bool,
    #[serde(default)]
    pub face_count: Option<u32>,
    /// Years, from an upstream face-analysis model.
    #[serde(default)]
    pub age_estimate: Option<f64>,
    #[serde(default)]
    pub gender_estimate: Option<Gender>,
    #[serde(default)]
    pub account_kind: AccountKind,
}

/// Wire layout of a tweet line; coordinates are flattened into `lat`/`lon`.
#[derive(Serialize, Deserialize)]
struct TweetLine {
    tweet_id: String,
    author_id: String,
    text: String,
    created_at: i64,
    likes: u64,
    retweets: u64,
    replies: u64,
    #[serde(default)]
    mentions: Vec<String>,
    #[serde(default)]
    reply_to: Option<String>,
    #[serde(default)]
    retweet_of: Option<String>,
    #[serde(default)]
    lat: Option<f64>,
    #[serde(default)]
    lon: Option<f64>,
    #[serde(default)]
    place_name: Option<String>,
}

/// A record type that can live in an NDJSON archive.
pub trait NdjsonRecord: Sized + Send {
    fn id(&self) -> &str;
    fn from_json_line(line: &str) -> Result<Self, RecordErrorKind>;
    fn to_json_line(&self) -> String;
}

fn decode<T: DeserializeOwned>(line: &str) -> Result<T, RecordErrorKind> {
    serde_json::from_str(line).map_err(|e| RecordErrorKind::Malformed(e.to_string()))
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, RecordErrorKind> {
    Err(RecordErrorKind::Invalid(msg.into()))
}

impl NdjsonRecord for TweetRecord {
    fn id(&self) -> &str {
        &self.tweet_id
    }

    fn from_json_line(line: &str) -> Result<Self, RecordErrorKind> {
        let w: TweetLine = decode(line)?;
        if w.tweet_id.is_empty() {
            return invalid("empty tweet_id");
        }
        if w.author_id.is_empty() {
            return invalid("empty author_id");
        }
        let coordinates = match (w.lat, w.lon) {
            (None, None) => None,
            (Some(lat), Some(lon)) => {
                if !(-90.0..=90.0).contains(&lat) {
                    return invalid(format!("lat {lat} outside [-90, 90]"));
                }
                if !(-180.0..=180.0).contains(&lon) {
                    return invalid(format!("lon {lon} outside [-180, 180]"));
                }
                Some(Coordinates { lat, lon })
            }
            _ => return invalid("lat and lon must be given together"),
        };
        if w.reply_to.is_some() && w.reply_to == w.retweet_of {
            return invalid("record is both a retweet and a reply to the same tweet");
        }
        Ok(TweetRecord {
            tweet_id: w.tweet_id,
            author_id: w.author_id,
            text: w.text,
            created_at: w.created_at,
            likes: w.likes,
            retweets: w.retweets,
            replies: w.replies,
            mentions: w.mentions,
            reply_to: w.reply_to,
            retweet_of: w.retweet_of,
            coordinates,
            place_name: w.place_name,
        })
    }

    fn to_json_line(&self) -> String {
        let w = TweetLine {
            tweet_id: self.tweet_id.clone(),
            author_id: self.author_id.clone(),
            text: self.text.clone(),
            created_at: self.created_at,
            likes: self.likes,
            retweets: self.retweets,
            replies: self.replies,
            mentions: self.mentions.clone(),
            reply_to: self.reply_to.clone(),
            retweet_of: self.retweet_of.clone(),
            lat: self.coordinates.map(|c| c.lat),
            lon: self.coordinates.map(|c| c.lon),
            place_name: self.place_name.clone(),
        };
        serde_json::to_string(&w).expect("tweet serializes")
    }
}

impl NdjsonRecord for UserRecord {
    fn id(&self) -> &str {
        &self.user_id
    }

    fn from_json_line(line: &str) -> Result<Self, RecordErrorKind> {
        let u: UserRecord = decode(line)?;
        if u.user_id.is_empty() {
            return invalid("empty user_id");
        }
        if (u.age_estimate.is_some() || u.gender_estimate.is_some()) && u.face_count != Some(1) {
            return invalid("age/gender estimates require exactly one detected face");
        }
        if let Some(age) = u.age_estimate {
            if !age.is_finite() || age < 0.0 {
                return invalid(format!("invalid age_estimate {age}"));
            }
        }
        Ok(u)
    }

    fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("user serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RecordErrorKind {
    /// Not JSON, missing a required field, or a field of the wrong type.
    Malformed(String),
    /// Well-formed JSON that violates a record invariant.
    Invalid(String),
    /// A later record reusing an id; the first occurrence is kept.
    DuplicateId(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordError {
    pub source: String,
    /// 1-based.
    pub line: usize,
    pub kind: RecordErrorKind,
}

impl fmt::Display for RecordError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: ", self.source, self.line)?;
        match &self.kind {
            RecordErrorKind::Malformed(m) => write!(f, "malformed record: {m}"),
            RecordErrorKind::Invalid(m) => write!(f, "invalid record: {m}"),
            RecordErrorKind::DuplicateId(id) => write!(f, "duplicate id `{id}`"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Parsed<T> {
    pub records: Vec<T>,
    pub errors: Vec<RecordError>,
    /// Non-blank lines seen.
    pub lines_read: usize,
}

impl<T> Default for Parsed<T> {
    fn default() -> Self {
        Self {
            records: Vec::new(),
            errors: Vec::new(),
            lines_read: 0,
        }
    }
}

struct Located<T> {
    line: usize,
    record: T,
}

fn parse_lines<T: NdjsonRecord, R: BufRead>(
    reader: R,
    source: &str,
) -> io::Result<(Vec<Located<T>>, Vec<RecordError>, usize)> {
    let mut records = Vec::new();
    let mut errors = Vec::new();
    let mut read = 0;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        read += 1;
        let lineno = i + 1;
        match T::from_json_line(&line) {
            Ok(record) => records.push(Located { line: lineno, record }),
            Err(kind) => {
                errors.push(RecordError {
                    source: source.to_string(),
                    line: lineno,
                    kind,
                });
            }
        }
    }
    Ok((records, errors, read))
}

fn merge_shards<T: NdjsonRecord>(shards: Vec<(String, Vec<Located<T>>, Vec<RecordError>, usize)>) -> Parsed<T> {
    let mut out = Parsed::default();
    let mut seen: HashSet<String> = HashSet::new();
    for (source, records, errors, read) in shards {
        out.lines_read += read;
        let mut shard_errors = errors;
        for Located { line, record } in records {
            if seen.insert(record.id().to_string()) {
                out.records.push(record);
            } else {
                shard_errors.push(RecordError {
                    source: source.clone(),
                    line,
                    kind: RecordErrorKind::DuplicateId(record.id().to_string()),
                });
            }
        }
        shard_errors.sort_by_key(|e| e.line);
        out.errors.extend(shard_errors);
    }
    out
}

/// Parses NDJSON from an in-memory reader. `source` labels errors.
pub fn parse_reader<T: NdjsonRecord, R: BufRead>(reader: R, source: &str) -> io::Result<Parsed<T>> {
    let (records, errors, read) = parse_lines(reader, source)?;
    Ok(merge_shards(vec![(source.to_string(), records, errors, read)]))
}

/// Parses one or more NDJSON shards. Shards are read in parallel; the result
/// is identical to reading them one after another in the given order.
pub fn parse_files<T: NdjsonRecord, P: AsRef<Path> + Sync>(paths: &[P]) -> Result<Parsed<T>, IngestError> {
    let shards = paths
        .par_iter()
        .map(|p| {
            let path = p.as_ref();
            let file = File::open(path).map_err(|source| IngestError::Unreadable {
                path: path.to_path_buf(),
                source,
            })?;
            let source_name = path.display().to_string();
            let (records, errors, read) =
                parse_lines(BufReader::new(file), &source_name).map_err(|source| IngestError::Unreadable {
                    path: path.to_path_buf(),
                    source,
                })?;
            Ok((source_name, records, errors, read))
        })
        .collect::<Result<Vec<_>, IngestError>>()?;
    Ok(merge_shards(shards))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schema {
    Tweets,
    Users,
}

#[derive(Debug, Clone)]
pub enum Corpus {
    Tweets(Parsed<TweetRecord>),
    Users(Parsed<UserRecord>),
}

pub fn parse_corpus(path: &Path, schema: Schema) -> Result<Corpus, IngestError> {
    Ok(match schema {
        Schema::Tweets => Corpus::Tweets(parse_files(&[path])?),
        Schema::Users => Corpus::Users(parse_files(&[path])?),
    })
}

pub fn write_ndjson<T: NdjsonRecord>(path: &Path, records: &[T]) -> Result<(), IngestError> {
    let err = |source| IngestError::Unwritable {
        path: path.to_path_buf(),
        source,
    };
    let mut w = BufWriter::new(File::create(path).map_err(err)?);
    for r in records {
        writeln!(w, "{}", r.to_json_line()).map_err(err)?;
    }
    w.flush().map_err(err)
}

/// Lookup of users by id and by (case-insensitive) handle.
#[derive(Debug, Default, Clone)]
pub struct UserIndex {
    users: Vec<UserRecord>,
    by_id: HashMap<String, usize>,
    by_handle: HashMap<String, usize>,
}

impl UserIndex {
    pub fn new(users: Vec<UserRecord>) -> Self {
        let mut by_id = HashMap::new();
        let mut by_handle = HashMap::new();
        for (i, u) in users.iter().enumerate() {
            by_id.entry(u.user_id.clone()).or_insert(i);
            by_handle.entry(u.handle.to_lowercase()).or_insert(i);
        }
        Self {
            users,
            by_id,
            by_handle,
        }
    }

    pub fn get(&self, user_id: &str) -> Option<&UserRecord> {
        self.by_id.get(user_id).map(|&i| &self.users[i])
    }

    pub fn by_handle(&self, handle: &str) -> Option<&UserRecord> {
        let h = handle.trim_start_matches('@').to_lowercase();
        self.by_handle.get(&h).map(|&i| &self.users[i])
    }

    /// Resolves an account reference given either as a user id or a handle.
    pub fn resolve(&self, account: &str) -> Option<&str> {
        self.get(account)
            .or_else(|| self.by_handle(account))
            .map(|u| u.user_id.as_str())
    }

    pub fn users(&self) -> &[UserRecord] {
        &self.users
    }

    pub fn len(&self) -> usize {
        self.users.len()
    }

    pub fn is_empty(&self) -> bool {
        self.users.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StreamKind {
    Keyword,
    Account,
    Mention,
    GeoWindow,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub min_lat: f64,
    pub min_lon: f64,
    pub max_lat: f64,
    pub max_lon: f64,
}

impl BoundingBox {
    /// Builds a box from two opposite corners in any order.
    pub fn from_corners(lat_a: f64, lon_a: f64, lat_b: f64, lon_b: f64) -> Self {
        Self {
            min_lat: lat_a.min(lat_b),
            min_lon: lon_a.min(lon_b),
            max_lat: lat_a.max(lat_b),
            max_lon: lon_a.max(lon_b),
        }
    }

    pub fn is_valid(&self) -> bool {
        [self.min_lat, self.max_lat].iter().all(|v| (-90.0..=90.0).contains(v))
            && [self.min_lon, self.max_lon]
                .iter()
                .all(|v| (-180.0..=180.0).contains(v))
            && self.min_lat <= self.max_lat
            && self.min_lon <= self.max_lon
    }

    /// Edges are inclusive.
    pub fn contains(&self, c: Coordinates) -> bool {
        (self.min_lat..=self.max_lat).contains(&c.lat) && (self.min_lon..=self.max_lon).contains(&c.lon)
    }
}

/// Half-open interval `[start, end)` of UTC epoch seconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeWindow {
    pub start: i64,
    pub end: i64,
}

impl TimeWindow {
    /// The `hours` preceding `event_start`.
    pub fn before_event(event_start: i64, hours: i64) -> Self {
        Self {
            start: event_start - hours * 3600,
            end: event_start,
        }
    }

    pub fn contains(&self, t: i64) -> bool {
        self.start <= t && t < self.end
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamSpec {
    pub name: String,
    pub kind: StreamKind,
    #[serde(default)]
    pub keywords: Vec<String>,
    #[serde(default)]
    pub accounts: Vec<String>,
    #[serde(default)]
    pub bounding_box: Option<BoundingBox>,
    #[serde(default)]
    pub window: Option<TimeWindow>,
}

impl StreamSpec {
    pub fn validate(&self) -> Result<(), StreamError> {
        let name = || self.name.clone();
        match self.kind {
            StreamKind::Keyword => {
                if normalized_keywords(&self.keywords).is_empty() {
                    return Err(StreamError::Empty(name()));
                }
            }
            StreamKind::Account | StreamKind::Mention => {
                if self.accounts.iter().all(|a| a.trim().is_empty()) {
                    return Err(StreamError::Empty(name()));
                }
            }
            StreamKind::GeoWindow => {
                let (Some(bbox), Some(window)) = (self.bounding_box, self.window) else {
                    return Err(StreamError::IncompleteGeoWindow(name()));
                };
                if !bbox.is_valid() {
                    return Err(StreamError::IncompleteGeoWindow(name()));
                }
                if window.end <= window.start {
                    return Err(StreamError::InvalidWindow(name()));
                }
            }
        }
        Ok(())
    }
}

/// Keywords normalized the same way tweet text is, padded for token-aligned
/// matching. Keywords that normalize to nothing are dropped.
fn normalized_keywords(keywords: &[String]) -> Vec<String> {
    keywords
        .iter()
        .map(|k| normalize_text(k).joined())
        .filter(|k| !k.is_empty())
        .map(|k| format!(" {k} "))
        .collect()
}

/// Case-insensitive, token-aligned match of any keyword against `text`.
///
/// A keyword matches when its normalized token sequence occurs contiguously in
/// the normalized token sequence of the text.
pub fn matches_any_keyword(text: &str, padded_keywords: &[String]) -> bool {
    let hay = format!(" {} ", normalize_text(text).joined());
    padded_keywords.iter().any(|k| hay.contains(k.as_str()))
}

/// Compiles keywords for [`matches_any_keyword`].
pub fn compile_keywords(keywords: &[String]) -> Vec<String> {
    normalized_keywords(keywords)
}

struct CompiledStream<'a> {
    spec: &'a StreamSpec,
    keywords: Vec<String>,
    accounts: HashSet<String>,
}

impl<'a> CompiledStream<'a> {
    fn new(spec: &'a StreamSpec, users: &UserIndex) -> Result<Self, StreamError> {
        spec.validate()?;
        let mut accounts = HashSet::new();
        for a in spec.accounts.iter().map(|a| a.trim()).filter(|a| !a.is_empty()) {
            accounts.insert(a.to_string());
            if let Some(id) = users.resolve(a) {
                accounts.insert(id.to_string());
            }
        }
        Ok(Self {
            spec,
            keywords: normalized_keywords(&spec.keywords),
            accounts,
        })
    }

    fn keeps(&self, t: &TweetRecord) -> bool {
        match self.spec.kind {
            StreamKind::Keyword => matches_any_keyword(&t.text, &self.keywords),
            StreamKind::Account => self.accounts.contains(&t.author_id),
            StreamKind::Mention => t.mentions.iter().any(|m| self.accounts.contains(m)),
            StreamKind::GeoWindow => {
                let (bbox, window) = (
                    self.spec.bounding_box.expect("validated"),
                    self.spec.window.expect("validated"),
                );
                t.coordinates.is_some_and(|c| bbox.contains(c)) && window.contains(t.created_at)
            }
        }
    }
}

/// Keeps the records a single filter stream would have delivered.
pub fn apply_stream(
    records: &[TweetRecord],
    spec: &StreamSpec,
    users: &UserIndex,
) -> Result<Vec<TweetRecord>, StreamError> {
    let compiled = CompiledStream::new(spec, users)?;
    Ok(records.iter().filter(|t| compiled.keeps(t)).cloned().collect())
}

/// Union of several streams, in input order, with per-stream hit counts.
/// With no streams configured every record is kept.
pub fn select_streams(
    records: Vec<TweetRecord>,
    specs: &[StreamSpec],
    users: &UserIndex,
) -> Result<(Vec<TweetRecord>, BTreeMap<String, u64>), StreamError> {
    let mut per_stream: BTreeMap<String, u64> = specs.iter().map(|s| (s.name.clone(), 0)).collect();
    if specs.is_empty() {
        return Ok((records, per_stream));
    }
    let compiled = specs
        .iter()
        .map(|s| CompiledStream::new(s, users))
        .collect::<Result<Vec<_>, _>>()?;
    let mut kept = Vec::new();
    for t in records {
        let mut any = false;
        for c in &compiled {
            if c.keeps(&t) {
                *per_stream.get_mut(&c.spec.name).expect("registered") += 1;
                any = true;
            }
        }
        if any {
            kept.push(t);
        }
    }
    Ok((kept, per_stream))
}

/// Drops records with no likes, retweets or replies. Order is preserved.
pub fn engagement_filter(records: Vec<TweetRecord>) -> Vec<TweetRecord> {
    records.into_iter().filter(|t| t.engagement() > 0).collect()
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub records_read: u64,
    pub records_rejected: u64,
    pub records_filtered_stream: u64,
    pub records_filtered_engagement: u64,
    pub records_kept: u64,
    /// Hits per stream; a record matched by several streams counts in each.
    pub records_kept_per_stream: BTreeMap<String, u64>,
}

impl CorpusStats {
    pub fn records_filtered(&self) -> u64 {
        self.records_filtered_stream + self.records_filtered_engagement
    }

    pub fn reconciles(&self) -> bool {
        self.records_read == self.records_kept + self.records_rejected + self.records_filtered()
    }
}

/// Stream selection followed by engagement cleaning, with reconciled counts.
pub fn clean_corpus(
    parsed: Parsed<TweetRecord>,
    specs: &[StreamSpec],
    users: &UserIndex,
) -> Result<(Vec<TweetRecord>, CorpusStats), StreamError> {
    let valid = parsed.records.len() as u64;
    let (selected, per_stream) = select_streams(parsed.records, specs, users)?;
    let after_streams = selected.len() as u64;
    let kept = engagement_filter(selected);
    let stats = CorpusStats {
        records_read: parsed.lines_read as u64,
        records_rejected: parsed.errors.len() as u64,
        records_filtered_stream: valid - after_streams,
        records_filtered_engagement: after_streams - kept.len() as u64,
        records_kept: kept.len() as u64,
        records_kept_per_stream: per_stream,
    };
    debug_assert!(stats.reconciles());
    Ok((kept, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    pub(crate) fn tweet(id: &str, author: &str, text: &str) -> TweetRecord {
        TweetRecord {
            tweet_id: id.into(),
            author_id: author.into(),
            text: text.into(),
            created_at: 1_625_097_600,
            likes: 1,
            retweets: 0,
            replies: 0,
            mentions: vec![],
            reply_to: None,
            retweet_of: None,
            coordinates: None,
            place_name: None,
        }
    }

    fn parse_str<T: NdjsonRecord>(s: &str) -> Parsed<T> {
        parse_reader(s.as_bytes(), "mem").unwrap()
    }

    const FULL: &str = r#"{"tweet_id":"t1","author_id":"u1","text":"hi é","created_at":1625097600,"likes":3,"retweets":1,"replies":2,"mentions":["u2"],"reply_to":"t0","retweet_of":null,"lat":-1.29,"lon":36.82,"place_name":"Nairobi"}"#;

    #[test]
    fn full_line_round_trips() {
        let p: Parsed<TweetRecord> = parse_str(FULL);
        assert!(p.errors.is_empty());
        let t = &p.records[0];
        assert_eq!(t.tweet_id, "t1");
        assert_eq!(t.text, "hi é");
        assert_eq!(t.mentions, vec!["u2"]);
        assert_eq!(t.reply_to.as_deref(), Some("t0"));
        assert_eq!(t.coordinates, Some(Coordinates { lat: -1.29, lon: 36.82 }));
        assert_eq!(t.place_name.as_deref(), Some("Nairobi"));
        let again: Parsed<TweetRecord> = parse_str(&t.to_json_line());
        assert_eq!(&again.records[0], t);
    }

    #[test]
    fn missing_tweet_id_names_line() {
        let line = r#"{"author_id":"u1","text":"x","created_at":0,"likes":0,"retweets":0,"replies":0}"#;
        let p: Parsed<TweetRecord> = parse_str(&format!("{FULL}\n{line}"));
        assert_eq!(p.records.len(), 1);
        assert_eq!(p.errors.len(), 1);
        assert_eq!(p.errors[0].line, 2);
        assert!(p.errors[0].to_string().contains("tweet_id"));
    }

    #[test]
    fn invariant_violations_rejected() {
        let cases = [
            r#"{"tweet_id":"a","author_id":"u","text":"","created_at":0,"likes":-1,"retweets":0,"replies":0}"#,
            r#"{"tweet_id":"a","author_id":"u","text":"","created_at":0,"likes":0,"retweets":0,"replies":0,"lat":91.0,"lon":0.0}"#,
            r#"{"tweet_id":"a","author_id":"u","text":"","created_at":0,"likes":0,"retweets":0,"replies":0,"lat":1.0}"#,
            r#"{"tweet_id":"a","author_id":"u","text":"","created_at":0,"likes":0,"retweets":0,"replies":0,"reply_to":"x","retweet_of":"x"}"#,
            r#"{"tweet_id":"","author_id":"u","text":"","created_at":0,"likes":0,"retweets":0,"replies":0}"#,
        ];
        for c in cases {
            let p: Parsed<TweetRecord> = parse_str(c);
            assert!(p.records.is_empty(), "{c}");
            assert_eq!(p.errors.len(), 1);
        }
    }

    #[test]
    fn duplicate_ids_first_wins() {
        let a = tweet("t1", "u1", "first");
        let b = tweet("t1", "u2", "second");
        let s = format!("{}\n{}\n", a.to_json_line(), b.to_json_line());
        let p: Parsed<TweetRecord> = parse_str(&s);
        assert_eq!(p.records, vec![a]);
        assert_eq!(p.errors[0].kind, RecordErrorKind::DuplicateId("t1".into()));
        assert_eq!(p.errors[0].line, 2);
    }

    #[test]
    fn user_face_rule() {
        let ok = r#"{"user_id":"u","handle":"h","display_name":"A B","followers":1,"has_profile_photo":true,"face_count":1,"age_estimate":20,"gender_estimate":"female","account_kind":"individual"}"#;
        let bad = r#"{"user_id":"v","handle":"h","display_name":"A B","followers":1,"has_profile_photo":true,"face_count":2,"age_estimate":20}"#;
        let p: Parsed<UserRecord> = parse_str(&format!("{ok}\n{bad}"));
        assert_eq!(p.records.len(), 1);
        assert_eq!(p.records[0].gender_estimate, Some(Gender::Female));
        assert!(matches!(p.errors[0].kind, RecordErrorKind::Invalid(_)));
    }

    fn keyword(keys: &[&str]) -> StreamSpec {
        StreamSpec {
            name: "kw".into(),
            kind: StreamKind::Keyword,
            keywords: keys.iter().map(|s| s.to_string()).collect(),
            accounts: vec![],
            bounding_box: None,
            window: None,
        }
    }

    #[test]
    fn keyword_is_case_insensitive() {
        let kept = apply_stream(
            &[tweet("1", "a", "proud of youngo today")],
            &keyword(&["YOUNGO"]),
            &UserIndex::default(),
        )
        .unwrap();
        assert_eq!(kept.len(), 1);
    }

    #[test]
    fn multiword_keywords_are_token_aligned() {
        let tweets = [
            tweet("1", "a", "Go UK Youth Climate Coalition!"),
            tweet("2", "a", "the youth climate movement"),
            tweet("3", "a", "youngos everywhere"),
        ];
        let kept = apply_stream(
            &tweets,
            &keyword(&["UK Youth Climate Coalition", "youngo"]),
            &UserIndex::default(),
        )
        .unwrap();
        assert_eq!(kept.iter().map(|t| t.tweet_id.as_str()).collect::<Vec<_>>(), ["1"]);
    }

    #[test]
    fn geo_window_drops_49h_before() {
        let event = 1_636_000_000;
        let spec = StreamSpec {
            name: "geo".into(),
            kind: StreamKind::GeoWindow,
            keywords: vec![],
            accounts: vec![],
            bounding_box: Some(BoundingBox::from_corners(55.0, -5.0, 56.0, -4.0)),
            window: Some(TimeWindow::before_event(event, 48)),
        };
        let mut early = tweet("early", "a", "x");
        early.coordinates = Some(Coordinates { lat: 55.86, lon: -4.25 });
        early.created_at = event - 49 * 3600;
        let mut inside = early.clone();
        inside.tweet_id = "inside".into();
        inside.created_at = event - 47 * 3600;
        let mut outside_box = inside.clone();
        outside_box.tweet_id = "far".into();
        outside_box.coordinates = Some(Coordinates { lat: 0.0, lon: 0.0 });
        let kept = apply_stream(&[early, inside, outside_box], &spec, &UserIndex::default()).unwrap();
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].tweet_id, "inside");
    }

    #[test]
    fn account_and_mention_streams() {
        let users = UserIndex::new(vec![UserRecord {
            user_id: "42".into(),
            handle: "YOUNGO".into(),
            display_name: "YOUNGO".into(),
            followers: 10,
            has_profile_photo: true,
            face_count: None,
            age_estimate: None,
            gender_estimate: None,
            account_kind: AccountKind::Organization,
        }]);
        let mut mention = tweet("m", "7", "hello");
        mention.mentions = vec!["42".into()];
        let tweets = [tweet("own", "42", "x"), tweet("other", "7", "x"), mention];
        let account = StreamSpec {
            name: "acc".into(),
            kind: StreamKind::Account,
            keywords: vec![],
            accounts: vec!["@youngo".into()],
            bounding_box: None,
            window: None,
        };
        let kept = apply_stream(&tweets, &account, &users).unwrap();
        assert_eq!(kept.iter().map(|t| t.tweet_id.as_str()).collect::<Vec<_>>(), ["own"]);
        let mentions = StreamSpec {
            kind: StreamKind::Mention,
            ..account
        };
        let kept = apply_stream(&tweets, &mentions, &users).unwrap();
        assert_eq!(kept.iter().map(|t| t.tweet_id.as_str()).collect::<Vec<_>>(), ["m"]);
    }

    #[test]
    fn empty_spec_is_error() {
        let e = apply_stream(&[], &keyword(&[]), &UserIndex::default()).unwrap_err();
        assert_eq!(e, StreamError::Empty("kw".into()));
        let mut geo = keyword(&[]);
        geo.kind = StreamKind::GeoWindow;
        geo.bounding_box = Some(BoundingBox::from_corners(0.0, 0.0, 1.0, 1.0));
        assert!(matches!(geo.validate(), Err(StreamError::IncompleteGeoWindow(_))));
        geo.window = Some(TimeWindow { start: 5, end: 5 });
        assert!(matches!(geo.validate(), Err(StreamError::InvalidWindow(_))));
    }

    #[test]
    fn engagement_boundaries() {
        let mut zero = tweet("z", "a", "");
        zero.likes = 0;
        let one = tweet("o", "a", "");
        assert!(engagement_filter(vec![zero]).is_empty());
        assert_eq!(engagement_filter(vec![one.clone()]), vec![one]);
    }

    #[test]
    fn engagement_fixture_order() {
        let tweets: Vec<_> = [0u64, 0, 1, 2, 0]
            .iter()
            .enumerate()
            .map(|(i, &e)| {
                let mut t = tweet(&i.to_string(), "a", "");
                t.likes = 0;
                t.replies = e;
                t
            })
            .collect();
        let kept = engagement_filter(tweets);
        assert_eq!(kept.iter().map(|t| t.tweet_id.as_str()).collect::<Vec<_>>(), ["2", "3"]);
    }

    #[test]
    fn stats_reconcile() {
        let mut zero = tweet("z", "a", "climate");
        zero.likes = 0;
        let lines = [
            tweet("1", "a", "climate").to_json_line(),
            tweet("2", "a", "football").to_json_line(),
            zero.to_json_line(),
            "{not json".to_string(),
        ]
        .join("\n");
        let parsed: Parsed<TweetRecord> = parse_str(&lines);
        let (kept, stats) = clean_corpus(parsed, &[keyword(&["climate"])], &UserIndex::default()).unwrap();
        assert_eq!(kept.len(), 1);
        assert_eq!(stats.records_read, 4);
        assert_eq!(stats.records_rejected, 1);
        assert_eq!(stats.records_filtered_stream, 1);
        assert_eq!(stats.records_filtered_engagement, 1);
        assert_eq!(stats.records_kept_per_stream["kw"], 2);
        assert!(stats.reconciles());
    }

    fn arb_tweet() -> impl Strategy<Value = TweetRecord> {
        (
            "[a-z0-9]{1,8}",
            "[a-z]{1,4}",
            "[a-zA-Z #@.é]{0,30}",
            any::<i64>(),
            (0u64..5, 0u64..5, 0u64..5),
            proptest::collection::vec("[a-z]{1,3}", 0..3),
            proptest::option::of((-90.0f64..=90.0, -180.0f64..=180.0)),
            proptest::option::of("[A-Za-z ]{1,10}"),
        )
            .prop_map(
                |(id, author, text, created_at, (likes, retweets, replies), mentions, geo, place)| TweetRecord {
                    tweet_id: id,
                    author_id: author,
                    text,
                    created_at,
                    likes,
                    retweets,
                    replies,
                    mentions,
                    reply_to: None,
                    retweet_of: Some("orig".into()),
                    coordinates: geo.map(|(lat, lon)| Coordinates { lat, lon }),
                    place_name: place,
                },
            )
    }

    proptest! {
        #[test]
        fn serialize_parse_identity(t in arb_tweet()) {
            let back = TweetRecord::from_json_line(&t.to_json_line()).unwrap();
            prop_assert_eq!(back, t);
        }

        #[test]
        fn engagement_filter_idempotent(ts in proptest::collection::vec(arb_tweet(), 0..30)) {
            let once = engagement_filter(ts);
            prop_assert_eq!(engagement_filter(once.clone()), once);
        }

        #[test]
        fn keyword_partition_union(
            texts in proptest::collection::vec("(climate|youth|ocean|food|data| ){1,8}", 1..20),
            split in 0usize..5,
        ) {
            let all = ["climate", "youth", "ocean", "food", "data"];
            let tweets: Vec<_> = texts.iter().enumerate().map(|(i, s)| tweet(&i.to_string(), "a", s)).collect();
            let users = UserIndex::default();
            let ids = |keys: &[&str]| -> BTreeMap<String, ()> {
                if keys.is_empty() { return BTreeMap::new(); }
                apply_stream(&tweets, &keyword(keys), &users).unwrap()
                    .into_iter().map(|t| (t.tweet_id, ())).collect()
            };
            let full = ids(&all);
            let mut union = ids(&all[..split]);
            union.extend(ids(&all[split..]));
            prop_assert_eq!(union, full.clone());
            prop_assert!(full.len() <= tweets.len());
        }
    }
}
