// SPDX-License-Identifier: Apache-2.0

//! Pipeline stages. Each stage reads its inputs from disk and persists its
//! outputs under `<out>/stages/`, so `run` and a chain of single-stage
//! invocations execute the same code on the same bytes.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::PathBuf;

use engagegraph::analysis::{self, RunMetadata};
use engagegraph::community::{self, CommunityAssignment, GateStats, OffTopicFlag};
use engagegraph::demographics::{self, DemographicAnnotation, DemographicAxis, Gazetteer, ProperNounLexicon};
use engagegraph::graph::{build_interaction_graph, BuildStats, InteractionGraph, TweetIndex};
use engagegraph::influence::{self, PageRankParams, RankTable};
use engagegraph::ingest::{self, NdjsonRecord, Parsed, TweetRecord, UserIndex, UserRecord};
use engagegraph::topics::{self, HashingEmbedder, IdfTable, KMeansParams, TopicCluster};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::config::{FieldError, PathValue, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration:\n{}", format_fields(.0))]
    Config(Vec<FieldError>),
    #[error("missing input: {0}")]
    MissingInput(String),
    #[error("missing {}: run the `{stage}` stage first", .path.display())]
    MissingStage { stage: &'static str, path: PathBuf },
    #[error("{stage} stage failed: {message}")]
    Stage { stage: &'static str, message: String },
}

fn format_fields(errors: &[FieldError]) -> String {
    errors.iter().map(|e| format!("  {e}")).collect::<Vec<_>>().join("\n")
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::MissingInput(_) | CliError::MissingStage { .. } => 3,
            CliError::Stage { .. } => 4,
        }
    }

    fn stage(stage: &'static str, e: impl std::fmt::Display) -> Self {
        CliError::Stage {
            stage,
            message: e.to_string(),
        }
    }
}

pub const STAGES: [&str; 7] = [
    "ingest",
    "graph",
    "communities",
    "influence",
    "demographics",
    "topics",
    "report",
];

/// Per-stage seed: the first 8 bytes (little-endian) of
/// `sha256(seed as 8 LE bytes ‖ stage name)`.
pub fn stage_seed(seed: u64, stage: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(stage.as_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("8 bytes"))
}

const TWEETS: &str = "tweets.ndjson";
const USERS: &str = "users.ndjson";
const TWEET_INDEX: &str = "tweet_index.csv";
const REJECTS: &str = "rejects.csv";
const NODES: &str = "graph_nodes.csv";
const EDGES: &str = "graph_edges.csv";
const COMMUNITIES: &str = "communities.json";
const OFFTOPIC: &str = "offtopic_review.csv";
const PAGERANK: &str = "pagerank.csv";
const RANK_TABLE: &str = "rank_table.csv";
const ANNOTATIONS: &str = "annotations.ndjson";
const TOPICS: &str = "topics.json";
const CLUSTERS: &str = "clusters.csv";
const ASSIGNMENTS: &str = "assignments.ndjson";
pub const REVIEW_SAMPLE: &str = "review_sample.csv";

pub struct Pipeline {
    pub cfg: RunConfig,
}

#[derive(Serialize, Deserialize)]
struct CommunityStage {
    iterations: usize,
    converged: bool,
    found: usize,
    gate: GateStats,
    assignment: CommunityAssignment,
    offtopic: Vec<OffTopicFlag>,
}

#[derive(Serialize, Deserialize)]
struct TopicStage {
    k: usize,
    iterations: usize,
    converged: bool,
    sse_history: Vec<f64>,
    silhouette: Option<f64>,
    clusters: Vec<TopicCluster>,
}

type Counts = BTreeMap<String, u64>;

impl Pipeline {
    pub fn new(cfg: RunConfig) -> Self {
        Self { cfg }
    }

    pub fn stages_dir(&self) -> PathBuf {
        self.cfg.out.join("stages")
    }

    fn stage_path(&self, name: &str) -> PathBuf {
        self.stages_dir().join(name)
    }

    fn write(&self, stage: &'static str, name: &str, bytes: impl AsRef<[u8]>) -> Result<(), CliError> {
        let dir = self.stages_dir();
        fs::create_dir_all(&dir).map_err(|e| CliError::stage(stage, format!("{}: {e}", dir.display())))?;
        let p = dir.join(name);
        fs::write(&p, bytes).map_err(|e| CliError::stage(stage, format!("{}: {e}", p.display())))
    }

    fn write_json<T: Serialize>(&self, stage: &'static str, name: &str, v: &T) -> Result<(), CliError> {
        let mut s = serde_json::to_string_pretty(v).map_err(|e| CliError::stage(stage, e))?;
        s.push('\n');
        self.write(stage, name, s)
    }

    fn write_counts(&self, stage: &'static str, counts: &Counts) -> Result<(), CliError> {
        self.write_json(stage, &format!("{stage}.counts.json"), counts)
    }

    /// Path of an intermediate produced by `producer`; errors if absent.
    fn require(&self, producer: &'static str, name: &str) -> Result<PathBuf, CliError> {
        let p = self.stage_path(name);
        if p.is_file() {
            Ok(p)
        } else {
            Err(CliError::MissingStage {
                stage: producer,
                path: p,
            })
        }
    }

    fn read_text(&self, producer: &'static str, name: &str) -> Result<String, CliError> {
        let p = self.require(producer, name)?;
        fs::read_to_string(&p).map_err(|e| CliError::stage(producer, format!("{}: {e}", p.display())))
    }

    fn read_json<T: DeserializeOwned>(&self, producer: &'static str, name: &str) -> Result<T, CliError> {
        let text = self.read_text(producer, name)?;
        serde_json::from_str(&text).map_err(|e| CliError::stage(producer, format!("{name}: {e}")))
    }

    fn read_records<T: NdjsonRecord>(&self, producer: &'static str, name: &str) -> Result<Vec<T>, CliError> {
        let p = self.require(producer, name)?;
        let parsed: Parsed<T> = ingest::parse_files(&[p]).map_err(|e| CliError::stage(producer, e))?;
        if let Some(e) = parsed.errors.first() {
            return Err(CliError::stage(producer, format!("corrupt intermediate: {e}")));
        }
        Ok(parsed.records)
    }

    fn tweets(&self) -> Result<Vec<TweetRecord>, CliError> {
        self.read_records("ingest", TWEETS)
    }

    fn users(&self) -> Result<UserIndex, CliError> {
        Ok(UserIndex::new(self.read_records("ingest", USERS)?))
    }

    fn graph(&self) -> Result<InteractionGraph, CliError> {
        let nodes = self.require("graph", NODES)?;
        let edges = self.require("graph", EDGES)?;
        InteractionGraph::read_csv(&nodes, &edges).map_err(|e| CliError::stage("graph", e))
    }

    fn pagerank_params(&self) -> PageRankParams {
        PageRankParams {
            damping: self.cfg.damping,
            tol: self.cfg.tol,
            max_iter: self.cfg.max_iter,
        }
    }

    fn existing(paths: &[PathValue]) -> Result<Vec<PathBuf>, CliError> {
        paths
            .iter()
            .map(|p| {
                if p.resolved.is_file() {
                    Ok(p.resolved.clone())
                } else {
                    Err(CliError::MissingInput(p.resolved.display().to_string()))
                }
            })
            .collect()
    }

    fn existing_opt(p: &Option<PathValue>) -> Result<Option<PathBuf>, CliError> {
        Ok(match p {
            Some(v) => Some(Self::existing(std::slice::from_ref(v))?.remove(0)),
            None => None,
        })
    }

    pub fn ingest(&self) -> Result<(), CliError> {
        let corpus = Self::existing(&self.cfg.corpus)?;
        let user_files = Self::existing(&self.cfg.users)?;
        let parsed: Parsed<TweetRecord> =
            ingest::parse_files(&corpus).map_err(|e| CliError::MissingInput(e.to_string()))?;
        let users: Parsed<UserRecord> =
            ingest::parse_files(&user_files).map_err(|e| CliError::MissingInput(e.to_string()))?;

        let mut rejects = csv::Writer::from_writer(Vec::new());
        rejects
            .write_record(["source", "line", "error"])
            .expect("in-memory write");
        for e in parsed.errors.iter().chain(&users.errors) {
            log::warn!("{}:{}: {e}", e.source, e.line);
            rejects
                .write_record([e.source.as_str(), &e.line.to_string(), &e.to_string()])
                .expect("in-memory write");
        }
        self.write("ingest", REJECTS, rejects.into_inner().expect("in-memory flush"))?;

        let index = TweetIndex::from_tweets(&parsed.records);
        let mut idx = csv::Writer::from_writer(Vec::new());
        idx.write_record(["tweet_id", "author_id"]).expect("in-memory write");
        for (t, a) in index.sorted_entries() {
            idx.write_record([t, a]).expect("in-memory write");
        }
        self.write("ingest", TWEET_INDEX, idx.into_inner().expect("in-memory flush"))?;

        let user_index = UserIndex::new(users.records.clone());
        let (kept, stats) = ingest::clean_corpus(parsed, &self.cfg.streams, &user_index).map_err(|e| {
            CliError::Config(vec![FieldError {
                line: 0,
                key: "stream".into(),
                message: e.to_string(),
            }])
        })?;
        ingest::write_ndjson(&self.stage_path(TWEETS), &kept).map_err(|e| CliError::stage("ingest", e))?;
        ingest::write_ndjson(&self.stage_path(USERS), &users.records).map_err(|e| CliError::stage("ingest", e))?;

        let mut counts = Counts::from([
            ("records_read".into(), stats.records_read),
            ("records_rejected".into(), stats.records_rejected),
            ("records_filtered_stream".into(), stats.records_filtered_stream),
            ("records_filtered_engagement".into(), stats.records_filtered_engagement),
            ("records_kept".into(), stats.records_kept),
            ("users_read".into(), users.lines_read as u64),
            ("users_rejected".into(), users.errors.len() as u64),
        ]);
        for (name, n) in &stats.records_kept_per_stream {
            counts.insert(format!("stream.{name}"), *n);
        }
        log::info!("ingest: kept {} of {} records", stats.records_kept, stats.records_read);
        self.write_counts("ingest", &counts)
    }

    pub fn build_graph(&self) -> Result<(), CliError> {
        let tweets = self.tweets()?;
        let index_text = self.read_text("ingest", TWEET_INDEX)?;
        let mut index = TweetIndex::default();
        let mut r = csv::Reader::from_reader(index_text.as_bytes());
        for row in r.records() {
            let row = row.map_err(|e| CliError::stage("ingest", format!("{TWEET_INDEX}: {e}")))?;
            index.insert(row[0].to_string(), row[1].to_string());
        }
        let (g, stats): (InteractionGraph, BuildStats) =
            build_interaction_graph(&tweets, &index, self.cfg.edge_direction);
        fs::create_dir_all(self.stages_dir()).map_err(|e| CliError::stage("graph", e))?;
        g.write_csv(&self.stage_path(NODES), &self.stage_path(EDGES))
            .map_err(|e| CliError::stage("graph", e))?;
        log::info!("graph: {} nodes, {} edges", g.node_count(), g.edge_count());
        self.write_counts(
            "graph",
            &Counts::from([
                ("nodes".into(), g.node_count() as u64),
                ("edges".into(), g.edge_count() as u64),
                ("total_weight".into(), g.total_weight()),
                ("retweets_resolved".into(), stats.retweets_resolved),
                ("replies_resolved".into(), stats.replies_resolved),
                ("unresolved_targets".into(), stats.unresolved_targets),
                ("self_interactions".into(), stats.self_interactions),
            ]),
        )
    }

    pub fn communities(&self) -> Result<(), CliError> {
        let g = self.graph()?;
        let tweets = self.tweets()?;
        let users = self.users()?;
        let importance = community::node_importance(&g, self.cfg.importance, self.pagerank_params(), 0.0)
            .map_err(|e| CliError::stage("communities", e))?;
        let seed = stage_seed(self.cfg.seed, "communities");
        let found = community::label_propagation(&g, &importance, seed, self.cfg.label_rounds);
        let (gated, gate) = community::gate_communities(&found, self.cfg.min_community_size);
        let keywords = self.cfg.flag_keywords();
        let offtopic = if keywords.is_empty() {
            log::info!("communities: no keywords configured, skipping off-topic review");
            Vec::new()
        } else {
            community::flag_offtopic(&gated, &tweets, &keywords, &users)
                .map_err(|e| CliError::stage("communities", e))?
        };
        self.write("communities", OFFTOPIC, community::review_flags_csv(&offtopic))?;
        let counts = Counts::from([
            ("rounds".into(), found.iterations_run as u64),
            ("converged".into(), found.converged as u64),
            ("communities_found".into(), found.communities.len() as u64),
            ("communities_kept".into(), gate.communities_kept as u64),
            ("members_kept".into(), gated.labels.len() as u64),
            ("members_dropped".into(), gate.members_dropped as u64),
            ("offtopic_flags".into(), offtopic.len() as u64),
        ]);
        log::info!(
            "communities: {} found, {} above the size gate",
            found.communities.len(),
            gate.communities_kept
        );
        self.write_json(
            "communities",
            COMMUNITIES,
            &CommunityStage {
                iterations: found.iterations_run,
                converged: found.converged,
                found: found.communities.len(),
                gate,
                assignment: gated,
                offtopic,
            },
        )?;
        self.write_counts("communities", &counts)
    }

    pub fn influence(&self) -> Result<(), CliError> {
        let g = self.graph()?;
        let tweets = self.tweets()?;
        let users = self.users()?;
        let pr = influence::pagerank(&g, self.pagerank_params()).map_err(|e| CliError::stage("influence", e))?;
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["user_id", "pagerank", "scaled"])
            .expect("in-memory write");
        for s in influence::influence_scores(&g, &pr.scores) {
            w.write_record([s.user_id.as_str(), &s.raw.to_string(), &s.scaled.to_string()])
                .expect("in-memory write");
        }
        self.write("influence", PAGERANK, w.into_inner().expect("in-memory flush"))?;
        let table = influence::rank_tables(&g, &pr.scores, &tweets, &users, self.cfg.rank_rows, self.cfg.privacy);
        self.write("influence", RANK_TABLE, table.to_csv())?;
        self.write_counts(
            "influence",
            &Counts::from([
                ("iterations".into(), pr.iterations as u64),
                ("converged".into(), pr.converged as u64),
                ("rank_rows".into(), table.rows.len() as u64),
            ]),
        )
    }

    pub fn demographics(&self) -> Result<(), CliError> {
        let tweets = self.tweets()?;
        let users = self.users()?;
        let gaz = match Self::existing_opt(&self.cfg.gazetteer)? {
            Some(p) => Gazetteer::from_csv(&p).map_err(|e| CliError::stage("demographics", e))?,
            None => Gazetteer::new(),
        };
        let lists = Self::existing(&self.cfg.name_lists)?;
        let training = Self::existing_opt(&self.cfg.name_training)?;
        let model = demographics::load_name_model(&lists, training.as_deref(), self.cfg.tau)
            .map_err(|e| CliError::stage("demographics", e))?;
        let mut lexicon = ProperNounLexicon::default();
        if let Some(p) = Self::existing_opt(&self.cfg.proper_names)? {
            let text = fs::read_to_string(&p).map_err(|e| CliError::MissingInput(format!("{}: {e}", p.display())))?;
            lexicon = lexicon.with_names(text.lines().map(str::trim).filter(|l| !l.starts_with('#')));
        }
        let countries = demographics::user_countries(&tweets, &gaz);
        let annotations = demographics::annotate_users(users.users(), &countries, &model, &lexicon);
        self.write(
            "demographics",
            ANNOTATIONS,
            demographics::annotations_ndjson(&annotations),
        )?;
        self.write_counts(
            "demographics",
            &Counts::from([
                ("users".into(), annotations.len() as u64),
                (
                    "with_country".into(),
                    annotations.iter().filter(|a| a.country.is_some()).count() as u64,
                ),
                (
                    "with_gender".into(),
                    annotations.iter().filter(|a| a.gender.is_some()).count() as u64,
                ),
                (
                    "eligible_youth".into(),
                    annotations.iter().filter(|a| a.eligible_youth).count() as u64,
                ),
            ]),
        )
    }

    pub fn topics(&self) -> Result<(), CliError> {
        let tweets = self.tweets()?;
        let ids: Vec<String> = tweets.iter().map(|t| t.tweet_id.clone()).collect();
        let docs: Vec<_> = tweets.iter().map(|t| topics::normalize_text(&t.text)).collect();
        let idf = IdfTable::fit(&docs);
        let points: Vec<Vec<f64>> = match Self::existing_opt(&self.cfg.embeddings)? {
            Some(p) => {
                let vectors =
                    topics::load_external_vectors(&p, self.cfg.dim).map_err(|e| CliError::stage("topics", e))?;
                topics::external_embeddings(&ids, &vectors)
                    .map_err(|e| CliError::stage("topics", e))?
                    .into_iter()
                    .map(|v| v.values)
                    .collect()
            }
            None => {
                let embedder =
                    HashingEmbedder::new(self.cfg.dim, idf.clone()).map_err(|e| CliError::stage("topics", e))?;
                docs.iter().map(|d| embedder.embed(d).values).collect()
            }
        };
        let seed = stage_seed(self.cfg.seed, "topics");
        let params = KMeansParams {
            k: self.cfg.k,
            seed,
            max_iter: self.cfg.kmeans_max_iter,
        };
        let result = topics::kmeans(&points, params).map_err(|e| CliError::stage("topics", e))?;
        let silhouette = topics::silhouette(&points, &result.assignments, self.cfg.k, 1000, seed);
        match silhouette {
            Some(s) => log::info!("topics: k = {}, silhouette {s:.4}", self.cfg.k),
            None => log::info!("topics: k = {}, fewer than two populated clusters", self.cfg.k),
        }
        let mut clusters = topics::build_clusters(&ids, &docs, &result, &idf);
        self.write("topics", CLUSTERS, topics::clusters_csv(&clusters))?;
        self.write("topics", ASSIGNMENTS, topics::assignments_ndjson(&clusters))?;
        for c in &mut clusters {
            c.centroid.clear();
        }
        let counts = Counts::from([
            ("tweets".into(), ids.len() as u64),
            ("clusters".into(), clusters.iter().filter(|c| c.size > 0).count() as u64),
            ("iterations".into(), result.iterations as u64),
            ("converged".into(), result.converged as u64),
        ]);
        self.write_json(
            "topics",
            TOPICS,
            &TopicStage {
                k: self.cfg.k,
                iterations: result.iterations,
                converged: result.converged,
                sse_history: result.sse_history,
                silhouette,
                clusters,
            },
        )?;
        self.write_counts("topics", &counts)
    }

    fn data_file_hashes(&self) -> Result<BTreeMap<String, String>, CliError> {
        let mut out = BTreeMap::new();
        let c = &self.cfg;
        let all = c
            .corpus
            .iter()
            .chain(&c.users)
            .chain(&c.name_lists)
            .chain(c.gazetteer.iter())
            .chain(c.name_training.iter())
            .chain(c.proper_names.iter())
            .chain(c.embeddings.iter());
        for p in all {
            let bytes =
                fs::read(&p.resolved).map_err(|e| CliError::MissingInput(format!("{}: {e}", p.resolved.display())))?;
            out.insert(p.written.clone(), analysis::sha256_hex(&bytes));
        }
        Ok(out)
    }

    pub fn report(&self) -> Result<(), CliError> {
        let rank_table = RankTable::from_csv(&self.read_text("influence", RANK_TABLE)?)
            .map_err(|e| CliError::stage("influence", format!("{RANK_TABLE}: {e}")))?;
        let annotations = demographics::parse_annotations(&self.read_text("demographics", ANNOTATIONS)?)
            .map_err(|e| CliError::stage("demographics", format!("{ANNOTATIONS}: {e}")))?;
        let communities: CommunityStage = self.read_json("communities", COMMUNITIES)?;
        let topic_stage: TopicStage = self.read_json("topics", TOPICS)?;
        let tweets = self.tweets()?;

        let members = community::member_set(&communities.assignment);
        let population: BTreeMap<String, DemographicAnnotation> = annotations
            .into_iter()
            .filter(|a| a.eligible_youth && members.contains(&a.user_id))
            .map(|a| (a.user_id.clone(), a))
            .collect();
        let continent = demographics::demographic_distribution(population.values(), DemographicAxis::Continent);
        let ethnicity = demographics::demographic_distribution(population.values(), DemographicAxis::Race);
        let engagements: Vec<_> = DemographicAxis::ALL
            .iter()
            .map(|&axis| {
                (
                    axis,
                    analysis::topic_engagement(
                        &topic_stage.clusters,
                        &tweets,
                        &population,
                        axis,
                        self.cfg.engagement_weighting,
                    ),
                )
            })
            .collect();
        let thresholds = analysis::Thresholds {
            over: self.cfg.tau_hi,
            under: self.cfg.tau_lo,
        };
        let report =
            analysis::disproportionality_report(&engagements, thresholds).map_err(|e| CliError::stage("report", e))?;
        let topic_terms: BTreeMap<usize, Vec<String>> = topic_stage
            .clusters
            .iter()
            .map(|c| (c.cluster_id, c.top_terms.clone()))
            .collect();

        let mut counts: BTreeMap<String, Counts> = BTreeMap::new();
        for stage in &STAGES[..STAGES.len() - 1] {
            counts.insert(
                stage.to_string(),
                self.read_json(stage, &format!("{stage}.counts.json"))?,
            );
        }
        counts.insert(
            "report".into(),
            Counts::from([
                ("population".into(), population.len() as u64),
                ("rows".into(), report.rows.len() as u64),
                ("flagged".into(), report.flagged().count() as u64),
            ]),
        );
        let run = RunMetadata {
            config_hash: self.cfg.hash(),
            seed: self.cfg.seed,
            stage_seeds: ["communities", "topics", "review-sample"]
                .iter()
                .map(|s| (s.to_string(), stage_seed(self.cfg.seed, s)))
                .collect(),
            counts,
            data_files: self.data_file_hashes()?,
            version: env!("CARGO_PKG_VERSION").to_string(),
        };
        let set = analysis::ReportSet {
            rank_table: &rank_table,
            continent: &continent,
            ethnicity: &ethnicity,
            disproportionality: &report,
            topic_terms: &topic_terms,
        };
        let manifest = analysis::emit_reports(&set, &run, &self.cfg.out, &self.cfg.formats)
            .map_err(|e| CliError::stage("report", e))?;
        log::info!(
            "report: {} files, {} flagged rows",
            manifest.files.len(),
            report.flagged().count()
        );
        Ok(())
    }

    /// Writes `review_sample.csv` with `n` topics and three example tweets each.
    pub fn review_sample(&self, n: usize) -> Result<PathBuf, CliError> {
        let topic_stage: TopicStage = self.read_json("topics", TOPICS)?;
        let tweets = self.tweets()?;
        let texts: HashMap<String, String> = tweets.into_iter().map(|t| (t.tweet_id, t.text)).collect();
        let items = topics::review_sample(&topic_stage.clusters, n, 3, stage_seed(self.cfg.seed, "review-sample"));
        let path = self.cfg.out.join(REVIEW_SAMPLE);
        fs::create_dir_all(&self.cfg.out).map_err(|e| CliError::stage("review-sample", e))?;
        fs::write(&path, topics::review_sample_csv(&items, &texts)).map_err(|e| CliError::stage("review-sample", e))?;
        Ok(path)
    }

    pub fn run_stage(&self, stage: &str) -> Result<(), CliError> {
        match stage {
            "ingest" => self.ingest(),
            "graph" => self.build_graph(),
            "communities" => self.communities(),
            "influence" => self.influence(),
            "demographics" => self.demographics(),
            "topics" => self.topics(),
            "report" => self.report(),
            other => Err(CliError::stage("run", format!("unknown stage `{other}`"))),
        }
    }

    /// Every stage in order.
    pub fn run(&self) -> Result<(), CliError> {
        for s in STAGES {
            self.run_stage(s)?;
        }
        Ok(())
    }

    /// Report files listed in the manifest.
    pub fn manifest_files(&self) -> Result<BTreeSet<String>, CliError> {
        let text =
            fs::read_to_string(self.cfg.out.join(analysis::MANIFEST_FILE)).map_err(|_| CliError::MissingStage {
                stage: "report",
                path: self.cfg.out.join(analysis::MANIFEST_FILE),
            })?;
        let m: analysis::Manifest = serde_json::from_str(&text).map_err(|e| CliError::stage("report", e))?;
        Ok(m.files.into_iter().map(|f| f.name).collect())
    }
}
