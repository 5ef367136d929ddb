// SPDX-License-Identifier: Apache-2.0

//! Engagement-graph analytics over archived social-media corpora.
//!
//! The pipeline runs ingest and filter streams, engagement cleaning, the
//! interaction graph, label-propagation communities, PageRank influence,
//! demographic annotation, topic clustering and representation analysis.
//! Every stage is a pure function of its inputs and an explicit seed.

pub mod analysis;
pub mod community;
pub mod demographics;
pub mod graph;
pub mod influence;
pub mod ingest;
pub mod synthetic;
pub mod topics;

pub use analysis::{
    disproportionality_report, emit_reports, representation_ratio, topic_engagement, Direction, EngagementWeighting,
    Manifest, ReportFormat, RepresentationReport, RepresentationRow, RunMetadata, Thresholds, TopicEngagement,
};
pub use community::{
    flag_offtopic, gate_communities, label_propagation, node_importance, Community, CommunityAssignment,
    ImportanceMode, OffTopicFlag,
};
pub use demographics::{
    classify_race, demographic_distribution, eligibility_filter, geolocate_country, Continent, DemographicAnnotation,
    DemographicAxis, Distribution, Gazetteer, NameModel, RaceCategory,
};
pub use graph::{build_interaction_graph, EdgeDirection, EdgeWeight, InteractionGraph, NodeId, TweetIndex};
pub use influence::{pagerank, rank_tables, scale_scores, PageRankParams, PageRankResult, RankTable};
pub use ingest::{
    clean_corpus, engagement_filter, parse_files, AccountKind, BoundingBox, CorpusStats, Gender, StreamKind,
    StreamSpec, TimeWindow, TweetRecord, UserIndex, UserRecord,
};
pub use topics::{kmeans, normalize_text, KMeansParams, KMeansResult, NormalizedText, TopicCluster};
