// SPDX-License-Identifier: Apache-2.0

//! Weighted directed interaction graph built from retweets and replies.
//!
//! Node ids are dense `u32` indices assigned in lexicographic order of user id,
//! so every derived quantity is independent of input order. Edges are
//! aggregated per ordered pair and stored sorted by `(src, dst)` with CSR
//! offsets for both directions. Graphs are immutable once built.

use std::collections::{BTreeSet, HashMap};
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::TweetRecord;

pub type NodeId = u32;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("self-loop on `{0}`")]
    SelfLoop(String),
    #[error("edge {0} -> {1} has zero weight")]
    ZeroWeight(String, String),
    #[error("{path}: {message}")]
    Csv { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeWeight {
    pub retweets: u64,
    pub replies: u64,
}

impl EdgeWeight {
    pub fn total(&self) -> u64 {
        self.retweets + self.replies
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub src: NodeId,
    pub dst: NodeId,
    pub weight: EdgeWeight,
}

/// Which way an interaction edge points.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeDirection {
    /// Retweeter/replier points at the author it engaged with.
    #[default]
    InteractorToTarget,
    TargetToInteractor,
}

#[derive(Debug, Clone)]
pub struct InteractionGraph {
    nodes: Vec<String>,
    index: HashMap<String, NodeId>,
    edges: Vec<Edge>,
    out_offsets: Vec<usize>,
    in_offsets: Vec<usize>,
    /// Edge indices grouped by destination.
    in_edges: Vec<u32>,
}

impl PartialEq for InteractionGraph {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes && self.edges == other.edges
    }
}

/// Maps tweet ids to their authors so retweet/reply targets can be resolved.
#[derive(Debug, Default, Clone)]
pub struct TweetIndex(HashMap<String, String>);

impl TweetIndex {
    pub fn from_tweets<'a>(tweets: impl IntoIterator<Item = &'a TweetRecord>) -> Self {
        let mut map = HashMap::new();
        for t in tweets {
            map.entry(t.tweet_id.clone()).or_insert_with(|| t.author_id.clone());
        }
        Self(map)
    }

    pub fn insert(&mut self, tweet_id: String, author_id: String) {
        self.0.entry(tweet_id).or_insert(author_id);
    }

    pub fn author_of(&self, tweet_id: &str) -> Option<&str> {
        self.0.get(tweet_id).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Entries sorted by tweet id.
    pub fn sorted_entries(&self) -> Vec<(&str, &str)> {
        let mut v: Vec<_> = self.0.iter().map(|(k, v)| (k.as_str(), v.as_str())).collect();
        v.sort_unstable();
        v
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildStats {
    pub retweets_resolved: u64,
    pub replies_resolved: u64,
    pub unresolved_targets: u64,
    pub self_interactions: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreeStats {
    pub in_degree: u64,
    pub out_degree: u64,
    pub weighted_in: u64,
    pub weighted_out: u64,
}

impl InteractionGraph {
    /// Builds a graph from named nodes and aggregated edges. Edge endpoints are
    /// added to the node set; parallel entries for the same ordered pair are summed.
    pub fn from_named_edges<N, E>(nodes: N, edges: E) -> Result<Self, GraphError>
    where
        N: IntoIterator<Item = String>,
        E: IntoIterator<Item = (String, String, EdgeWeight)>,
    {
        let edges: Vec<_> = edges.into_iter().collect();
        let mut names: BTreeSet<String> = nodes.into_iter().collect();
        for (s, d, w) in &edges {
            if s == d {
                return Err(GraphError::SelfLoop(s.clone()));
            }
            if w.total() == 0 {
                return Err(GraphError::ZeroWeight(s.clone(), d.clone()));
            }
            names.insert(s.clone());
            names.insert(d.clone());
        }
        let names: Vec<String> = names.into_iter().collect();
        let index: HashMap<String, NodeId> = names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i as NodeId))
            .collect();
        let raw: Vec<_> = edges.into_iter().map(|(s, d, w)| (index[&s], index[&d], w)).collect();
        Ok(Self::assemble(names, index, raw.into_iter()))
    }

    /// Builds a graph over nodes `0..names.len()` from index-based edges.
    /// `names` must be sorted and unique. Self-loops and zero weights are dropped.
    pub fn from_indexed_edges(
        names: Vec<String>,
        edges: impl IntoIterator<Item = (NodeId, NodeId, EdgeWeight)>,
    ) -> Self {
        debug_assert!(names.windows(2).all(|w| w[0] < w[1]));
        let index = names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i as NodeId))
            .collect();
        let raw = edges.into_iter().filter(|(s, d, w)| s != d && w.total() > 0);
        Self::assemble(names, index, raw)
    }

    fn assemble(
        nodes: Vec<String>,
        index: HashMap<String, NodeId>,
        raw: impl Iterator<Item = (NodeId, NodeId, EdgeWeight)>,
    ) -> Self {
        let mut flat: Vec<(NodeId, NodeId, EdgeWeight)> = raw.collect();
        flat.sort_unstable_by_key(|&(s, d, _)| (s, d));
        let mut edges: Vec<Edge> = Vec::with_capacity(flat.len());
        for (src, dst, w) in flat {
            match edges.last_mut() {
                Some(last) if last.src == src && last.dst == dst => {
                    last.weight.retweets += w.retweets;
                    last.weight.replies += w.replies;
                }
                _ => edges.push(Edge { src, dst, weight: w }),
            }
        }

        let n = nodes.len();
        let mut out_offsets = vec![0usize; n + 1];
        let mut in_counts = vec![0usize; n + 1];
        for e in &edges {
            out_offsets[e.src as usize + 1] += 1;
            in_counts[e.dst as usize + 1] += 1;
        }
        for i in 0..n {
            out_offsets[i + 1] += out_offsets[i];
            in_counts[i + 1] += in_counts[i];
        }
        let in_offsets = in_counts.clone();
        let mut cursor = in_counts;
        let mut in_edges = vec![0u32; edges.len()];
        // Edges are sorted by src, so each in-list ends up sorted by src too.
        for (i, e) in edges.iter().enumerate() {
            let slot = &mut cursor[e.dst as usize];
            in_edges[*slot] = i as u32;
            *slot += 1;
        }

        Self {
            nodes,
            index,
            edges,
            out_offsets,
            in_offsets,
            in_edges,
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// User ids in node-id order (lexicographic).
    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn node_name(&self, id: NodeId) -> &str {
        &self.nodes[id as usize]
    }

    pub fn node_id(&self, name: &str) -> Option<NodeId> {
        self.index.get(name).copied()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn out_edges(&self, id: NodeId) -> &[Edge] {
        let i = id as usize;
        &self.edges[self.out_offsets[i]..self.out_offsets[i + 1]]
    }

    pub fn in_edges(&self, id: NodeId) -> impl Iterator<Item = &Edge> + '_ {
        let i = id as usize;
        self.in_edges[self.in_offsets[i]..self.in_offsets[i + 1]]
            .iter()
            .map(move |&e| &self.edges[e as usize])
    }

    pub fn edge_weight(&self, src: &str, dst: &str) -> Option<EdgeWeight> {
        let (s, d) = (self.node_id(src)?, self.node_id(dst)?);
        self.out_edges(s)
            .binary_search_by_key(&d, |e| e.dst)
            .ok()
            .map(|i| self.out_edges(s)[i].weight)
    }

    pub fn total_weight(&self) -> u64 {
        self.edges.iter().map(|e| e.weight.total()).sum()
    }

    pub fn degree_stats(&self) -> Vec<DegreeStats> {
        let mut stats = vec![DegreeStats::default(); self.nodes.len()];
        for e in &self.edges {
            let w = e.weight.total();
            let s = &mut stats[e.src as usize];
            s.out_degree += 1;
            s.weighted_out += w;
            let d = &mut stats[e.dst as usize];
            d.in_degree += 1;
            d.weighted_in += w;
        }
        stats
    }

    /// Weighted in-degree counting only the retweet part of each edge.
    pub fn retweet_in_weights(&self) -> Vec<u64> {
        let mut w = vec![0u64; self.nodes.len()];
        for e in &self.edges {
            w[e.dst as usize] += e.weight.retweets;
        }
        w
    }

    /// Restriction to `members`, keeping exactly the edges with both endpoints inside.
    pub fn induced_subgraph<'a, I>(&self, members: I) -> Result<InteractionGraph, GraphError>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut keep = vec![false; self.nodes.len()];
        let mut names = BTreeSet::new();
        for m in members {
            let id = self.node_id(m).ok_or_else(|| GraphError::UnknownNode(m.to_string()))?;
            keep[id as usize] = true;
            names.insert(m.to_string());
        }
        let names: Vec<String> = names.into_iter().collect();
        let new_index: HashMap<&str, NodeId> = names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.as_str(), i as NodeId))
            .collect();
        let edges: Vec<_> = self
            .edges
            .iter()
            .filter(|e| keep[e.src as usize] && keep[e.dst as usize])
            .map(|e| {
                (
                    new_index[self.node_name(e.src)],
                    new_index[self.node_name(e.dst)],
                    e.weight,
                )
            })
            .collect();
        Ok(Self::from_indexed_edges(names, edges))
    }

    /// Writes the node list (`user_id`) and the edge list
    /// (`src,dst,weight,retweets,replies`).
    pub fn write_csv(&self, nodes_path: &Path, edges_path: &Path) -> Result<(), GraphError> {
        let csv_err = |path: &Path| {
            let path = path.to_path_buf();
            move |e: csv::Error| GraphError::Csv {
                path: path.clone(),
                message: e.to_string(),
            }
        };
        let mut w = csv::Writer::from_path(nodes_path).map_err(csv_err(nodes_path))?;
        w.write_record(["user_id"]).map_err(csv_err(nodes_path))?;
        for n in &self.nodes {
            w.write_record([n]).map_err(csv_err(nodes_path))?;
        }
        w.flush().map_err(|source| GraphError::Io {
            path: nodes_path.to_path_buf(),
            source,
        })?;

        let mut w = csv::Writer::from_path(edges_path).map_err(csv_err(edges_path))?;
        w.write_record(["src", "dst", "weight", "retweets", "replies"])
            .map_err(csv_err(edges_path))?;
        for e in &self.edges {
            w.write_record([
                self.node_name(e.src),
                self.node_name(e.dst),
                &e.weight.total().to_string(),
                &e.weight.retweets.to_string(),
                &e.weight.replies.to_string(),
            ])
            .map_err(csv_err(edges_path))?;
        }
        w.flush().map_err(|source| GraphError::Io {
            path: edges_path.to_path_buf(),
            source,
        })
    }

    pub fn read_csv(nodes_path: &Path, edges_path: &Path) -> Result<Self, GraphError> {
        #[derive(Deserialize)]
        struct NodeRow {
            user_id: String,
        }
        #[derive(Deserialize)]
        struct EdgeRow {
            src: String,
            dst: String,
            weight: u64,
            retweets: u64,
            replies: u64,
        }
        let csv_err = |path: &Path, e: csv::Error| GraphError::Csv {
            path: path.to_path_buf(),
            message: e.to_string(),
        };
        let mut r = csv::Reader::from_path(nodes_path).map_err(|e| csv_err(nodes_path, e))?;
        let nodes = r
            .deserialize::<NodeRow>()
            .map(|row| row.map(|r| r.user_id))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| csv_err(nodes_path, e))?;
        let mut r = csv::Reader::from_path(edges_path).map_err(|e| csv_err(edges_path, e))?;
        let mut edges = Vec::new();
        for row in r.deserialize::<EdgeRow>() {
            let row = row.map_err(|e| csv_err(edges_path, e))?;
            let w = EdgeWeight {
                retweets: row.retweets,
                replies: row.replies,
            };
            if w.total() != row.weight {
                return Err(GraphError::Csv {
                    path: edges_path.to_path_buf(),
                    message: format!("weight of {} -> {} is not retweets + replies", row.src, row.dst),
                });
            }
            edges.push((row.src, row.dst, w));
        }
        Self::from_named_edges(nodes, edges)
    }
}

/// Builds the interaction graph from cleaned tweets.
///
/// Nodes are the authors of `tweets` plus every resolved interaction target.
/// Each retweet adds one unit of retweet weight and each reply one unit of
/// reply weight between the interacting author and the target's author.
/// Targets missing from `index` are skipped and counted; self-interactions are
/// dropped.
pub fn build_interaction_graph(
    tweets: &[TweetRecord],
    index: &TweetIndex,
    direction: EdgeDirection,
) -> (InteractionGraph, BuildStats) {
    let mut stats = BuildStats::default();
    let mut names: BTreeSet<&str> = BTreeSet::new();
    let mut raw: Vec<(&str, &str, EdgeWeight)> = Vec::new();

    for t in tweets {
        names.insert(&t.author_id);
        let links = [
            (
                t.retweet_of.as_deref(),
                EdgeWeight {
                    retweets: 1,
                    replies: 0,
                },
            ),
            (
                t.reply_to.as_deref(),
                EdgeWeight {
                    retweets: 0,
                    replies: 1,
                },
            ),
        ];
        for (target, unit) in links {
            let Some(target) = target else { continue };
            let Some(target_author) = index.author_of(target) else {
                stats.unresolved_targets += 1;
                continue;
            };
            if target_author == t.author_id {
                stats.self_interactions += 1;
                continue;
            }
            stats.retweets_resolved += unit.retweets;
            stats.replies_resolved += unit.replies;
            names.insert(target_author);
            let (src, dst) = match direction {
                EdgeDirection::InteractorToTarget => (t.author_id.as_str(), target_author),
                EdgeDirection::TargetToInteractor => (target_author, t.author_id.as_str()),
            };
            raw.push((src, dst, unit));
        }
    }

    let names: Vec<String> = names.into_iter().map(str::to_string).collect();
    let lookup: HashMap<&str, NodeId> = names
        .iter()
        .enumerate()
        .map(|(i, n)| (n.as_str(), i as NodeId))
        .collect();
    let edges: Vec<_> = raw.into_iter().map(|(s, d, w)| (lookup[s], lookup[d], w)).collect();
    (InteractionGraph::from_indexed_edges(names, edges), stats)
}
