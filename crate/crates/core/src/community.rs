// SPDX-License-Identifier: Apache-2.0

//! Influence-weighted label propagation, the community size gate, anchors and
//! off-topic review flags.
//!
//! Propagation views the interaction graph as undirected: the weight between
//! two users is the sum of both directed edge weights. Every node starts with
//! its own label; in each round nodes are visited in a seeded random order and
//! adopt the label with the largest total vote, where a neighbor votes for its
//! label with `edge weight × neighbor importance`. A node keeps its label when
//! that label is among the best; otherwise the lowest tied label wins. Nodes
//! whose neighborhood casts no positive vote keep their label.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{GraphError, InteractionGraph, NodeId};
use crate::influence::{pagerank, InfluenceError, PageRankParams};
use crate::ingest::{compile_keywords, matches_any_keyword, TweetRecord, UserIndex};
use crate::topics::normalize_text;

#[derive(Debug, Error)]
pub enum CommunityError {
    #[error("anchor of an empty member set is undefined")]
    EmptyMembers,
    #[error("off-topic flagging needs at least one keyword")]
    NoKeywords,
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Influence(#[from] InfluenceError),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImportanceMode {
    #[default]
    WeightedInDegree,
    Pagerank,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeImportance {
    pub node: String,
    pub importance: f64,
}

/// Per-node importance, indexed by node id. Isolated nodes get `floor`.
pub fn node_importance(
    g: &InteractionGraph,
    mode: ImportanceMode,
    pagerank_params: PageRankParams,
    floor: f64,
) -> Result<Vec<f64>, CommunityError> {
    if g.is_empty() {
        return Ok(Vec::new());
    }
    let degrees = g.degree_stats();
    let mut values: Vec<f64> = match mode {
        ImportanceMode::WeightedInDegree => degrees.iter().map(|d| d.weighted_in as f64).collect(),
        ImportanceMode::Pagerank => pagerank(g, pagerank_params)?.scores,
    };
    for (v, d) in values.iter_mut().zip(&degrees) {
        if d.in_degree == 0 && d.out_degree == 0 {
            *v = floor;
        }
    }
    Ok(values)
}

pub fn importance_entries(g: &InteractionGraph, values: &[f64]) -> Vec<NodeImportance> {
    g.nodes()
        .iter()
        .zip(values)
        .map(|(n, &importance)| NodeImportance {
            node: n.clone(),
            importance,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Community {
    pub id: usize,
    /// Sorted user ids.
    pub members: Vec<String>,
    pub size: usize,
    pub anchor: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommunityAssignment {
    pub labels: BTreeMap<String, usize>,
    /// Ordered by id. Ids are assigned by descending size, then smallest member.
    pub communities: Vec<Community>,
    pub iterations_run: usize,
    pub converged: bool,
}

impl CommunityAssignment {
    /// Labels cover exactly the community members, which partition the labelled set.
    pub fn is_consistent(&self) -> bool {
        let mut seen = HashSet::new();
        for c in &self.communities {
            if c.size != c.members.len() || !c.members.contains(&c.anchor) {
                return false;
            }
            for m in &c.members {
                if !seen.insert(m.as_str()) || self.labels.get(m) != Some(&c.id) {
                    return false;
                }
            }
        }
        seen.len() == self.labels.len()
    }

    pub fn community_of(&self, user_id: &str) -> Option<&Community> {
        let id = *self.labels.get(user_id)?;
        self.communities.iter().find(|c| c.id == id)
    }
}

/// Undirected weighted adjacency with both edge directions merged.
struct UndirectedAdjacency {
    offsets: Vec<usize>,
    neighbors: Vec<NodeId>,
    weights: Vec<f64>,
}

impl UndirectedAdjacency {
    fn new(g: &InteractionGraph) -> Self {
        let n = g.node_count();
        let mut counts = vec![0usize; n + 1];
        for e in g.edges() {
            counts[e.src as usize + 1] += 1;
            counts[e.dst as usize + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let mut cursor = counts.clone();
        let mut pairs = vec![(0 as NodeId, 0u64); counts[n]];
        for e in g.edges() {
            let w = e.weight.total();
            pairs[cursor[e.src as usize]] = (e.dst, w);
            cursor[e.src as usize] += 1;
            pairs[cursor[e.dst as usize]] = (e.src, w);
            cursor[e.dst as usize] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut neighbors = Vec::with_capacity(pairs.len());
        let mut weights = Vec::with_capacity(pairs.len());
        offsets.push(0);
        for i in 0..n {
            let slice = &mut pairs[counts[i]..counts[i + 1]];
            slice.sort_unstable_by_key(|p| p.0);
            let start = neighbors.len();
            for &(v, w) in slice.iter() {
                if neighbors.len() > start && *neighbors.last().unwrap() == v {
                    *weights.last_mut().unwrap() += w as f64;
                } else {
                    neighbors.push(v);
                    weights.push(w as f64);
                }
            }
            offsets.push(neighbors.len());
        }
        Self {
            offsets,
            neighbors,
            weights,
        }
    }

    fn of(&self, v: usize) -> (&[NodeId], &[f64]) {
        let r = self.offsets[v]..self.offsets[v + 1];
        (&self.neighbors[r.clone()], &self.weights[r])
    }
}

/// Runs label propagation. Fully determined by `(g, importance, seed, max_rounds)`.
pub fn label_propagation(
    g: &InteractionGraph,
    importance: &[f64],
    seed: u64,
    max_rounds: usize,
) -> CommunityAssignment {
    assert_eq!(importance.len(), g.node_count(), "importance must cover every node");
    let n = g.node_count();
    let adj = UndirectedAdjacency::new(g);
    let mut labels: Vec<u32> = (0..n as u32).collect();
    let mut order: Vec<u32> = (0..n as u32).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut votes = vec![0.0f64; n];
    let mut is_touched = vec![false; n];
    let mut touched: Vec<u32> = Vec::new();
    let mut rounds = 0;
    let mut converged = n == 0;

    while rounds < max_rounds.max(1) && !converged {
        rounds += 1;
        order.shuffle(&mut rng);
        let mut changes = 0usize;
        for &v in &order {
            let v = v as usize;
            let (nbrs, ws) = adj.of(v);
            for (&u, &w) in nbrs.iter().zip(ws) {
                let l = labels[u as usize];
                if !is_touched[l as usize] {
                    is_touched[l as usize] = true;
                    touched.push(l);
                }
                votes[l as usize] += w * importance[u as usize];
            }
            let current = labels[v];
            let best_vote = touched.iter().map(|&l| votes[l as usize]).fold(0.0, f64::max);
            if best_vote > 0.0 && votes[current as usize] != best_vote {
                let best = touched
                    .iter()
                    .copied()
                    .filter(|&l| votes[l as usize] == best_vote)
                    .min()
                    .expect("a label attains the maximum");
                labels[v] = best;
                changes += 1;
            }
            for &l in &touched {
                votes[l as usize] = 0.0;
                is_touched[l as usize] = false;
            }
            touched.clear();
        }
        converged = changes == 0;
    }

    assemble(g, &labels, rounds, converged)
}

fn assemble(g: &InteractionGraph, labels: &[u32], rounds: usize, converged: bool) -> CommunityAssignment {
    let mut groups: BTreeMap<u32, Vec<NodeId>> = BTreeMap::new();
    for (v, &l) in labels.iter().enumerate() {
        groups.entry(l).or_default().push(v as NodeId);
    }
    // Members are ascending node ids, i.e. sorted user ids.
    let mut groups: Vec<Vec<NodeId>> = groups.into_values().collect();
    groups.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a[0].cmp(&b[0])));

    let mut community_of = vec![0usize; labels.len()];
    for (cid, members) in groups.iter().enumerate() {
        for &m in members {
            community_of[m as usize] = cid;
        }
    }
    let mut internal_in = vec![0u64; labels.len()];
    for e in g.edges() {
        if community_of[e.src as usize] == community_of[e.dst as usize] {
            internal_in[e.dst as usize] += e.weight.total();
        }
    }

    let mut assignment = CommunityAssignment {
        labels: BTreeMap::new(),
        communities: Vec::with_capacity(groups.len()),
        iterations_run: rounds,
        converged,
    };
    for (cid, members) in groups.into_iter().enumerate() {
        // Strictly greater keeps the first, i.e. lexicographically smallest, on ties.
        let mut anchor = members[0];
        for &m in &members {
            if internal_in[m as usize] > internal_in[anchor as usize] {
                anchor = m;
            }
        }
        let names: Vec<String> = members.iter().map(|&m| g.node_name(m).to_string()).collect();
        for name in &names {
            assignment.labels.insert(name.clone(), cid);
        }
        assignment.communities.push(Community {
            id: cid,
            size: names.len(),
            members: names,
            anchor: g.node_name(anchor).to_string(),
        });
    }
    assignment
}

/// The member with the largest weighted in-degree inside the induced
/// subgraph; ties go to the lexicographically smallest user id.
pub fn anchor_user<'a, I>(g: &InteractionGraph, members: I) -> Result<String, CommunityError>
where
    I: IntoIterator<Item = &'a str>,
{
    let sub = g.induced_subgraph(members)?;
    if sub.is_empty() {
        return Err(CommunityError::EmptyMembers);
    }
    let deg = sub.degree_stats();
    let mut best = 0usize;
    for (i, d) in deg.iter().enumerate() {
        if d.weighted_in > deg[best].weighted_in {
            best = i;
        }
    }
    Ok(sub.node_name(best as NodeId).to_string())
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateStats {
    pub communities_kept: usize,
    pub communities_dropped: usize,
    pub members_dropped: usize,
}

/// Keeps communities with strictly more than `min_size` members. Dropped
/// members lose their label; kept communities are unchanged.
pub fn gate_communities(a: &CommunityAssignment, min_size: usize) -> (CommunityAssignment, GateStats) {
    let mut stats = GateStats::default();
    let mut out = CommunityAssignment {
        labels: BTreeMap::new(),
        communities: Vec::new(),
        iterations_run: a.iterations_run,
        converged: a.converged,
    };
    for c in &a.communities {
        if c.size > min_size {
            stats.communities_kept += 1;
            for m in &c.members {
                out.labels.insert(m.clone(), c.id);
            }
            out.communities.push(c.clone());
        } else {
            stats.communities_dropped += 1;
            stats.members_dropped += c.size;
        }
    }
    (out, stats)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OffTopicFlag {
    pub community_id: usize,
    pub size: usize,
    pub anchor: String,
    pub reason: String,
}

/// Flags communities in which no member tweet contains a configured keyword or
/// refers to the community's anchor (by handle or mention). Nothing is removed;
/// the flags feed a manual review.
pub fn flag_offtopic(
    assignment: &CommunityAssignment,
    tweets: &[TweetRecord],
    keywords: &[String],
    users: &UserIndex,
) -> Result<Vec<OffTopicFlag>, CommunityError> {
    let compiled = compile_keywords(keywords);
    if compiled.is_empty() {
        return Err(CommunityError::NoKeywords);
    }
    let mut by_author: HashMap<&str, Vec<&TweetRecord>> = HashMap::new();
    for t in tweets {
        by_author.entry(&t.author_id).or_default().push(t);
    }

    let mut flags = Vec::new();
    for c in &assignment.communities {
        let handle = users
            .get(&c.anchor)
            .map(|u| u.handle.to_lowercase())
            .unwrap_or_else(|| c.anchor.to_lowercase());
        let handle_token = normalize_text(&handle).joined();
        let mut anchor_keys = compile_keywords(std::slice::from_ref(&handle));
        if handle_token.is_empty() {
            anchor_keys.clear();
        }
        let mut seen = 0usize;
        let on_topic = c
            .members
            .iter()
            .flat_map(|m| by_author.get(m.as_str()).into_iter().flatten())
            .any(|t| {
                seen += 1;
                if matches_any_keyword(&t.text, &compiled) || matches_any_keyword(&t.text, &anchor_keys) {
                    return true;
                }
                t.mentions.contains(&c.anchor)
                    || normalize_text(&t.text).mentions.contains(&handle)
            });
        if !on_topic {
            flags.push(OffTopicFlag {
                community_id: c.id,
                size: c.size,
                anchor: c.anchor.clone(),
                reason: format!("no keyword or anchor reference in {seen} member tweets"),
            });
        }
    }
    Ok(flags)
}

/// Review file body: `community_id,size,anchor,reason`.
pub fn review_flags_csv(flags: &[OffTopicFlag]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["community_id", "size", "anchor", "reason"])
        .expect("in-memory write");
    for f in flags {
        w.write_record([
            f.community_id.to_string().as_str(),
            f.size.to_string().as_str(),
            &f.anchor,
            &f.reason,
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

/// Members of every community, for restricting downstream analyses.
pub fn member_set(a: &CommunityAssignment) -> BTreeSet<String> {
    a.labels.keys().cloned().collect()
}
