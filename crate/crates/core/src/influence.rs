// SPDX-License-Identifier: Apache-2.0

//! PageRank influence over the interaction graph, its 0–10 presentation scale,
//! and ranked account tables.
//!
//! The walk follows out-edges with probability proportional to edge weight,
//! teleports uniformly with probability `1 - damping`, and spreads the mass of
//! dangling nodes uniformly over all nodes:
//!
//! > x'ᵢ = (1 − d)/n + d · ( Σ_{j→i} xⱼ·wⱼᵢ/Wⱼ + D/n )
//!
//! where Wⱼ is the total out-weight of j and D the mass sitting on dangling
//! nodes. Each node's update is a fixed-order sum over its in-edges, so the
//! per-node work may run on any number of threads with bit-identical output.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::InteractionGraph;
use crate::ingest::{AccountKind, TweetRecord, UserIndex};

#[derive(Debug, Error, PartialEq)]
pub enum InfluenceError {
    #[error("PageRank needs at least one node")]
    EmptyGraph,
    #[error("damping must lie in (0, 1), got {0}")]
    Damping(f64),
    #[error("tolerance must be positive, got {0}")]
    Tolerance(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PageRankParams {
    pub damping: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PageRankParams {
    fn default() -> Self {
        Self {
            damping: 0.85,
            tol: 1e-9,
            max_iter: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PageRankResult {
    /// Stationary mass per node id; sums to 1.
    pub scores: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// L1 change of the last iteration.
    pub delta: f64,
}

/// Below this many nodes the per-iteration update stays on the calling thread.
const PAR_MIN_NODES: usize = 1 << 14;

pub fn pagerank(g: &InteractionGraph, params: PageRankParams) -> Result<PageRankResult, InfluenceError> {
    let n = g.node_count();
    if n == 0 {
        return Err(InfluenceError::EmptyGraph);
    }
    if !(params.damping > 0.0 && params.damping < 1.0) {
        return Err(InfluenceError::Damping(params.damping));
    }
    if !(params.tol > 0.0) {
        return Err(InfluenceError::Tolerance(params.tol));
    }
    if n == 1 {
        return Ok(PageRankResult {
            scores: vec![1.0],
            iterations: 0,
            converged: true,
            delta: 0.0,
        });
    }

    let d = params.damping;
    let nf = n as f64;
    let degrees = g.degree_stats();
    let inv_out: Vec<f64> = degrees
        .iter()
        .map(|s| {
            if s.weighted_out > 0 {
                1.0 / s.weighted_out as f64
            } else {
                0.0
            }
        })
        .collect();
    let dangling: Vec<usize> = (0..n).filter(|&i| degrees[i].weighted_out == 0).collect();

    // Pull layout: in-edges grouped by destination.
    let mut in_offsets = Vec::with_capacity(n + 1);
    let mut in_src = Vec::with_capacity(g.edge_count());
    let mut in_w = Vec::with_capacity(g.edge_count());
    in_offsets.push(0);
    for i in 0..n {
        for e in g.in_edges(i as u32) {
            in_src.push(e.src);
            in_w.push(e.weight.total() as f64);
        }
        in_offsets.push(in_src.len());
    }

    let mut x = vec![1.0 / nf; n];
    let mut next = vec![0.0; n];
    let mut contrib = vec![0.0; n];
    let mut iterations = 0;
    let mut delta = f64::INFINITY;
    let mut converged = false;

    while iterations < params.max_iter {
        iterations += 1;
        let dangling_mass: f64 = dangling.iter().map(|&j| x[j]).sum();
        for ((c, &xi), &inv) in contrib.iter_mut().zip(&x).zip(&inv_out) {
            *c = xi * inv;
        }
        let base = (1.0 - d) / nf + d * dangling_mass / nf;
        let update = |(i, out): (usize, &mut f64)| {
            let mut s = 0.0;
            for k in in_offsets[i]..in_offsets[i + 1] {
                s += in_w[k] * contrib[in_src[k] as usize];
            }
            *out = base + d * s;
        };
        if n >= PAR_MIN_NODES {
            next.par_iter_mut().enumerate().with_min_len(4096).for_each(update);
        } else {
            next.iter_mut().enumerate().for_each(update);
        }
        delta = x.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut x, &mut next);
        if delta < params.tol {
            converged = true;
            break;
        }
    }

    let total: f64 = x.iter().sum();
    for v in &mut x {
        *v /= total;
    }
    if !converged {
        log::warn!(
            "PageRank stopped after {iterations} iterations with L1 change {delta:.3e} (tolerance {:.3e})",
            params.tol
        );
    }
    Ok(PageRankResult {
        scores: x,
        iterations,
        converged,
        delta,
    })
}

/// Linear min-max map onto [0, 10]. A degenerate span maps everything to 10.
pub fn scale_scores(raw: &[f64]) -> Vec<f64> {
    let min = raw.iter().copied().fold(f64::INFINITY, f64::min);
    let max = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = max - min;
    raw.iter()
        .map(|&v| {
            if span > 0.0 {
                (10.0 * (v - min) / span).clamp(0.0, 10.0)
            } else {
                10.0
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfluenceScore {
    pub user_id: String,
    pub raw: f64,
    pub scaled: f64,
}

pub fn influence_scores(g: &InteractionGraph, raw: &[f64]) -> Vec<InfluenceScore> {
    let scaled = scale_scores(raw);
    g.nodes()
        .iter()
        .zip(raw.iter().zip(scaled))
        .map(|(id, (&raw, scaled))| InfluenceScore {
            user_id: id.clone(),
            raw,
            scaled,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankRow {
    pub rank: usize,
    pub retweeted: Option<String>,
    pub pagerank: Option<String>,
    pub tweet_volume: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankTable {
    pub rows: Vec<RankRow>,
}

impl RankTable {
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["rank", "retweeted", "pagerank", "tweet_volume"])
            .expect("in-memory write");
        for r in &self.rows {
            w.write_record([
                r.rank.to_string().as_str(),
                r.retweeted.as_deref().unwrap_or(""),
                r.pagerank.as_deref().unwrap_or(""),
                r.tweet_volume.as_deref().unwrap_or(""),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
    }

    pub fn from_csv(text: &str) -> Result<Self, csv::Error> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let cell = |i: usize| Some(rec[i].to_string()).filter(|s| !s.is_empty());
            rows.push(RankRow {
                rank: rec[0].parse().unwrap_or(rows.len() + 1),
                retweeted: cell(1),
                pagerank: cell(2),
                tweet_volume: cell(3),
            });
        }
        Ok(Self { rows })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.rows).expect("rank table serializes")
    }
}

/// Descending by value, then ascending by user id.
fn ranked(mut entries: Vec<(&str, f64)>) -> Vec<&str> {
    entries.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    entries.into_iter().map(|(id, _)| id).collect()
}

/// Top-`k` accounts by times retweeted, by PageRank, and by authored tweets.
///
/// `scores` is indexed by node id of `g`. Accounts are shown by display name
/// when known; with `privacy` on, individual accounts render as "Individual".
pub fn rank_tables(
    g: &InteractionGraph,
    scores: &[f64],
    tweets: &[TweetRecord],
    users: &UserIndex,
    k: usize,
    privacy: bool,
) -> RankTable {
    let label = |id: &str| -> String {
        match users.get(id) {
            Some(u) if privacy && u.account_kind == AccountKind::Individual => "Individual".to_string(),
            Some(u) if !u.display_name.is_empty() => u.display_name.clone(),
            _ => id.to_string(),
        }
    };

    let retweet_w = g.retweet_in_weights();
    let retweeted = ranked(
        g.nodes()
            .iter()
            .zip(&retweet_w)
            .filter(|(_, &w)| w > 0)
            .map(|(id, &w)| (id.as_str(), w as f64))
            .collect(),
    );
    let by_pagerank = ranked(g.nodes().iter().zip(scores).map(|(id, &s)| (id.as_str(), s)).collect());
    let mut volume: HashMap<&str, u64> = HashMap::new();
    for t in tweets {
        *volume.entry(&t.author_id).or_default() += 1;
    }
    let by_volume = ranked(volume.into_iter().map(|(id, c)| (id, c as f64)).collect());

    let len = retweeted.len().max(by_pagerank.len()).max(by_volume.len()).min(k);
    let rows = (0..len)
        .map(|i| RankRow {
            rank: i + 1,
            retweeted: retweeted.get(i).map(|id| label(id)),
            pagerank: by_pagerank.get(i).map(|id| label(id)),
            tweet_volume: by_volume.get(i).map(|id| label(id)),
        })
        .collect();
    RankTable { rows }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::EdgeWeight;
    use crate::ingest::UserRecord;

    fn graph(edges: &[(&str, &str, u64)]) -> InteractionGraph {
        InteractionGraph::from_named_edges(
            [],
            edges.iter().map(|&(s, d, w)| {
                (
                    s.to_string(),
                    d.to_string(),
                    EdgeWeight {
                        retweets: w,
                        replies: 0,
                    },
                )
            }),
        )
        .unwrap()
    }

    #[test]
    fn cycle_is_uniform() {
        let g = graph(&[("a", "b", 1), ("b", "c", 1), ("c", "a", 1)]);
        let r = pagerank(&g, PageRankParams::default()).unwrap();
        for s in &r.scores {
            assert!((s - 1.0 / 3.0).abs() < 1e-9);
        }
        assert!(r.converged);
    }

    #[test]
    fn single_node_has_all_mass() {
        let g = InteractionGraph::from_named_edges(["solo".to_string()], []).unwrap();
        assert_eq!(pagerank(&g, PageRankParams::default()).unwrap().scores, vec![1.0]);
    }

    #[test]
    fn star_hub_dominates() {
        let g = graph(&[("l1", "hub", 1), ("l2", "hub", 1), ("l3", "hub", 1)]);
        let r = pagerank(&g, PageRankParams::default()).unwrap();
        let hub = g.node_id("hub").unwrap() as usize;
        assert!(r.scores.iter().enumerate().all(|(i, &s)| i == hub || s < r.scores[hub]));
        assert!((r.scores.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn errors() {
        let empty = InteractionGraph::from_named_edges([], []).unwrap();
        assert_eq!(
            pagerank(&empty, PageRankParams::default()),
            Err(InfluenceError::EmptyGraph)
        );
        let g = graph(&[("a", "b", 1)]);
        let bad = PageRankParams {
            damping: 1.0,
            ..Default::default()
        };
        assert_eq!(pagerank(&g, bad), Err(InfluenceError::Damping(1.0)));
    }

    #[test]
    fn non_convergence_is_flagged() {
        let g = graph(&[("a", "b", 1), ("b", "c", 5), ("c", "a", 1), ("c", "d", 1)]);
        let r = pagerank(
            &g,
            PageRankParams {
                max_iter: 2,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(!r.converged);
        assert_eq!(r.iterations, 2);
        assert!((r.scores.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn scaling() {
        let s = scale_scores(&[0.2, 0.5, 0.3]);
        assert_eq!(s[0], 0.0);
        assert_eq!(s[1], 10.0);
        assert!((s[2] - 10.0 / 3.0).abs() < 1e-12);
        assert_eq!(scale_scores(&[0.25; 4]), vec![10.0; 4]);
        assert_eq!(scale_scores(&[0.9, 0.1]), vec![10.0, 0.0]);
    }

    fn user(id: &str, name: &str, kind: AccountKind) -> UserRecord {
        UserRecord {
            user_id: id.into(),
            handle: id.into(),
            display_name: name.into(),
            followers: 0,
            has_profile_photo: true,
            face_count: None,
            age_estimate: None,
            gender_estimate: None,
            account_kind: kind,
        }
    }

    #[test]
    fn privacy_masks_individuals() {
        let g = graph(&[("l1", "hub", 1), ("l2", "hub", 1)]);
        let r = pagerank(&g, PageRankParams::default()).unwrap();
        let users = UserIndex::new(vec![
            user("hub", "Jane Doe", AccountKind::Individual),
            user("l1", "UN Youth", AccountKind::Organization),
        ]);
        let masked = rank_tables(&g, &r.scores, &[], &users, 3, true);
        assert_eq!(masked.rows[0].pagerank.as_deref(), Some("Individual"));
        assert_eq!(masked.rows[0].retweeted.as_deref(), Some("Individual"));
        let open = rank_tables(&g, &r.scores, &[], &users, 3, false);
        assert_eq!(open.rows[0].pagerank.as_deref(), Some("Jane Doe"));
        // Only the hub was retweeted; the column ends after one row.
        assert_eq!(open.rows[1].retweeted, None);
        assert_eq!(open.rows[1].pagerank.as_deref(), Some("UN Youth"));
    }

    #[test]
    fn empty_inputs_give_empty_table() {
        let g = InteractionGraph::from_named_edges([], []).unwrap();
        let t = rank_tables(&g, &[], &[], &UserIndex::default(), 5, true);
        assert!(t.rows.is_empty());
        assert_eq!(t.to_csv(), "rank,retweeted,pagerank,tweet_volume\n");
    }

    #[test]
    fn csv_round_trip() {
        let t = RankTable {
            rows: vec![RankRow {
                rank: 1,
                retweeted: Some("UN, Climate".into()),
                pagerank: None,
                tweet_volume: Some("x".into()),
            }],
        };
        assert_eq!(RankTable::from_csv(&t.to_csv()).unwrap(), t);
    }
}
