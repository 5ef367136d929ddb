// SPDX-License-Identifier: Apache-2.0

//! Tweet text normalization, embedding, clustering into topics, and topic labels.

mod embed;
mod kmeans;
mod normalize;

use std::collections::{BTreeMap, HashMap};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use embed::{
    external_embeddings, feature_slot, features, fnv1a, load_external_vectors, tfidf_weights, word_of, EmbedError,
    EmbeddingSource, EmbeddingVector, HashingEmbedder, IdfTable, DEFAULT_DIM,
};
pub use kmeans::{
    kmeans, nearest, silhouette, squared_distance, sse, ClusterError, KMeansParams, KMeansResult, DEFAULT_K,
};
pub use normalize::{normalize_text, split_hashtag, NormalizedText};

pub const TOP_TERMS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicCluster {
    pub cluster_id: usize,
    pub centroid: Vec<f64>,
    pub members: Vec<String>,
    pub top_terms: Vec<String>,
    pub size: usize,
}

/// Top `limit` word terms by TF-IDF mass summed over `docs`, descending, ties
/// broken lexicographically.
pub fn label_cluster<'a>(
    docs: impl IntoIterator<Item = &'a NormalizedText>,
    idf: &IdfTable,
    limit: usize,
) -> Vec<(String, f64)> {
    let mut mass: BTreeMap<String, f64> = BTreeMap::new();
    for d in docs {
        for (f, w) in tfidf_weights(d, idf) {
            if let Some(word) = word_of(&f) {
                *mass.entry(word.to_string()).or_insert(0.0) += w;
            }
        }
    }
    let mut terms: Vec<(String, f64)> = mass.into_iter().collect();
    terms.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    terms.truncate(limit);
    terms
}

/// Groups a k-means result into labelled clusters. `ids[i]` and `docs[i]`
/// describe the point assigned by `result.assignments[i]`. Clusters are
/// returned for every centroid, in id order.
pub fn build_clusters(
    ids: &[String],
    docs: &[NormalizedText],
    result: &KMeansResult,
    idf: &IdfTable,
) -> Vec<TopicCluster> {
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); result.centroids.len()];
    for (i, &a) in result.assignments.iter().enumerate() {
        members[a].push(i);
    }
    members
        .into_iter()
        .enumerate()
        .map(|(cid, idx)| TopicCluster {
            cluster_id: cid,
            centroid: result.centroids[cid].clone(),
            top_terms: label_cluster(idx.iter().map(|&i| &docs[i]), idf, TOP_TERMS)
                .into_iter()
                .map(|(t, _)| t)
                .collect(),
            size: idx.len(),
            members: idx.into_iter().map(|i| ids[i].clone()).collect(),
        })
        .collect()
}

/// Cluster summary body: `cluster_id,size,top_terms` with terms space-separated.
pub fn clusters_csv(clusters: &[TopicCluster]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["cluster_id", "size", "top_terms"])
        .expect("in-memory write");
    for c in clusters {
        w.write_record([c.cluster_id.to_string(), c.size.to_string(), c.top_terms.join(" ")])
            .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub tweet_id: String,
    pub cluster_id: usize,
}

/// Assignment NDJSON: one `{"tweet_id", "cluster_id"}` per line, ordered by
/// cluster then member order.
pub fn assignments_ndjson(clusters: &[TopicCluster]) -> String {
    let mut out = String::new();
    for c in clusters {
        for m in &c.members {
            let line = Assignment {
                tweet_id: m.clone(),
                cluster_id: c.cluster_id,
            };
            out.push_str(&serde_json::to_string(&line).expect("assignment serializes"));
            out.push('\n');
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SizeStratum {
    Large,
    Medium,
    Small,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewItem {
    pub cluster_id: usize,
    pub stratum: SizeStratum,
    pub size: usize,
    pub top_terms: Vec<String>,
    /// Example tweet ids drawn from the cluster.
    pub examples: Vec<String>,
}

/// Draws a seeded, size-stratified sample of `n` topics for human review.
///
/// Non-empty clusters are ranked by size (descending, then id) and cut into
/// three strata of near-equal count; `n` is split across strata in proportion
/// to their counts by largest remainder. Within a stratum topics are drawn
/// uniformly without replacement, and each sampled topic carries up to
/// `examples` member tweets.
pub fn review_sample(clusters: &[TopicCluster], n: usize, examples: usize, seed: u64) -> Vec<ReviewItem> {
    let mut ranked: Vec<&TopicCluster> = clusters.iter().filter(|c| c.size > 0).collect();
    ranked.sort_by(|a, b| b.size.cmp(&a.size).then_with(|| a.cluster_id.cmp(&b.cluster_id)));
    let total = ranked.len();
    let n = n.min(total);
    let strata = [SizeStratum::Large, SizeStratum::Medium, SizeStratum::Small];
    let bounds: Vec<(usize, usize)> = (0..3).map(|s| (s * total / 3, (s + 1) * total / 3)).collect();

    let mut quota: Vec<usize> = bounds.iter().map(|(a, b)| (b - a) * n / total.max(1)).collect();
    let mut remainders: Vec<(usize, usize)> = bounds
        .iter()
        .enumerate()
        .map(|(s, (a, b))| ((b - a) * n % total.max(1), s))
        .collect();
    remainders.sort_by(|x, y| y.0.cmp(&x.0).then_with(|| x.1.cmp(&y.1)));
    let mut left = n - quota.iter().sum::<usize>();
    for &(_, s) in &remainders {
        if left == 0 {
            break;
        }
        quota[s] += 1;
        left -= 1;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    for (s, &(a, b)) in bounds.iter().enumerate() {
        let mut pool: Vec<&TopicCluster> = ranked[a..b].to_vec();
        pool.shuffle(&mut rng);
        let mut picked: Vec<&TopicCluster> = pool.into_iter().take(quota[s]).collect();
        picked.sort_by_key(|c| c.cluster_id);
        for c in picked {
            let mut ex = c.members.clone();
            ex.shuffle(&mut rng);
            ex.truncate(examples);
            out.push(ReviewItem {
                cluster_id: c.cluster_id,
                stratum: strata[s],
                size: c.size,
                top_terms: c.top_terms.clone(),
                examples: ex,
            });
        }
    }
    out
}

/// Review sheet: `cluster_id,stratum,size,top_terms,tweet_id,text`, one row per example.
pub fn review_sample_csv(items: &[ReviewItem], texts: &HashMap<String, String>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["cluster_id", "stratum", "size", "top_terms", "tweet_id", "text"])
        .expect("in-memory write");
    for it in items {
        let stratum = match it.stratum {
            SizeStratum::Large => "large",
            SizeStratum::Medium => "medium",
            SizeStratum::Small => "small",
        };
        for ex in &it.examples {
            w.write_record([
                it.cluster_id.to_string().as_str(),
                stratum,
                it.size.to_string().as_str(),
                it.top_terms.join(" ").as_str(),
                ex,
                texts.get(ex).map(String::as_str).unwrap_or(""),
            ])
            .expect("in-memory write");
        }
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}
