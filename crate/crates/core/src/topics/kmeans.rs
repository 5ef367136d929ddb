// SPDX-License-Identifier: Apache-2.0

//! Seeded k-means with greedy farthest-point initialization.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_K: usize = 250;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ClusterError {
    #[error("k must be at least 1")]
    ZeroK,
    #[error("k = {k} exceeds the number of points ({n})")]
    TooFewPoints { k: usize, n: usize },
    #[error("points have inconsistent dimensions")]
    RaggedInput,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KMeansParams {
    pub k: usize,
    pub seed: u64,
    pub max_iter: usize,
}

impl Default for KMeansParams {
    fn default() -> Self {
        Self {
            k: DEFAULT_K,
            seed: 0,
            max_iter: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub assignments: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    pub iterations: usize,
    pub converged: bool,
    /// Within-cluster sum of squared distances after each iteration.
    pub sse_history: Vec<f64>,
}

pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index of the closest centroid; ties go to the lowest index.
pub fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centroids.iter().enumerate() {
        let d = squared_distance(point, c);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

fn farthest_point_init(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let first = rng.gen_range(0..points.len());
    let mut centroids = vec![points[first].clone()];
    let mut min_d: Vec<f64> = points.iter().map(|p| squared_distance(p, &points[first])).collect();
    while centroids.len() < k {
        let mut pick = 0;
        for (i, &d) in min_d.iter().enumerate() {
            if d > min_d[pick] {
                pick = i;
            }
        }
        let c = points[pick].clone();
        for (m, p) in min_d.iter_mut().zip(points) {
            *m = m.min(squared_distance(p, &c));
        }
        centroids.push(c);
    }
    centroids
}

fn assign(points: &[Vec<f64>], centroids: &[Vec<f64>]) -> Vec<usize> {
    points.par_iter().map(|p| nearest(p, centroids).0).collect()
}

fn means(points: &[Vec<f64>], assignments: &[usize], k: usize, dim: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (p, &a) in points.iter().zip(assignments) {
        counts[a] += 1;
        for (s, v) in sums[a].iter_mut().zip(p) {
            *s += v;
        }
    }
    for (s, &c) in sums.iter_mut().zip(&counts) {
        if c > 0 {
            for v in s.iter_mut() {
                *v /= c as f64;
            }
        }
    }
    (sums, counts)
}

pub fn sse(points: &[Vec<f64>], assignments: &[usize], centroids: &[Vec<f64>]) -> f64 {
    points
        .iter()
        .zip(assignments)
        .map(|(p, &a)| squared_distance(p, &centroids[a]))
        .sum()
}

/// Lloyd iterations until the assignment is stable or `max_iter` is reached.
///
/// An empty cluster is re-seeded with the point farthest from its own
/// centroid (taken from a cluster with more than one member).
pub fn kmeans(points: &[Vec<f64>], params: KMeansParams) -> Result<KMeansResult, ClusterError> {
    let n = points.len();
    let k = params.k;
    if k == 0 {
        return Err(ClusterError::ZeroK);
    }
    if k > n {
        return Err(ClusterError::TooFewPoints { k, n });
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(ClusterError::RaggedInput);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut centroids = farthest_point_init(points, k, &mut rng);
    let mut assignments: Vec<usize> = Vec::new();
    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    while iterations < params.max_iter.max(1) {
        iterations += 1;
        let mut next = assign(points, &centroids);

        let mut counts = vec![0usize; k];
        for &a in &next {
            counts[a] += 1;
        }
        for empty in 0..k {
            if counts[empty] > 0 {
                continue;
            }
            let mut donor: Option<(usize, f64)> = None;
            for (i, p) in points.iter().enumerate() {
                if counts[next[i]] < 2 {
                    continue;
                }
                let d = squared_distance(p, &centroids[next[i]]);
                if donor.is_none_or(|(_, best)| d > best) {
                    donor = Some((i, d));
                }
            }
            if let Some((i, _)) = donor {
                counts[next[i]] -= 1;
                counts[empty] += 1;
                next[i] = empty;
            }
        }

        let stable = next == assignments;
        assignments = next;
        let (new_centroids, counts) = means(points, &assignments, k, dim);
        for (c, (new, &count)) in centroids.iter_mut().zip(new_centroids.into_iter().zip(&counts)) {
            if count > 0 {
                *c = new;
            }
        }
        history.push(sse(points, &assignments, &centroids));
        if stable {
            converged = true;
            break;
        }
    }

    Ok(KMeansResult {
        assignments,
        centroids,
        iterations,
        converged,
        sse_history: history,
    })
}

/// Mean silhouette coefficient over (at most `sample`) seeded sampled points.
/// Returns `None` when fewer than two clusters are populated.
pub fn silhouette(points: &[Vec<f64>], assignments: &[usize], k: usize, sample: usize, seed: u64) -> Option<f64> {
    let mut sizes = vec![0usize; k];
    for &a in assignments {
        sizes[a] += 1;
    }
    if sizes.iter().filter(|&&s| s > 0).count() < 2 {
        return None;
    }
    let mut idx: Vec<usize> = (0..points.len()).collect();
    if idx.len() > sample {
        use rand::seq::SliceRandom;
        idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        idx.truncate(sample);
        idx.sort_unstable();
    }
    let scores: Vec<f64> = idx
        .iter()
        .map(|&i| {
            let own = assignments[i];
            if sizes[own] <= 1 {
                return 0.0;
            }
            let mut sum = vec![0.0; k];
            for (j, p) in points.iter().enumerate() {
                if j != i {
                    sum[assignments[j]] += squared_distance(&points[i], p).sqrt();
                }
            }
            let a = sum[own] / (sizes[own] - 1) as f64;
            let b = (0..k)
                .filter(|&c| c != own && sizes[c] > 0)
                .map(|c| sum[c] / sizes[c] as f64)
                .fold(f64::INFINITY, f64::min);
            let m = a.max(b);
            if m > 0.0 {
                (b - a) / m
            } else {
                0.0
            }
        })
        .collect();
    Some(scores.iter().sum::<f64>() / scores.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, Normal};

    /// Three blobs of `per` points around well-separated centers.
    pub(crate) fn blobs(per: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<usize>) {
        let centers = [[0.0, 0.0, 0.0], [10.0, 0.0, 0.0], [0.0, 10.0, 0.0]];
        let noise = Normal::new(0.0, 0.1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut points = Vec::new();
        let mut truth = Vec::new();
        for (c, center) in centers.iter().enumerate() {
            for _ in 0..per {
                points.push(center.iter().map(|x| x + noise.sample(&mut rng)).collect());
                truth.push(c);
            }
        }
        (points, truth)
    }

    fn same_partition(a: &[usize], b: &[usize]) -> bool {
        a.len() == b.len() && (0..a.len()).all(|i| (0..a.len()).all(|j| (a[i] == a[j]) == (b[i] == b[j])))
    }

    #[test]
    fn k1_is_the_mean() {
        let points = vec![vec![0.0, 0.0], vec![2.0, 0.0], vec![1.0, 3.0]];
        let r = kmeans(
            &points,
            KMeansParams {
                k: 1,
                seed: 5,
                max_iter: 10,
            },
        )
        .unwrap();
        assert_eq!(r.assignments, vec![0, 0, 0]);
        assert!((r.centroids[0][0] - 1.0).abs() < 1e-12);
        assert!((r.centroids[0][1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn recovers_blobs() {
        let (points, truth) = blobs(30, 1);
        for seed in 0..5 {
            let r = kmeans(
                &points,
                KMeansParams {
                    k: 3,
                    seed,
                    max_iter: 100,
                },
            )
            .unwrap();
            assert!(same_partition(&r.assignments, &truth), "seed {seed}");
            assert!(r.converged);
            assert!(r.sse_history.windows(2).all(|w| w[1] <= w[0]));
        }
    }

    #[test]
    fn errors() {
        let points = vec![vec![0.0], vec![1.0]];
        assert_eq!(
            kmeans(
                &points,
                KMeansParams {
                    k: 3,
                    seed: 0,
                    max_iter: 5
                }
            ),
            Err(ClusterError::TooFewPoints { k: 3, n: 2 })
        );
        assert_eq!(
            kmeans(
                &points,
                KMeansParams {
                    k: 0,
                    seed: 0,
                    max_iter: 5
                }
            ),
            Err(ClusterError::ZeroK)
        );
        assert_eq!(
            kmeans(
                &[vec![0.0], vec![1.0, 2.0]],
                KMeansParams {
                    k: 1,
                    seed: 0,
                    max_iter: 5
                }
            ),
            Err(ClusterError::RaggedInput)
        );
    }

    #[test]
    fn duplicates_reseed_empty_clusters() {
        // Farthest-point init picks the same location twice; every cluster must still be populated.
        let points = vec![vec![0.0], vec![0.0], vec![0.0], vec![5.0]];
        let r = kmeans(
            &points,
            KMeansParams {
                k: 3,
                seed: 0,
                max_iter: 20,
            },
        )
        .unwrap();
        let mut counts = [0; 3];
        for &a in &r.assignments {
            counts[a] += 1;
        }
        assert!(counts.iter().all(|&c| c > 0));
        assert!(r.sse_history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn final_assignment_is_nearest() {
        let (points, _) = blobs(20, 4);
        let r = kmeans(
            &points,
            KMeansParams {
                k: 5,
                seed: 2,
                max_iter: 100,
            },
        )
        .unwrap();
        assert!(r.converged);
        for (p, &a) in points.iter().zip(&r.assignments) {
            assert_eq!(nearest(p, &r.centroids).0, a);
        }
    }

    #[test]
    fn deterministic() {
        let (points, _) = blobs(15, 8);
        let p = KMeansParams {
            k: 4,
            seed: 11,
            max_iter: 50,
        };
        assert_eq!(kmeans(&points, p).unwrap(), kmeans(&points, p).unwrap());
    }

    #[test]
    fn silhouette_of_blobs_is_high() {
        let (points, truth) = blobs(20, 3);
        let s = silhouette(&points, &truth, 3, 1000, 0).unwrap();
        assert!(s > 0.9);
        assert_eq!(silhouette(&points, &vec![0; points.len()], 3, 1000, 0), None);
    }
}
