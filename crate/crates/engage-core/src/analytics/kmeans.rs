//! Seeded k-means over engagement profiles: k-means++ initialization, Lloyd
//! iterations, best-of-restarts selection, and driver/passenger labeling.
//!
//! Distance is squared Euclidean throughout. Everything is deterministic
//! under a fixed seed: restarts derive their RNG from (seed, run index),
//! ties in assignment go to the lowest cluster index, and ties across runs
//! go to the earliest run.

use crate::model::{ClusterModel, EngagementProfile};
use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use thiserror::Error;

const MAX_ITERATIONS: usize = 300;
const CONVERGENCE_EPS: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum ClusterError {
    #[error("need at least {k} distinct profiles for k = {k}, found {distinct}")]
    TooFewDistinctPoints { k: usize, distinct: usize },
    #[error("invalid clustering arguments: {0}")]
    InvalidArg(String),
    #[error("degenerate model: {0}")]
    Degenerate(String),
}

/// Which cluster holds the drivers (higher active frequency) and which the
/// passengers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct ClusterLabeling {
    pub driver_cluster: usize,
    pub passenger_cluster: usize,
}

fn dist_sq(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    dx * dx + dy * dy + dz * dz
}

fn nearest(point: &[f64; 3], centroids: &[[f64; 3]]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (idx, c) in centroids.iter().enumerate() {
        let d = dist_sq(point, c);
        if d < best.1 {
            best = (idx, d);
        }
    }
    best
}

fn kmeans_plus_plus(points: &[[f64; 3]], k: usize, rng: &mut impl Rng) -> Vec<[f64; 3]> {
    let mut centroids = Vec::with_capacity(k);
    centroids.push(points[rng.gen_range(0..points.len())]);
    while centroids.len() < k {
        let weights: Vec<f64> = points.iter().map(|p| nearest(p, &centroids).1).collect();
        let total: f64 = weights.iter().sum();
        let next = if total > 0.0 {
            let dist = WeightedIndex::new(&weights)
                .expect("weights are non-negative with positive sum");
            points[dist.sample(rng)]
        } else {
            // All mass already covered; any point works and keeps determinism.
            points[rng.gen_range(0..points.len())]
        };
        centroids.push(next);
    }
    centroids
}

struct LloydOutcome {
    centroids: Vec<[f64; 3]>,
    assignments: Vec<usize>,
    wss: f64,
    /// wss after each assignment step, for convergence diagnostics.
    #[cfg_attr(not(test), allow(dead_code))]
    wss_trace: Vec<f64>,
}

fn lloyd(points: &[[f64; 3]], mut centroids: Vec<[f64; 3]>) -> LloydOutcome {
    let k = centroids.len();
    let mut assignments = vec![0usize; points.len()];
    let mut wss_trace = Vec::new();

    for _ in 0..MAX_ITERATIONS {
        let mut wss = 0.0;
        let mut changed = false;
        for (i, p) in points.iter().enumerate() {
            let (cluster, d) = nearest(p, &centroids);
            wss += d;
            if assignments[i] != cluster {
                assignments[i] = cluster;
                changed = true;
            }
        }
        let first_pass = wss_trace.is_empty();
        wss_trace.push(wss);

        let mut sums = vec![[0.0f64; 3]; k];
        let mut counts = vec![0usize; k];
        for (i, p) in points.iter().enumerate() {
            let c = assignments[i];
            counts[c] += 1;
            for d in 0..3 {
                sums[c][d] += p[d];
            }
        }
        let mut movement: f64 = 0.0;
        for c in 0..k {
            if counts[c] == 0 {
                continue; // empty cluster keeps its centroid
            }
            let new = [
                sums[c][0] / counts[c] as f64,
                sums[c][1] / counts[c] as f64,
                sums[c][2] / counts[c] as f64,
            ];
            movement = movement.max(dist_sq(&new, &centroids[c]));
            centroids[c] = new;
        }

        if (!changed && !first_pass) || movement < CONVERGENCE_EPS * CONVERGENCE_EPS {
            break;
        }
    }

    // Final assignment against the final centroids.
    let mut wss = 0.0;
    for (i, p) in points.iter().enumerate() {
        let (cluster, d) = nearest(p, &centroids);
        assignments[i] = cluster;
        wss += d;
    }
    wss_trace.push(wss);

    LloydOutcome {
        centroids,
        assignments,
        wss,
        wss_trace,
    }
}

fn distinct_count(points: &[[f64; 3]]) -> usize {
    let mut seen: Vec<[f64; 3]> = Vec::new();
    for p in points {
        if !seen.contains(p) {
            seen.push(*p);
        }
    }
    seen.len()
}

pub(crate) fn profile_points(profiles: &[EngagementProfile]) -> Vec<[f64; 3]> {
    profiles.iter().map(|p| p.as_point()).collect()
}

/// Fits k-means with `runs` restarts from k-means++ seeds derived from
/// `seed`, returning the restart with the lowest within-cluster sum of
/// squares (ties to the earliest run).
pub fn kmeans_cluster(
    profiles: &[EngagementProfile],
    k: usize,
    runs: usize,
    seed: u64,
) -> Result<ClusterModel, ClusterError> {
    let points = profile_points(profiles);
    kmeans_over_points(&points, k, runs, seed)
}

pub(crate) fn kmeans_over_points(
    points: &[[f64; 3]],
    k: usize,
    runs: usize,
    seed: u64,
) -> Result<ClusterModel, ClusterError> {
    if k == 0 {
        return Err(ClusterError::InvalidArg("k must be at least 1".into()));
    }
    if runs == 0 {
        return Err(ClusterError::InvalidArg("runs must be at least 1".into()));
    }
    if points.len() < k {
        return Err(ClusterError::TooFewDistinctPoints {
            k,
            distinct: points.len(),
        });
    }
    let distinct = distinct_count(points);
    if distinct < k {
        return Err(ClusterError::TooFewDistinctPoints { k, distinct });
    }

    let mut best: Option<LloydOutcome> = None;
    let mut run_wss = Vec::with_capacity(runs);
    for run in 0..runs {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(run as u64));
        let init = kmeans_plus_plus(points, k, &mut rng);
        let outcome = lloyd(points, init);
        run_wss.push(outcome.wss);
        let better = match &best {
            None => true,
            Some(current) => outcome.wss < current.wss,
        };
        if better {
            best = Some(outcome);
        }
    }

    let best = best.expect("runs >= 1");
    let n = points.len() as f64;
    Ok(ClusterModel {
        k,
        centroids: best.centroids,
        assignments: best.assignments,
        wss: best.wss,
        awcd: best.wss / n,
        run_wss,
    })
}

/// Mean squared distance from profiles to their assigned centroid, in both
/// sign conventions: `(awcd, -awcd)`.
pub fn within_centroid_distance(
    model: &ClusterModel,
    profiles: &[EngagementProfile],
) -> (f64, f64) {
    assert_eq!(
        model.assignments.len(),
        profiles.len(),
        "model was not fitted on these profiles"
    );
    if profiles.is_empty() {
        return (0.0, 0.0);
    }
    let total: f64 = profiles
        .iter()
        .zip(&model.assignments)
        .map(|(p, &c)| dist_sq(&p.as_point(), &model.centroids[c]))
        .sum();
    let awcd = total / profiles.len() as f64;
    (awcd, -awcd)
}

/// Best wss per k over `[k_min, k_max]`, for elbow plots. Each k also tries
/// a warm start built from the previous k's centroids plus the point
/// farthest from its centroid, which keeps the curve non-increasing.
pub fn elbow_scan(
    profiles: &[EngagementProfile],
    k_min: usize,
    k_max: usize,
    runs: usize,
    seed: u64,
) -> Result<Vec<(usize, f64)>, ClusterError> {
    if k_min == 0 || k_max < k_min {
        return Err(ClusterError::InvalidArg(format!(
            "need 1 <= k_min <= k_max, got [{k_min}, {k_max}]"
        )));
    }
    let points = profile_points(profiles);
    let mut results = Vec::with_capacity(k_max - k_min + 1);
    let mut previous: Option<LloydOutcome> = None;

    for k in k_min..=k_max {
        let model = kmeans_over_points(&points, k, runs, seed)?;
        let mut outcome = LloydOutcome {
            centroids: model.centroids,
            assignments: model.assignments,
            wss: model.wss,
            wss_trace: Vec::new(),
        };
        if let Some(prev) = &previous {
            if let Some(augmented) = augment_with_farthest(&points, prev) {
                let warm = lloyd(&points, augmented);
                if warm.wss < outcome.wss {
                    outcome = warm;
                }
            }
        }
        results.push((k, outcome.wss));
        previous = Some(outcome);
    }
    Ok(results)
}

/// Previous centroids plus the point farthest from its assigned centroid,
/// skipping points that already coincide with a centroid.
fn augment_with_farthest(points: &[[f64; 3]], prev: &LloydOutcome) -> Option<Vec<[f64; 3]>> {
    let (farthest_idx, farthest_d) = points
        .iter()
        .enumerate()
        .map(|(i, p)| (i, nearest(p, &prev.centroids).1))
        .max_by(|a, b| a.1.total_cmp(&b.1))?;
    if farthest_d == 0.0 {
        return None;
    }
    let mut centroids = prev.centroids.clone();
    centroids.push(points[farthest_idx]);
    Some(centroids)
}

/// Splits a two-cluster model into drivers and passengers by the active
/// frequency of the centroids. Equal active components mean the model
/// cannot be labeled.
pub fn label_clusters(model: &ClusterModel) -> Result<ClusterLabeling, ClusterError> {
    if model.k != 2 {
        return Err(ClusterError::InvalidArg(format!(
            "labeling requires exactly 2 clusters, model has {}",
            model.k
        )));
    }
    let active0 = model.centroids[0][0];
    let active1 = model.centroids[1][0];
    if active0 == active1 {
        return Err(ClusterError::Degenerate(
            "both centroids have the same active frequency".into(),
        ));
    }
    if active0 > active1 {
        Ok(ClusterLabeling {
            driver_cluster: 0,
            passenger_cluster: 1,
        })
    } else {
        Ok(ClusterLabeling {
            driver_cluster: 1,
            passenger_cluster: 0,
        })
    }
}
