use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{squared_distance, Clustering, PointSet};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::seed;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KMeansOptions {
    /// Independent k-means++ starts; the lowest-inertia run wins.
    pub restarts: usize,
    /// Stop once no centroid moves further than this.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for KMeansOptions {
    fn default() -> Self {
        Self {
            restarts: 10,
            tolerance: 1e-8,
            max_iterations: 300,
        }
    }
}

/// Lloyd's algorithm from k-means++ seeds, best of `opts.restarts` runs.
///
/// Deterministic in `(points, k, seed)`. Restart `r` draws from a stream
/// derived from `seed` and `r`; ties in inertia go to the lower restart.
pub fn kmeans<T: Scalar>(
    points: &PointSet<T>,
    k: usize,
    seed: u64,
    opts: &KMeansOptions,
) -> Result<Clustering<T>> {
    if k == 0 {
        return Err(Error::Domain("cluster count must be >= 1".into()));
    }
    if k > points.len() {
        return Err(Error::Infeasible { k, n: points.len() });
    }
    let restarts = opts.restarts.max(1);
    let runs: Vec<Clustering<T>> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = seed::rng(seed::derive(seed, &[seed::STREAM_KMEANS, r as u64]));
            lloyd(points.points(), k, &mut rng, opts)
        })
        .collect();
    Ok(runs
        .into_iter()
        .reduce(|best, c| if c.inertia < best.inertia { c } else { best })
        .expect("at least one restart"))
}

fn plus_plus_init<T: Scalar>(points: &[Vec<T>], k: usize, rng: &mut seed::Rng) -> Vec<Vec<T>> {
    let n = points.len();
    let mut centroids = vec![points[rng.random_range(0..n)].clone()];
    let mut nearest: Vec<f64> = points
        .iter()
        .map(|p| squared_distance(p, &centroids[0]).to_f64_lossy())
        .collect();
    while centroids.len() < k {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = None;
            for (i, &d) in nearest.iter().enumerate() {
                if d > 0.0 {
                    chosen = Some(i);
                    if target < d {
                        break;
                    }
                    target -= d;
                }
            }
            chosen.expect("positive total has a positive weight")
        } else {
            // Every point coincides with a centroid already.
            rng.random_range(0..n)
        };
        let c = points[pick].clone();
        for (d, p) in nearest.iter_mut().zip(points) {
            *d = d.min(squared_distance(p, &c).to_f64_lossy());
        }
        centroids.push(c);
    }
    centroids
}

fn nearest_centroid<T: Scalar>(p: &[T], centroids: &[Vec<T>]) -> (usize, T) {
    let mut best = (0, squared_distance(p, &centroids[0]));
    for (j, c) in centroids.iter().enumerate().skip(1) {
        let d = squared_distance(p, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn lloyd<T: Scalar>(
    points: &[Vec<T>],
    k: usize,
    rng: &mut seed::Rng,
    opts: &KMeansOptions,
) -> Clustering<T> {
    let dim = points[0].len();
    let mut centroids = plus_plus_init(points, k, rng);
    let mut labels = vec![usize::MAX; points.len()];
    let mut previous_inertia: Option<T> = None;

    for _ in 0..opts.max_iterations.max(1) {
        let mut changed = false;
        for (p, label) in points.iter().zip(labels.iter_mut()) {
            let (j, _) = nearest_centroid(p, &centroids);
            if *label != j {
                *label = j;
                changed = true;
            }
        }
        reseed_empty(points, &mut labels, &centroids, k);

        let mut sums = vec![vec![T::zero(); dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &l) in points.iter().zip(&labels) {
            counts[l] += 1;
            for (s, &x) in sums[l].iter_mut().zip(p) {
                *s = *s + x;
            }
        }
        let mut shift = T::zero();
        for ((c, s), &n) in centroids.iter_mut().zip(sums).zip(&counts) {
            let updated: Vec<T> = s.into_iter().map(|v| v / T::of_usize(n)).collect();
            shift = shift.max(squared_distance(c, &updated).sqrt());
            *c = updated;
        }

        let inertia = inertia_of(points, &labels, &centroids);
        if let Some(prev) = previous_inertia {
            debug_assert!(
                inertia <= prev + prev.abs() * T::of(1e-9) + T::of(1e-12),
                "inertia rose from {prev} to {inertia}"
            );
        }
        previous_inertia = Some(inertia);
        if !changed || shift < T::of(opts.tolerance) {
            break;
        }
    }

    // Final assignment against the converged centroids.
    for (p, label) in points.iter().zip(labels.iter_mut()) {
        *label = nearest_centroid(p, &centroids).0;
    }
    reseed_empty(points, &mut labels, &centroids, k);
    let centroids = centroids_of(points, &labels, k);
    let inertia = inertia_of(points, &labels, &centroids);
    Clustering { labels, k, inertia }
}

/// Moves the point farthest from its centroid into each empty cluster.
fn reseed_empty<T: Scalar>(
    points: &[Vec<T>],
    labels: &mut [usize],
    centroids: &[Vec<T>],
    k: usize,
) {
    loop {
        let mut counts = vec![0usize; k];
        for &l in labels.iter() {
            counts[l] += 1;
        }
        let Some(empty) = counts.iter().position(|&c| c == 0) else {
            return;
        };
        let far = (0..points.len())
            .filter(|&i| counts[labels[i]] > 1)
            .map(|i| (i, squared_distance(&points[i], &centroids[labels[i]])))
            .fold(None, |best: Option<(usize, T)>, (i, d)| match best {
                Some((_, bd)) if bd >= d => best,
                _ => Some((i, d)),
            })
            .expect("k <= n leaves a cluster with two members");
        labels[far.0] = empty;
    }
}

fn centroids_of<T: Scalar>(points: &[Vec<T>], labels: &[usize], k: usize) -> Vec<Vec<T>> {
    let dim = points[0].len();
    let mut sums = vec![vec![T::zero(); dim]; k];
    let mut counts = vec![0usize; k];
    for (p, &l) in points.iter().zip(labels) {
        counts[l] += 1;
        for (s, &x) in sums[l].iter_mut().zip(p) {
            *s = *s + x;
        }
    }
    sums.into_iter()
        .zip(counts)
        .map(|(s, n)| s.into_iter().map(|v| v / T::of_usize(n.max(1))).collect())
        .collect()
}

fn inertia_of<T: Scalar>(points: &[Vec<T>], labels: &[usize], centroids: &[Vec<T>]) -> T {
    points
        .iter()
        .zip(labels)
        .map(|(p, &l)| squared_distance(p, &centroids[l]))
        .sum()
}
