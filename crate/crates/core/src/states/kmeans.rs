//! Lloyd's k-means with k-means++ seeding.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, CvError, Result};

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index of the nearest centroid; ties go to the lowest index.
pub fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.iter().enumerate() {
        let d = sq_dist(point, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

/// Result of a k-means run.
#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    pub centroids: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub inertia: f64,
    /// Inertia after each assignment step, in order.
    pub inertia_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

fn count_distinct(points: &[&[f64]], stop_at: usize) -> usize {
    let mut seen: HashSet<Vec<u64>> = HashSet::new();
    for p in points {
        // +0.0 and -0.0 are the same point
        seen.insert(p.iter().map(|x| (x + 0.0).to_bits()).collect());
        if seen.len() >= stop_at {
            break;
        }
    }
    seen.len()
}

fn plus_plus(points: &[&[f64]], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut centroids = vec![points[rng.random_range(0..points.len())].to_vec()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let mut target = rng.random::<f64>() * total;
        let mut pick = d2.iter().rposition(|&d| d > 0.0).unwrap_or(0);
        for (i, &d) in d2.iter().enumerate() {
            if d > 0.0 && target < d {
                pick = i;
                break;
            }
            target -= d;
        }
        let c = points[pick].to_vec();
        for (slot, p) in d2.iter_mut().zip(points) {
            *slot = slot.min(sq_dist(p, &c));
        }
        centroids.push(c);
    }
    centroids
}

fn assign(points: &[&[f64]], centroids: &[Vec<f64>], labels: &mut [usize]) -> (f64, bool) {
    let mut inertia = 0.0;
    let mut changed = false;
    for (label, p) in labels.iter_mut().zip(points) {
        let (j, d) = nearest(p, centroids);
        if *label != j {
            *label = j;
            changed = true;
        }
        inertia += d;
    }
    (inertia, changed)
}

fn update(points: &[&[f64]], labels: &mut [usize], centroids: &mut [Vec<f64>]) {
    let k = centroids.len();
    let dim = points[0].len();
    loop {
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &l) in points.iter().zip(labels.iter()) {
            counts[l] += 1;
            for (s, x) in sums[l].iter_mut().zip(p.iter()) {
                *s += x;
            }
        }
        let Some(empty) = counts.iter().position(|&c| c == 0) else {
            for ((c, s), n) in centroids.iter_mut().zip(sums).zip(counts) {
                *c = s.into_iter().map(|x| x / n as f64).collect();
            }
            return;
        };
        // move the point farthest from its centroid (in a cluster that can spare it)
        let donor = points
            .iter()
            .zip(labels.iter())
            .enumerate()
            .filter(|(_, (_, &l))| counts[l] > 1)
            .map(|(i, (p, &l))| (i, sq_dist(p, &centroids[l])))
            .fold(None::<(usize, f64)>, |best, (i, d)| match best {
                Some((_, bd)) if bd >= d => best,
                _ => Some((i, d)),
            })
            .map(|(i, _)| i)
            .expect("more points than clusters");
        labels[donor] = empty;
        centroids[empty] = points[donor].to_vec();
    }
}

/// Clusters `points` into `k` groups. Deterministic given `seed`.
pub fn kmeans(points: &[&[f64]], k: usize, seed: u64, max_iter: usize) -> Result<KMeansFit> {
    if points.is_empty() {
        return Err(invalid!("k-means needs at least one point"));
    }
    if k == 0 {
        return Err(invalid!("k-means needs k >= 1"));
    }
    let dim = points[0].len();
    if let Some(p) = points.iter().find(|p| p.len() != dim) {
        return Err(CvError::Dimension {
            expected: dim,
            got: p.len(),
        });
    }
    let distinct = count_distinct(points, k);
    if distinct < k {
        return Err(CvError::Degenerate(format!(
            "k-means with k={k} needs at least {k} distinct points, found {distinct}"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = plus_plus(points, k, &mut rng);
    let mut labels = vec![usize::MAX; points.len()];
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iter.max(1) {
        let (inertia, changed) = assign(points, &centroids, &mut labels);
        trace.push(inertia);
        iterations += 1;
        if !changed {
            converged = true;
            break;
        }
        update(points, &mut labels, &mut centroids);
    }
    let inertia = points
        .iter()
        .zip(&labels)
        .map(|(p, &l)| sq_dist(p, &centroids[l]))
        .sum();
    Ok(KMeansFit {
        centroids,
        labels,
        inertia,
        inertia_trace: trace,
        iterations,
        converged,
    })
}
