use std::ops::RangeInclusive;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::DesignSpaceError;

pub const MAX_ITERATIONS: usize = 300;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansResult {
    pub assignments: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    /// Within-cluster sum of squared distances.
    pub wcss: f64,
    pub iterations: usize,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(p: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centroids.iter().enumerate() {
        let d = sq_dist(p, c);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

/// Sum of squared distances of each point to its assigned centroid.
pub fn wcss(points: &[Vec<f64>], assignments: &[usize], centroids: &[Vec<f64>]) -> f64 {
    points
        .iter()
        .zip(assignments)
        .map(|(p, &a)| sq_dist(p, &centroids[a]))
        .sum()
}

fn validate(points: &[Vec<f64>], k: usize) -> Result<usize, DesignSpaceError> {
    let n = points.len();
    if k < 1 || k > n {
        return Err(DesignSpaceError::InvalidK { k, n });
    }
    let dim = points[0].len();
    for p in points {
        if p.len() != dim {
            return Err(DesignSpaceError::Shape(format!(
                "point of dimension {} among points of dimension {dim}",
                p.len()
            )));
        }
        if p.iter().any(|v| !v.is_finite()) {
            return Err(DesignSpaceError::Shape("non-finite coordinate".into()));
        }
    }
    Ok(dim)
}

/// k-means++ seeding.
fn seed_centroids(points: &[Vec<f64>], k: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut chosen = vec![false; n];
    let first = rng.random_range(0..n);
    chosen[first] = true;
    let mut centroids = vec![points[first].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = None;
            for (i, &d) in d2.iter().enumerate() {
                if d <= 0.0 {
                    continue;
                }
                pick = Some(i);
                if target < d {
                    break;
                }
                target -= d;
            }
            pick.expect("positive mass")
        } else {
            // every remaining point coincides with a centroid
            let free: Vec<usize> = (0..n).filter(|&i| !chosen[i]).collect();
            free[rng.random_range(0..free.len())]
        };
        chosen[pick] = true;
        centroids.push(points[pick].clone());
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(p, &points[pick]));
        }
    }
    centroids
}

/// Lloyd iterations from the given centroids until assignments stop changing
/// or [`MAX_ITERATIONS`] is reached. An emptied cluster takes over the point
/// farthest from its current centroid.
pub fn lloyd(points: &[Vec<f64>], mut centroids: Vec<Vec<f64>>) -> KMeansResult {
    let k = centroids.len();
    let dim = points[0].len();
    let mut assignments: Vec<usize> = vec![usize::MAX; points.len()];
    let mut iterations = 0;
    let mut prev_cost = f64::INFINITY;

    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let mut changed = false;
        for (p, a) in points.iter().zip(assignments.iter_mut()) {
            let (best, _) = nearest(p, &centroids);
            if *a != best {
                *a = best;
                changed = true;
            }
        }
        let cost = wcss(points, &assignments, &centroids);
        debug_assert!(
            cost <= prev_cost + 1e-9 * prev_cost.abs().max(1.0),
            "wcss increased: {prev_cost} -> {cost}"
        );
        prev_cost = cost;
        if !changed {
            break;
        }

        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &a) in points.iter().zip(&assignments) {
            counts[a] += 1;
            for (s, v) in sums[a].iter_mut().zip(p) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                centroids[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
        // re-seed empty clusters with the worst-served points
        for c in 0..k {
            if counts[c] > 0 {
                continue;
            }
            let far = points
                .iter()
                .enumerate()
                .filter(|(i, _)| counts[assignments[*i]] > 1)
                .max_by(|(i, p), (j, q)| {
                    sq_dist(p, &centroids[assignments[*i]])
                        .total_cmp(&sq_dist(q, &centroids[assignments[*j]]))
                        .then(j.cmp(i))
                })
                .map(|(i, _)| i);
            if let Some(i) = far {
                counts[assignments[i]] -= 1;
                assignments[i] = c;
                counts[c] = 1;
                centroids[c] = points[i].clone();
            }
        }
    }

    let cost = wcss(points, &assignments, &centroids);
    KMeansResult { assignments, centroids, wcss: cost, iterations }
}

fn best_of(
    points: &[Vec<f64>],
    k: usize,
    seed: u64,
    restarts: usize,
    warm_start: Option<Vec<Vec<f64>>>,
) -> KMeansResult {
    let mut best: Option<KMeansResult> = warm_start.map(|c| lloyd(points, c));
    for r in 0..restarts.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(r as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let run = lloyd(points, seed_centroids(points, k, &mut rng));
        if best.as_ref().is_none_or(|b| run.wcss < b.wcss) {
            best = Some(run);
        }
    }
    best.expect("at least one run")
}

/// Best of `restarts` seeded k-means runs by WCSS.
pub fn kmeans(
    points: &[Vec<f64>],
    k: usize,
    seed: u64,
    restarts: usize,
) -> Result<KMeansResult, DesignSpaceError> {
    if points.is_empty() {
        return Err(DesignSpaceError::InvalidK { k, n: 0 });
    }
    validate(points, k)?;
    Ok(best_of(points, k, seed, restarts, None))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElbowChoice {
    pub k: usize,
    /// `(k, wcss)` for every candidate, in increasing k.
    pub curve: Vec<(usize, f64)>,
}

/// Restarts per candidate k in [`choose_k`].
pub const ELBOW_RESTARTS: usize = 10;

/// Picks k at the largest discrete second difference of the WCSS curve.
///
/// Each k after the first is also warm-started from the previous solution plus
/// the worst-served point, which keeps the returned curve non-increasing.
pub fn choose_k(
    points: &[Vec<f64>],
    k_range: RangeInclusive<usize>,
    seed: u64,
) -> Result<ElbowChoice, DesignSpaceError> {
    let n = points.len();
    let (lo, hi) = (*k_range.start(), *k_range.end());
    if lo < 1 || hi > n || lo > hi {
        return Err(DesignSpaceError::InvalidK { k: hi, n });
    }
    if hi - lo + 1 < 3 {
        return Err(DesignSpaceError::Config("elbow search needs at least three k values".into()));
    }
    validate(points, lo)?;
    if points.iter().all(|p| p == &points[0]) {
        return Err(DesignSpaceError::NoElbow);
    }

    let mut curve = Vec::with_capacity(hi - lo + 1);
    let mut prev: Option<KMeansResult> = None;
    for k in lo..=hi {
        let warm = prev.as_ref().map(|p| {
            let far = points
                .iter()
                .zip(&p.assignments)
                .enumerate()
                .max_by(|(i, (a, ca)), (j, (b, cb))| {
                    sq_dist(a, &p.centroids[**ca])
                        .total_cmp(&sq_dist(b, &p.centroids[**cb]))
                        .then(j.cmp(i))
                })
                .map(|(i, _)| i)
                .expect("non-empty");
            let mut c = p.centroids.clone();
            c.push(points[far].clone());
            c
        });
        let run = best_of(points, k, seed.wrapping_add(k as u64 * 1000), ELBOW_RESTARTS, warm);
        curve.push((k, run.wcss));
        prev = Some(run);
    }

    let mut best = (curve[1].0, f64::NEG_INFINITY);
    for w in curve.windows(3) {
        let d2 = w[0].1 - 2.0 * w[1].1 + w[2].1;
        if d2 > best.1 {
            best = (w[1].0, d2);
        }
    }
    Ok(ElbowChoice { k: best.0, curve })
}
