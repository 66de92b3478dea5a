use std::borrow::Cow;

use log::{debug, warn};
use rand::Rng;
use rayon::prelude::*;

use super::seeded_rng;
use crate::dataio::EmbeddingSet;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KMeansConfig {
    pub k: usize,
    pub seed: u64,
    pub max_iters: usize,
    /// Stop once no centroid moves further than this (L2).
    pub tol: f64,
    /// L2-normalize every vector before clustering.
    pub normalize: bool,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        KMeansConfig {
            k: 5,
            seed: 42,
            max_iters: 100,
            tol: 1e-4,
            normalize: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub centroids: Vec<Vec<f64>>,
    /// Bucket of each input row.
    pub assignment: Vec<usize>,
    /// Sum of squared Euclidean distances to the assigned centroids.
    pub inertia: f64,
    /// Objective after every assignment step, ending with the final value.
    pub inertia_history: Vec<f64>,
    pub iterations: usize,
}

impl KMeansResult {
    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.centroids.len()];
        for &b in &self.assignment {
            sizes[b] += 1;
        }
        sizes
    }
}

fn sq_dist(x: &[f32], c: &[f64]) -> f64 {
    x.iter()
        .zip(c)
        .map(|(&a, &b)| {
            let d = f64::from(a) - b;
            d * d
        })
        .sum()
}

fn to_f64(x: &[f32]) -> Vec<f64> {
    x.iter().map(|&v| f64::from(v)).collect()
}

/// k-means++ seeding: first center uniform, then proportional to D².
fn init_plus_plus(points: &EmbeddingSet, k: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut chosen = vec![false; n];
    let first = rng.gen_range(0..n);
    chosen[first] = true;
    let mut centroids = vec![to_f64(points.vector(first))];
    let mut d2: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| sq_dist(points.vector(i), &centroids[0]))
        .collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let r = rng.gen::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &w) in d2.iter().enumerate() {
                acc += w;
                if w > 0.0 && acc > r {
                    pick = Some(i);
                    break;
                }
            }
            // Rounding can leave r just above the final partial sum.
            pick.unwrap_or_else(|| d2.iter().rposition(|&w| w > 0.0).expect("total > 0"))
        } else {
            let free: Vec<usize> = (0..n).filter(|&i| !chosen[i]).collect();
            free[rng.gen_range(0..free.len())]
        };
        chosen[pick] = true;
        let c = to_f64(points.vector(pick));
        d2.par_iter_mut().enumerate().for_each(|(i, d)| {
            *d = d.min(sq_dist(points.vector(i), &c));
        });
        centroids.push(c);
    }
    centroids
}

/// Nearest centroid of every point (lowest index on ties) and its squared distance.
fn assign(points: &EmbeddingSet, centroids: &[Vec<f64>]) -> Vec<(usize, f64)> {
    (0..points.len())
        .into_par_iter()
        .map(|i| {
            let x = points.vector(i);
            let mut best = (0, f64::INFINITY);
            for (c, centroid) in centroids.iter().enumerate() {
                let d = sq_dist(x, centroid);
                if d < best.1 {
                    best = (c, d);
                }
            }
            best
        })
        .collect()
}

/// Moves the farthest point of a multi-point cluster into each empty cluster.
fn repair_empty(points: &EmbeddingSet, centroids: &mut [Vec<f64>], assigned: &mut [(usize, f64)]) {
    let mut sizes = vec![0usize; centroids.len()];
    for &(c, _) in assigned.iter() {
        sizes[c] += 1;
    }
    for empty in 0..centroids.len() {
        if sizes[empty] > 0 {
            continue;
        }
        let donor = assigned
            .iter()
            .enumerate()
            .filter(|(_, (c, _))| sizes[*c] > 1)
            .fold(None::<(usize, f64)>, |best, (i, &(_, d))| match best {
                Some((_, bd)) if bd >= d => best,
                _ => Some((i, d)),
            });
        let Some((i, _)) = donor else { break };
        debug!("k-means: cluster {empty} empty, seizing point {i}");
        sizes[assigned[i].0] -= 1;
        sizes[empty] = 1;
        assigned[i] = (empty, 0.0);
        centroids[empty] = to_f64(points.vector(i));
    }
}

fn means(points: &EmbeddingSet, assigned: &[(usize, f64)], previous: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let dim = points.dim();
    let mut sums = vec![vec![0f64; dim]; previous.len()];
    let mut counts = vec![0usize; previous.len()];
    // Accumulate in point order so the result never depends on thread count.
    for (i, &(c, _)) in assigned.iter().enumerate() {
        counts[c] += 1;
        for (s, &x) in sums[c].iter_mut().zip(points.vector(i)) {
            *s += f64::from(x);
        }
    }
    sums.into_iter()
        .zip(counts)
        .zip(previous)
        .map(|((s, n), prev)| {
            if n == 0 {
                prev.clone()
            } else {
                s.into_iter().map(|v| v / n as f64).collect()
            }
        })
        .collect()
}

fn objective(points: &EmbeddingSet, assigned: &[(usize, f64)], centroids: &[Vec<f64>]) -> f64 {
    assigned
        .iter()
        .enumerate()
        .map(|(i, &(c, _))| sq_dist(points.vector(i), &centroids[c]))
        .sum()
}

fn normalized(points: &EmbeddingSet) -> Result<EmbeddingSet> {
    let mut out = EmbeddingSet::with_capacity(points.dim(), points.len())?;
    let mut buf = vec![0f32; points.dim()];
    for (id, v) in points.iter() {
        let norm = v.iter().map(|&x| f64::from(x).powi(2)).sum::<f64>().sqrt();
        for (b, &x) in buf.iter_mut().zip(v) {
            *b = if norm > 0.0 { (f64::from(x) / norm) as f32 } else { x };
        }
        out.push(id, &buf)?;
    }
    Ok(out)
}

/// Lloyd's algorithm with k-means++ seeding.
///
/// Iterates until the assignment stops changing, no centroid moves by
/// `tol` or more, or `max_iters` updates have run. Same points in the same
/// order with the same config give the same clustering; reordering the
/// points may not.
pub fn kmeans(points: &EmbeddingSet, cfg: &KMeansConfig) -> Result<KMeansResult> {
    if cfg.k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    if cfg.k > points.len() {
        return Err(Error::invalid(format!(
            "k = {} exceeds the number of points ({})",
            cfg.k,
            points.len()
        )));
    }
    if !cfg.tol.is_finite() || cfg.tol < 0.0 {
        return Err(Error::invalid("k-means tolerance must be a finite non-negative number"));
    }
    if let Some(pos) = points.as_flat().iter().position(|x| !x.is_finite()) {
        return Err(Error::invalid(format!(
            "non-finite component in vector {}",
            points.id(pos / points.dim())
        )));
    }
    let points: Cow<'_, EmbeddingSet> = if cfg.normalize {
        Cow::Owned(normalized(points)?)
    } else {
        Cow::Borrowed(points)
    };
    let points = points.as_ref();

    let mut rng = seeded_rng(cfg.seed);
    let mut centroids = init_plus_plus(points, cfg.k, &mut rng);
    let mut assigned = assign(points, &centroids);
    repair_empty(points, &mut centroids, &mut assigned);
    let mut history = vec![objective(points, &assigned, &centroids)];

    let mut iterations = 0;
    while iterations < cfg.max_iters {
        iterations += 1;
        let updated = means(points, &assigned, &centroids);
        let shift = updated
            .iter()
            .zip(&centroids)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        centroids = updated;

        let mut next = assign(points, &centroids);
        repair_empty(points, &mut centroids, &mut next);
        let changed = next.iter().zip(&assigned).any(|(a, b)| a.0 != b.0);
        assigned = next;
        push_checked(&mut history, objective(points, &assigned, &centroids));
        if !changed || shift < cfg.tol {
            break;
        }
    }
    centroids = means(points, &assigned, &centroids);
    let inertia = objective(points, &assigned, &centroids);
    push_checked(&mut history, inertia);

    Ok(KMeansResult {
        centroids,
        assignment: assigned.into_iter().map(|(c, _)| c).collect(),
        inertia,
        inertia_history: history,
        iterations,
    })
}

/// Lloyd steps never increase the objective beyond floating-point noise.
fn push_checked(history: &mut Vec<f64>, value: f64) {
    let prev = *history.last().expect("history starts non-empty");
    let slack = 1e-9 * prev.abs().max(1.0);
    if value > prev + slack {
        debug_assert!(false, "k-means objective increased: {prev} -> {value}");
        warn!("k-means objective increased from {prev} to {value}");
    }
    history.push(value);
}
