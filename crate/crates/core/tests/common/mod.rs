//! Straight-line reference implementations and data generators shared by
//! the integration tests and the acceptance suite.
#![allow(dead_code)]
// Oracles are written as straight-line loops on purpose.
#![allow(clippy::needless_range_loop)]

use std::collections::{BTreeMap, HashMap, HashSet};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use xtrap::dataio::EmbeddingSet;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Embedding set whose components are small integers, so every dot
/// product and squared norm is exact in both f32 and f64.
pub fn integer_set(rng: &mut impl Rng, prefix: &str, n: usize, dim: usize, range: i32) -> EmbeddingSet {
    let mut set = EmbeddingSet::new(dim).unwrap();
    for i in 0..n {
        let v: Vec<f32> = (0..dim).map(|_| rng.gen_range(-range..=range) as f32).collect();
        set.push(format!("{prefix}{i:04}"), &v).unwrap();
    }
    set
}

pub fn gaussian_set(rng: &mut impl Rng, prefix: &str, n: usize, dim: usize) -> EmbeddingSet {
    let mut set = EmbeddingSet::new(dim).unwrap();
    for i in 0..n {
        let v: Vec<f32> = (0..dim).map(|_| normal(rng) as f32).collect();
        set.push(format!("{prefix}{i:04}"), &v).unwrap();
    }
    set
}

/// Box–Muller standard normal.
pub fn normal(rng: &mut impl Rng) -> f64 {
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

// ---------------------------------------------------------------- ranking

/// Score descending, then doc id ascending.
pub fn sort_ranking(docs: &[(String, f64)]) -> Vec<(String, f64)> {
    let mut v = docs.to_vec();
    v.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    v
}

pub fn oracle_mrr(ranked: &[(String, f64)], judged: &HashMap<String, u32>, cutoff: usize, threshold: u32) -> f64 {
    for i in 0..ranked.len() {
        if i >= cutoff {
            break;
        }
        let g = *judged.get(&ranked[i].0).unwrap_or(&0);
        if g >= threshold {
            return 1.0 / (i as f64 + 1.0);
        }
    }
    0.0
}

pub fn oracle_ndcg(
    ranked: &[(String, f64)],
    judged: &HashMap<String, u32>,
    cutoff: usize,
    threshold: u32,
    exponential: bool,
) -> f64 {
    let gain = |g: u32| -> f64 {
        if g < threshold {
            0.0
        } else if exponential {
            2f64.powi(g as i32) - 1.0
        } else {
            g as f64
        }
    };
    let mut dcg = 0.0;
    for i in 1..=cutoff.min(ranked.len()) {
        let g = *judged.get(&ranked[i - 1].0).unwrap_or(&0);
        dcg += gain(g) / ((i + 1) as f64).log2();
    }
    let mut grades: Vec<u32> = judged.values().copied().collect();
    grades.sort();
    grades.reverse();
    let mut idcg = 0.0;
    for i in 1..=cutoff.min(grades.len()) {
        idcg += gain(grades[i - 1]) / ((i + 1) as f64).log2();
    }
    if idcg == 0.0 {
        0.0
    } else {
        dcg / idcg
    }
}

/// `None` when the query has no relevant document.
pub fn oracle_recall(ranked: &[(String, f64)], judged: &HashMap<String, u32>, cutoff: usize, threshold: u32) -> Option<f64> {
    let relevant: HashSet<&String> = judged.iter().filter(|(_, &g)| g >= threshold).map(|(d, _)| d).collect();
    if relevant.is_empty() {
        return None;
    }
    let top: HashSet<&String> = ranked.iter().take(cutoff).map(|(d, _)| d).collect();
    Some(relevant.intersection(&top).count() as f64 / relevant.len() as f64)
}

// ---------------------------------------------------------------- knn

/// Full scoring and sort of every training vector, in f64.
pub fn oracle_knn(
    test: &EmbeddingSet,
    train: &EmbeddingSet,
    k: usize,
    cosine: bool,
    exclude_self: bool,
) -> Vec<Vec<(String, f64)>> {
    let norm = |v: &[f32]| v.iter().map(|&x| f64::from(x) * f64::from(x)).sum::<f64>().sqrt();
    (0..test.len())
        .map(|q| {
            let qv = test.vector(q);
            let mut all: Vec<(String, f64)> = (0..train.len())
                .filter(|&r| !(exclude_self && train.id(r) == test.id(q)))
                .map(|r| {
                    let tv = train.vector(r);
                    let dot: f64 = qv.iter().zip(tv).map(|(&a, &b)| f64::from(a) * f64::from(b)).sum();
                    let s = if cosine { dot / (norm(qv) * norm(tv)) } else { dot };
                    (train.id(r).to_owned(), s + 0.0)
                })
                .collect();
            all = sort_ranking(&all);
            all.truncate(k);
            all
        })
        .collect()
}

// ---------------------------------------------------------------- correlation

pub fn oracle_average_ranks(v: &[f64]) -> Vec<f64> {
    v.iter()
        .map(|&x| {
            let below = v.iter().filter(|&&y| y < x).count() as f64;
            let equal = v.iter().filter(|&&y| y == x).count() as f64;
            below + (equal + 1.0) / 2.0
        })
        .collect()
}

pub fn oracle_spearman(x: &[f64], y: &[f64]) -> f64 {
    let rx = oracle_average_ranks(x);
    let ry = oracle_average_ranks(y);
    let n = x.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for i in 0..x.len() {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx).powi(2);
        syy += (ry[i] - my).powi(2);
    }
    sxy / (sxx * syy).sqrt()
}

pub fn oracle_kendall(x: &[f64], y: &[f64]) -> f64 {
    let (mut c, mut d, mut tx, mut ty) = (0i64, 0i64, 0i64, 0i64);
    let n = x.len();
    for i in 0..n {
        for j in i + 1..n {
            let dx = x[i] - x[j];
            let dy = y[i] - y[j];
            if dx == 0.0 {
                tx += 1;
            }
            if dy == 0.0 {
                ty += 1;
            }
            if dx != 0.0 && dy != 0.0 {
                if (dx > 0.0) == (dy > 0.0) {
                    c += 1;
                } else {
                    d += 1;
                }
            }
        }
    }
    let n0 = (n * (n - 1) / 2) as i64;
    (c - d) as f64 / (((n0 - tx) * (n0 - ty)) as f64).sqrt()
}

// ---------------------------------------------------------------- splits

/// Union of every test query's top-`e` training ids.
pub fn oracle_top_union(test: &EmbeddingSet, train: &EmbeddingSet, e: usize, cosine: bool) -> HashSet<String> {
    oracle_knn(test, train, e, cosine, false)
        .into_iter()
        .flatten()
        .map(|(id, _)| id)
        .collect()
}

/// Plain Lloyd's algorithm from the given starting centroids; returns (assignment, inertia).
pub fn oracle_lloyd(points: &[Vec<f64>], mut centroids: Vec<Vec<f64>>) -> (Vec<usize>, f64) {
    let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>();
    let mut assignment = vec![usize::MAX; points.len()];
    for _ in 0..1000 {
        let next: Vec<usize> = points
            .iter()
            .map(|p| {
                (0..centroids.len())
                    .min_by(|&a, &b| dist(p, &centroids[a]).partial_cmp(&dist(p, &centroids[b])).unwrap())
                    .unwrap()
            })
            .collect();
        if next == assignment {
            break;
        }
        assignment = next;
        for (c, centroid) in centroids.iter_mut().enumerate() {
            let members: Vec<&Vec<f64>> = points.iter().zip(&assignment).filter(|(_, &a)| a == c).map(|(p, _)| p).collect();
            if members.is_empty() {
                continue;
            }
            for d in 0..centroid.len() {
                centroid[d] = members.iter().map(|m| m[d]).sum::<f64>() / members.len() as f64;
            }
        }
    }
    let inertia = points.iter().zip(&assignment).map(|(p, &a)| dist(p, &centroids[a])).sum();
    (assignment, inertia)
}

/// Best inertia over `restarts` Lloyd runs from random distinct starting points.
pub fn oracle_best_kmeans(points: &[Vec<f64>], k: usize, restarts: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    (0..restarts)
        .map(|_| {
            let idx = rand::seq::index::sample(&mut r, points.len(), k);
            oracle_lloyd(points, idx.iter().map(|i| points[i].clone()).collect()).1
        })
        .fold(f64::INFINITY, f64::min)
}

pub fn to_rows(set: &EmbeddingSet) -> Vec<Vec<f64>> {
    (0..set.len())
        .map(|r| set.vector(r).iter().map(|&x| f64::from(x)).collect())
        .collect()
}

pub fn judged_map(pairs: &[(&str, u32)]) -> HashMap<String, u32> {
    pairs.iter().map(|(d, g)| (d.to_string(), *g)).collect()
}

pub fn btree(m: &HashMap<String, u32>) -> BTreeMap<String, u32> {
    m.iter().map(|(k, v)| (k.clone(), *v)).collect()
}

// ---------------------------------------------------------------- metric instances

pub struct MetricQuery {
    pub qid: String,
    pub retrieved: Vec<(String, f64)>,
    pub judged: HashMap<String, u32>,
}

/// Random queries with ≤ 20 docs each, integer scores (plenty of ties) and
/// grades 0–3; some judged docs are not retrieved and some queries have no
/// judgments at all.
pub fn random_metric_instance(rng: &mut impl Rng, queries: usize) -> Vec<MetricQuery> {
    (0..queries)
        .map(|q| {
            let pool = rng.gen_range(1..=20);
            let retrieved_n = rng.gen_range(1..=pool);
            let docs: Vec<String> = (0..pool).map(|d| format!("d{d}")).collect();
            let order = rand::seq::index::sample(rng, pool, retrieved_n);
            let retrieved = order
                .iter()
                .map(|i| (docs[i].clone(), f64::from(rng.gen_range(0..8u8))))
                .collect();
            let mut judged = HashMap::new();
            if rng.gen_bool(0.9) {
                for d in &docs {
                    if rng.gen_bool(0.6) {
                        judged.insert(d.clone(), rng.gen_range(0..=3));
                    }
                }
            }
            MetricQuery {
                qid: format!("q{q}"),
                retrieved,
                judged,
            }
        })
        .collect()
}

pub fn run_text(queries: &[MetricQuery]) -> String {
    let mut out = String::new();
    for q in queries {
        for (i, (d, s)) in q.retrieved.iter().enumerate() {
            out.push_str(&format!("{} Q0 {d} {} {s} oracle\n", q.qid, i + 1));
        }
    }
    out
}

pub fn qrels_text(queries: &[MetricQuery]) -> String {
    let mut out = String::new();
    for q in queries {
        let mut judged: Vec<_> = q.judged.iter().collect();
        judged.sort();
        for (d, g) in judged {
            out.push_str(&format!("{} 0 {d} {g}\n", q.qid));
        }
    }
    out
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, descending.
pub fn oracle_sym_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let d = a.len();
    for _ in 0..100 {
        let off: f64 = (0..d).flat_map(|i| (0..d).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..d {
            for q in p + 1..d {
                if a[p][q] == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for row in a.iter_mut() {
                    let (kp, kq) = (row[p], row[q]);
                    row[p] = c * kp - s * kq;
                    row[q] = s * kp + c * kq;
                }
                for k in 0..d {
                    let (pk, qk) = (a[p][k], a[q][k]);
                    a[p][k] = c * pk - s * qk;
                    a[q][k] = s * pk + c * qk;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..d).map(|i| a[i][i]).collect();
    eig.sort_by(|x, y| y.total_cmp(x));
    eig
}
