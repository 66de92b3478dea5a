use std::cmp::Ordering;
use std::collections::BinaryHeap;

use log::warn;
use rayon::prelude::*;

use super::{NeighborList, SimMeasure};
use crate::dataio::EmbeddingSet;
use crate::error::{Error, Result};

const LANES: usize = 8;
/// Test queries scored together against one training row.
const QUERY_BLOCK: usize = 4;
/// Training rows per tile; a tile is streamed once per pass over the test blocks.
const TRAIN_TILE: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KnnOptions {
    pub k: usize,
    pub measure: SimMeasure,
    /// Drop a training row whose id equals the test query id.
    pub exclude_self: bool,
}

impl KnnOptions {
    pub fn new(k: usize, measure: SimMeasure) -> Self {
        KnnOptions {
            k,
            measure,
            exclude_self: false,
        }
    }

    pub fn excluding_self(mut self) -> Self {
        self.exclude_self = true;
        self
    }
}

/// Inner product with eight interleaved `f32` accumulators.
///
/// Every score in this module goes through this exact summation order, so
/// identical inputs always produce bit-identical scores.
pub fn dot(a: &[f32], b: &[f32]) -> f32 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0f32; LANES];
    let (ca, cb) = (a.chunks_exact(LANES), b.chunks_exact(LANES));
    let tail: f32 = ca
        .remainder()
        .iter()
        .zip(cb.remainder())
        .fold(0.0, |s, (x, y)| s + x * y);
    for (x, y) in ca.zip(cb) {
        for i in 0..LANES {
            acc[i] += x[i] * y[i];
        }
    }
    reduce(&acc) + tail
}

fn reduce(acc: &[f32; LANES]) -> f32 {
    ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]))
}

/// [`dot`] of one row against four queries at once; same arithmetic per pair.
#[inline(always)]
fn dot_block_impl(row: &[f32], queries: [&[f32]; QUERY_BLOCK]) -> [f32; QUERY_BLOCK] {
    let mut acc = [[0f32; LANES]; QUERY_BLOCK];
    let [q0, q1, q2, q3] = queries;
    let chunks = row
        .chunks_exact(LANES)
        .zip(q0.chunks_exact(LANES))
        .zip(q1.chunks_exact(LANES))
        .zip(q2.chunks_exact(LANES))
        .zip(q3.chunks_exact(LANES));
    for ((((x, y0), y1), y2), y3) in chunks {
        let x: &[f32; LANES] = x.try_into().unwrap();
        for (a, y) in acc.iter_mut().zip([y0, y1, y2, y3]) {
            let y: &[f32; LANES] = y.try_into().unwrap();
            for i in 0..LANES {
                a[i] += x[i] * y[i];
            }
        }
    }
    let split = row.len() / LANES * LANES;
    let mut out = [0f32; QUERY_BLOCK];
    for (j, q) in queries.iter().enumerate() {
        let tail = row[split..]
            .iter()
            .zip(&q[split..])
            .fold(0.0, |s, (x, y)| s + x * y);
        out[j] = reduce(&acc[j]) + tail;
    }
    out
}

// Wider registers give the same per-lane arithmetic (no FMA), so both paths
// produce bit-identical scores.
#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx")]
unsafe fn dot_block_avx(row: &[f32], queries: [&[f32]; QUERY_BLOCK]) -> [f32; QUERY_BLOCK] {
    dot_block_impl(row, queries)
}

fn dot_block(row: &[f32], queries: [&[f32]; QUERY_BLOCK]) -> [f32; QUERY_BLOCK] {
    #[cfg(target_arch = "x86_64")]
    {
        if std::arch::is_x86_feature_detected!("avx") {
            // SAFETY: the CPU supports AVX.
            return unsafe { dot_block_avx(row, queries) };
        }
    }
    dot_block_impl(row, queries)
}

fn norms(set: &EmbeddingSet) -> Result<Vec<f64>> {
    set.iter()
        .map(|(id, v)| {
            let n = v.iter().map(|&x| f64::from(x) * f64::from(x)).sum::<f64>().sqrt();
            if n > 0.0 {
                Ok(n)
            } else {
                Err(Error::invalid(format!("cosine similarity needs nonzero vectors; {id} is zero")))
            }
        })
        .collect()
}

#[derive(Clone, Copy)]
struct Entry {
    score: f64,
    id_rank: u32,
    row: u32,
}

/// Max-heap order puts the worst kept neighbor on top.
impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .score
            .total_cmp(&self.score)
            .then_with(|| self.id_rank.cmp(&other.id_rank))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

struct TopK {
    k: usize,
    skip_row: Option<usize>,
    heap: BinaryHeap<Entry>,
}

impl TopK {
    #[inline]
    fn offer(&mut self, entry: Entry) {
        if self.heap.len() < self.k {
            self.heap.push(entry);
        } else if let Some(mut worst) = self.heap.peek_mut() {
            if entry < *worst {
                *worst = entry;
            }
        }
    }

    fn into_sorted(self) -> Vec<(usize, f64)> {
        self.heap
            .into_sorted_vec()
            .into_iter()
            .map(|e| (e.row as usize, e.score))
            .collect()
    }
}

/// Exact top-k training rows for every test row, best first.
///
/// Scores are descending; ties go to the lexicographically smaller training
/// id. The scan is exhaustive and parallel over test queries, with results
/// independent of the thread count.
pub fn knn_rows(test: &EmbeddingSet, train: &EmbeddingSet, opts: KnnOptions) -> Result<Vec<Vec<(usize, f64)>>> {
    if test.dim() != train.dim() {
        return Err(Error::DimensionMismatch {
            expected: test.dim(),
            found: train.dim(),
        });
    }
    if opts.k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    if u32::try_from(train.len()).is_err() {
        return Err(Error::invalid("training set larger than 2^32 rows"));
    }
    let cosine = opts.measure == SimMeasure::Cosine;
    let (test_norms, train_norms) = if cosine {
        (norms(test)?, norms(train)?)
    } else {
        (Vec::new(), Vec::new())
    };

    let mut by_id: Vec<usize> = (0..train.len()).collect();
    by_id.sort_unstable_by(|&a, &b| train.id(a).cmp(train.id(b)));
    let mut id_rank = vec![0u32; train.len()];
    for (rank, &row) in by_id.iter().enumerate() {
        id_rank[row] = rank as u32;
    }

    let mut tops: Vec<TopK> = (0..test.len())
        .map(|q| {
            let skip_row = if opts.exclude_self {
                train.position(test.id(q))
            } else {
                None
            };
            let available = train.len() - usize::from(skip_row.is_some());
            TopK {
                k: opts.k.min(available),
                skip_row,
                heap: BinaryHeap::with_capacity(opts.k.min(available) + 1),
            }
        })
        .collect();
    if let Some(short) = tops.iter().find(|t| t.k < opts.k) {
        warn!(
            "k = {} exceeds the {} available training vectors; returning all of them",
            opts.k, short.k
        );
    }

    let score = |q: usize, row: usize, raw: f32| -> f64 {
        // Adding 0.0 folds -0.0 into 0.0 so it ties with +0.0.
        let s = if cosine {
            f64::from(raw) / (test_norms[q] * train_norms[row])
        } else {
            f64::from(raw)
        };
        s + 0.0
    };

    for tile_start in (0..train.len()).step_by(TRAIN_TILE) {
        let tile = tile_start..(tile_start + TRAIN_TILE).min(train.len());
        tops.par_chunks_mut(QUERY_BLOCK)
            .enumerate()
            .for_each(|(block, tops)| {
                let first = block * QUERY_BLOCK;
                let queries: [&[f32]; QUERY_BLOCK] =
                    std::array::from_fn(|j| test.vector((first + j).min(test.len() - 1)));
                for row in tile.clone() {
                    let raw = dot_block(train.vector(row), queries);
                    for (j, top) in tops.iter_mut().enumerate() {
                        if top.skip_row == Some(row) || top.k == 0 {
                            continue;
                        }
                        top.offer(Entry {
                            score: score(first + j, row, raw[j]),
                            id_rank: id_rank[row],
                            row: row as u32,
                        });
                    }
                }
            });
    }
    Ok(tops.into_iter().map(TopK::into_sorted).collect())
}

/// Exact k nearest training queries of every test query.
pub fn knn(test: &EmbeddingSet, train: &EmbeddingSet, opts: KnnOptions) -> Result<Vec<NeighborList>> {
    let rows = knn_rows(test, train, opts)?;
    Ok(rows
        .into_iter()
        .enumerate()
        .map(|(q, hits)| NeighborList {
            query_id: test.id(q).to_owned(),
            neighbors: hits
                .into_iter()
                .map(|(row, s)| (train.id(row).to_owned(), s))
                .collect(),
        })
        .collect())
}
