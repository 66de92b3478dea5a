use std::collections::{HashMap, HashSet};
use std::fmt;

use super::NeighborList;
use crate::dataio::{QrelSet, QuerySet, RunSet};
use crate::error::{Error, Result};
use crate::metrics::{evaluate_one, MetricSpec};

/// Lowercased alphanumeric runs; every other codepoint separates tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Bm25Params {
    pub fn new(k1: f64, b: f64) -> Result<Self> {
        if !(k1 > 0.0 && k1.is_finite()) {
            return Err(Error::invalid(format!("BM25 k1 must be positive, got {k1}")));
        }
        if !(0.0..=1.0).contains(&b) {
            return Err(Error::invalid(format!("BM25 b must lie in [0, 1], got {b}")));
        }
        Ok(Bm25Params { k1, b })
    }

    /// Every (k1, b) combination of the two axes.
    pub fn grid(k1s: &[f64], bs: &[f64]) -> Result<Vec<Self>> {
        k1s.iter()
            .flat_map(|&k1| bs.iter().map(move |&b| Bm25Params::new(k1, b)))
            .collect()
    }
}

/// Anserini's defaults.
impl Default for Bm25Params {
    fn default() -> Self {
        Bm25Params { k1: 0.9, b: 0.4 }
    }
}

impl fmt::Display for Bm25Params {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "k1={} b={}", self.k1, self.b)
    }
}

/// Inverted index over a query set whose queries play the role of documents.
#[derive(Debug, Clone)]
pub struct Bm25Index {
    doc_ids: Vec<String>,
    doc_lens: Vec<u32>,
    avgdl: f64,
    /// term -> (doc ordinal, term frequency), ordered by ordinal
    postings: HashMap<String, Vec<(u32, u32)>>,
    stopwords: HashSet<String>,
}

impl Bm25Index {
    pub fn build(docs: &QuerySet) -> Result<Self> {
        Self::build_with_stopwords(docs, HashSet::new())
    }

    /// Stopwords are removed from documents and from every later query.
    pub fn build_with_stopwords(docs: &QuerySet, stopwords: HashSet<String>) -> Result<Self> {
        if docs.is_empty() {
            return Err(Error::invalid("cannot build a BM25 index over an empty set"));
        }
        let stopwords: HashSet<String> = stopwords.into_iter().map(|w| w.to_lowercase()).collect();
        let mut postings: HashMap<String, Vec<(u32, u32)>> = HashMap::new();
        let mut doc_lens = Vec::with_capacity(docs.len());
        let mut doc_ids = Vec::with_capacity(docs.len());
        for (ordinal, doc) in docs.iter().enumerate() {
            let ordinal = u32::try_from(ordinal).map_err(|_| Error::invalid("more than 2^32 documents"))?;
            let mut tf: HashMap<String, u32> = HashMap::new();
            let mut len = 0u32;
            for term in tokenize(&doc.text) {
                if stopwords.contains(&term) {
                    continue;
                }
                len += 1;
                *tf.entry(term).or_default() += 1;
            }
            for (term, count) in tf {
                postings.entry(term).or_default().push((ordinal, count));
            }
            doc_lens.push(len);
            doc_ids.push(doc.id.clone());
        }
        let total: u64 = doc_lens.iter().map(|&l| u64::from(l)).sum();
        Ok(Bm25Index {
            avgdl: total as f64 / doc_lens.len() as f64,
            doc_ids,
            doc_lens,
            postings,
            stopwords,
        })
    }

    pub fn num_docs(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn avgdl(&self) -> f64 {
        self.avgdl
    }

    pub fn doc_id(&self, ordinal: usize) -> &str {
        &self.doc_ids[ordinal]
    }

    pub fn doc_len(&self, ordinal: usize) -> u32 {
        self.doc_lens[ordinal]
    }

    pub fn doc_freq(&self, term: &str) -> usize {
        self.postings.get(term).map_or(0, Vec::len)
    }

    pub fn postings(&self, term: &str) -> &[(u32, u32)] {
        self.postings.get(term).map_or(&[], Vec::as_slice)
    }

    /// ln(1 + (N - df + 0.5) / (df + 0.5)); never negative.
    pub fn idf(&self, term: &str) -> f64 {
        let n = self.num_docs() as f64;
        let df = self.doc_freq(term) as f64;
        (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
    }

    /// Distinct query terms in order of first occurrence.
    fn query_terms(&self, text: &str) -> Vec<String> {
        let mut seen = HashSet::new();
        tokenize(text)
            .into_iter()
            .filter(|t| !self.stopwords.contains(t) && seen.insert(t.clone()))
            .collect()
    }

    /// Top-k documents as (ordinal, score), score descending then id ascending.
    /// Documents scoring 0 are never returned.
    pub fn search(&self, text: &str, k: usize, params: Bm25Params) -> Vec<(usize, f64)> {
        let mut scores: HashMap<u32, f64> = HashMap::new();
        for term in self.query_terms(text) {
            let Some(postings) = self.postings.get(&term) else {
                continue;
            };
            let idf = self.idf(&term);
            for &(doc, tf) in postings {
                let tf = f64::from(tf);
                let len = f64::from(self.doc_lens[doc as usize]);
                let norm = params.k1 * (1.0 - params.b + params.b * len / self.avgdl);
                *scores.entry(doc).or_insert(0.0) += idf * tf * (params.k1 + 1.0) / (tf + norm);
            }
        }
        let mut hits: Vec<(usize, f64)> = scores
            .into_iter()
            .filter(|&(_, s)| s > 0.0)
            .map(|(d, s)| (d as usize, s))
            .collect();
        hits.sort_by(|a, b| {
            b.1.total_cmp(&a.1)
                .then_with(|| self.doc_ids[a.0].cmp(&self.doc_ids[b.0]))
        });
        hits.truncate(k);
        hits
    }
}

pub fn bm25_search(index: &Bm25Index, query_id: &str, text: &str, k: usize, params: Bm25Params) -> NeighborList {
    NeighborList {
        query_id: query_id.to_owned(),
        neighbors: index
            .search(text, k, params)
            .into_iter()
            .map(|(d, s)| (index.doc_id(d).to_owned(), s))
            .collect(),
    }
}

/// Mean metric of every grid point, retrieving `metric.cutoff` documents per query.
pub fn bm25_grid_evaluate(
    index: &Bm25Index,
    queries: &QuerySet,
    qrels: &QrelSet,
    grid: &[Bm25Params],
    metric: &MetricSpec,
) -> Result<Vec<(Bm25Params, f64)>> {
    grid.iter()
        .map(|&params| {
            let mut run = RunSet::with_tag(format!("bm25_{}_{}", params.k1, params.b));
            for q in queries {
                let hits = bm25_search(index, &q.id, &q.text, metric.cutoff, params);
                run.insert_query(q.id.clone(), hits.neighbors)?;
            }
            Ok((params, evaluate_one(&run, qrels, metric)?.mean))
        })
        .collect()
}

/// Grid point with the best mean metric; ties prefer lower k1, then lower b.
pub fn bm25_grid_search(
    index: &Bm25Index,
    queries: &QuerySet,
    qrels: &QrelSet,
    grid: &[Bm25Params],
    metric: &MetricSpec,
) -> Result<Bm25Params> {
    if grid.is_empty() {
        return Err(Error::invalid("empty BM25 parameter grid"));
    }
    let scored = bm25_grid_evaluate(index, queries, qrels, grid, metric)?;
    let best = scored
        .into_iter()
        .min_by(|(pa, sa), (pb, sb)| {
            sb.total_cmp(sa)
                .then_with(|| pa.k1.total_cmp(&pb.k1))
                .then_with(|| pa.b.total_cmp(&pb.b))
        })
        .expect("grid is nonempty");
    Ok(best.0)
}
