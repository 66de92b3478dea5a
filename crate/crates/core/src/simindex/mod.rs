//! Query-to-query similarity: exact dense kNN over embeddings, BM25 over
//! query text, and the merged candidate pools handed to annotators.

mod bm25;
mod candidates;
mod knn;

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::textfmt::sig6;

pub use bm25::{
    bm25_grid_evaluate, bm25_grid_search, bm25_search, tokenize, Bm25Index, Bm25Params,
};
pub use candidates::{recall_candidates, candidates_to_tsv, Candidate, CandidateConfig, CandidatePool, Channel};
pub use knn::{dot, knn, knn_rows, KnnOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SimMeasure {
    #[default]
    InnerProduct,
    Cosine,
}

impl fmt::Display for SimMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SimMeasure::InnerProduct => "inner_product",
            SimMeasure::Cosine => "cosine",
        })
    }
}

impl FromStr for SimMeasure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "inner_product" | "inner-product" | "ip" | "dot" => Ok(SimMeasure::InnerProduct),
            "cosine" | "cos" => Ok(SimMeasure::Cosine),
            other => Err(Error::invalid(format!("unknown similarity measure {other:?}"))),
        }
    }
}

/// Neighbors of one query, best first; equal scores are ordered by id.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborList {
    pub query_id: String,
    pub neighbors: Vec<(String, f64)>,
}

impl NeighborList {
    pub fn ids(&self) -> impl Iterator<Item = &str> + '_ {
        self.neighbors.iter().map(|(id, _)| id.as_str())
    }
}

/// `test_id<TAB>rank<TAB>neighbor_id<TAB>score`, ranks from 1, scores as `%.6g`.
pub fn neighbors_to_tsv(lists: &[NeighborList]) -> String {
    let mut out = String::new();
    for list in lists {
        for (rank, (id, score)) in list.neighbors.iter().enumerate() {
            out.push_str(&format!(
                "{}\t{}\t{id}\t{}\n",
                list.query_id,
                rank + 1,
                sig6(*score)
            ));
        }
    }
    out
}
