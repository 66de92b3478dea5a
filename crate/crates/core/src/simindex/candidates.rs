use std::collections::HashMap;

use super::{bm25_search, knn, Bm25Index, Bm25Params, KnnOptions, SimMeasure};
use crate::dataio::{EmbeddingSet, QuerySet};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    Embedding,
    Bm25,
    Both,
}

impl Channel {
    pub fn as_str(self) -> &'static str {
        match self {
            Channel::Embedding => "emb",
            Channel::Bm25 => "bm25",
            Channel::Both => "both",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Candidate {
    pub id: String,
    pub channel: Channel,
}

/// Training queries proposed for annotation against one test query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidatePool {
    pub query_id: String,
    pub candidates: Vec<Candidate>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidateConfig {
    pub per_channel: usize,
    pub measure: SimMeasure,
    pub bm25: Bm25Params,
}

impl Default for CandidateConfig {
    fn default() -> Self {
        CandidateConfig {
            per_channel: 10,
            measure: SimMeasure::default(),
            bm25: Bm25Params::default(),
        }
    }
}

/// Union of the embedding and BM25 neighbor lists of every test query.
///
/// Embedding neighbors come first in rank order, then BM25 neighbors not
/// already present. A training query sharing the test query's id is never
/// proposed.
pub fn recall_candidates(
    test: &QuerySet,
    train: &QuerySet,
    test_emb: &EmbeddingSet,
    train_emb: &EmbeddingSet,
    cfg: &CandidateConfig,
) -> Result<Vec<CandidatePool>> {
    let test_vecs = test_emb.select(test.ids())?;
    let train_vecs = train_emb.select(train.ids())?;
    let dense = knn(
        &test_vecs,
        &train_vecs,
        KnnOptions::new(cfg.per_channel, cfg.measure).excluding_self(),
    )?;
    let index = Bm25Index::build(train)?;

    Ok(test
        .iter()
        .zip(dense)
        .map(|(q, dense)| {
            let lexical = bm25_search(&index, &q.id, &q.text, cfg.per_channel + 1, cfg.bm25);
            let lexical = lexical.ids().filter(|id| *id != q.id).take(cfg.per_channel);

            let mut candidates: Vec<Candidate> = Vec::new();
            let mut position: HashMap<String, usize> = HashMap::new();
            for id in dense.ids() {
                position.insert(id.to_owned(), candidates.len());
                candidates.push(Candidate {
                    id: id.to_owned(),
                    channel: Channel::Embedding,
                });
            }
            for id in lexical {
                match position.get(id) {
                    Some(&i) => candidates[i].channel = Channel::Both,
                    None => {
                        position.insert(id.to_owned(), candidates.len());
                        candidates.push(Candidate {
                            id: id.to_owned(),
                            channel: Channel::Bm25,
                        });
                    }
                }
            }
            CandidatePool {
                query_id: q.id.clone(),
                candidates,
            }
        })
        .collect())
}

/// `test_id<TAB>rank<TAB>candidate_id<TAB>channel`.
pub fn candidates_to_tsv(pools: &[CandidatePool]) -> String {
    let mut out = String::new();
    for pool in pools {
        for (i, c) in pool.candidates.iter().enumerate() {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\n",
                pool.query_id,
                i + 1,
                c.id,
                c.channel.as_str()
            ));
        }
    }
    out
}
