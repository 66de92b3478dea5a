//! Interpolation / extrapolation splits.
//!
//! * ReSTrain keeps the test set and rebuilds the training set, either from
//!   the nearest training queries of each test query (interpolation) or from
//!   everything outside those neighborhoods (extrapolation).
//! * ReSTTest clusters training and test queries together into `k` buckets;
//!   fold `f` trains without bucket `f` and tests extrapolation on the test
//!   queries inside it.
//!
//! All randomness comes from [`seeded_rng`], so a split is a pure function
//! of its inputs and seed.

mod kmeans;
mod manifest;
mod restrain;
mod resttest;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataio::{EmbeddingSet, Query, QuerySet};
use crate::error::{Error, Result};

pub use kmeans::{kmeans, KMeansConfig, KMeansResult};
pub use manifest::Manifest;
pub use restrain::{restrain_extrapolation, restrain_interpolation, ReSTrainConfig, Regime, SplitSpec};
pub use resttest::{resttest_aggregate, resttest_split, AggregateReport, Fold, FoldSpec, QueryAggregate};

/// Recorded in every manifest so a split can be regenerated bit for bit.
pub const RNG_ALGORITHM: &str = "chacha8";

/// ChaCha with 8 rounds, seeded through `SeedableRng::seed_from_u64`.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Queries with their embeddings, row `i` of the embeddings belonging to query `i`.
#[derive(Debug, Clone)]
pub struct QueryPool {
    queries: QuerySet,
    embeddings: EmbeddingSet,
}

impl QueryPool {
    /// Reorders `embeddings` to query order when needed; extra vectors are dropped.
    pub fn new(queries: QuerySet, embeddings: EmbeddingSet) -> Result<Self> {
        let aligned = embeddings.len() == queries.len()
            && embeddings.ids().iter().zip(queries.ids()).all(|(a, b)| a == b);
        let embeddings = if aligned {
            embeddings
        } else {
            embeddings.select(queries.ids())?
        };
        Ok(QueryPool { queries, embeddings })
    }

    /// A pool without query text, in embedding order.
    pub fn from_embeddings(embeddings: EmbeddingSet) -> Result<Self> {
        let queries = QuerySet::new(embeddings.ids().iter().map(|id| Query::new(id.clone(), "")).collect())?;
        Ok(QueryPool { queries, embeddings })
    }

    pub fn queries(&self) -> &QuerySet {
        &self.queries
    }

    pub fn embeddings(&self) -> &EmbeddingSet {
        &self.embeddings
    }

    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }

    pub fn id(&self, row: usize) -> &str {
        self.embeddings.id(row)
    }
}

fn check_disjoint(train: &QueryPool, test: &QueryPool) -> Result<()> {
    match test.queries.ids().find(|id| train.queries.contains(id)) {
        Some(id) => Err(Error::invalid(format!(
            "query id {id} appears in both the training and the test set"
        ))),
        None => Ok(()),
    }
}
