//! Toolkit for measuring how retrieval models interpolate and extrapolate.
//!
//! Benchmarks are resampled so that the test queries are either close to
//! the training queries (interpolation) or far from them (extrapolation).
//! Models stay outside the toolkit: they read the produced split manifests
//! and hand back TREC run files, which are scored here.
//!
//! * [`dataio`]: queries, qrels, runs and embeddings on disk.
//! * [`simindex`]: exact dense kNN, BM25 over query text, annotation candidate pools.
//! * [`resample`]: ReSTrain and ReSTTest splits, k-means, fold aggregation.
//! * [`metrics`]: MRR, NDCG and recall at a cutoff.
//! * [`analysis`]: label overlap, rank correlation, Cohen's kappa, PCA.
//! * [`cli`]: the `xtrap` command line.

pub mod analysis;
pub mod cli;
pub mod dataio;
pub mod error;
pub mod metrics;
pub mod resample;
pub mod simindex;
mod textfmt;

pub use error::{Error, Result};
