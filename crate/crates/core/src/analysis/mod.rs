//! Audits and meta-analysis: train/test relevance overlap, rank
//! correlation, annotator agreement and PCA projections for plotting.

mod agreement;
mod correlation;
mod overlap;
mod pca;

pub use agreement::{cohens_kappa, median_label};
pub use correlation::{average_ranks, kendall_tau_b, spearman, PairedScores};
pub use overlap::{parse_thresholds, relevant_overlap, OverlapReport, OverlapRow, Threshold, ThresholdMode};
pub use pca::{pca_project, PcaResult};
