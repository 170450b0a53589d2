//! Cross-validation protocol and the statistics reported over it.

mod folds;
mod metrics;
mod ranking;
mod runtime;
mod wilcoxon;

pub use folds::{read_folds, stratified_folds, write_folds, FoldAssignment};
pub use metrics::{
    majority_baseline, misclassification, read_predictions, read_results, write_predictions, write_results,
    FoldRate, Misclassification, PredictionRow, PredictionSet, ResultRow, SUMMARY_DATASET,
};
pub use ranking::{competition_ranks, rank_methods, DatasetRates, RankPolicy, RankSummary, RankTable};
pub use runtime::{runtime_summary, RuntimeSummary};
pub use wilcoxon::{bonferroni, pairwise_tests, wilcoxon_one_sided, StatResult, WilcoxonTest};
