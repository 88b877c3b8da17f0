//! Ranking metrics, significance testing, rank correlation and the h-fold
//! noise protocol.

mod metrics;
mod noise;
mod run;
mod significance;
mod stats;

pub use metrics::{
    average_precision, discount, gain, grades_from_levels, ideal_normalizer, ndcg, ndcg25,
    ndcg_normalizer, DEFAULT_CUTOFF, NDCG25_NORMALIZER,
};
pub use noise::{inject_noise, random_scores, Pools};
pub use run::{
    mean_average_precision, mean_ndcg, rank_images, rank_table, PerQueryScores, RankedRun,
};
pub use significance::{
    binomial, randomization_test, RandomizationConfig, SignificanceReport, SwapVariant, TestMode,
};
pub use stats::{average_ranks, pearson, spearman};
