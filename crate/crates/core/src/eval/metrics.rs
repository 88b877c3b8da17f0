use crate::corpus::Grade;
use crate::error::Result;

/// Normalization factor of NDCG at rank 25 with gain `2^rel - 1`.
pub const NDCG25_NORMALIZER: f64 = 0.01757;
pub const DEFAULT_CUTOFF: usize = 25;

/// `1 / log2(rank + 1)` for a 1-based rank.
pub fn discount(rank: usize) -> f64 {
    1.0 / ((rank + 1) as f64).log2()
}

/// `2^rel - 1`: 7 for Excellent, 3 for Good, 0 for Bad.
pub fn gain(grade: Grade) -> f64 {
    ((1u32 << grade.level()) - 1) as f64
}

/// `1 / (7 * sum_{i<=cutoff} 1/log2(i+1))`, the factor that maps an
/// all-Excellent top list to 1.
pub fn ideal_normalizer(cutoff: usize) -> f64 {
    let total: f64 = (1..=cutoff).map(discount).sum();
    if total == 0.0 {
        0.0
    } else {
        1.0 / (gain(Grade::Excellent) * total)
    }
}

/// The fixed constant at rank 25, the computed one elsewhere.
pub fn ndcg_normalizer(cutoff: usize) -> f64 {
    if cutoff == DEFAULT_CUTOFF {
        NDCG25_NORMALIZER
    } else {
        ideal_normalizer(cutoff)
    }
}

/// NDCG over the first `cutoff` grades of a ranked list.
pub fn ndcg(grades_in_rank_order: &[Grade], cutoff: usize) -> f64 {
    let dcg: f64 = grades_in_rank_order
        .iter()
        .take(cutoff)
        .enumerate()
        .map(|(i, &g)| gain(g) * discount(i + 1))
        .sum();
    ndcg_normalizer(cutoff) * dcg
}

pub fn ndcg25(grades_in_rank_order: &[Grade]) -> f64 {
    ndcg(grades_in_rank_order, DEFAULT_CUTOFF)
}

/// Converts raw integer levels, rejecting anything but 0, 2 and 3.
pub fn grades_from_levels(levels: &[i64]) -> Result<Vec<Grade>> {
    levels.iter().map(|&l| Grade::try_from(l)).collect()
}

/// `(1/R) * sum of precision@k over relevant ranks k`; 0 without positives.
pub fn average_precision(relevant_in_rank_order: &[bool]) -> f64 {
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (i, &rel) in relevant_in_rank_order.iter().enumerate() {
        if rel {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    if hits == 0 {
        0.0
    } else {
        sum / hits as f64
    }
}
