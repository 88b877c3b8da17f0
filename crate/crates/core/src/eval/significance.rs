//! Randomization (permutation) significance test over paired per-query scores.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::run::PerQueryScores;
use crate::error::{Error, Result};
use crate::par;

/// How each trial picks the queries whose scores are swapped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SwapVariant {
    /// Exactly `floor(n/2)` queries chosen uniformly without replacement.
    #[default]
    Half,
    /// An independent fair coin per query.
    Flip,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TestMode {
    /// Exhaustive when the swap-set count is at most the limit, sampled otherwise.
    #[default]
    Auto,
    MonteCarlo,
    Exhaustive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomizationConfig {
    pub trials: usize,
    pub seed: u64,
    pub variant: SwapVariant,
    pub mode: TestMode,
    pub exhaustive_limit: u64,
}

impl Default for RandomizationConfig {
    fn default() -> Self {
        Self {
            trials: 10_000,
            seed: 0,
            variant: SwapVariant::Half,
            mode: TestMode::Auto,
            exhaustive_limit: 1_000_000,
        }
    }
}

// Hard ceiling on enumerated swap sets, whatever the mode.
const MAX_ENUMERATION: u64 = 1 << 32;

#[derive(Debug, Clone, PartialEq)]
pub struct SignificanceReport {
    /// `|mean(a) - mean(b)|`.
    pub diff: f64,
    /// Number of swap sets evaluated.
    pub trials: u64,
    pub p_value: f64,
    pub exhaustive: bool,
}

impl SignificanceReport {
    pub fn significant(&self, alpha: f64) -> bool {
        self.p_value < alpha
    }
}

/// `C(n, k)`, saturating at `u64::MAX`.
pub fn binomial(n: u64, k: u64) -> u64 {
    let k = k.min(n - k.min(n));
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

fn paired_differences(a: &PerQueryScores, b: &PerQueryScores) -> Result<Vec<f64>> {
    if a.len() != b.len() || a.iter().zip(b.iter()).any(|((qa, _), (qb, _))| qa != qb) {
        let only_a = a.iter().find(|(q, _)| b.get(q).is_none()).map(|(q, _)| q);
        let only_b = b.iter().find(|(q, _)| a.get(q).is_none()).map(|(q, _)| q);
        let detail = match (only_a, only_b) {
            (Some(q), _) => format!("query {q:?} is only in the first set"),
            (_, Some(q)) => format!("query {q:?} is only in the second set"),
            _ => "query sets differ".to_string(),
        };
        return Err(Error::QuerySetMismatch(detail));
    }
    if a.len() < 2 {
        return Err(Error::Degenerate(
            "randomization test needs at least two queries".into(),
        ));
    }
    Ok(a.iter()
        .zip(b.iter())
        .map(|((_, x), (_, y))| x - y)
        .collect())
}

// Counts `|sum - 2 * sum_S d| >= |sum| - tol` over all swap sets `S` of
// exactly `remaining` more elements drawn from `d[start..]`.
fn count_half(
    d: &[f64],
    start: usize,
    remaining: usize,
    swapped: f64,
    total: f64,
    threshold: f64,
) -> u64 {
    if remaining == 0 {
        return u64::from((total - 2.0 * swapped).abs() >= threshold);
    }
    let mut count = 0;
    for i in start..=d.len() - remaining {
        count += count_half(d, i + 1, remaining - 1, swapped + d[i], total, threshold);
    }
    count
}

fn count_flip(d: &[f64], start: usize, swapped: f64, total: f64, threshold: f64) -> u64 {
    if start == d.len() {
        return u64::from((total - 2.0 * swapped).abs() >= threshold);
    }
    count_flip(d, start + 1, swapped, total, threshold)
        + count_flip(d, start + 1, swapped + d[start], total, threshold)
}

fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

/// Two-sided randomization test: the fraction of swap sets whose absolute
/// mean difference is at least the observed one.
///
/// Sums are compared with a relative tolerance of `1e-12` so that swap sets
/// that are mathematically tied with the observation are counted as ties.
pub fn randomization_test(
    a: &PerQueryScores,
    b: &PerQueryScores,
    cfg: &RandomizationConfig,
) -> Result<SignificanceReport> {
    let d = paired_differences(a, b)?;
    let n = d.len();
    let total: f64 = d.iter().sum();
    let threshold = total.abs() - 1e-12 * (1.0 + total.abs());
    let diff = total.abs() / n as f64;

    let count_sets = match cfg.variant {
        SwapVariant::Half => binomial(n as u64, (n / 2) as u64),
        SwapVariant::Flip => {
            if n >= 64 {
                u64::MAX
            } else {
                1u64 << n
            }
        }
    };
    let exhaustive = match cfg.mode {
        TestMode::Exhaustive => true,
        TestMode::MonteCarlo => false,
        TestMode::Auto => count_sets <= cfg.exhaustive_limit,
    };

    if exhaustive {
        if count_sets > MAX_ENUMERATION {
            return Err(Error::Config(format!(
                "{count_sets} swap sets are too many to enumerate"
            )));
        }
        let hits = match cfg.variant {
            SwapVariant::Half => count_half(&d, 0, n / 2, 0.0, total, threshold),
            SwapVariant::Flip => count_flip(&d, 0, 0.0, total, threshold),
        };
        return Ok(SignificanceReport {
            diff,
            trials: count_sets,
            p_value: hits as f64 / count_sets as f64,
            exhaustive: true,
        });
    }

    if cfg.trials == 0 {
        return Err(Error::Config("trials must be positive".into()));
    }
    let hits: Vec<bool> = par::map_range(cfg.trials, |trial| {
        let mut rng = trial_rng(cfg.seed, trial);
        let swapped: f64 = match cfg.variant {
            SwapVariant::Half => {
                let mut picked = index::sample(&mut rng, n, n / 2).into_vec();
                picked.sort_unstable();
                picked.iter().map(|&i| d[i]).sum()
            }
            SwapVariant::Flip => d.iter().filter(|_| rng.random_bool(0.5)).sum(),
        };
        (total - 2.0 * swapped).abs() >= threshold
    });
    let count = hits.iter().filter(|&&h| h).count();
    Ok(SignificanceReport {
        diff,
        trials: cfg.trials as u64,
        p_value: count as f64 / cfg.trials as f64,
        exhaustive: false,
    })
}
