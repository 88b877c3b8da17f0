use std::collections::{BTreeMap, BTreeSet};

use rand::seq::index;
use rand::Rng;

use crate::corpus::{Grade, JudgmentSet};
use crate::scores::ScoreTable;

pub type Pools = BTreeMap<String, Vec<String>>;

/// Adds `h * n` images drawn without replacement from other queries' pools
/// to every query's pool of `n` images, graded Bad for that query.
///
/// When fewer distinct donor images exist than requested, all of them are
/// added; images are never duplicated within a pool.
pub fn inject_noise<R: Rng + ?Sized>(
    pools: &Pools,
    h: usize,
    judgments: &JudgmentSet,
    rng: &mut R,
) -> (Pools, JudgmentSet) {
    let mut out_pools = pools.clone();
    let mut out_judgments = judgments.clone();
    if h == 0 {
        return (out_pools, out_judgments);
    }
    let all: BTreeSet<&str> = pools.values().flatten().map(String::as_str).collect();
    for (q, pool) in pools {
        let own: BTreeSet<&str> = pool.iter().map(String::as_str).collect();
        let donors: Vec<&str> = all.iter().copied().filter(|i| !own.contains(i)).collect();
        let want = (h * own.len()).min(donors.len());
        let text = judgments.query_text(q).unwrap_or("").to_string();
        let mut picked = index::sample(rng, donors.len(), want).into_vec();
        picked.sort_unstable();
        let target = out_pools.get_mut(q).expect("same keys");
        for i in picked {
            target.push(donors[i].to_string());
            out_judgments.insert(q, &text, donors[i], Grade::Bad);
        }
    }
    (out_pools, out_judgments)
}

/// Uniform random scores over every pooled pair (the random baseline).
pub fn random_scores<R: Rng + ?Sized>(pools: &Pools, rng: &mut R) -> ScoreTable {
    let mut t = ScoreTable::new("random");
    for (q, pool) in pools {
        for image in pool {
            t.insert(q, image, rng.random::<f64>()).expect("finite");
        }
    }
    t
}
