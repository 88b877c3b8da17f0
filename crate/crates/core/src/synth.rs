//! Planted-relevance synthetic corpora.
//!
//! Latent concepts are Gaussian clusters in feature space. Every concept has
//! a few visual words (embedded near a concept vector) and the vocabulary is
//! padded with non-visual words. Queries reference one to three concepts;
//! clicks and relevance grades both follow the planted concept membership.

use std::collections::BTreeSet;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::corpus::{
    ClickLog, EmbeddingTable, FeatureStore, Grade, JudgmentSet, LabelPrediction, LabelPredictions,
    Normalizer, Triad,
};
use crate::error::{Error, Result};

// Named sub-streams of the one seed.
const STREAM_GEOMETRY: u64 = 1;
const STREAM_QUERIES: u64 = 2;
const STREAM_CLICKS: u64 = 3;
const STREAM_POOLS: u64 = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub clusters: usize,
    pub test_queries: usize,
    /// Additional queries that only occur in the click log.
    pub log_queries: usize,
    pub images: usize,
    /// Share of images held out for judged test pools.
    pub test_fraction: f64,
    pub vocab_size: usize,
    pub words_per_concept: usize,
    pub feature_dim: usize,
    pub embed_dim: usize,
    pub pool_size: usize,
    /// Within-cluster feature standard deviation; centers are standard normal.
    pub spread: f64,
    /// Probability that a test query also occurs verbatim in the log.
    pub logged_test_share: f64,
    pub clicked_per_query: usize,
    pub top_labels: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            clusters: 10,
            test_queries: 200,
            log_queries: 800,
            images: 2000,
            test_fraction: 0.5,
            vocab_size: 100,
            words_per_concept: 5,
            feature_dim: 32,
            embed_dim: 32,
            pool_size: 30,
            spread: 0.8,
            logged_test_share: 0.7,
            clicked_per_query: 15,
            top_labels: 3,
            seed: 42,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.clusters < 2 {
            return bad("need at least two clusters");
        }
        if self.words_per_concept == 0 || self.vocab_size < self.clusters * self.words_per_concept {
            return bad("vocab_size must hold words_per_concept words for every cluster");
        }
        if self.feature_dim == 0 || self.embed_dim == 0 {
            return bad("dimensions must be positive");
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return bad("test_fraction must lie in (0, 1)");
        }
        let test_images = (self.images as f64 * self.test_fraction).round() as usize;
        if test_images < self.pool_size || self.images - test_images < self.clusters {
            return bad("too few images for the pool size and clusters");
        }
        if self.pool_size < 10
            || self.clicked_per_query < 4
            || self.test_queries == 0
            || self.top_labels == 0
        {
            return bad("pool_size >= 10, clicked_per_query >= 4, test_queries >= 1 and top_labels >= 1 are required");
        }
        if !(0.0..=1.0).contains(&self.logged_test_share) || !(self.spread > 0.0) {
            return bad("logged_test_share must lie in [0, 1] and spread must be positive");
        }
        Ok(())
    }
}

/// A query with its planted concepts; `concepts[0]` is the primary one.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedQuery {
    pub id: String,
    pub text: String,
    pub concepts: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub log: ClickLog,
    pub features: FeatureStore,
    pub embeddings: EmbeddingTable,
    pub judgments: JudgmentSet,
    pub labels: LabelPredictions,
    /// One visual concept word per line.
    pub concepts: Vec<String>,
    pub test_queries: Vec<PlantedQuery>,
    /// Cluster of every image, indexed like `image_id(i)`.
    pub image_clusters: Vec<usize>,
}

pub fn image_id(i: usize) -> String {
    format!("img{i:05}")
}

pub fn concept_word(g: usize, k: usize) -> String {
    format!("v{g}w{k}")
}

fn nonvisual_word(k: usize) -> String {
    format!("n{k}")
}

fn stream(seed: u64, s: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(s);
    rng
}

fn gaussian(rng: &mut ChaCha8Rng, dim: usize, scale: f64) -> Vec<f64> {
    (0..dim)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            z * scale
        })
        .collect()
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

struct Geometry {
    centers: Vec<Vec<f64>>,
    features: FeatureStore,
    embeddings: EmbeddingTable,
    clusters: Vec<usize>,
}

fn geometry(cfg: &SynthConfig) -> Result<Geometry> {
    let mut rng = stream(cfg.seed, STREAM_GEOMETRY);
    let centers: Vec<Vec<f64>> = (0..cfg.clusters)
        .map(|_| gaussian(&mut rng, cfg.feature_dim, 1.0))
        .collect();
    let mut features = FeatureStore::new(cfg.feature_dim)?;
    let clusters: Vec<usize> = (0..cfg.images).map(|i| i % cfg.clusters).collect();
    for (i, &g) in clusters.iter().enumerate() {
        let noise = gaussian(&mut rng, cfg.feature_dim, cfg.spread);
        let x: Vec<f64> = centers[g].iter().zip(&noise).map(|(c, n)| c + n).collect();
        features.insert(image_id(i), &x)?;
    }
    let mut embeddings = EmbeddingTable::new(cfg.embed_dim)?;
    for g in 0..cfg.clusters {
        let concept = gaussian(&mut rng, cfg.embed_dim, 1.0);
        for k in 0..cfg.words_per_concept {
            let noise = gaussian(&mut rng, cfg.embed_dim, 0.3);
            let v: Vec<f64> = concept.iter().zip(&noise).map(|(c, n)| c + n).collect();
            embeddings.insert(concept_word(g, k), &v)?;
        }
    }
    for k in 0..cfg.vocab_size - cfg.clusters * cfg.words_per_concept {
        embeddings.insert(nonvisual_word(k), &gaussian(&mut rng, cfg.embed_dim, 1.0))?;
    }
    Ok(Geometry {
        centers,
        features,
        embeddings,
        clusters,
    })
}

fn planted_query(cfg: &SynthConfig, rng: &mut ChaCha8Rng) -> (String, Vec<usize>) {
    let n_concepts = match rng.random_range(0..10) {
        0..=4 => 1,
        5..=7 => 2,
        _ => 3,
    };
    let mut all: Vec<usize> = (0..cfg.clusters).collect();
    all.shuffle(rng);
    let concepts: Vec<usize> = all.into_iter().take(n_concepts.min(cfg.clusters)).collect();
    let mut words: Vec<String> = concepts
        .iter()
        .map(|&g| concept_word(g, rng.random_range(0..cfg.words_per_concept)))
        .collect();
    let nonvisual = cfg.vocab_size - cfg.clusters * cfg.words_per_concept;
    if nonvisual > 0 && rng.random_bool(0.4) {
        words.push(nonvisual_word(rng.random_range(0..nonvisual)));
    }
    (words.join(" "), concepts)
}

/// Click triads of one logged query: mostly primary-concept images with
/// many clicks, some secondary-concept images and a little noise.
fn clicks_for(
    text: &str,
    concepts: &[usize],
    by_cluster: &[Vec<usize>],
    cfg: &SynthConfig,
    normalizer: &Normalizer,
    rng: &mut ChaCha8Rng,
) -> Vec<Triad> {
    let bag = normalizer
        .preprocess(text)
        .expect("synthetic words survive preprocessing");
    let n = cfg.clicked_per_query;
    let secondary = if concepts.len() > 1 { n / 5 } else { 0 };
    let noise = (n / 8).max(1);
    let primary = n - secondary - noise;
    let mut picked: BTreeSet<usize> = BTreeSet::new();
    let mut triads = Vec::new();
    let mut take = |cluster_pool: &[usize],
                    count: usize,
                    clicks: std::ops::RangeInclusive<u64>,
                    rng: &mut ChaCha8Rng| {
        for &img in cluster_pool.choose_multiple(rng, count) {
            if picked.insert(img) {
                triads.push(Triad::new(
                    bag.clone(),
                    text,
                    image_id(img),
                    rng.random_range(clicks.clone()),
                ));
            }
        }
    };
    take(&by_cluster[concepts[0]], primary, 5..=20, rng);
    for (s, &g) in concepts.iter().enumerate().skip(1) {
        let share =
            secondary / (concepts.len() - 1) + usize::from(s <= secondary % (concepts.len() - 1));
        take(&by_cluster[g], share, 2..=8, rng);
    }
    let everything: Vec<usize> = by_cluster.iter().flatten().copied().collect();
    take(&everything, noise, 1..=2, rng);
    triads
}

fn label_predictions(geo: &Geometry, cfg: &SynthConfig) -> Result<LabelPredictions> {
    let mut out = LabelPredictions::default();
    let tau = cfg.feature_dim as f64;
    for (id, x) in geo.features.iter() {
        let logits: Vec<f64> = geo.centers.iter().map(|c| -dist2(x, c) / tau).collect();
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = logits.iter().map(|l| (l - max).exp()).sum();
        let mut probs: Vec<(usize, f64)> = logits
            .iter()
            .map(|l| (l - max).exp() / z)
            .enumerate()
            .collect();
        probs.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        let labels = probs
            .into_iter()
            .take(cfg.top_labels)
            .map(|(g, p)| (concept_word(g, 0), p.max(1e-12)))
            .collect();
        out.insert(id, LabelPrediction::new(labels)?);
    }
    Ok(out)
}

/// Generates a corpus; identical configs give identical corpora.
pub fn generate(cfg: &SynthConfig) -> Result<SynthCorpus> {
    cfg.validate()?;
    let normalizer = Normalizer::default();
    let geo = geometry(cfg)?;

    let n_test_images = (cfg.images as f64 * cfg.test_fraction).round() as usize;
    let n_train = cfg.images - n_test_images;
    let mut train_by_cluster = vec![Vec::new(); cfg.clusters];
    let mut test_by_cluster = vec![Vec::new(); cfg.clusters];
    for (i, &g) in geo.clusters.iter().enumerate() {
        if i < n_train {
            train_by_cluster[g].push(i);
        } else {
            test_by_cluster[g].push(i);
        }
    }

    let mut qrng = stream(cfg.seed, STREAM_QUERIES);
    let mut seen = BTreeSet::new();
    let mut test_queries = Vec::with_capacity(cfg.test_queries);
    let mut attempts = 0;
    while test_queries.len() < cfg.test_queries {
        attempts += 1;
        if attempts > cfg.test_queries * 1000 {
            return Err(Error::Config(
                "vocabulary too small for that many distinct test queries".into(),
            ));
        }
        let (text, concepts) = planted_query(cfg, &mut qrng);
        let key = normalizer
            .preprocess(&text)
            .expect("synthetic words survive")
            .key();
        if seen.insert(key) {
            test_queries.push(PlantedQuery {
                id: format!("q{:04}", test_queries.len()),
                text,
                concepts,
            });
        }
    }
    let mut log_plan: Vec<(String, Vec<usize>)> = test_queries
        .iter()
        .filter(|_| qrng.random_bool(cfg.logged_test_share))
        .map(|q| (q.text.clone(), q.concepts.clone()))
        .collect();
    log_plan.extend((0..cfg.log_queries).map(|_| planted_query(cfg, &mut qrng)));

    let mut crng = stream(cfg.seed, STREAM_CLICKS);
    let triads: Vec<Triad> = log_plan
        .iter()
        .flat_map(|(text, concepts)| {
            clicks_for(
                text,
                concepts,
                &train_by_cluster,
                cfg,
                &normalizer,
                &mut crng,
            )
        })
        .collect();
    let log = ClickLog::from_triads(triads);

    let mut prng = stream(cfg.seed, STREAM_POOLS);
    let mut judgments = JudgmentSet::new();
    for q in &test_queries {
        let n_excellent = prng
            .random_range(4..=8)
            .min(test_by_cluster[q.concepts[0]].len());
        let mut pool: Vec<(usize, Grade)> = test_by_cluster[q.concepts[0]]
            .choose_multiple(&mut prng, n_excellent)
            .map(|&i| (i, Grade::Excellent))
            .collect();
        for &g in &q.concepts[1..] {
            let n_good = prng.random_range(1..=3);
            pool.extend(
                test_by_cluster[g]
                    .choose_multiple(&mut prng, n_good)
                    .map(|&i| (i, Grade::Good)),
            );
        }
        let others: Vec<usize> = (0..cfg.clusters)
            .filter(|g| !q.concepts.contains(g))
            .flat_map(|g| test_by_cluster[g].iter().copied())
            .collect();
        let n_bad = cfg.pool_size.saturating_sub(pool.len());
        pool.extend(
            others
                .choose_multiple(&mut prng, n_bad)
                .map(|&i| (i, Grade::Bad)),
        );
        for (i, grade) in pool {
            judgments.insert(&q.id, &q.text, &image_id(i), grade);
        }
    }

    let labels = label_predictions(&geo, cfg)?;
    let concepts = (0..cfg.clusters)
        .flat_map(|g| (0..cfg.words_per_concept).map(move |k| concept_word(g, k)))
        .collect();
    Ok(SynthCorpus {
        log,
        features: geo.features,
        embeddings: geo.embeddings,
        judgments,
        labels,
        concepts,
        test_queries,
        image_clusters: geo.clusters,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SynthConfig {
        SynthConfig {
            test_queries: 20,
            log_queries: 40,
            images: 200,
            ..Default::default()
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let a = generate(&small()).unwrap();
        let b = generate(&small()).unwrap();
        assert_eq!(a.features, b.features);
        assert_eq!(a.judgments, b.judgments);
        assert_eq!(a.log.triads(), b.log.triads());
        let c = generate(&SynthConfig { seed: 7, ..small() }).unwrap();
        assert_ne!(a.features, c.features);
    }

    #[test]
    fn grades_follow_planted_concepts() {
        let cfg = small();
        let corpus = generate(&cfg).unwrap();
        assert_eq!(corpus.judgments.num_queries(), 20);
        for q in &corpus.test_queries {
            let pool: Vec<(&str, Grade)> = corpus.judgments.images(&q.id).collect();
            assert_eq!(pool.len(), cfg.pool_size);
            for (img, grade) in pool {
                let i: usize = img[3..].parse().unwrap();
                assert!(i >= cfg.images / 2, "pools use held-out images");
                let g = corpus.image_clusters[i];
                let expected = if g == q.concepts[0] {
                    Grade::Excellent
                } else if q.concepts.contains(&g) {
                    Grade::Good
                } else {
                    Grade::Bad
                };
                assert_eq!(grade, expected);
            }
        }
    }

    #[test]
    fn log_uses_training_images_only() {
        let cfg = small();
        let corpus = generate(&cfg).unwrap();
        for id in corpus.log.image_ids() {
            let i: usize = id[3..].parse().unwrap();
            assert!(i < cfg.images / 2);
        }
        assert!(corpus.log.queries().len() > 40);
    }

    #[test]
    fn labels_resolve_in_the_embedding_table() {
        let corpus = generate(&small()).unwrap();
        assert_eq!(corpus.labels.len(), 200);
        for (_, pred) in corpus.labels.iter() {
            assert_eq!(pred.labels.len(), 3);
            assert!(pred
                .labels
                .iter()
                .all(|(l, _)| corpus.embeddings.contains(l)));
        }
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(generate(&SynthConfig {
            clusters: 1,
            ..small()
        })
        .is_err());
        assert!(generate(&SynthConfig {
            vocab_size: 10,
            ..small()
        })
        .is_err());
        assert!(generate(&SynthConfig {
            images: 20,
            ..small()
        })
        .is_err());
    }
}
