//! Triplet sampling and mini-batch SGD on the marginal ranking loss.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::devise::{devise_embed_query, DeviseModel};
use super::matrix::{dot, Matrix};
use super::psi::PsiModel;
use super::vocab::{Vocabulary, DEFAULT_VOCAB_CAP};
use crate::corpus::{ClickLog, EmbeddingTable, FeatureStore};
use crate::error::{Error, Result};

// Independent random streams derived from the one training seed.
const STREAM_INIT: u64 = 1;
const STREAM_SAMPLE: u64 = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Common space dimensionality (PSI only; DeViSE uses the table's).
    pub common_dim: usize,
    pub batch: usize,
    pub lr0: f64,
    /// Per-epoch learning-rate decay factor: `lr_e = lr0 * decay^e`.
    pub decay: f64,
    pub epochs: usize,
    pub margin: f64,
    pub seed: u64,
    pub vocab_cap: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            common_dim: 200,
            batch: 100,
            lr0: 0.01,
            decay: 0.95,
            epochs: 20,
            margin: 1.0,
            seed: 0,
            vocab_cap: DEFAULT_VOCAB_CAP,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.to_string()));
        if self.common_dim == 0 {
            return bad("common_dim must be positive");
        }
        if self.batch == 0 {
            return bad("batch must be positive");
        }
        if !(self.lr0 > 0.0 && self.lr0.is_finite()) {
            return bad("lr0 must be positive");
        }
        if !(self.decay > 0.0 && self.decay <= 1.0) {
            return bad("decay must lie in (0, 1]");
        }
        if !(self.margin > 0.0 && self.margin.is_finite()) {
            return bad("margin must be positive");
        }
        if self.vocab_cap == 0 {
            return bad("vocab_cap must be positive");
        }
        Ok(())
    }

    pub fn learning_rate(&self, epoch: usize) -> f64 {
        self.lr0 * self.decay.powi(epoch as i32)
    }
}

/// `max(0, margin - f_pos + f_neg)`.
pub fn hinge_loss_with_margin(f_pos: f64, f_neg: f64, margin: f64) -> f64 {
    (margin - f_pos + f_neg).max(0.0)
}

/// `max(0, 1 - f_pos + f_neg)`.
pub fn hinge_loss(f_pos: f64, f_neg: f64) -> f64 {
    hinge_loss_with_margin(f_pos, f_neg, 1.0)
}

/// A logged query with one clicked and one unclicked image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Triplet {
    /// Index into [`ClickLog::queries`].
    pub query: usize,
    pub positive: String,
    pub negative: String,
}

/// Draws one negative per clicked (query, image) pair, uniformly from the
/// images in the universe that were not clicked for that query.
#[derive(Debug, Clone)]
pub struct TripletSampler {
    images: Vec<String>,
    positives: Vec<(usize, usize)>,
    clicked: Vec<HashSet<usize>>,
}

impl TripletSampler {
    /// `universe` lists candidate images; `keep_query` filters usable queries.
    pub fn new<'a>(
        log: &ClickLog,
        universe: impl IntoIterator<Item = &'a str>,
        mut keep_query: impl FnMut(usize) -> bool,
    ) -> Self {
        let mut images: Vec<String> = universe.into_iter().map(str::to_string).collect();
        images.sort();
        images.dedup();
        let mut positives = Vec::new();
        let mut clicked = Vec::with_capacity(log.queries().len());
        for (qi, q) in log.queries().iter().enumerate() {
            let set: HashSet<usize> = q
                .triads
                .iter()
                .filter_map(|&t| images.binary_search(&log.triad(t).image_id).ok())
                .collect();
            if keep_query(qi) && set.len() < images.len() {
                let mut pos: Vec<usize> = set.iter().copied().collect();
                pos.sort_unstable();
                positives.extend(pos.into_iter().map(|i| (qi, i)));
            }
            clicked.push(set);
        }
        Self {
            images,
            positives,
            clicked,
        }
    }

    /// Number of triplets per epoch.
    pub fn len(&self) -> usize {
        self.positives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positives.is_empty()
    }

    /// One triplet per positive pair, in pair order.
    pub fn epoch<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<Triplet> {
        self.positives
            .iter()
            .map(|&(q, pos)| {
                let clicked = &self.clicked[q];
                let neg = loop {
                    let j = rng.random_range(0..self.images.len());
                    if !clicked.contains(&j) {
                        break j;
                    }
                };
                Triplet {
                    query: q,
                    positive: self.images[pos].clone(),
                    negative: self.images[neg].clone(),
                }
            })
            .collect()
    }
}

/// One epoch of triplets over every image in the log.
pub fn sample_triplets<R: Rng + ?Sized>(log: &ClickLog, rng: &mut R) -> Vec<Triplet> {
    TripletSampler::new(log, log.image_ids(), |_| true).epoch(rng)
}

/// Hinge loss of one PSI triplet.
pub fn psi_triplet_loss(
    model: &PsiModel,
    x_pos: &[f64],
    x_neg: &[f64],
    query: &[usize],
    margin: f64,
) -> f64 {
    let t = model.embed_encoded(query);
    let f_pos = dot(&model.image_proj.mul_vec(x_pos), &t);
    let f_neg = dot(&model.image_proj.mul_vec(x_neg), &t);
    hinge_loss_with_margin(f_pos, f_neg, margin)
}

/// Adds the PSI triplet gradient, scaled by `scale`, into `grad_image` and
/// `grad_text`. Returns the triplet's loss; nothing is added when it is 0.
///
/// With `t = W_t q` and `d = x_neg - x_pos`, the loss is
/// `margin + t^T W_i d`, so `dL/dW_i = t d^T` and `dL/dW_t = (W_i d) q^T`.
pub fn accumulate_psi_gradient(
    model: &PsiModel,
    x_pos: &[f64],
    x_neg: &[f64],
    query: &[usize],
    margin: f64,
    scale: f64,
    grad_image: &mut Matrix,
    grad_text: &mut Matrix,
) -> f64 {
    let t = model.embed_encoded(query);
    let diff: Vec<f64> = x_neg.iter().zip(x_pos).map(|(n, p)| n - p).collect();
    let projected = model.image_proj.mul_vec(&diff);
    let loss = (margin + dot(&t, &projected)).max(0.0);
    if loss > 0.0 {
        grad_image.add_outer(&t, &diff, scale);
        for &j in query {
            grad_text.add_to_column(j, &projected, scale);
        }
    }
    loss
}

/// Hinge loss of one DeViSE triplet with a pooled query vector.
pub fn devise_triplet_loss(
    image_proj: &Matrix,
    x_pos: &[f64],
    x_neg: &[f64],
    query: &[f64],
    margin: f64,
) -> f64 {
    let f_pos = dot(&image_proj.mul_vec(x_pos), query);
    let f_neg = dot(&image_proj.mul_vec(x_neg), query);
    hinge_loss_with_margin(f_pos, f_neg, margin)
}

/// DeViSE counterpart of [`accumulate_psi_gradient`]: `dL/dW_i = phi(q) d^T`.
pub fn accumulate_devise_gradient(
    image_proj: &Matrix,
    x_pos: &[f64],
    x_neg: &[f64],
    query: &[f64],
    margin: f64,
    scale: f64,
    grad_image: &mut Matrix,
) -> f64 {
    let diff: Vec<f64> = x_neg.iter().zip(x_pos).map(|(n, p)| n - p).collect();
    let loss = (margin + dot(query, &image_proj.mul_vec(&diff))).max(0.0);
    if loss > 0.0 {
        grad_image.add_outer(query, &diff, scale);
    }
    loss
}

/// A trained model with its per-epoch mean training loss.
#[derive(Debug, Clone)]
pub struct Trained<M> {
    pub model: M,
    pub loss_trace: Vec<f64>,
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn check_features(log: &ClickLog, store: &FeatureStore) -> Result<()> {
    if log.is_empty() {
        return Err(Error::Config("click log is empty".into()));
    }
    if store.is_empty() {
        return Err(Error::Config("feature store is empty".into()));
    }
    Ok(())
}

/// Per-model half of the SGD loop.
trait TripletLearner {
    /// Evaluates one triplet, adds its gradient times `scale` to the batch
    /// accumulator and returns its loss.
    fn step(&mut self, triplet: &Triplet, scale: f64) -> f64;

    /// Commits the accumulated batch update and clears the accumulator.
    fn apply(&mut self);
}

fn sgd_loop(
    cfg: &TrainConfig,
    sampler: &TripletSampler,
    learner: &mut impl TripletLearner,
) -> Vec<f64> {
    let mut rng = stream_rng(cfg.seed, STREAM_SAMPLE);
    let mut trace = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let lr = cfg.learning_rate(epoch);
        let mut triplets = sampler.epoch(&mut rng);
        triplets.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in triplets.chunks(cfg.batch) {
            let scale = -lr / batch.len() as f64;
            for t in batch {
                total += learner.step(t, scale);
            }
            learner.apply();
        }
        trace.push(if triplets.is_empty() {
            0.0
        } else {
            total / triplets.len() as f64
        });
    }
    trace
}

struct PsiLearner<'a> {
    model: PsiModel,
    grad_image: Matrix,
    grad_text: Matrix,
    encoded: Vec<Vec<usize>>,
    store: &'a FeatureStore,
    margin: f64,
}

impl TripletLearner for PsiLearner<'_> {
    fn step(&mut self, t: &Triplet, scale: f64) -> f64 {
        accumulate_psi_gradient(
            &self.model,
            self.store.get(&t.positive).expect("universe has features"),
            self.store.get(&t.negative).expect("universe has features"),
            &self.encoded[t.query],
            self.margin,
            scale,
            &mut self.grad_image,
            &mut self.grad_text,
        )
    }

    fn apply(&mut self) {
        self.model.image_proj.axpy(1.0, &self.grad_image);
        self.model.text_proj.axpy(1.0, &self.grad_text);
        self.grad_image.fill(0.0);
        self.grad_text.fill(0.0);
    }
}

struct DeviseLearner<'a> {
    image_proj: Matrix,
    grad: Matrix,
    pooled: Vec<Option<Vec<f64>>>,
    store: &'a FeatureStore,
    margin: f64,
}

impl TripletLearner for DeviseLearner<'_> {
    fn step(&mut self, t: &Triplet, scale: f64) -> f64 {
        accumulate_devise_gradient(
            &self.image_proj,
            self.store.get(&t.positive).expect("universe has features"),
            self.store.get(&t.negative).expect("universe has features"),
            self.pooled[t.query]
                .as_deref()
                .expect("sampler keeps pooled queries"),
            self.margin,
            scale,
            &mut self.grad,
        )
    }

    fn apply(&mut self) {
        self.image_proj.axpy(1.0, &self.grad);
        self.grad.fill(0.0);
    }
}

/// Initial PSI model for `cfg` (what zero epochs of training returns).
pub fn init_psi(log: &ClickLog, store: &FeatureStore, cfg: &TrainConfig) -> Result<PsiModel> {
    cfg.validate()?;
    check_features(log, store)?;
    let vocab = Vocabulary::from_log(log, cfg.vocab_cap);
    let mut rng = stream_rng(cfg.seed, STREAM_INIT);
    let image_proj = Matrix::uniform_init(cfg.common_dim, store.dim(), &mut rng);
    let text_proj = Matrix::uniform_init(cfg.common_dim, vocab.len(), &mut rng);
    PsiModel::new(image_proj, text_proj, vocab)
}

pub fn train_psi(
    log: &ClickLog,
    store: &FeatureStore,
    cfg: &TrainConfig,
) -> Result<Trained<PsiModel>> {
    let model = init_psi(log, store, cfg)?;
    let encoded: Vec<Vec<usize>> = log
        .queries()
        .iter()
        .map(|q| model.vocab.encode(&q.bag))
        .collect();
    let universe = log.image_ids().filter(|id| store.contains(id));
    let sampler = TripletSampler::new(log, universe, |q| !encoded[q].is_empty());
    let mut learner = PsiLearner {
        grad_image: Matrix::zeros(model.image_proj.rows(), model.image_proj.cols()),
        grad_text: Matrix::zeros(model.text_proj.rows(), model.text_proj.cols()),
        model,
        encoded,
        store,
        margin: cfg.margin,
    };
    let loss_trace = sgd_loop(cfg, &sampler, &mut learner);
    Ok(Trained {
        model: learner.model,
        loss_trace,
    })
}

/// Initial DeViSE model (what zero epochs of training returns).
pub fn init_devise(
    store: &FeatureStore,
    table: &EmbeddingTable,
    cfg: &TrainConfig,
) -> Result<DeviseModel> {
    cfg.validate()?;
    if store.is_empty() {
        return Err(Error::Config("feature store is empty".into()));
    }
    let mut rng = stream_rng(cfg.seed, STREAM_INIT);
    let image_proj = Matrix::uniform_init(table.dim(), store.dim(), &mut rng);
    DeviseModel::new(image_proj, table.clone())
}

pub fn train_devise(
    log: &ClickLog,
    store: &FeatureStore,
    table: &EmbeddingTable,
    cfg: &TrainConfig,
) -> Result<Trained<DeviseModel>> {
    check_features(log, store)?;
    let mut model = init_devise(store, table, cfg)?;
    let pooled: Vec<Option<Vec<f64>>> = log
        .queries()
        .iter()
        .map(|q| devise_embed_query(&q.bag, table).ok())
        .collect();
    let universe = log.image_ids().filter(|id| store.contains(id));
    let sampler = TripletSampler::new(log, universe, |q| pooled[q].is_some());

    let mut learner = DeviseLearner {
        grad: Matrix::zeros(model.image_proj.rows(), model.image_proj.cols()),
        image_proj: model.image_proj.clone(),
        pooled,
        store,
        margin: cfg.margin,
    };
    let loss_trace = sgd_loop(cfg, &sampler, &mut learner);
    model.image_proj = learner.image_proj;
    Ok(Trained { model, loss_trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Normalizer, Triad};

    fn log(rows: &[(&str, &str, u64)]) -> ClickLog {
        let n = Normalizer::default();
        ClickLog::from_triads(rows.iter().map(|(q, i, c)| Triad {
            query: n.preprocess(q).unwrap(),
            raw_query: q.to_string(),
            image_id: i.to_string(),
            click: *c,
        }))
    }

    #[test]
    fn hinge_examples() {
        assert_eq!(hinge_loss(2.0, 0.5), 0.0);
        assert!((hinge_loss(0.5, 0.2) - 0.7).abs() < 1e-15);
        assert_eq!(hinge_loss(0.3, 0.3), 1.0);
    }

    #[test]
    fn single_image_log_has_no_triplets() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(sample_triplets(&log(&[("dog", "img1", 3)]), &mut rng).is_empty());
    }

    #[test]
    fn disjoint_queries_force_the_other_negative() {
        let log = log(&[("dog", "img1", 3), ("cat", "img2", 1)]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut ts = sample_triplets(&log, &mut rng);
        ts.sort_by(|a, b| a.positive.cmp(&b.positive));
        assert_eq!(ts.len(), 2);
        assert_eq!(
            (ts[0].positive.as_str(), ts[0].negative.as_str()),
            ("img1", "img2")
        );
        assert_eq!(
            (ts[1].positive.as_str(), ts[1].negative.as_str()),
            ("img2", "img1")
        );
    }

    #[test]
    fn negatives_are_never_clicked() {
        let mut rows = Vec::new();
        for q in 0..8 {
            for i in 0..20 {
                if (q * 7 + i * 3) % 5 < 2 {
                    rows.push((format!("word{q}"), format!("img{i}"), 1 + i as u64));
                }
            }
        }
        let rows: Vec<(&str, &str, u64)> = rows
            .iter()
            .map(|(q, i, c)| (q.as_str(), i.as_str(), *c))
            .collect();
        let log = log(&rows);
        let sampler = TripletSampler::new(&log, log.image_ids(), |_| true);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut violations = 0;
        let mut drawn = 0;
        while drawn < 10_000 {
            for t in sampler.epoch(&mut rng) {
                let clicked: HashSet<&str> = log.queries()[t.query]
                    .triads
                    .iter()
                    .map(|&i| log.triad(i).image_id.as_str())
                    .collect();
                violations += clicked.contains(t.negative.as_str()) as usize;
                assert!(clicked.contains(t.positive.as_str()));
                drawn += 1;
            }
        }
        assert_eq!(violations, 0);
    }

    #[test]
    fn sampling_is_seed_deterministic() {
        let log = log(&[
            ("dog", "img1", 3),
            ("cat", "img2", 1),
            ("cow", "img3", 1),
            ("dog", "img4", 2),
        ]);
        let a = sample_triplets(&log, &mut ChaCha8Rng::seed_from_u64(4));
        let b = sample_triplets(&log, &mut ChaCha8Rng::seed_from_u64(4));
        assert_eq!(a, b);
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig {
            batch: 0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(TrainConfig {
            lr0: 0.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(TrainConfig {
            decay: 1.5,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(TrainConfig {
            decay: 0.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(TrainConfig {
            common_dim: 0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(TrainConfig::default().validate().is_ok());
        let cfg = TrainConfig {
            lr0: 0.5,
            decay: 0.5,
            ..Default::default()
        };
        assert_eq!(cfg.learning_rate(0), 0.5);
        assert_eq!(cfg.learning_rate(2), 0.125);
    }

    fn toy() -> (ClickLog, FeatureStore) {
        let log = log(&[
            ("red car", "a", 3),
            ("blue car", "b", 2),
            ("red ball", "c", 5),
            ("dog", "d", 1),
        ]);
        let mut store = FeatureStore::new(3).unwrap();
        store.insert("a", &[1.0, 0.0, 0.5]).unwrap();
        store.insert("b", &[0.0, 1.0, 0.5]).unwrap();
        store.insert("c", &[1.0, 1.0, 0.0]).unwrap();
        store.insert("d", &[-1.0, 0.0, 0.0]).unwrap();
        (log, store)
    }

    #[test]
    fn zero_epochs_returns_the_initialization() {
        let (log, store) = toy();
        let cfg = TrainConfig {
            epochs: 0,
            common_dim: 4,
            seed: 7,
            ..Default::default()
        };
        let trained = train_psi(&log, &store, &cfg).unwrap();
        assert_eq!(trained.model, init_psi(&log, &store, &cfg).unwrap());
        assert!(trained.loss_trace.is_empty());
    }

    #[test]
    fn training_is_deterministic() {
        let (log, store) = toy();
        let cfg = TrainConfig {
            epochs: 5,
            common_dim: 4,
            batch: 2,
            lr0: 0.1,
            seed: 3,
            ..Default::default()
        };
        let a = train_psi(&log, &store, &cfg).unwrap();
        let b = train_psi(&log, &store, &cfg).unwrap();
        assert_eq!(a.model, b.model);
        assert_eq!(a.loss_trace, b.loss_trace);
        let other = train_psi(&log, &store, &TrainConfig { seed: 4, ..cfg }).unwrap();
        assert_ne!(a.model, other.model);
    }

    #[test]
    fn invalid_config_is_rejected() {
        let (log, store) = toy();
        let err = train_psi(
            &log,
            &store,
            &TrainConfig {
                batch: 0,
                ..Default::default()
            },
        )
        .unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn devise_trains_only_the_image_projection() {
        let (log, store) = toy();
        let mut table = EmbeddingTable::new(2).unwrap();
        for (w, v) in [
            ("red", [1.0, 0.0]),
            ("car", [0.0, 1.0]),
            ("blue", [-1.0, 0.0]),
            ("ball", [0.5, 0.5]),
        ] {
            table.insert(w, &v).unwrap();
        }
        let cfg = TrainConfig {
            epochs: 30,
            batch: 2,
            lr0: 0.1,
            ..Default::default()
        };
        let trained = train_devise(&log, &store, &table, &cfg).unwrap();
        assert_eq!(trained.model.table, table);
        assert_eq!(trained.model.image_proj.rows(), 2);
        assert_eq!(trained.loss_trace.len(), 30);

        // Total loss over every valid triplet must drop.
        let total = |w: &Matrix| {
            let mut sum = 0.0;
            for q in log.queries() {
                let Ok(phi) = devise_embed_query(&q.bag, &table) else {
                    continue;
                };
                let clicked: HashSet<&str> = q
                    .triads
                    .iter()
                    .map(|&i| log.triad(i).image_id.as_str())
                    .collect();
                for &pos in &clicked {
                    for neg in log.image_ids().filter(|n| !clicked.contains(n)) {
                        sum += devise_triplet_loss(
                            w,
                            store.get(pos).unwrap(),
                            store.get(neg).unwrap(),
                            &phi,
                            1.0,
                        );
                    }
                }
            }
            sum
        };
        let before = total(&init_devise(&store, &table, &cfg).unwrap().image_proj);
        let after = total(&trained.model.image_proj);
        assert!(after < before, "{after} >= {before}");
    }

    fn rel_err(a: f64, n: f64) -> f64 {
        (a - n).abs() / a.abs().max(n.abs()).max(1e-6)
    }

    #[test]
    fn psi_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let model = PsiModel::new(
            Matrix::uniform_init(3, 4, &mut rng),
            Matrix::uniform_init(3, 5, &mut rng),
            Vocabulary::new(["a", "b", "c", "d", "e"]),
        )
        .unwrap();
        let (xp, xn) = ([0.3, -0.2, 0.8, 0.1], [-0.5, 0.4, 0.2, 0.9]);
        let query = [0, 2, 3];
        let margin = 5.0;
        let mut gi = Matrix::zeros(3, 4);
        let mut gt = Matrix::zeros(3, 5);
        let loss = accumulate_psi_gradient(&model, &xp, &xn, &query, margin, 1.0, &mut gi, &mut gt);
        assert!(loss > 0.0);
        let h = 1e-5;
        for r in 0..3 {
            for c in 0..4 {
                let (mut up, mut down) = (model.clone(), model.clone());
                up.image_proj[(r, c)] += h;
                down.image_proj[(r, c)] -= h;
                let n = (psi_triplet_loss(&up, &xp, &xn, &query, margin)
                    - psi_triplet_loss(&down, &xp, &xn, &query, margin))
                    / (2.0 * h);
                assert!(
                    rel_err(gi[(r, c)], n) < 1e-6,
                    "W_i[{r},{c}]: {} vs {n}",
                    gi[(r, c)]
                );
            }
            for c in 0..5 {
                let (mut up, mut down) = (model.clone(), model.clone());
                up.text_proj[(r, c)] += h;
                down.text_proj[(r, c)] -= h;
                let n = (psi_triplet_loss(&up, &xp, &xn, &query, margin)
                    - psi_triplet_loss(&down, &xp, &xn, &query, margin))
                    / (2.0 * h);
                assert!(
                    rel_err(gt[(r, c)], n) < 1e-6,
                    "W_t[{r},{c}]: {} vs {n}",
                    gt[(r, c)]
                );
            }
        }
    }

    #[test]
    fn devise_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let w = Matrix::uniform_init(2, 3, &mut rng);
        let (xp, xn, phi) = ([0.1, 0.7, -0.3], [0.6, -0.2, 0.4], [0.9, -0.4]);
        let mut g = Matrix::zeros(2, 3);
        assert!(accumulate_devise_gradient(&w, &xp, &xn, &phi, 5.0, 1.0, &mut g) > 0.0);
        let h = 1e-5;
        for r in 0..2 {
            for c in 0..3 {
                let (mut up, mut down) = (w.clone(), w.clone());
                up[(r, c)] += h;
                down[(r, c)] -= h;
                let n = (devise_triplet_loss(&up, &xp, &xn, &phi, 5.0)
                    - devise_triplet_loss(&down, &xp, &xn, &phi, 5.0))
                    / (2.0 * h);
                assert!(rel_err(g[(r, c)], n) < 1e-6);
            }
        }
    }

    #[test]
    fn satisfied_triplets_add_no_gradient() {
        let w = Matrix::identity(2);
        let mut g = Matrix::zeros(2, 2);
        let loss =
            accumulate_devise_gradient(&w, &[5.0, 0.0], &[0.0, 0.0], &[1.0, 0.0], 1.0, 1.0, &mut g);
        assert_eq!(loss, 0.0);
        assert!(g.as_slice().iter().all(|&v| v == 0.0));
    }
}
