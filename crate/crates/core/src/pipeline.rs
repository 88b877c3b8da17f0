//! Scores every judged (query, image) pair with one model.
//!
//! Pairs a model cannot score (a query with no in-vocabulary word, an image
//! with no resolvable label) get score 0 and are counted in the report. A
//! judged image without visual features is a data error.

use std::collections::BTreeMap;

use crate::corpus::{
    BagOfWords, ClickLog, EmbeddingTable, FeatureStore, JudgmentSet, LabelPredictions, Normalizer,
};
use crate::embedding::{conse_embed_image, conse_score, devise_embed_query, DeviseModel, PsiModel};
use crate::error::{Error, Result};
use crate::neighbor::{self, build_profile, image2text_from_neighbors, NeighborModelConfig};
use crate::par;
use crate::scores::ScoreTable;
use crate::similarity::{knn_images, NeighborList};

/// The judged pairs with their preprocessed queries.
#[derive(Debug, Clone)]
pub struct TestSet {
    /// `(query_id, bag)`; `None` when the text is empty after preprocessing.
    pub queries: Vec<(String, Option<BagOfWords>)>,
    /// `(query index, image_id)` in sorted order.
    pub pairs: Vec<(usize, String)>,
}

impl TestSet {
    pub fn new(judgments: &JudgmentSet, normalizer: &Normalizer) -> Self {
        Self::from_pools(judgments, &judgments.pools(), normalizer)
    }

    /// Uses `pools` (e.g. after noise injection) with texts from `judgments`.
    pub fn from_pools(
        judgments: &JudgmentSet,
        pools: &BTreeMap<String, Vec<String>>,
        normalizer: &Normalizer,
    ) -> Self {
        let mut queries = Vec::new();
        let mut pairs = Vec::new();
        for (qi, (q, pool)) in pools.iter().enumerate() {
            let text = judgments.query_text(q).unwrap_or("");
            queries.push((q.clone(), normalizer.preprocess(text).ok()));
            pairs.extend(pool.iter().map(|i| (qi, i.clone())));
        }
        Self { queries, pairs }
    }

    /// Distinct image ids across all pairs, sorted.
    pub fn images(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.pairs.iter().map(|(_, i)| i.clone()).collect();
        ids.sort();
        ids.dedup();
        ids
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ScoringReport {
    pub pairs: usize,
    pub unscored: usize,
}

fn features<'a>(store: &'a FeatureStore, id: &str) -> Result<&'a [f64]> {
    store
        .get(id)
        .ok_or_else(|| Error::Config(format!("image {id:?} has no visual features")))
}

fn collect(
    model_id: &str,
    test: &TestSet,
    scores: Vec<Result<Option<f64>>>,
) -> Result<(ScoreTable, ScoringReport)> {
    let mut table = ScoreTable::new(model_id);
    let mut report = ScoringReport::default();
    for ((qi, image), s) in test.pairs.iter().zip(scores) {
        let s = s?;
        report.pairs += 1;
        if s.is_none() {
            report.unscored += 1;
        }
        table.insert(&test.queries[*qi].0, image, s.unwrap_or(0.0))?;
    }
    Ok((table, report))
}

/// Visual neighbors of each test image among the logged images.
pub fn image_neighbors(
    test: &TestSet,
    log: &ClickLog,
    store: &FeatureStore,
    cfg: &NeighborModelConfig,
) -> Result<BTreeMap<String, NeighborList<String>>> {
    let logged = store.filter(|id| !log.image_triads(id).is_empty());
    let images = test.images();
    let lists = par::map(&images, |id| {
        knn_images(features(store, id)?, &logged, cfg.k_i2t, cfg.similarity)
    });
    images
        .into_iter()
        .zip(lists)
        .map(|(id, l)| Ok((id, l?)))
        .collect()
}

pub fn score_image2text(
    test: &TestSet,
    log: &ClickLog,
    store: &FeatureStore,
    cfg: &NeighborModelConfig,
) -> Result<(ScoreTable, ScoringReport)> {
    cfg.validate()?;
    let neighbors = image_neighbors(test, log, store, cfg)?;
    let scores = par::map(&test.pairs, |(qi, image)| {
        Ok(test.queries[*qi]
            .1
            .as_ref()
            .map(|q| image2text_from_neighbors(&neighbors[image], q, log)))
    });
    collect("image2text", test, scores)
}

pub fn score_text2image(
    test: &TestSet,
    log: &ClickLog,
    store: &FeatureStore,
    cfg: &NeighborModelConfig,
) -> Result<(ScoreTable, ScoringReport)> {
    cfg.validate()?;
    let profiles = par::map(&test.queries, |(_, q)| {
        q.as_ref().map(|q| build_profile(q, log, cfg))
    });
    let scores = par::map(&test.pairs, |(qi, image)| {
        let x = features(store, image)?;
        match &profiles[*qi] {
            Some(p) => neighbor::score_text2image(x, p, store, cfg.similarity).map(Some),
            None => Ok(None),
        }
    });
    collect("text2image", test, scores)
}

pub fn score_psi(
    test: &TestSet,
    model: &PsiModel,
    store: &FeatureStore,
) -> Result<(ScoreTable, ScoringReport)> {
    let embedded = par::map(&test.queries, |(_, q)| {
        q.as_ref().and_then(|q| model.embed_query(q).ok())
    });
    let scores = par::map(&test.pairs, |(qi, image)| {
        let x = features(store, image)?;
        match &embedded[*qi] {
            Some(t) => Ok(Some(crate::embedding::dot(&model.embed_image(x)?, t))),
            None => Ok(None),
        }
    });
    collect("psi", test, scores)
}

pub fn score_devise(
    test: &TestSet,
    model: &DeviseModel,
    store: &FeatureStore,
) -> Result<(ScoreTable, ScoringReport)> {
    let embedded = par::map(&test.queries, |(_, q)| {
        q.as_ref().and_then(|q| model.embed_query(q).ok())
    });
    let scores = par::map(&test.pairs, |(qi, image)| {
        let x = features(store, image)?;
        match &embedded[*qi] {
            Some(t) => Ok(Some(crate::embedding::dot(&model.embed_image(x)?, t))),
            None => Ok(None),
        }
    });
    collect("devise", test, scores)
}

pub fn score_conse(
    test: &TestSet,
    labels: &LabelPredictions,
    table: &EmbeddingTable,
) -> Result<(ScoreTable, ScoringReport)> {
    let embedded = par::map(&test.queries, |(_, q)| {
        q.as_ref().and_then(|q| devise_embed_query(q, table).ok())
    });
    let images = test.images();
    let image_emb: BTreeMap<&str, Option<Vec<f64>>> = images
        .iter()
        .map(|id| {
            let emb = labels
                .get(id)
                .and_then(|p| conse_embed_image(p, table, id).ok());
            (id.as_str(), emb)
        })
        .collect();
    let scores = par::map(&test.pairs, |(qi, image)| {
        match (&image_emb[image.as_str()], &embedded[*qi]) {
            (Some(v), Some(t)) => match conse_score(v, t) {
                Ok(s) => Ok(Some(s)),
                Err(Error::ZeroVector) => Ok(None),
                Err(e) => Err(e),
            },
            _ => Ok(None),
        }
    });
    collect("conse", test, scores)
}
