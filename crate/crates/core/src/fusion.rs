//! Late fusion of score tables: `f = sum_i lambda_i * sigmoid(f_i)`, with
//! uniform weights or weights learned by coordinate ascent on a ranking metric.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

use crate::corpus::{Grade, JudgmentSet};
use crate::error::{Error, Result};
use crate::eval::{average_precision, ndcg};
use crate::par;
use crate::scores::ScoreTable;

pub const FUSED_MODEL_ID: &str = "fused";

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Non-negative per-model weights; models without an entry weigh 0.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionWeights {
    weights: BTreeMap<String, f64>,
}

impl FusionWeights {
    pub fn new<I, S>(weights: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        let weights: BTreeMap<String, f64> =
            weights.into_iter().map(|(k, v)| (k.into(), v)).collect();
        if let Some((id, w)) = weights.iter().find(|(_, w)| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::Config(format!(
                "weight {w} of model {id:?} must be finite and non-negative"
            )));
        }
        if !weights.values().any(|&w| w > 0.0) {
            return Err(Error::Config(
                "at least one fusion weight must be positive".into(),
            ));
        }
        Ok(Self { weights })
    }

    /// `1/d` for each of the `d` models.
    pub fn uniform<'a>(model_ids: impl IntoIterator<Item = &'a str>) -> Result<Self> {
        let ids: Vec<&str> = model_ids.into_iter().collect();
        let w = 1.0 / ids.len() as f64;
        Self::new(ids.into_iter().map(|id| (id, w)))
    }

    pub fn get(&self, model_id: &str) -> f64 {
        self.weights.get(model_id).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.weights.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn sum(&self) -> f64 {
        self.weights.values().sum()
    }

    /// Rescales to sum 1.
    pub fn normalized(&self) -> Self {
        let total = self.sum();
        Self {
            weights: self
                .weights
                .iter()
                .map(|(k, v)| (k.clone(), v / total))
                .collect(),
        }
    }

    /// Parses `model_id<TAB>weight` lines; `#` lines are comments.
    pub fn parse<R: BufRead>(reader: R, source_name: &Path) -> Result<Self> {
        let mut entries = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (id, w) = line.split_once('\t').ok_or_else(|| {
                Error::malformed(source_name, idx + 1, "expected model_id<TAB>weight")
            })?;
            let w: f64 = w.trim().parse().map_err(|_| {
                Error::malformed(
                    source_name,
                    idx + 1,
                    format!("weight {w:?} is not a number"),
                )
            })?;
            entries.push((id.trim().to_string(), w));
        }
        Self::new(entries)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::parse(std::io::BufReader::new(std::fs::File::open(path)?), path)
    }

    pub fn write_tsv<W: Write>(&self, mut out: W) -> Result<()> {
        for (id, w) in &self.weights {
            writeln!(out, "{id}\t{w}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FuseOptions {
    /// Standardize each table's scores to zero mean and unit variance
    /// before the sigmoid.
    pub znorm: bool,
}

fn check_tables(tables: &[ScoreTable]) -> Result<()> {
    let first = tables
        .first()
        .ok_or_else(|| Error::Config("fusion needs at least one score table".into()))?;
    let mut seen = BTreeSet::new();
    for t in tables {
        if !seen.insert(t.model_id()) {
            return Err(Error::Config(format!(
                "model id {:?} appears twice",
                t.model_id()
            )));
        }
        if !t.same_pairs(first) {
            return Err(Error::PairSetMismatch(format!(
                "{:?} vs {:?}",
                first.model_id(),
                t.model_id()
            )));
        }
    }
    Ok(())
}

fn znormalize(table: &ScoreTable) -> ScoreTable {
    let n = table.len() as f64;
    let mean = table.iter().map(|(_, _, s)| s).sum::<f64>() / n;
    let var = table
        .iter()
        .map(|(_, _, s)| (s - mean) * (s - mean))
        .sum::<f64>()
        / n;
    let sd = var.sqrt();
    table.map_scores(table.model_id(), |s| {
        if sd > 0.0 {
            (s - mean) / sd
        } else {
            0.0
        }
    })
}

fn squashed(tables: &[ScoreTable], opts: FuseOptions) -> Vec<ScoreTable> {
    tables
        .iter()
        .map(|t| {
            let base = if opts.znorm { znormalize(t) } else { t.clone() };
            base.map_scores(t.model_id(), sigmoid)
        })
        .collect()
}

fn combine(squashed: &[ScoreTable], weights: &[f64]) -> ScoreTable {
    let mut out = ScoreTable::new(FUSED_MODEL_ID);
    for (q, i, _) in squashed[0].iter() {
        let mut acc = 0.0;
        for (t, w) in squashed.iter().zip(weights) {
            acc += w * t.get(q, i).expect("checked pair sets");
        }
        out.insert(q, i, acc).expect("finite");
    }
    out
}

/// `sum_i lambda_i * sigmoid(f_i)` over the shared pair set.
pub fn fuse(
    tables: &[ScoreTable],
    weights: &FusionWeights,
    opts: FuseOptions,
) -> Result<ScoreTable> {
    check_tables(tables)?;
    let w: Vec<f64> = tables.iter().map(|t| weights.get(t.model_id())).collect();
    Ok(combine(&squashed(tables, opts), &w))
}

/// Fusion with `lambda_i = 1/d`.
pub fn average_fuse(tables: &[ScoreTable], opts: FuseOptions) -> Result<ScoreTable> {
    check_tables(tables)?;
    let weights = FusionWeights::uniform(tables.iter().map(ScoreTable::model_id))?;
    fuse(tables, &weights, opts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FusionMetric {
    Ndcg { cutoff: usize },
    Map,
}

impl FusionMetric {
    fn eval(self, grades: &[Grade]) -> f64 {
        match self {
            FusionMetric::Ndcg { cutoff } => ndcg(grades, cutoff),
            FusionMetric::Map => {
                let rel: Vec<bool> = grades.iter().map(|g| g.is_positive()).collect();
                average_precision(&rel)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoordinateAscentConfig {
    /// Starting points: uniform weights plus `restarts - 1` random ones.
    pub restarts: usize,
    /// Grid points per coordinate over `[0, 1]`.
    pub steps_per_dim: usize,
    pub sweeps: usize,
    pub seed: u64,
    pub fuse: FuseOptions,
}

impl Default for CoordinateAscentConfig {
    fn default() -> Self {
        Self {
            restarts: 3,
            steps_per_dim: 21,
            sweeps: 25,
            seed: 0,
            fuse: FuseOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnedWeights {
    pub weights: FusionWeights,
    /// Training metric of the learned weights.
    pub metric: f64,
    /// Training metric of uniform weights.
    pub uniform_metric: f64,
}

/// Per-query squashed scores in image-id order, with grades.
struct Block {
    grades: Vec<Grade>,
    /// `scores[m][i]`: model `m`, image `i`.
    scores: Vec<Vec<f64>>,
}

struct Objective {
    blocks: Vec<Block>,
    metric: FusionMetric,
}

impl Objective {
    fn new(squashed: &[ScoreTable], judgments: &JudgmentSet, metric: FusionMetric) -> Result<Self> {
        if judgments.is_empty() {
            return Err(Error::EmptyJudgments);
        }
        let mut blocks = Vec::new();
        for q in squashed[0].query_ids() {
            if !judgments.contains_query(q) {
                return Err(Error::UnjudgedQuery(q.to_string()));
            }
            let images: Vec<&str> = squashed[0].query_scores(q).map(|(i, _)| i).collect();
            blocks.push(Block {
                grades: images
                    .iter()
                    .map(|i| judgments.grade_or_bad(q, i))
                    .collect(),
                scores: squashed
                    .iter()
                    .map(|t| t.query_scores(q).map(|(_, s)| s).collect())
                    .collect(),
            });
        }
        Ok(Self { blocks, metric })
    }

    /// Mean metric of the fused ranking; matches ranking the output of
    /// [`fuse`] exactly, since scores are combined in the same order.
    fn eval(&self, weights: &[f64]) -> f64 {
        let total: f64 = self
            .blocks
            .iter()
            .map(|b| {
                let fused: Vec<f64> = (0..b.grades.len())
                    .map(|i| {
                        let mut acc = 0.0;
                        for (m, w) in weights.iter().enumerate() {
                            acc += w * b.scores[m][i];
                        }
                        acc
                    })
                    .collect();
                let mut order: Vec<usize> = (0..fused.len()).collect();
                order.sort_by(|&x, &y| fused[y].total_cmp(&fused[x]).then(x.cmp(&y)));
                let ranked: Vec<Grade> = order.iter().map(|&i| b.grades[i]).collect();
                self.metric.eval(&ranked)
            })
            .sum();
        total / self.blocks.len() as f64
    }
}

/// Sets coordinate `j` to `v` and rescales the others to share `1 - v` in
/// their current proportions (evenly if they are all zero).
fn reweight(w: &[f64], j: usize, v: f64) -> Vec<f64> {
    let rest: f64 = w
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != j)
        .map(|(_, x)| x)
        .sum();
    let d = w.len();
    w.iter()
        .enumerate()
        .map(|(k, &x)| {
            if k == j {
                v
            } else if rest > 0.0 {
                x * (1.0 - v) / rest
            } else {
                (1.0 - v) / (d - 1) as f64
            }
        })
        .collect()
}

fn normalize(w: &mut [f64]) {
    let total: f64 = w.iter().sum();
    for x in w {
        *x /= total;
    }
}

fn random_simplex_point(d: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut w: Vec<f64> = (0..d).map(|_| Exp1.sample(rng)).collect();
    normalize(&mut w);
    w
}

fn ascend(objective: &Objective, start: Vec<f64>, cfg: &CoordinateAscentConfig) -> (Vec<f64>, f64) {
    let mut w = start;
    let mut best = objective.eval(&w);
    let grid: Vec<f64> = (0..cfg.steps_per_dim)
        .map(|s| s as f64 / (cfg.steps_per_dim - 1) as f64)
        .collect();
    for _ in 0..cfg.sweeps {
        let mut improved = false;
        for j in 0..w.len() {
            let candidates: Vec<Vec<f64>> = grid.iter().map(|&v| reweight(&w, j, v)).collect();
            let values = par::map(&candidates, |c| objective.eval(c));
            let (idx, &value) =
                values
                    .iter()
                    .enumerate()
                    .fold((0, &f64::NEG_INFINITY), |acc, cur| {
                        if cur.1 > acc.1 {
                            cur
                        } else {
                            acc
                        }
                    });
            if value > best {
                best = value;
                w = candidates[idx].clone();
                improved = true;
            }
        }
        if !improved {
            break;
        }
        normalize(&mut w);
        best = objective.eval(&w);
    }
    (w, best)
}

/// Learns fusion weights by greedy coordinate-wise grid search on the mean
/// training metric. The uniform start is always evaluated and only a strict
/// improvement replaces it, so the result never scores below uniform weights.
pub fn coordinate_ascent(
    tables: &[ScoreTable],
    judgments: &JudgmentSet,
    metric: FusionMetric,
    cfg: &CoordinateAscentConfig,
) -> Result<LearnedWeights> {
    check_tables(tables)?;
    if cfg.restarts == 0 || cfg.steps_per_dim < 2 {
        return Err(Error::Config(
            "coordinate ascent needs restarts >= 1 and steps_per_dim >= 2".into(),
        ));
    }
    let squashed = squashed(tables, cfg.fuse);
    let objective = Objective::new(&squashed, judgments, metric)?;
    let d = tables.len();
    let uniform = vec![1.0 / d as f64; d];
    let uniform_metric = objective.eval(&uniform);

    let (mut best_w, mut best) = if d == 1 {
        (vec![1.0], uniform_metric)
    } else {
        ascend(&objective, uniform, cfg)
    };
    if d > 1 {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        for _ in 1..cfg.restarts {
            let start = random_simplex_point(d, &mut rng);
            let (w, value) = ascend(&objective, start, cfg);
            if value > best {
                best = value;
                best_w = w;
            }
        }
    }
    // Rounding in the rescaled weights must not cost the uniform guarantee.
    if best < uniform_metric {
        best_w = vec![1.0 / d as f64; d];
        best = uniform_metric;
    }
    let weights = FusionWeights::new(tables.iter().map(ScoreTable::model_id).zip(best_w))?;
    Ok(LearnedWeights {
        weights,
        metric: best,
        uniform_metric,
    })
}
