//! Subcommand implementations.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crossmedia::corpus::{
    read_word_list, ClickLog, EmbeddingTable, FeatureStore, JudgmentSet, LabelPredictions,
    Normalizer, ParseOptions,
};
use crossmedia::embedding::{checkpoint, train_devise, train_psi, TrainConfig};
use crossmedia::eval::{
    inject_noise, mean_average_precision, mean_ndcg, random_scores, randomization_test,
    rank_images, spearman, PerQueryScores, RandomizationConfig, SwapVariant, TestMode,
};
use crossmedia::fusion::{
    average_fuse, coordinate_ascent, fuse, CoordinateAscentConfig, FuseOptions, FusionMetric,
    FusionWeights, FUSED_MODEL_ID,
};
use crossmedia::neighbor::NeighborModelConfig;
use crossmedia::pipeline::{self, ScoringReport, TestSet};
use crossmedia::scores::ScoreTable;
use crossmedia::similarity::VisualSimilarity;
use crossmedia::synth::{self, SynthConfig};
use crossmedia::visualness::{
    group_by_visualness, visual_percentage_curve, visualness, ConceptVocabulary,
};

use crate::output::{write_atomic, write_string, RunManifest};
use crate::{
    Cli, Command, CorrelateArgs, EvalArgs, Format, FuseArgs, MetricKind, ModeKind, ModelKind,
    PropertyKind, ScoreArgs, SignificanceArgs, SimilarityKind, SynthArgs, TrainArgs, TrainedModel,
    UsageError, VariantKind, VisualnessArgs,
};

pub fn run(cli: &Cli) -> Result<()> {
    configure_threads(cli.threads)?;
    let ctx = Ctx {
        seed: cli.seed,
        opts: ParseOptions { strict: cli.strict },
        normalizer: Normalizer::default(),
        started: Instant::now(),
    };
    match &cli.command {
        Command::Score(a) => score(&ctx, a),
        Command::Train(a) => train(&ctx, a),
        Command::Eval(a) => eval(&ctx, a),
        Command::Fuse(a) => fuse_cmd(&ctx, a),
        Command::Significance(a) => significance(&ctx, a),
        Command::Visualness(a) => visualness_cmd(&ctx, a),
        Command::Correlate(a) => correlate(&ctx, a),
        Command::Synth(a) => synth_cmd(&ctx, a),
    }
}

#[cfg(feature = "parallel")]
fn configure_threads(threads: Option<usize>) -> Result<()> {
    if let Some(n) = threads {
        if n == 0 {
            return Err(usage("--threads must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    Ok(())
}

#[cfg(not(feature = "parallel"))]
fn configure_threads(threads: Option<usize>) -> Result<()> {
    if threads.is_some_and(|n| n != 1) {
        eprintln!("warning: built without the parallel feature; running on one thread");
    }
    Ok(())
}

struct Ctx {
    seed: u64,
    opts: ParseOptions,
    normalizer: Normalizer,
    started: Instant,
}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn required<'a>(path: &'a Option<PathBuf>, flag: &str, why: &str) -> Result<&'a PathBuf> {
    path.as_ref()
        .ok_or_else(|| usage(format!("{flag} is required {why}")))
}

impl Ctx {
    fn manifest<'a, C: Serialize>(&self, config: &'a C) -> RunManifest<'a, C> {
        RunManifest::new(self.seed, config)
    }

    fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }

    fn log(&self, path: &Path) -> Result<ClickLog> {
        let (log, report) = ClickLog::from_path(path, &self.normalizer, self.opts)
            .with_context(|| format!("loading click log {}", path.display()))?;
        if report.skipped_malformed > 0 || report.dropped_empty_queries > 0 {
            eprintln!(
                "{}: skipped {} malformed lines, dropped {} empty queries",
                path.display(),
                report.skipped_malformed,
                report.dropped_empty_queries
            );
        }
        Ok(log)
    }

    fn features(&self, path: &Path) -> Result<FeatureStore> {
        let (store, report) = FeatureStore::from_path(path)
            .with_context(|| format!("loading features {}", path.display()))?;
        warn_dense(path, report.duplicate_ids);
        Ok(store)
    }

    fn embeddings(&self, path: &Path) -> Result<EmbeddingTable> {
        let (table, report) = EmbeddingTable::from_path(path)
            .with_context(|| format!("loading embeddings {}", path.display()))?;
        warn_dense(path, report.duplicate_ids);
        Ok(table)
    }

    fn judgments(&self, path: &Path) -> Result<JudgmentSet> {
        let (set, report) = JudgmentSet::from_path(path, self.opts)
            .with_context(|| format!("loading judgments {}", path.display()))?;
        if report.skipped_malformed > 0 {
            eprintln!(
                "{}: skipped {} malformed lines",
                path.display(),
                report.skipped_malformed
            );
        }
        Ok(set)
    }

    fn scores(&self, path: &Path) -> Result<ScoreTable> {
        ScoreTable::from_path(path, self.opts)
            .with_context(|| format!("loading run {}", path.display()))
    }

    fn report(&self, path: &Path) -> Result<PerQueryScores> {
        PerQueryScores::from_path(path)
            .with_context(|| format!("loading report {}", path.display()))
    }
}

fn warn_dense(path: &Path, duplicates: usize) {
    if duplicates > 0 {
        eprintln!(
            "{}: {duplicates} duplicate ids, last one kept",
            path.display()
        );
    }
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(suffix);
    PathBuf::from(name)
}

/// Parses `start:end:step` into an inclusive integer grid.
fn int_range(text: &str) -> Result<Vec<usize>> {
    let parts: Vec<&str> = text.split(':').collect();
    let [start, end, step] = parts.as_slice() else {
        return Err(usage(format!("range {text:?} is not start:end:step")));
    };
    let parse = |s: &str| {
        s.trim()
            .parse::<usize>()
            .map_err(|_| usage(format!("bad number {s:?} in {text:?}")))
    };
    let (start, end, step) = (parse(start)?, parse(end)?, parse(step)?);
    if step == 0 || start == 0 || start > end {
        return Err(usage(format!(
            "range {text:?} needs 0 < start <= end and step > 0"
        )));
    }
    Ok((start..=end).step_by(step).collect())
}

/// Parses `start:end:step` into an inclusive grid of reals.
fn real_range(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    let [start, end, step] = parts.as_slice() else {
        return Err(usage(format!("range {text:?} is not start:end:step")));
    };
    let parse = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| usage(format!("bad number {s:?} in {text:?}")))
    };
    let (start, end, step) = (parse(start)?, parse(end)?, parse(step)?);
    if !(step > 0.0) || !(start <= end) || !start.is_finite() || !end.is_finite() {
        return Err(usage(format!(
            "range {text:?} needs start <= end and step > 0"
        )));
    }
    let n = ((end - start) / step + 1e-9).floor() as usize;
    // Round to kill accumulated binary noise such as 0.30000000000000004.
    Ok((0..=n)
        .map(|i| ((start + i as f64 * step) * 1e9).round() / 1e9)
        .collect())
}

fn parse_edges(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| usage(format!("bad bin edge {s:?}")))
        })
        .collect()
}

/// Reads `query_id<TAB>text` lines or four-column judgment lines.
fn read_queries(path: &Path, opts: ParseOptions) -> Result<BTreeMap<String, String>> {
    let file = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut out = BTreeMap::new();
    for (idx, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        match fields.as_slice() {
            [id, text] | [id, text, _, _] if !id.is_empty() => {
                out.entry(id.to_string())
                    .or_insert_with(|| text.to_string());
            }
            _ if opts.strict => bail!(
                "{}: malformed line {}: expected query_id<TAB>text",
                path.display(),
                idx + 1
            ),
            _ => {}
        }
    }
    Ok(out)
}

// ---- score ----

fn neighbor_config(a: &ScoreArgs) -> NeighborModelConfig {
    NeighborModelConfig {
        k_i2t: a.k_i2t,
        k_t2i: a.k_t2i,
        k_prime: a.k_prime,
        similarity: match a.similarity {
            SimilarityKind::Euclidean => VisualSimilarity::InverseEuclidean,
            SimilarityKind::Cosine => VisualSimilarity::Cosine,
        },
    }
}

fn score(ctx: &Ctx, a: &ScoreArgs) -> Result<()> {
    let mut manifest = ctx.manifest(a);
    let judgments = ctx.judgments(&a.judgments)?;
    manifest.input(&a.judgments)?;
    let test = if a.all_pairs {
        let mut all: Vec<String> = judgments.pools().into_values().flatten().collect();
        all.sort();
        all.dedup();
        let pools = judgments
            .query_ids()
            .map(|q| (q.to_string(), all.clone()))
            .collect();
        TestSet::from_pools(&judgments, &pools, &ctx.normalizer)
    } else {
        TestSet::new(&judgments, &ctx.normalizer)
    };

    if let Some(text) = &a.sweep_k {
        let ks = int_range(text)?;
        if !matches!(a.model, ModelKind::Image2text | ModelKind::Text2image) {
            return Err(usage("--sweep-k applies to image2text and text2image only"));
        }
        let log_path = required(&a.log, "--log", "for neighbor models")?;
        let feat_path = required(&a.features, "--features", "for neighbor models")?;
        let log = ctx.log(log_path)?;
        let store = ctx.features(feat_path)?;
        manifest.inputs([log_path, feat_path])?;
        for k in ks {
            let mut cfg = neighbor_config(a);
            match a.model {
                ModelKind::Image2text => cfg.k_i2t = k,
                _ => cfg.k_t2i = k,
            }
            let (table, report) = match a.model {
                ModelKind::Image2text => pipeline::score_image2text(&test, &log, &store, &cfg)?,
                _ => pipeline::score_text2image(&test, &log, &store, &cfg)?,
            };
            warn_unscored(&report);
            let path = a.out.join(format!("k{k}.tsv"));
            write_atomic(&path, |w| table.write_tsv(w))?;
            manifest.output(&path);
        }
        return manifest.finish(&a.out, ctx.started.elapsed());
    }

    let (table, report) = match a.model {
        ModelKind::Image2text | ModelKind::Text2image => {
            let log_path = required(&a.log, "--log", "for neighbor models")?;
            let feat_path = required(&a.features, "--features", "for neighbor models")?;
            let log = ctx.log(log_path)?;
            let store = ctx.features(feat_path)?;
            manifest.inputs([log_path, feat_path])?;
            let cfg = neighbor_config(a);
            match a.model {
                ModelKind::Image2text => pipeline::score_image2text(&test, &log, &store, &cfg)?,
                _ => pipeline::score_text2image(&test, &log, &store, &cfg)?,
            }
        }
        ModelKind::Psi => {
            let ck = required(&a.checkpoint, "--checkpoint", "for psi")?;
            let feat_path = required(&a.features, "--features", "for psi")?;
            let model = checkpoint::read_psi(open(ck)?)
                .with_context(|| format!("loading {}", ck.display()))?;
            let store = ctx.features(feat_path)?;
            manifest.inputs([ck, feat_path])?;
            pipeline::score_psi(&test, &model, &store)?
        }
        ModelKind::Devise => {
            let ck = required(&a.checkpoint, "--checkpoint", "for devise")?;
            let feat_path = required(&a.features, "--features", "for devise")?;
            let emb_path = required(&a.embeddings, "--embeddings", "for devise")?;
            let table = ctx.embeddings(emb_path)?;
            let model = checkpoint::read_devise(open(ck)?, table)
                .with_context(|| format!("loading {}", ck.display()))?;
            let store = ctx.features(feat_path)?;
            manifest.inputs([ck, feat_path, emb_path])?;
            pipeline::score_devise(&test, &model, &store)?
        }
        ModelKind::Conse => {
            let labels_path = required(&a.labels, "--labels", "for conse")?;
            let emb_path = required(&a.embeddings, "--embeddings", "for conse")?;
            let labels = LabelPredictions::from_path(labels_path, ctx.opts)
                .with_context(|| format!("loading labels {}", labels_path.display()))?;
            let table = ctx.embeddings(emb_path)?;
            manifest.inputs([labels_path, emb_path])?;
            pipeline::score_conse(&test, &labels, &table)?
        }
        ModelKind::Random => {
            let pools = test_pools(&test);
            let table = random_scores(&pools, &mut ctx.rng());
            let pairs = table.len();
            (table, ScoringReport { pairs, unscored: 0 })
        }
    };
    warn_unscored(&report);
    write_atomic(&a.out, |w| table.write_tsv(w))?;
    manifest.output(&a.out);
    manifest.finish(&a.out, ctx.started.elapsed())
}

fn test_pools(test: &TestSet) -> BTreeMap<String, Vec<String>> {
    let mut pools: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for (qi, image) in &test.pairs {
        pools
            .entry(test.queries[*qi].0.clone())
            .or_default()
            .push(image.clone());
    }
    pools
}

fn warn_unscored(report: &ScoringReport) {
    if report.unscored > 0 {
        eprintln!(
            "{} of {} pairs were unscorable and scored 0",
            report.unscored, report.pairs
        );
    }
}

fn open(path: &Path) -> Result<std::io::BufReader<std::fs::File>> {
    let file = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(std::io::BufReader::new(file))
}

// ---- train ----

fn train(ctx: &Ctx, a: &TrainArgs) -> Result<()> {
    let mut manifest = ctx.manifest(a);
    let cfg = TrainConfig {
        common_dim: a.dim,
        batch: a.batch,
        lr0: a.lr,
        decay: a.decay,
        epochs: a.epochs,
        margin: a.margin,
        seed: ctx.seed,
        vocab_cap: a.vocab_cap,
    };
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    let log = ctx.log(&a.log)?;
    let store = ctx.features(&a.features)?;
    manifest.inputs([&a.log, &a.features])?;
    let trace = match a.model {
        TrainedModel::Psi => {
            let trained = train_psi(&log, &store, &cfg)?;
            write_atomic(&a.out, |w| checkpoint::write_psi(w, &trained.model))?;
            trained.loss_trace
        }
        TrainedModel::Devise => {
            let emb_path = required(&a.embeddings, "--embeddings", "for devise")?;
            let table = ctx.embeddings(emb_path)?;
            manifest.input(emb_path)?;
            let trained = train_devise(&log, &store, &table, &cfg)?;
            write_atomic(&a.out, |w| checkpoint::write_devise(w, &trained.model))?;
            trained.loss_trace
        }
    };
    let loss_path = with_suffix(&a.out, ".loss.tsv");
    write_atomic(&loss_path, |w| {
        writeln!(w, "epoch\tloss")?;
        for (e, l) in trace.iter().enumerate() {
            writeln!(w, "{}\t{l}", e + 1)?;
        }
        Ok(())
    })?;
    manifest.output(&a.out);
    manifest.output(&loss_path);
    manifest.finish(&a.out, ctx.started.elapsed())
}

// ---- eval ----

#[derive(Serialize)]
struct EvalJson<'a> {
    metric: String,
    queries: usize,
    mean: f64,
    per_query: BTreeMap<&'a str, f64>,
}

fn eval(ctx: &Ctx, a: &EvalArgs) -> Result<()> {
    if a.cutoff == 0 {
        return Err(usage("--cutoff must be positive"));
    }
    let mut manifest = ctx.manifest(a);
    let mut judgments = ctx.judgments(&a.judgments)?;
    manifest.input(&a.judgments)?;
    let mut pools = judgments.pools();
    if let Some(h) = a.noise {
        let (noisy, augmented) = inject_noise(&pools, h, &judgments, &mut ctx.rng());
        pools = noisy;
        judgments = augmented;
    }
    let ext = match a.format {
        Format::Tsv => "tsv",
        Format::Json => "json",
    };
    let mut seen = std::collections::BTreeSet::new();
    for run in &a.runs {
        let table = ctx.scores(run)?;
        manifest.input(run)?;
        let out = if a.runs.len() == 1 {
            a.out.clone()
        } else {
            let stem = table.model_id().to_string();
            if !seen.insert(stem.clone()) {
                return Err(usage(format!("two runs share the file stem {stem:?}")));
            }
            a.out.join(format!("{stem}.{ext}"))
        };
        let ranked =
            rank_images(&table, &pools).with_context(|| format!("ranking {}", run.display()))?;
        let (mean, per_query, name) = match a.metric {
            MetricKind::Ndcg => {
                let (m, p) = mean_ndcg(&ranked, &judgments, a.cutoff)?;
                (m, p, format!("ndcg@{}", a.cutoff))
            }
            MetricKind::Map => {
                let (m, p) = mean_average_precision(&ranked, &judgments)?;
                (m, p, "map".to_string())
            }
        };
        match a.format {
            Format::Tsv => write_atomic(&out, |w| per_query.write_tsv(w))?,
            Format::Json => {
                let doc = EvalJson {
                    metric: name.clone(),
                    queries: per_query.len(),
                    mean,
                    per_query: per_query.iter().collect(),
                };
                write_string(&out, &(serde_json::to_string_pretty(&doc)? + "\n"))?;
            }
        }
        println!("{}\t{name}\t{mean}", run.display());
        manifest.output(&out);
    }
    manifest.finish(&a.out, ctx.started.elapsed())
}

// ---- fuse ----

fn fusion_metric(metric: MetricKind, cutoff: usize) -> Result<FusionMetric> {
    if cutoff == 0 {
        return Err(usage("--cutoff must be positive"));
    }
    Ok(match metric {
        MetricKind::Ndcg => FusionMetric::Ndcg { cutoff },
        MetricKind::Map => FusionMetric::Map,
    })
}

fn fuse_cmd(ctx: &Ctx, a: &FuseArgs) -> Result<()> {
    let mut manifest = ctx.manifest(a);
    let tables = a
        .runs
        .iter()
        .map(|p| ctx.scores(p))
        .collect::<Result<Vec<_>>>()?;
    manifest.inputs(&a.runs)?;
    let opts = FuseOptions { znorm: a.znorm };
    let metric = fusion_metric(a.metric, a.cutoff)?;
    let weights = if let Some(path) = &a.learn {
        let judgments = ctx.judgments(path)?;
        manifest.input(path)?;
        let cfg = CoordinateAscentConfig {
            seed: ctx.seed,
            fuse: opts,
            ..CoordinateAscentConfig::default()
        };
        let learned = coordinate_ascent(&tables, &judgments, metric, &cfg)?;
        eprintln!(
            "training metric {} (uniform {})",
            learned.metric, learned.uniform_metric
        );
        learned.weights
    } else if let Some(path) = &a.weights {
        manifest.input(path)?;
        FusionWeights::from_path(path)
            .with_context(|| format!("loading weights {}", path.display()))?
    } else {
        FusionWeights::uniform(tables.iter().map(ScoreTable::model_id))?
    };
    let fused = if a.learn.is_none() && a.weights.is_none() {
        average_fuse(&tables, opts)?
    } else {
        fuse(&tables, &weights, opts)?
    };
    debug_assert_eq!(fused.model_id(), FUSED_MODEL_ID);
    let weights_out = a
        .weights_out
        .clone()
        .unwrap_or_else(|| with_suffix(&a.out, ".weights.tsv"));
    write_atomic(&a.out, |w| fused.write_tsv(w))?;
    write_atomic(&weights_out, |w| weights.write_tsv(w))?;
    manifest.output(&a.out);
    manifest.output(&weights_out);
    manifest.finish(&a.out, ctx.started.elapsed())
}

// ---- significance ----

#[derive(Serialize)]
struct SignificanceJson {
    diff: f64,
    trials: u64,
    p_value: f64,
    exhaustive: bool,
    alpha: f64,
    significant: bool,
}

fn significance(ctx: &Ctx, a: &SignificanceArgs) -> Result<()> {
    if !(a.alpha > 0.0 && a.alpha < 1.0) {
        return Err(usage("--alpha must lie in (0, 1)"));
    }
    if a.trials == 0 {
        return Err(usage("--trials must be positive"));
    }
    let mut manifest = ctx.manifest(a);
    let ra = ctx.report(&a.a)?;
    let rb = ctx.report(&a.b)?;
    manifest.inputs([&a.a, &a.b])?;
    let cfg = RandomizationConfig {
        trials: a.trials,
        seed: ctx.seed,
        variant: match a.variant {
            VariantKind::Half => SwapVariant::Half,
            VariantKind::Flip => SwapVariant::Flip,
        },
        mode: match a.mode {
            ModeKind::Auto => TestMode::Auto,
            ModeKind::MonteCarlo => TestMode::MonteCarlo,
            ModeKind::Exhaustive => TestMode::Exhaustive,
        },
        ..RandomizationConfig::default()
    };
    let r = randomization_test(&ra, &rb, &cfg)?;
    let significant = r.significant(a.alpha);
    let text = match a.format {
        Format::Tsv => format!(
            "diff\t{}\ntrials\t{}\np_value\t{}\nexhaustive\t{}\nsignificant@{}\t{}\n",
            r.diff, r.trials, r.p_value, r.exhaustive, a.alpha, significant
        ),
        Format::Json => {
            let doc = SignificanceJson {
                diff: r.diff,
                trials: r.trials,
                p_value: r.p_value,
                exhaustive: r.exhaustive,
                alpha: a.alpha,
                significant,
            };
            serde_json::to_string_pretty(&doc)? + "\n"
        }
    };
    write_string(&a.out, &text)?;
    println!("p_value\t{}", r.p_value);
    manifest.output(&a.out);
    manifest.finish(&a.out, ctx.started.elapsed())
}

// ---- visualness ----

fn load_vocab(ctx: &Ctx, vocab: &Path, extra: &[PathBuf]) -> Result<ConceptVocabulary> {
    let mut v = ConceptVocabulary::from_path(vocab, &ctx.normalizer)
        .with_context(|| format!("loading vocabulary {}", vocab.display()))?;
    for path in extra {
        let words = read_word_list(path).with_context(|| format!("loading {}", path.display()))?;
        v.extend(words, &ctx.normalizer);
    }
    Ok(v)
}

fn visualness_cmd(ctx: &Ctx, a: &VisualnessArgs) -> Result<()> {
    let mut manifest = ctx.manifest(a);
    let vocab = load_vocab(ctx, &a.vocab, &a.extra_vocab)?;
    manifest.input(&a.vocab)?;
    manifest.inputs(&a.extra_vocab)?;

    if a.curve {
        let log_path = required(&a.log, "--log", "for --curve")?;
        let thresholds = real_range(&a.thresholds)?;
        let log = ctx.log(log_path)?;
        manifest.input(log_path)?;
        let curve = visual_percentage_curve(&log, &vocab, &thresholds, a.weighted)?;
        write_atomic(&a.out, |w| {
            writeln!(w, "threshold\tpercentage")?;
            for (t, p) in &curve {
                writeln!(w, "{t}\t{}", p * 100.0)?;
            }
            Ok(())
        })?;
        manifest.output(&a.out);
        return manifest.finish(&a.out, ctx.started.elapsed());
    }

    let queries: BTreeMap<String, String> = match (&a.log, &a.queries) {
        (Some(path), _) => {
            let log = ctx.log(path)?;
            manifest.input(path)?;
            log.queries()
                .iter()
                .map(|q| (q.raw.clone(), q.raw.clone()))
                .collect()
        }
        (None, Some(path)) => {
            manifest.input(path)?;
            read_queries(path, ctx.opts)?
        }
        (None, None) => return Err(usage("one of --log or --queries is required")),
    };
    let bags: Vec<(&str, &str, Option<_>)> = queries
        .iter()
        .map(|(id, text)| {
            (
                id.as_str(),
                text.as_str(),
                ctx.normalizer.preprocess(text).ok(),
            )
        })
        .collect();

    if let Some(text) = &a.group {
        let edges = parse_edges(text)?;
        let bins = group_by_visualness(
            bags.iter()
                .filter_map(|(id, _, b)| b.as_ref().map(|b| (*id, b))),
            &vocab,
            &edges,
        )
        .map_err(|e| usage(e.to_string()))?;
        write_atomic(&a.out, |w| {
            writeln!(w, "lo\thi\tcount\tquery_ids")?;
            for bin in &bins {
                writeln!(
                    w,
                    "{}\t{}\t{}\t{}",
                    bin.lo,
                    bin.hi,
                    bin.query_ids.len(),
                    bin.query_ids.join(",")
                )?;
            }
            Ok(())
        })?;
    } else {
        write_atomic(&a.out, |w| {
            writeln!(w, "query_id\tquery\tscore\tcovered\ttotal\tclass")?;
            for (id, text, bag) in &bags {
                let (score, covered, total) = match bag.as_ref().map(|b| visualness(b, &vocab)) {
                    Some(Ok(r)) => (r.score(), r.covered, r.total),
                    _ => (0.0, 0, 0),
                };
                let class = if score > a.threshold {
                    "visual"
                } else {
                    "nonvisual"
                };
                writeln!(w, "{id}\t{text}\t{score}\t{covered}\t{total}\t{class}")?;
            }
            Ok(())
        })?;
    }
    manifest.output(&a.out);
    manifest.finish(&a.out, ctx.started.elapsed())
}

// ---- correlate ----

fn correlate(ctx: &Ctx, a: &CorrelateArgs) -> Result<()> {
    let mut manifest = ctx.manifest(a);
    let report = ctx.report(&a.report)?;
    let queries = read_queries(&a.queries, ctx.opts)?;
    manifest.inputs([&a.report, &a.queries])?;
    let vocab = match a.property {
        PropertyKind::Visualness => {
            let path = required(&a.vocab, "--vocab", "for the visualness property")?;
            manifest.input(path)?;
            Some(load_vocab(ctx, path, &[])?)
        }
        PropertyKind::InvLength => None,
    };
    let mut points = Vec::new();
    let mut skipped = 0usize;
    for (id, value) in report.iter() {
        let bag = queries
            .get(id)
            .and_then(|t| ctx.normalizer.preprocess(t).ok());
        let Some(bag) = bag else {
            skipped += 1;
            continue;
        };
        let property = match &vocab {
            Some(v) => visualness(&bag, v)?.score(),
            None => 1.0 / bag.len() as f64,
        };
        points.push((id.to_string(), property, value));
    }
    if skipped > 0 {
        eprintln!("skipped {skipped} queries without usable text");
    }
    let xs: Vec<f64> = points.iter().map(|p| p.1).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.2).collect();
    let rho = spearman(&xs, &ys)?;
    write_string(
        &a.out,
        &format!("rho\t{rho}\nn\t{}\nskipped\t{skipped}\n", points.len()),
    )?;
    let points_path = with_suffix(&a.out, ".points.tsv");
    write_atomic(&points_path, |w| {
        writeln!(w, "query_id\tproperty\tmetric")?;
        for (id, x, y) in &points {
            writeln!(w, "{id}\t{x}\t{y}")?;
        }
        Ok(())
    })?;
    println!("rho\t{rho}");
    manifest.output(&a.out);
    manifest.output(&points_path);
    manifest.finish(&a.out, ctx.started.elapsed())
}

// ---- synth ----

fn synth_cmd(ctx: &Ctx, a: &SynthArgs) -> Result<()> {
    let mut manifest = ctx.manifest(a);
    let cfg = SynthConfig {
        clusters: a.clusters,
        test_queries: a.queries,
        log_queries: a.log_queries,
        images: a.images,
        vocab_size: a.vocab,
        feature_dim: a.feature_dim,
        embed_dim: a.embed_dim,
        pool_size: a.pool_size,
        seed: ctx.seed,
        ..SynthConfig::default()
    };
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    let corpus = synth::generate(&cfg)?;
    let dir = &a.out;
    let files: [(&str, Box<dyn Fn(&mut dyn Write) -> crossmedia::Result<()>>); 6] = [
        ("clicklog.tsv", Box::new(|w| corpus.log.write_tsv(w))),
        ("features.txt", Box::new(|w| corpus.features.write_text(w))),
        (
            "embeddings.txt",
            Box::new(|w| corpus.embeddings.write_text(w)),
        ),
        ("judgments.tsv", Box::new(|w| corpus.judgments.write_tsv(w))),
        ("labels.tsv", Box::new(|w| corpus.labels.write_tsv(w))),
        (
            "concepts.txt",
            Box::new(|w| {
                for c in &corpus.concepts {
                    writeln!(w, "{c}")?;
                }
                Ok(())
            }),
        ),
    ];
    for (name, fill) in &files {
        let path = dir.join(name);
        write_atomic(&path, |w| fill(w))?;
        manifest.output(&path);
    }
    manifest.finish(dir, ctx.started.elapsed())
}
