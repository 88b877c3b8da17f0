//! `crossmedia`: batch pipelines for cross-media scoring, fusion, query
//! visualness analytics and ranking evaluation.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(
    name = "crossmedia",
    version,
    about = "Cross-media similarity from click-through logs"
)]
pub struct Cli {
    /// Seed for every random stream of the command.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Reject malformed input lines instead of skipping them.
    #[arg(long, global = true)]
    pub strict: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score every judged (query, image) pair with one model.
    Score(ScoreArgs),
    /// Train a PSI or DeViSE checkpoint on a click log.
    Train(TrainArgs),
    /// Evaluate a run against relevance judgments.
    Eval(EvalArgs),
    /// Fuse runs with uniform, given or learned weights.
    Fuse(FuseArgs),
    /// Randomization test between two per-query reports.
    Significance(SignificanceArgs),
    /// Query visualness scores, curves and groups.
    Visualness(VisualnessArgs),
    /// Spearman correlation of per-query performance with a query property.
    Correlate(CorrelateArgs),
    /// Generate a planted-relevance synthetic corpus.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Image2text,
    Text2image,
    Psi,
    Devise,
    Conse,
    /// Uniform random scores (seeded), a chance baseline.
    Random,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SimilarityKind {
    Euclidean,
    Cosine,
}

#[derive(Debug, Args, Serialize)]
pub struct ScoreArgs {
    #[arg(long, value_enum)]
    pub model: ModelKind,
    /// Judgment file defining the (query, image) pairs to score.
    #[arg(long)]
    pub judgments: PathBuf,
    #[arg(long)]
    pub log: Option<PathBuf>,
    #[arg(long)]
    pub features: Option<PathBuf>,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Visual neighbors for image2text.
    #[arg(long, default_value_t = 50)]
    pub k_i2t: usize,
    /// Textual neighbors for text2image.
    #[arg(long, default_value_t = 30)]
    pub k_t2i: usize,
    /// Candidate images kept by text2image.
    #[arg(long, default_value_t = 100)]
    pub k_prime: usize,
    #[arg(long, value_enum, default_value = "euclidean")]
    pub similarity: SimilarityKind,
    /// Sweep the neighbor count as start:end:step; `--out` becomes a directory.
    #[arg(long)]
    pub sweep_k: Option<String>,
    /// Score every judged query against every pooled image (for noise runs).
    #[arg(long)]
    pub all_pairs: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TrainedModel {
    Psi,
    Devise,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainArgs {
    #[arg(long, value_enum)]
    pub model: TrainedModel,
    #[arg(long)]
    pub log: PathBuf,
    #[arg(long)]
    pub features: PathBuf,
    /// Word embeddings (DeViSE only).
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    #[arg(long, default_value_t = 20)]
    pub epochs: usize,
    #[arg(long, default_value_t = 100)]
    pub batch: usize,
    #[arg(long, default_value_t = 0.01)]
    pub lr: f64,
    #[arg(long, default_value_t = 0.95)]
    pub decay: f64,
    /// Common space dimensionality (PSI only).
    #[arg(long, default_value_t = 200)]
    pub dim: usize,
    #[arg(long, default_value_t = 1.0)]
    pub margin: f64,
    #[arg(long, default_value_t = 50_000)]
    pub vocab_cap: usize,
    /// Checkpoint path; the loss trace goes to `<out>.loss.tsv`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    Ndcg,
    Map,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Tsv,
    Json,
}

#[derive(Debug, Args, Serialize)]
pub struct EvalArgs {
    /// Run file; repeat to evaluate several runs on the same (noisy) pools.
    #[arg(long = "run", required = true)]
    pub runs: Vec<PathBuf>,
    #[arg(long)]
    pub judgments: PathBuf,
    #[arg(long, value_enum, default_value = "ndcg")]
    pub metric: MetricKind,
    #[arg(long, default_value_t = 25)]
    pub cutoff: usize,
    /// Add h-fold noise from other queries' pools (seeded by --seed).
    #[arg(long)]
    pub noise: Option<usize>,
    #[arg(long, value_enum, default_value = "tsv")]
    pub format: Format,
    /// Report path; with several runs, a directory of `<run stem>.<format>` reports.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct FuseArgs {
    /// Run files to fuse; model ids are the file stems.
    #[arg(long = "run", required = true)]
    pub runs: Vec<PathBuf>,
    /// Learn weights by coordinate ascent against these judgments.
    #[arg(long, conflicts_with = "weights")]
    pub learn: Option<PathBuf>,
    /// Fixed weights file (`model_id<TAB>weight`).
    #[arg(long)]
    pub weights: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "ndcg")]
    pub metric: MetricKind,
    #[arg(long, default_value_t = 25)]
    pub cutoff: usize,
    /// Standardize each run's scores before the sigmoid.
    #[arg(long)]
    pub znorm: bool,
    #[arg(long)]
    pub out: PathBuf,
    /// Where to write the weights (default `<out>.weights.tsv`).
    #[arg(long)]
    pub weights_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum VariantKind {
    /// Swap exactly half of the queries.
    Half,
    /// Swap each query on a fair coin.
    Flip,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeKind {
    Auto,
    MonteCarlo,
    Exhaustive,
}

#[derive(Debug, Args, Serialize)]
pub struct SignificanceArgs {
    /// Per-query report of system A.
    #[arg(long)]
    pub a: PathBuf,
    #[arg(long)]
    pub b: PathBuf,
    #[arg(long, default_value_t = 10_000)]
    pub trials: usize,
    #[arg(long, value_enum, default_value = "half")]
    pub variant: VariantKind,
    #[arg(long, value_enum, default_value = "auto")]
    pub mode: ModeKind,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, value_enum, default_value = "tsv")]
    pub format: Format,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
#[command(group(clap::ArgGroup::new("source").required(true).args(["log", "queries"])))]
pub struct VisualnessArgs {
    /// Concept vocabulary, one phrase per line.
    #[arg(long)]
    pub vocab: PathBuf,
    /// Further phrase lists, e.g. celebrity names.
    #[arg(long)]
    pub extra_vocab: Vec<PathBuf>,
    /// Analyze the distinct queries of a click log.
    #[arg(long)]
    pub log: Option<PathBuf>,
    /// Query list: `query_id<TAB>text` lines or a judgment file.
    #[arg(long)]
    pub queries: Option<PathBuf>,
    /// Visual iff the score exceeds this.
    #[arg(long, default_value_t = 0.6)]
    pub threshold: f64,
    /// Emit the visual-percentage curve instead of per-query scores.
    #[arg(long, conflicts_with = "group")]
    pub curve: bool,
    /// Weight the curve by click counts.
    #[arg(long, requires = "curve")]
    pub weighted: bool,
    /// Curve thresholds as start:end:step.
    #[arg(long, default_value = "0:1:0.1")]
    pub thresholds: String,
    /// Group queries into bins with these comma-separated edges.
    #[arg(long)]
    pub group: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PropertyKind {
    Visualness,
    InvLength,
}

#[derive(Debug, Args, Serialize)]
pub struct CorrelateArgs {
    /// Per-query metric report.
    #[arg(long)]
    pub report: PathBuf,
    /// Query texts: `query_id<TAB>text` lines or a judgment file.
    #[arg(long)]
    pub queries: PathBuf,
    #[arg(long, value_enum)]
    pub property: PropertyKind,
    /// Concept vocabulary (visualness only).
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    /// Summary path; per-query points go to `<out>.points.tsv`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 10)]
    pub clusters: usize,
    #[arg(long, default_value_t = 200)]
    pub queries: usize,
    #[arg(long, default_value_t = 800)]
    pub log_queries: usize,
    #[arg(long, default_value_t = 2000)]
    pub images: usize,
    #[arg(long, default_value_t = 100)]
    pub vocab: usize,
    #[arg(long, default_value_t = 32)]
    pub feature_dim: usize,
    #[arg(long, default_value_t = 32)]
    pub embed_dim: usize,
    #[arg(long, default_value_t = 30)]
    pub pool_size: usize,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

/// An error caused by how the tool was invoked (exit code 2).
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
