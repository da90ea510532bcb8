use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "taskaug", version, about = "Multi-task corpus augmentation and analysis", propagate_version = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

// Parsed once per process; boxing the larger variants buys nothing.
#[allow(clippy::large_enum_variant)]
#[derive(Debug, Subcommand)]
pub enum Command {
    /// Length-filter a parallel corpus.
    Prepare(PrepareArgs),
    /// Learn joint BPE merges over both corpus sides.
    LearnBpe(LearnBpeArgs),
    /// Apply (or undo) BPE on a whitespace-tokenized file.
    ApplyBpe(ApplyBpeArgs),
    /// Intersect two directional alignment files into one-to-one alignments.
    AlignIntersect(AlignIntersectArgs),
    /// Build the bilingual lexicon from one-to-one alignments.
    Lexicon(LexiconArgs),
    /// Emit per-epoch multi-task sample streams as JSON Lines.
    Augment(AugmentArgs),
    /// Concatenate parallel and back-translated corpora with per-pair flags.
    CombineBt(CombineBtArgs),
    /// Corpus source-contribution statistics and position curve.
    AnalyzeSource(AnalyzeSourceArgs),
    /// Kernel density estimate of embedding cosine similarities.
    AnalyzeKde(AnalyzeKdeArgs),
}

#[derive(Debug, Args)]
pub struct CorpusArgs {
    /// Source-side corpus, one sentence per line.
    #[arg(long)]
    pub src: PathBuf,
    /// Target-side corpus, line-parallel with --src.
    #[arg(long)]
    pub tgt: PathBuf,
}

#[derive(Debug, Args)]
pub struct PrepareArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[arg(long, default_value_t = 5)]
    pub min_tokens: usize,
    #[arg(long, default_value_t = 100)]
    pub max_tokens: usize,
    /// Also drop pairs longer than --max-subword-tokens after BPE.
    #[arg(long)]
    pub merges: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    pub max_subword_tokens: usize,
    /// Output prefix: writes PREFIX.src, PREFIX.tgt and PREFIX.ids.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct LearnBpeArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[arg(long, default_value_t = 10_000)]
    pub num_merges: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ApplyBpeArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Required unless --undo is given.
    #[arg(long, required_unless_present = "undo")]
    pub merges: Option<PathBuf>,
    /// Rejoin `@@` continuations instead of segmenting.
    #[arg(long)]
    pub undo: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AlignmentArgs {
    /// Source-to-target Pharaoh alignments (`s-t`), line-parallel with the corpus.
    #[arg(long)]
    pub align_st: Option<PathBuf>,
    /// Target-to-source Pharaoh alignments (`t-s`), line-parallel with the corpus.
    #[arg(long)]
    pub align_ts: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AlignIntersectArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[arg(long)]
    pub align_st: PathBuf,
    #[arg(long)]
    pub align_ts: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct LexiconArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub align: AlignmentArgs,
    /// Precomputed one-to-one alignments (instead of --align-st/--align-ts).
    #[arg(long, conflicts_with_all = ["align_st", "align_ts"])]
    pub align_oto: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BtArgs {
    #[arg(long, requires = "bt_tgt")]
    pub bt_src: Option<PathBuf>,
    #[arg(long, requires = "bt_src")]
    pub bt_tgt: Option<PathBuf>,
    /// plain, augment, tag or tag_augment.
    #[arg(long, default_value = "plain")]
    pub bt_mode: String,
}

#[derive(Debug, Args)]
pub struct AugmentArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub align: AlignmentArgs,
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    /// Apply BPE to emitted samples.
    #[arg(long)]
    pub merges: Option<PathBuf>,
    #[arg(long)]
    pub seed: u64,
    /// First epoch to emit.
    #[arg(long, default_value_t = 0)]
    pub epoch: u64,
    /// Number of consecutive epochs to emit.
    #[arg(long, default_value_t = 1)]
    pub epochs: u64,
    /// Comma-separated `name[:alpha]` list, e.g. `reverse,swap:0.3,replace:0.3`.
    #[arg(long, default_value = "")]
    pub transforms: String,
    #[arg(long, default_value_t = 4000)]
    pub max_batch_tokens: usize,
    #[command(flatten)]
    pub bt: BtArgs,
    /// augment or fine-tune.
    #[arg(long, default_value = "augment")]
    pub phase: String,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    /// Override a task token: `TASK=TOKEN` (`orig`, `swap`, ..., `bt`, `bt+swap`, ...).
    #[arg(long = "task-token")]
    pub task_tokens: Vec<String>,
    /// Output file; the stream goes to stdout (and the summary to stderr) when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CombineBtArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub bt: BtArgs,
    /// Output prefix: writes PREFIX.src, PREFIX.tgt and PREFIX.flags.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AnalyzeSourceArgs {
    /// Perturbation dumps (JSON Lines).
    #[arg(long)]
    pub dumps: PathBuf,
    #[arg(long, default_value_t = 6)]
    pub degree: usize,
    /// Position-curve JSON output.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AnalyzeKdeArgs {
    /// Similarity records (JSON Lines).
    #[arg(long)]
    pub embeddings: PathBuf,
    #[arg(long, default_value_t = 0.06)]
    pub bandwidth: f64,
    /// Grid start; defaults to min(cosine) - 6 * bandwidth.
    #[arg(long, allow_hyphen_values = true)]
    pub grid_min: Option<f64>,
    /// Grid end; defaults to max(cosine) + 6 * bandwidth.
    #[arg(long, allow_hyphen_values = true)]
    pub grid_max: Option<f64>,
    #[arg(long, default_value_t = 512)]
    pub grid_points: usize,
    /// TSV output `x<TAB>density`.
    #[arg(long)]
    pub out: PathBuf,
}
