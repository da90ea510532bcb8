//! Per-epoch multi-task sample streams.
//!
//! Every epoch shuffles the corpus with a seeded permutation and, for each
//! pair, emits the original sample followed by one synthetic sample per
//! configured transformation. All randomness comes from [`derive_stream`],
//! so output is identical for any worker count.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::alignment::{AlignmentTable, BilingualLexicon};
use crate::corpus::{nfc, Origin, ParallelPair, TokenSeq};
use crate::error::{Error, Result};
use crate::rng::{derive_stream, shuffled_indices, CORPUS_SENTINEL};
use crate::subword::{MergeTable, UNK};
use crate::transforms::{
    t_mono, t_replace, t_reverse, t_source, t_swap, t_unk, Alpha, AugmentedSample, Task, TransformId, Weight,
};

pub const DEFAULT_MAX_BATCH_TOKENS: usize = 4000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BtMode {
    /// Back-translated pairs are plain extra originals.
    #[default]
    Plain,
    /// Back-translated pairs are augmented like any other pair.
    Augment,
    /// Back-translated pairs carry a bt task token and are not augmented.
    Tag,
    /// Back-translated pairs are augmented and every sample carries a bt token.
    TagAugment,
}

impl BtMode {
    pub fn name(self) -> &'static str {
        match self {
            BtMode::Plain => "plain",
            BtMode::Augment => "augment",
            BtMode::Tag => "tag",
            BtMode::TagAugment => "tag_augment",
        }
    }
}

impl FromStr for BtMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plain" => Ok(BtMode::Plain),
            "augment" => Ok(BtMode::Augment),
            "tag" => Ok(BtMode::Tag),
            "tag_augment" | "tag-augment" => Ok(BtMode::TagAugment),
            other => Err(Error::UnknownBtMode(other.to_owned())),
        }
    }
}

impl fmt::Display for BtMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Phase {
    #[default]
    Augment,
    FineTune,
}

impl FromStr for Phase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "augment" => Ok(Phase::Augment),
            "fine-tune" | "fine_tune" => Ok(Phase::FineTune),
            other => Err(Error::InvalidArgument(format!("unknown phase {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairFlags {
    pub augment: bool,
    pub bt_tag: bool,
}

impl Default for PairFlags {
    fn default() -> Self {
        PairFlags {
            augment: true,
            bt_tag: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusEntry {
    pub pair: ParallelPair,
    pub flags: PairFlags,
}

/// Wraps a parallel corpus with default flags (augmented, untagged).
pub fn plain_corpus(pairs: Vec<ParallelPair>) -> Vec<CorpusEntry> {
    pairs
        .into_iter()
        .map(|pair| CorpusEntry {
            pair,
            flags: PairFlags::default(),
        })
        .collect()
}

/// Concatenates parallel and back-translated pairs and flags the latter
/// according to `mode`. Pair ids must not collide across the two corpora.
pub fn combine_bt(parallel: Vec<ParallelPair>, bt: Vec<ParallelPair>, mode: BtMode) -> Result<Vec<CorpusEntry>> {
    let mut seen = HashSet::with_capacity(parallel.len() + bt.len());
    for p in parallel.iter().chain(&bt) {
        if !seen.insert(p.pair_id) {
            return Err(Error::DuplicatePairId(p.pair_id));
        }
    }
    let bt_flags = match mode {
        BtMode::Plain => PairFlags {
            augment: false,
            bt_tag: false,
        },
        BtMode::Augment => PairFlags {
            augment: true,
            bt_tag: false,
        },
        BtMode::Tag => PairFlags {
            augment: false,
            bt_tag: true,
        },
        BtMode::TagAugment => PairFlags {
            augment: true,
            bt_tag: true,
        },
    };
    let mut out = plain_corpus(parallel);
    out.extend(bt.into_iter().map(|mut pair| {
        pair.origin = Origin::BackTranslated;
        CorpusEntry { pair, flags: bt_flags }
    }));
    Ok(out)
}

/// Surface forms of task tokens.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TaskTokens {
    overrides: HashMap<(Task, bool), String>,
}

impl TaskTokens {
    pub fn set(&mut self, task: Task, bt: bool, token: impl Into<String>) -> Result<()> {
        let token = token.into();
        if token.is_empty() || token.contains(char::is_whitespace) {
            return Err(Error::InvalidToken { token });
        }
        self.overrides.insert((task, bt), token);
        Ok(())
    }

    /// `<mtl:orig>`, `<mtl:swap>`, ...; bt-tagged pairs use `<mtl:bt>` for the
    /// original and `<mtl:bt+swap>` etc. for synthetic samples.
    pub fn token(&self, task: Task, bt: bool) -> String {
        if let Some(t) = self.overrides.get(&(task, bt)) {
            return t.clone();
        }
        match (task, bt) {
            (Task::Original, false) => "<mtl:orig>".to_owned(),
            (Task::Original, true) => "<mtl:bt>".to_owned(),
            (Task::Transform(t), false) => format!("<mtl:{t}>"),
            (Task::Transform(t), true) => format!("<mtl:bt+{t}>"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct StreamConfig {
    pub transforms: Vec<(TransformId, Alpha)>,
    pub seed: u64,
    pub max_batch_tokens: usize,
    pub bt_mode: BtMode,
    pub phase: Phase,
    pub task_tokens: TaskTokens,
    pub workers: usize,
}

impl StreamConfig {
    pub fn new(seed: u64, transforms: Vec<(TransformId, Alpha)>) -> Self {
        StreamConfig {
            transforms,
            seed,
            max_batch_tokens: DEFAULT_MAX_BATCH_TOKENS,
            bt_mode: BtMode::Plain,
            phase: Phase::Augment,
            task_tokens: TaskTokens::default(),
            workers: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.phase == Phase::Augment && self.transforms.is_empty() {
            return Err(Error::InvalidArgument(
                "at least one transform is required in the augment phase".into(),
            ));
        }
        let mut seen = HashSet::new();
        for (t, _) in &self.transforms {
            if !seen.insert(*t) {
                return Err(Error::InvalidArgument(format!("transform {t} configured twice")));
            }
        }
        if self.max_batch_tokens == 0 {
            return Err(Error::InvalidArgument("max_batch_tokens must be positive".into()));
        }
        Ok(())
    }

    fn needs(&self, id: TransformId) -> bool {
        self.phase == Phase::Augment && self.transforms.iter().any(|(t, _)| *t == id)
    }
}

/// Alignment-derived inputs for `mono` and `replace`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Resources<'a> {
    /// Source-to-target one-to-many alignments (`mono`).
    pub align_st: Option<&'a AlignmentTable>,
    /// One-to-one alignments (`replace`).
    pub one_to_one: Option<&'a AlignmentTable>,
    pub lexicon: Option<&'a BilingualLexicon>,
}

fn run_pool<T: Send>(workers: usize, job: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(job))
}

/// All samples of one epoch, in emission order.
pub fn epoch_stream(
    corpus: &[CorpusEntry],
    resources: &Resources<'_>,
    config: &StreamConfig,
    epoch: u64,
) -> Result<Vec<AugmentedSample>> {
    config.validate()?;
    if config.needs(TransformId::Mono) && resources.align_st.is_none() {
        return Err(Error::MissingResource {
            transform: "mono",
            what: "source-to-target alignments",
        });
    }
    if config.needs(TransformId::Replace) && (resources.one_to_one.is_none() || resources.lexicon.is_none()) {
        return Err(Error::MissingResource {
            transform: "replace",
            what: "one-to-one alignments and a bilingual lexicon",
        });
    }

    let mut shuffle_rng = derive_stream(config.seed, epoch, CORPUS_SENTINEL, Task::Original);
    let order = shuffled_indices(corpus.len(), &mut shuffle_rng);

    let per_pair = run_pool(config.workers, || {
        order
            .par_iter()
            .map(|&i| pair_samples(&corpus[i], resources, config, epoch))
            .collect::<Result<Vec<_>>>()
    })??;
    Ok(per_pair.into_iter().flatten().collect())
}

fn pair_samples(
    entry: &CorpusEntry,
    resources: &Resources<'_>,
    config: &StreamConfig,
    epoch: u64,
) -> Result<Vec<AugmentedSample>> {
    let pair = &entry.pair;
    let augment = entry.flags.augment && config.phase == Phase::Augment;
    let transforms: &[(TransformId, Alpha)] = if augment { &config.transforms } else { &[] };
    let weight = Weight::share_of(transforms.len() as u32 + 1);

    let mut out = Vec::with_capacity(transforms.len() + 1);
    out.push(AugmentedSample::original(pair));
    for &(id, alpha) in transforms {
        let mut rng = derive_stream(config.seed, epoch, pair.pair_id, Task::Transform(id));
        let sample = match id {
            TransformId::Swap => t_swap(pair, alpha, &mut rng),
            TransformId::Unk => t_unk(pair, alpha, &mut rng),
            TransformId::Source => t_source(pair),
            TransformId::Reverse => t_reverse(pair),
            TransformId::Mono => {
                let table = resources.align_st.expect("checked above");
                let a = table.get(&pair.pair_id).ok_or(Error::MissingAlignment(pair.pair_id))?;
                t_mono(pair, a)?
            }
            TransformId::Replace => {
                let table = resources.one_to_one.expect("checked above");
                let lexicon = resources.lexicon.expect("checked above");
                let a = table.get(&pair.pair_id).ok_or(Error::MissingAlignment(pair.pair_id))?;
                t_replace(pair, a, lexicon, alpha, &mut rng)?
            }
        };
        out.push(sample);
    }
    for s in &mut out {
        s.weight = weight;
        s.epoch = epoch;
        s.bt_tagged = entry.flags.bt_tag;
    }
    Ok(out)
}

/// Applies BPE to all three sequences of a sample. A masked `UNK` context
/// position expands to one `UNK` per subword of the label word, keeping
/// context and label the same length.
pub fn segment_sample(sample: &AugmentedSample, table: &MergeTable) -> AugmentedSample {
    let src = crate::subword::apply_bpe(&sample.src, table);
    let mut ctx = Vec::with_capacity(sample.tgt_lbl.len() * 2);
    let mut lbl = Vec::with_capacity(sample.tgt_lbl.len() * 2);
    for (c, l) in sample.tgt_ctx.iter().zip(&sample.tgt_lbl) {
        let pieces = table.segment_word(l);
        if c == l {
            ctx.extend(pieces.iter().cloned());
        } else if c == UNK {
            ctx.extend(std::iter::repeat_n(UNK.to_owned(), pieces.len()));
        } else {
            let mut other = table.segment_word(c);
            other.resize(pieces.len(), UNK.to_owned());
            ctx.extend(other);
        }
        lbl.extend(pieces);
    }
    AugmentedSample {
        src,
        tgt_ctx: TokenSeq::from_vec_unchecked(ctx),
        tgt_lbl: TokenSeq::from_vec_unchecked(lbl),
        ..sample.clone()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub samples: Vec<AugmentedSample>,
    pub token_count: usize,
    /// A single sample longer than the cap.
    pub oversize: bool,
}

/// Greedy packing by target tokens, preserving stream order.
pub fn make_batches(samples: Vec<AugmentedSample>, max_batch_tokens: usize) -> Vec<Batch> {
    let cap = max_batch_tokens.max(1);
    let mut batches = Vec::new();
    let mut current: Vec<AugmentedSample> = Vec::new();
    let mut count = 0usize;
    for sample in samples {
        let len = sample.tgt_lbl.len();
        if !current.is_empty() && count + len > cap {
            batches.push(Batch {
                samples: std::mem::take(&mut current),
                token_count: count,
                oversize: false,
            });
            count = 0;
        }
        count += len;
        current.push(sample);
    }
    if !current.is_empty() {
        batches.push(Batch {
            samples: current,
            token_count: count,
            oversize: false,
        });
    }
    for b in &mut batches {
        b.oversize = b.token_count > cap;
    }
    batches
}

/// One JSON Lines record of the batch stream.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleRecord {
    pub epoch: u64,
    pub pair_id: u64,
    pub task: Task,
    pub origin: Origin,
    pub weight: Weight,
    pub src: Vec<String>,
    pub tgt_ctx: Vec<String>,
    pub tgt_lbl: Vec<String>,
}

#[derive(Serialize)]
struct BatchEnd {
    batch_end: bool,
    token_count: usize,
}

impl SampleRecord {
    pub fn new(sample: &AugmentedSample, tokens: &TaskTokens) -> Self {
        let norm = |seq: &TokenSeq| seq.iter().map(|t| nfc(t)).collect::<Vec<_>>();
        let mut src = Vec::with_capacity(sample.src.len() + 1);
        src.push(nfc(&tokens.token(sample.task, sample.bt_tagged)));
        src.extend(norm(&sample.src));
        SampleRecord {
            epoch: sample.epoch,
            pair_id: sample.pair_id,
            task: sample.task,
            origin: sample.origin,
            weight: sample.weight,
            src,
            tgt_ctx: norm(&sample.tgt_ctx),
            tgt_lbl: norm(&sample.tgt_lbl),
        }
    }
}

/// Builds the batches of one epoch: stream, optional BPE, packing.
pub fn epoch_batches(
    corpus: &[CorpusEntry],
    resources: &Resources<'_>,
    config: &StreamConfig,
    merges: Option<&MergeTable>,
    epoch: u64,
) -> Result<Vec<Batch>> {
    let mut samples = epoch_stream(corpus, resources, config, epoch)?;
    if let Some(table) = merges {
        samples = run_pool(config.workers, || {
            samples.par_iter().map(|s| segment_sample(s, table)).collect()
        })?;
    }
    Ok(make_batches(samples, config.max_batch_tokens))
}

/// Writes samples and `batch_end` markers as JSON Lines.
pub fn write_batches<W: Write + ?Sized>(out: &mut W, batches: &[Batch], tokens: &TaskTokens) -> std::io::Result<()> {
    for batch in batches {
        for sample in &batch.samples {
            serde_json::to_writer(&mut *out, &SampleRecord::new(sample, tokens))?;
            out.write_all(b"\n")?;
        }
        serde_json::to_writer(
            &mut *out,
            &BatchEnd {
                batch_end: true,
                token_count: batch.token_count,
            },
        )?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
