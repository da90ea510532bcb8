use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use taskaug_core::alignment::{build_lexicon, intersect_tables, read_alignments, AlignmentTable};
use taskaug_core::analysis::{self, corpus_mean_csr, kde, linspace, position_curve, PerturbationDump, SimilarityRecord};
use taskaug_core::corpus::{self, filter_pairs, read_lines, read_parallel, read_parallel_from, write_side, Side};
use taskaug_core::stream::{combine_bt, epoch_batches, plain_corpus, write_batches};
use taskaug_core::subword::{apply_bpe, learn_bpe, undo_bpe};
use taskaug_core::{
    Alpha, BilingualLexicon, BtMode, CorpusEntry, MergeTable, Origin, ParallelPair, Phase, Resources, StreamConfig,
    Task, TaskTokens, TokenSeq, TransformId,
};

use crate::args::*;
use crate::CliError;

type CmdResult = Result<Value, CliError>;

/// Writes through a temp file in the target directory, renamed into place on success.
fn write_atomic(path: &Path, body: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<(), CliError> {
    write_atomic_with(path, |w| body(w).map_err(|e| CliError::Io(path.to_path_buf(), e)))
}

fn write_atomic_with(
    path: &Path,
    body: impl FnOnce(&mut dyn Write) -> Result<(), CliError>,
) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let io_err = |e: io::Error| CliError::Io(path.to_path_buf(), e);
    let tmp = tempfile::NamedTempFile::new_in(&dir).map_err(io_err)?;
    {
        let mut w = BufWriter::new(tmp.as_file());
        body(&mut w)?;
        w.flush().map_err(io_err)?;
    }
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn read_merges(path: &Path) -> Result<MergeTable, CliError> {
    let file = File::open(path).map_err(|e| CliError::Io(path.to_path_buf(), e))?;
    Ok(MergeTable::read(BufReader::new(file))?)
}

fn read_lexicon(path: &Path) -> Result<BilingualLexicon, CliError> {
    let file = File::open(path).map_err(|e| CliError::Io(path.to_path_buf(), e))?;
    Ok(BilingualLexicon::read_tsv(BufReader::new(file))?)
}

fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>, CliError> {
    let file = File::open(path).map_err(|e| CliError::Io(path.to_path_buf(), e))?;
    analysis::read_jsonl(BufReader::new(file)).map_err(|e| CliError::Data(e.at(path)))
}

trait AtPath {
    fn at(self, path: &Path) -> taskaug_core::Error;
}

impl AtPath for taskaug_core::Error {
    fn at(self, path: &Path) -> taskaug_core::Error {
        match self {
            taskaug_core::Error::Json { line, .. } => taskaug_core::Error::AtLine {
                path: path.to_path_buf(),
                line,
                source: Box::new(self),
            },
            other => other,
        }
    }
}

pub fn prepare(args: PrepareArgs) -> CmdResult {
    let pairs = read_parallel(&args.corpus.src, &args.corpus.tgt, Origin::Parallel)?;
    let total = pairs.len();
    let mut kept = filter_pairs(pairs, args.min_tokens, args.max_tokens)?;
    if let Some(merges) = &args.merges {
        let table = read_merges(merges)?;
        kept.retain(|p| {
            apply_bpe(&p.src, &table).len() <= args.max_subword_tokens
                && apply_bpe(&p.tgt, &table).len() <= args.max_subword_tokens
        });
    }
    let (src_out, tgt_out, ids_out) =
        (with_suffix(&args.out, ".src"), with_suffix(&args.out, ".tgt"), with_suffix(&args.out, ".ids"));
    write_atomic(&src_out, |w| write_side(w, &kept, Side::Source))?;
    write_atomic(&tgt_out, |w| write_side(w, &kept, Side::Target))?;
    write_atomic(&ids_out, |w| kept.iter().try_for_each(|p| writeln!(w, "{}", p.pair_id)))?;
    Ok(json!({"command": "prepare", "read": total, "kept": kept.len(), "out": args.out}))
}

pub fn learn(args: LearnBpeArgs) -> CmdResult {
    let pairs = read_parallel(&args.corpus.src, &args.corpus.tgt, Origin::Parallel)?;
    let lines: Vec<TokenSeq> = pairs.into_iter().flat_map(|p| [p.src, p.tgt]).collect();
    let table = learn_bpe(&lines, args.num_merges)?;
    write_atomic(&args.out, |w| table.write(w))?;
    Ok(json!({"command": "learn-bpe", "merges": table.len(), "requested": args.num_merges, "out": args.out}))
}

pub fn apply(args: ApplyBpeArgs) -> CmdResult {
    let lines = read_lines(&args.input)?;
    let table = match (&args.merges, args.undo) {
        (_, true) => None,
        (Some(m), false) => Some(read_merges(m)?),
        (None, false) => return Err(CliError::Usage("--merges is required unless --undo is given".into())),
    };
    let mut out = Vec::with_capacity(lines.len());
    for (i, line) in lines.iter().enumerate() {
        let seq = TokenSeq::from_line(line);
        let converted = match &table {
            Some(t) => apply_bpe(&seq, t),
            None => undo_bpe(&seq).map_err(|e| CliError::Data(line_error(e, &args.input, i)))?,
        };
        out.push(converted);
    }
    write_atomic(&args.out, |w| out.iter().try_for_each(|s| writeln!(w, "{s}")))?;
    Ok(json!({"command": "apply-bpe", "lines": out.len(), "undo": args.undo, "out": args.out}))
}

fn line_error(e: taskaug_core::Error, path: &Path, line: usize) -> taskaug_core::Error {
    taskaug_core::Error::AtLine {
        path: path.to_path_buf(),
        line,
        source: Box::new(e),
    }
}

fn one_to_one(pairs: &[ParallelPair], st: &Path, ts: &Path) -> Result<AlignmentTable, CliError> {
    let a_st = read_alignments(st, pairs, false)?;
    let a_ts = read_alignments(ts, pairs, true)?;
    Ok(intersect_tables(&a_st, &a_ts)?)
}

fn pharaoh_lines(pairs: &[ParallelPair], table: &AlignmentTable) -> Vec<String> {
    pairs.iter().map(|p| table[&p.pair_id].to_pharaoh()).collect()
}

pub fn align_intersect(args: AlignIntersectArgs) -> CmdResult {
    let pairs = read_parallel(&args.corpus.src, &args.corpus.tgt, Origin::Parallel)?;
    let table = one_to_one(&pairs, &args.align_st, &args.align_ts)?;
    let lines = pharaoh_lines(&pairs, &table);
    let links: usize = table.values().map(|a| a.len()).sum();
    write_atomic(&args.out, |w| lines.iter().try_for_each(|l| writeln!(w, "{l}")))?;
    Ok(json!({"command": "align-intersect", "pairs": pairs.len(), "links": links, "out": args.out}))
}

pub fn lexicon(args: LexiconArgs) -> CmdResult {
    let pairs = read_parallel(&args.corpus.src, &args.corpus.tgt, Origin::Parallel)?;
    let table = match (&args.align_oto, &args.align.align_st, &args.align.align_ts) {
        (Some(oto), _, _) => read_alignments(oto, &pairs, false)?,
        (None, Some(st), Some(ts)) => one_to_one(&pairs, st, ts)?,
        _ => {
            return Err(CliError::Usage(
                "lexicon needs --align-oto or both --align-st and --align-ts".into(),
            ))
        }
    };
    if let Some((id, _)) = table.iter().find(|(_, a)| !a.is_one_to_one()) {
        return Err(CliError::Data(taskaug_core::Error::InvalidArgument(format!(
            "alignment of pair {id} is not one-to-one"
        ))));
    }
    let lex = build_lexicon(&pairs, &table)?;
    write_atomic(&args.out, |w| lex.write_tsv(w))?;
    Ok(json!({"command": "lexicon", "entries": lex.len(), "out": args.out}))
}

/// Parses `name[:alpha]` items. Alpha-controlled transforms take values on
/// the 0.1..=0.9 grid and default to 0.5.
pub fn parse_transforms(spec: &str) -> Result<Vec<(TransformId, Alpha)>, CliError> {
    let mut out = Vec::new();
    for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (name, alpha) = match item.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (item, None),
        };
        let id: TransformId = name
            .parse()
            .map_err(|_| CliError::Usage(format!("unknown transform {name:?}")))?;
        let alpha = match (id.is_random(), alpha) {
            (false, Some(_)) => return Err(CliError::Usage(format!("transform {id} takes no alpha"))),
            (false, None) => Alpha::ZERO,
            (true, None) => Alpha::new(0.5).expect("valid"),
            (true, Some(text)) => {
                let value: f64 = text
                    .parse()
                    .map_err(|_| CliError::Usage(format!("bad alpha {text:?} for {id}")))?;
                let tenths = value * 10.0;
                if (tenths - tenths.round()).abs() > 1e-9 || !(1.0..=9.0).contains(&tenths.round()) {
                    return Err(CliError::Usage(format!(
                        "alpha for {id} must be one of 0.1, 0.2, ..., 0.9; got {text}"
                    )));
                }
                Alpha::new(tenths.round() / 10.0).expect("on grid")
            }
        };
        if out.iter().any(|(t, _)| *t == id) {
            return Err(CliError::Usage(format!("transform {id} listed twice")));
        }
        out.push((id, alpha));
    }
    Ok(out)
}

fn parse_task_tokens(items: &[String]) -> Result<TaskTokens, CliError> {
    let mut tokens = TaskTokens::default();
    for item in items {
        let (task, token) = item
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--task-token expects TASK=TOKEN, got {item:?}")))?;
        let (bt, name) = match task.strip_prefix("bt+") {
            Some(rest) => (true, rest),
            None if task == "bt" => (true, "orig"),
            None => (false, task),
        };
        let task = if name == "orig" {
            Task::Original
        } else {
            Task::Transform(name.parse().map_err(|_| CliError::Usage(format!("unknown task {task:?}")))?)
        };
        tokens.set(task, bt, token).map_err(|e| CliError::Usage(e.to_string()))?;
    }
    Ok(tokens)
}

fn load_corpus(corpus: &CorpusArgs, bt: &BtArgs) -> Result<Vec<CorpusEntry>, CliError> {
    let mode: BtMode = bt.bt_mode.parse().map_err(|e: taskaug_core::Error| CliError::Usage(e.to_string()))?;
    // Back-translated pairs are numbered after the parallel lines so that a
    // single alignment file can cover the concatenation.
    let src_lines = read_lines(&corpus.src)?;
    let tgt_lines = read_lines(&corpus.tgt)?;
    let parallel = corpus::parse_parallel(&src_lines, &tgt_lines, Origin::Parallel, 0)?;
    match (&bt.bt_src, &bt.bt_tgt) {
        (Some(bs), Some(bt_tgt)) => {
            let bt_pairs = read_parallel_from(bs, bt_tgt, Origin::BackTranslated, src_lines.len() as u64)?;
            Ok(combine_bt(parallel, bt_pairs, mode)?)
        }
        _ => Ok(plain_corpus(parallel)),
    }
}

pub fn augment(args: AugmentArgs) -> CmdResult {
    let transforms = parse_transforms(&args.transforms)?;
    let phase: Phase = args.phase.parse().map_err(|e: taskaug_core::Error| CliError::Usage(e.to_string()))?;
    if phase == Phase::Augment && transforms.is_empty() {
        return Err(CliError::Usage("--transforms must name at least one transform".into()));
    }
    if args.workers == 0 {
        return Err(CliError::Usage("--workers must be at least 1".into()));
    }
    let uses = |id| phase == Phase::Augment && transforms.iter().any(|(t, _)| *t == id);
    let needs_mono = uses(TransformId::Mono);
    let needs_replace = uses(TransformId::Replace);
    if needs_mono && args.align.align_st.is_none() {
        return Err(CliError::Usage("transform mono requires --align-st".into()));
    }
    if needs_replace && (args.align.align_st.is_none() || args.align.align_ts.is_none() || args.lexicon.is_none()) {
        return Err(CliError::Usage(
            "transform replace requires --align-st, --align-ts and --lexicon".into(),
        ));
    }

    let corpus = load_corpus(&args.corpus, &args.bt)?;
    let pairs: Vec<ParallelPair> = corpus.iter().map(|e| e.pair.clone()).collect();
    let align_st = match (&args.align.align_st, needs_mono || needs_replace) {
        (Some(p), true) => Some(read_alignments(p, &pairs, false)?),
        _ => None,
    };
    let oto = match (&args.align.align_ts, &align_st, needs_replace) {
        (Some(ts), Some(st), true) => Some(intersect_tables(st, &read_alignments(ts, &pairs, true)?)?),
        _ => None,
    };
    let lexicon = match (&args.lexicon, needs_replace) {
        (Some(p), true) => Some(read_lexicon(p)?),
        _ => None,
    };
    let merges = args.merges.as_deref().map(read_merges).transpose()?;

    let mut config = StreamConfig::new(args.seed, transforms);
    config.max_batch_tokens = args.max_batch_tokens;
    config.bt_mode = args.bt.bt_mode.parse()?;
    config.phase = phase;
    config.task_tokens = parse_task_tokens(&args.task_tokens)?;
    config.workers = args.workers;
    config.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let resources = Resources {
        align_st: align_st.as_ref(),
        one_to_one: oto.as_ref(),
        lexicon: lexicon.as_ref(),
    };

    let mut samples = 0usize;
    let mut batches = 0usize;
    let mut oversize = 0usize;
    let mut emit = |w: &mut dyn Write| -> Result<(), CliError> {
        for epoch in args.epoch..args.epoch + args.epochs {
            let epoch_batches = epoch_batches(&corpus, &resources, &config, merges.as_ref(), epoch)?;
            samples += epoch_batches.iter().map(|b| b.samples.len()).sum::<usize>();
            batches += epoch_batches.len();
            oversize += epoch_batches.iter().filter(|b| b.oversize).count();
            write_batches(w, &epoch_batches, &config.task_tokens).map_err(|e| CliError::Io("<stream>".into(), e))?;
        }
        Ok(())
    };
    match &args.out {
        Some(path) => write_atomic_with(path, &mut emit)?,
        None => {
            let stdout = io::stdout();
            let mut w = BufWriter::new(stdout.lock());
            emit(&mut w)?;
            w.flush().map_err(|e| CliError::Io("<stdout>".into(), e))?;
        }
    }
    Ok(json!({
        "command": "augment",
        "pairs": corpus.len(),
        "epochs": args.epochs,
        "samples": samples,
        "batches": batches,
        "oversize_batches": oversize,
        "out": args.out,
    }))
}

pub fn combine(args: CombineBtArgs) -> CmdResult {
    if args.bt.bt_src.is_none() {
        return Err(CliError::Usage("combine-bt requires --bt-src and --bt-tgt".into()));
    }
    let corpus = load_corpus(&args.corpus, &args.bt)?;
    let pairs: Vec<ParallelPair> = corpus.iter().map(|e| e.pair.clone()).collect();
    write_atomic(&with_suffix(&args.out, ".src"), |w| write_side(w, &pairs, Side::Source))?;
    write_atomic(&with_suffix(&args.out, ".tgt"), |w| write_side(w, &pairs, Side::Target))?;
    write_atomic(&with_suffix(&args.out, ".flags"), |w| {
        writeln!(w, "pair_id\torigin\taugment\tbt_tag")?;
        corpus.iter().try_for_each(|e| {
            writeln!(
                w,
                "{}\t{}\t{}\t{}",
                e.pair.pair_id,
                e.pair.origin.as_str(),
                e.flags.augment,
                e.flags.bt_tag
            )
        })
    })?;
    let bt = corpus.iter().filter(|e| e.pair.origin == Origin::BackTranslated).count();
    Ok(json!({"command": "combine-bt", "pairs": corpus.len(), "bt_pairs": bt, "mode": args.bt.bt_mode, "out": args.out}))
}

pub fn analyze_source(args: AnalyzeSourceArgs) -> CmdResult {
    let dumps: Vec<PerturbationDump> = read_jsonl(&args.dumps)?;
    let stats = corpus_mean_csr(&dumps)?;
    let curve = position_curve(&dumps, args.degree)?;
    write_atomic(&args.out, |w| {
        serde_json::to_writer(&mut *w, &curve)?;
        writeln!(w)
    })?;
    Ok(json!({
        "command": "analyze-source",
        "sentences": dumps.len(),
        "mean_csr": stats.mean,
        "std_csr": stats.std,
        "tokens": stats.tokens,
        "skipped": stats.skipped,
        "curve": curve,
        "out": args.out,
    }))
}

pub fn analyze_kde(args: AnalyzeKdeArgs) -> CmdResult {
    let records: Vec<SimilarityRecord> = read_jsonl(&args.embeddings)?;
    let cosines = records.iter().map(|r| r.cosine()).collect::<Result<Vec<_>, _>>()?;
    if cosines.is_empty() {
        return Err(CliError::Data(taskaug_core::Error::TooFewValues { needed: 1, got: 0 }));
    }
    if !args.bandwidth.is_finite() || args.bandwidth <= 0.0 {
        return Err(CliError::Usage(format!("--bandwidth must be positive, got {}", args.bandwidth)));
    }
    let lo = cosines.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = cosines.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let start = args.grid_min.unwrap_or(lo - 6.0 * args.bandwidth);
    let end = args.grid_max.unwrap_or(hi + 6.0 * args.bandwidth);
    if start.is_nan() || end.is_nan() || end < start || args.grid_points < 2 {
        return Err(CliError::Usage("grid needs --grid-min <= --grid-max and at least 2 points".into()));
    }
    let grid = linspace(start, end, args.grid_points);
    let density = kde(&cosines, args.bandwidth, &grid)?;
    write_atomic(&args.out, |w| {
        grid.iter().zip(&density).try_for_each(|(x, d)| writeln!(w, "{x}\t{d}"))
    })?;
    let mean = cosines.iter().sum::<f64>() / cosines.len() as f64;
    Ok(json!({
        "command": "analyze-kde",
        "records": cosines.len(),
        "mean_cosine": mean,
        "bandwidth": args.bandwidth,
        "grid": [start, end, args.grid_points],
        "out": args.out,
    }))
}
