//! Joint byte-pair encoding.
//!
//! Merges are learned word-internally with an end-of-word marker (`</w>`)
//! attached to each word's last symbol. Applied segmentations are rendered
//! with the `@@` continuation convention: every subword except a word's last
//! carries the separator suffix.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, HashSet};
use std::io::{BufRead, Write};

use crate::corpus::TokenSeq;
use crate::error::{Error, Result};

pub const END_OF_WORD: &str = "</w>";
pub const DEFAULT_SEPARATOR: &str = "@@";
pub const UNK: &str = "UNK";

/// Tokens that are never split: `UNK` and task tokens of the form `<mtl:...>`.
pub fn is_reserved(token: &str) -> bool {
    token == UNK || (token.starts_with("<mtl:") && token.ends_with('>'))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MergeTable {
    merges: Vec<(String, String)>,
    separator: String,
    ranks: HashMap<(String, String), usize>,
}

impl MergeTable {
    pub fn new(merges: Vec<(String, String)>) -> Result<Self> {
        Self::with_separator(merges, DEFAULT_SEPARATOR)
    }

    pub fn with_separator(merges: Vec<(String, String)>, separator: &str) -> Result<Self> {
        if separator.is_empty() {
            return Err(Error::InvalidArgument("empty BPE separator".into()));
        }
        let mut ranks = HashMap::with_capacity(merges.len());
        for (rank, pair) in merges.iter().enumerate() {
            if ranks.insert(pair.clone(), rank).is_some() {
                return Err(Error::InvalidArgument(format!(
                    "duplicate merge {} {}",
                    pair.0, pair.1
                )));
            }
        }
        Ok(MergeTable {
            merges,
            separator: separator.to_owned(),
            ranks,
        })
    }

    pub fn merges(&self) -> &[(String, String)] {
        &self.merges
    }

    pub fn separator(&self) -> &str {
        &self.separator
    }

    pub fn len(&self) -> usize {
        self.merges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.merges.is_empty()
    }

    /// Parses the one-merge-per-line `LEFT RIGHT` format. A leading
    /// `#version` line is skipped.
    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        let mut merges = Vec::new();
        for (line_no, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io("<merges>", e))?;
            if line_no == 0 && line.starts_with("#version") {
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            match (parts.next(), parts.next(), parts.next()) {
                (Some(l), Some(r), None) => merges.push((l.to_owned(), r.to_owned())),
                _ => {
                    return Err(Error::MalformedMerge {
                        line: line_no,
                        text: line,
                    })
                }
            }
        }
        Self::new(merges)
    }

    pub fn write<W: Write + ?Sized>(&self, out: &mut W) -> std::io::Result<()> {
        for (l, r) in &self.merges {
            writeln!(out, "{l} {r}")?;
        }
        Ok(())
    }

    /// Segments one word into rendered subwords.
    pub fn segment_word(&self, word: &str) -> Vec<String> {
        if is_reserved(word) {
            return vec![word.to_owned()];
        }
        let mut symbols = initial_symbols(word);
        loop {
            let best = symbols
                .windows(2)
                .filter_map(|w| self.ranks.get(&(w[0].clone(), w[1].clone())).copied())
                .min();
            let Some(rank) = best else { break };
            let (left, right) = &self.merges[rank];
            let mut merged = Vec::with_capacity(symbols.len());
            let mut i = 0;
            while i < symbols.len() {
                if i + 1 < symbols.len() && &symbols[i] == left && &symbols[i + 1] == right {
                    merged.push(format!("{left}{right}"));
                    i += 2;
                } else {
                    merged.push(std::mem::take(&mut symbols[i]));
                    i += 1;
                }
            }
            symbols = merged;
        }
        let last = symbols.len() - 1;
        symbols
            .into_iter()
            .enumerate()
            .map(|(i, mut s)| {
                if i == last {
                    s.truncate(s.len() - END_OF_WORD.len());
                } else {
                    s.push_str(&self.separator);
                }
                s
            })
            .collect()
    }
}

fn initial_symbols(word: &str) -> Vec<String> {
    let mut symbols: Vec<String> = word.chars().map(String::from).collect();
    if let Some(last) = symbols.last_mut() {
        last.push_str(END_OF_WORD);
    }
    symbols
}

/// Segments every word of `seq`.
pub fn apply_bpe(seq: &TokenSeq, table: &MergeTable) -> TokenSeq {
    TokenSeq::from_vec_unchecked(seq.iter().flat_map(|w| table.segment_word(w)).collect())
}

/// Rejoins `@@`-continued subwords.
pub fn undo_bpe(seq: &TokenSeq) -> Result<TokenSeq> {
    undo_bpe_with(seq, DEFAULT_SEPARATOR)
}

pub fn undo_bpe_with(seq: &TokenSeq, separator: &str) -> Result<TokenSeq> {
    let mut out = Vec::with_capacity(seq.len());
    let mut pending = String::new();
    let mut last_continued: Option<&str> = None;
    for token in seq {
        match token.strip_suffix(separator) {
            Some(stem) => {
                pending.push_str(stem);
                last_continued = Some(token);
            }
            None => {
                pending.push_str(token);
                out.push(std::mem::take(&mut pending));
                last_continued = None;
            }
        }
    }
    if let Some(token) = last_continued {
        return Err(Error::DanglingContinuation {
            token: token.to_owned(),
        });
    }
    TokenSeq::new(out)
}

#[derive(Debug, PartialEq, Eq)]
struct Candidate {
    count: i64,
    left: String,
    right: String,
    pair: (u32, u32),
}

impl Ord for Candidate {
    // Highest count first; ties go to the lexicographically smallest pair.
    fn cmp(&self, other: &Self) -> Ordering {
        self.count
            .cmp(&other.count)
            .then_with(|| other.left.cmp(&self.left))
            .then_with(|| other.right.cmp(&self.right))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Default)]
struct Interner {
    names: Vec<String>,
    ids: HashMap<String, u32>,
}

impl Interner {
    fn intern(&mut self, s: &str) -> u32 {
        if let Some(&id) = self.ids.get(s) {
            return id;
        }
        let id = self.names.len() as u32;
        self.names.push(s.to_owned());
        self.ids.insert(s.to_owned(), id);
        id
    }

    fn name(&self, id: u32) -> &str {
        &self.names[id as usize]
    }
}

/// Learns up to `num_merges` merges over all words of `lines`.
///
/// Stops early once the most frequent pair occurs fewer than two times.
pub fn learn_bpe(lines: &[TokenSeq], num_merges: usize) -> Result<MergeTable> {
    let mut word_freq: HashMap<&str, u64> = HashMap::new();
    let mut total = 0usize;
    for word in lines.iter().flat_map(|l| l.iter()) {
        total += 1;
        if !is_reserved(word) {
            *word_freq.entry(word.as_str()).or_default() += 1;
        }
    }
    if total == 0 {
        return Err(Error::EmptyCorpus);
    }

    let mut interner = Interner::default();
    // Sorted so symbol ids (and hence iteration below) never depend on hash order.
    let mut vocab: Vec<(&str, u64)> = word_freq.into_iter().collect();
    vocab.sort_unstable();
    let mut words: Vec<(Vec<u32>, i64)> = vocab
        .into_iter()
        .map(|(w, f)| {
            let syms = initial_symbols(w).iter().map(|s| interner.intern(s)).collect();
            (syms, f as i64)
        })
        .collect();

    let mut counts: HashMap<(u32, u32), i64> = HashMap::new();
    let mut occurs: HashMap<(u32, u32), Vec<usize>> = HashMap::new();
    for (idx, (syms, freq)) in words.iter().enumerate() {
        for w in syms.windows(2) {
            let pair = (w[0], w[1]);
            *counts.entry(pair).or_default() += freq;
            occurs.entry(pair).or_default().push(idx);
        }
    }

    let candidate = |interner: &Interner, pair: (u32, u32), count: i64| Candidate {
        count,
        left: interner.name(pair.0).to_owned(),
        right: interner.name(pair.1).to_owned(),
        pair,
    };
    let mut heap: BinaryHeap<Candidate> = counts
        .iter()
        .map(|(&pair, &count)| candidate(&interner, pair, count))
        .collect();

    let mut merges = Vec::with_capacity(num_merges.min(4096));
    while merges.len() < num_merges {
        let Some(best) = pop_current(&mut heap, &counts) else {
            break;
        };
        if best.count < 2 {
            break;
        }
        let (a, b) = best.pair;
        let merged = interner.intern(&format!("{}{}", best.left, best.right));
        merges.push((best.left, best.right));

        let mut touched: HashSet<usize> = HashSet::new();
        let mut changed: HashSet<(u32, u32)> = HashSet::new();
        let affected = occurs.remove(&(a, b)).unwrap_or_default();
        for idx in affected {
            if !touched.insert(idx) {
                continue;
            }
            let (syms, freq) = &mut words[idx];
            if !syms.windows(2).any(|w| w[0] == a && w[1] == b) {
                continue;
            }
            for w in syms.windows(2) {
                let pair = (w[0], w[1]);
                *counts.get_mut(&pair).expect("pair counted") -= *freq;
                changed.insert(pair);
            }
            let mut next = Vec::with_capacity(syms.len());
            let mut i = 0;
            while i < syms.len() {
                if i + 1 < syms.len() && syms[i] == a && syms[i + 1] == b {
                    next.push(merged);
                    i += 2;
                } else {
                    next.push(syms[i]);
                    i += 1;
                }
            }
            *syms = next;
            for w in syms.windows(2) {
                let pair = (w[0], w[1]);
                *counts.entry(pair).or_default() += *freq;
                changed.insert(pair);
                if pair != (a, b) {
                    occurs.entry(pair).or_default().push(idx);
                }
            }
        }
        counts.remove(&(a, b));
        changed.remove(&(a, b));
        for pair in changed {
            match counts.get(&pair).copied() {
                Some(c) if c > 0 => heap.push(candidate(&interner, pair, c)),
                _ => {
                    counts.remove(&pair);
                }
            }
        }
    }
    MergeTable::new(merges)
}

fn pop_current(heap: &mut BinaryHeap<Candidate>, counts: &HashMap<(u32, u32), i64>) -> Option<Candidate> {
    while let Some(top) = heap.pop() {
        if counts.get(&top.pair) == Some(&top.count) {
            return Some(top);
        }
    }
    None
}
