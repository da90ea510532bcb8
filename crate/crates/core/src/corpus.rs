//! Whitespace-tokenized parallel corpora.
//!
//! A corpus is a pair of line-parallel UTF-8 files. Line `k` of each file
//! becomes the pair with `pair_id = k` (plus an optional offset when several
//! corpora are concatenated). Ids are never re-compacted after filtering, so
//! line-parallel side files such as word alignments stay addressable.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use unicode_normalization::{is_nfc, UnicodeNormalization};

use crate::error::{Error, Result};

/// An ordered list of non-empty, whitespace-free tokens.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenSeq(Vec<String>);

impl TokenSeq {
    /// Validates every token.
    pub fn new(tokens: Vec<String>) -> Result<Self> {
        if let Some(bad) = tokens.iter().find(|t| !is_valid_token(t)) {
            return Err(Error::InvalidToken { token: bad.clone() });
        }
        Ok(TokenSeq(tokens))
    }

    /// Splits on runs of whitespace and NFC-normalizes each token.
    pub fn from_line(line: &str) -> Self {
        TokenSeq(line.split_whitespace().map(nfc).collect())
    }

    pub(crate) fn from_vec_unchecked(tokens: Vec<String>) -> Self {
        debug_assert!(tokens.iter().all(|t| is_valid_token(t)));
        TokenSeq(tokens)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, String> {
        self.0.iter()
    }

    pub fn into_inner(self) -> Vec<String> {
        self.0
    }

    pub(crate) fn tokens_mut(&mut self) -> &mut [String] {
        &mut self.0
    }
}

impl fmt::Display for TokenSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for token in &self.0 {
            if !first {
                f.write_str(" ")?;
            }
            f.write_str(token)?;
            first = false;
        }
        Ok(())
    }
}

impl<'a> IntoIterator for &'a TokenSeq {
    type Item = &'a String;
    type IntoIter = std::slice::Iter<'a, String>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

impl TryFrom<Vec<&str>> for TokenSeq {
    type Error = Error;

    fn try_from(tokens: Vec<&str>) -> Result<Self> {
        TokenSeq::new(tokens.into_iter().map(str::to_owned).collect())
    }
}

fn is_valid_token(token: &str) -> bool {
    !token.is_empty() && !token.chars().any(char::is_whitespace)
}

pub(crate) fn nfc(token: &str) -> String {
    if is_nfc(token) {
        token.to_owned()
    } else {
        token.nfc().collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Origin {
    #[serde(rename = "parallel")]
    Parallel,
    #[serde(rename = "bt")]
    BackTranslated,
}

impl Origin {
    pub fn as_str(self) -> &'static str {
        match self {
            Origin::Parallel => "parallel",
            Origin::BackTranslated => "bt",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParallelPair {
    pub pair_id: u64,
    pub src: TokenSeq,
    pub tgt: TokenSeq,
    pub origin: Origin,
}

impl ParallelPair {
    pub fn new(pair_id: u64, src: TokenSeq, tgt: TokenSeq, origin: Origin) -> Result<Self> {
        if src.is_empty() {
            return Err(Error::EmptyLine {
                side: "source",
                line: pair_id as usize,
            });
        }
        if tgt.is_empty() {
            return Err(Error::EmptyLine {
                side: "target",
                line: pair_id as usize,
            });
        }
        Ok(ParallelPair {
            pair_id,
            src,
            tgt,
            origin,
        })
    }
}

/// Reads a parallel corpus; pair ids are the 0-based line numbers.
pub fn read_parallel(
    src_path: impl AsRef<Path>,
    tgt_path: impl AsRef<Path>,
    origin: Origin,
) -> Result<Vec<ParallelPair>> {
    read_parallel_from(src_path, tgt_path, origin, 0)
}

/// Like [`read_parallel`], with pair ids starting at `first_id`.
pub fn read_parallel_from(
    src_path: impl AsRef<Path>,
    tgt_path: impl AsRef<Path>,
    origin: Origin,
    first_id: u64,
) -> Result<Vec<ParallelPair>> {
    let src_lines = read_lines(src_path.as_ref())?;
    let tgt_lines = read_lines(tgt_path.as_ref())?;
    parse_parallel(&src_lines, &tgt_lines, origin, first_id)
}

/// Builds pairs from already-loaded lines.
pub fn parse_parallel<S: AsRef<str>, T: AsRef<str>>(
    src_lines: &[S],
    tgt_lines: &[T],
    origin: Origin,
    first_id: u64,
) -> Result<Vec<ParallelPair>> {
    if src_lines.len() != tgt_lines.len() {
        return Err(Error::LineCountMismatch {
            src_lines: src_lines.len(),
            tgt_lines: tgt_lines.len(),
        });
    }
    src_lines
        .iter()
        .zip(tgt_lines)
        .enumerate()
        .map(|(line, (s, t))| {
            let src = TokenSeq::from_line(s.as_ref());
            let tgt = TokenSeq::from_line(t.as_ref());
            if src.is_empty() {
                return Err(Error::EmptyLine {
                    side: "source",
                    line,
                });
            }
            if tgt.is_empty() {
                return Err(Error::EmptyLine {
                    side: "target",
                    line,
                });
            }
            Ok(ParallelPair {
                pair_id: first_id + line as u64,
                src,
                tgt,
                origin,
            })
        })
        .collect()
}

pub fn read_lines(path: &Path) -> Result<Vec<String>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    BufReader::new(file)
        .lines()
        .collect::<std::io::Result<Vec<_>>>()
        .map_err(|e| Error::io(path, e))
}

/// Keeps pairs whose sides both have a length in `[min_tokens, max_tokens]`.
pub fn filter_pairs(
    pairs: Vec<ParallelPair>,
    min_tokens: usize,
    max_tokens: usize,
) -> Result<Vec<ParallelPair>> {
    if min_tokens < 1 || max_tokens < min_tokens {
        return Err(Error::InvalidArgument(format!(
            "length bounds must satisfy 1 <= min <= max, got ({min_tokens}, {max_tokens})"
        )));
    }
    let keep = |seq: &TokenSeq| (min_tokens..=max_tokens).contains(&seq.len());
    Ok(pairs
        .into_iter()
        .filter(|p| keep(&p.src) && keep(&p.tgt))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Source,
    Target,
}

/// Writes one side of the corpus, tokens joined by single spaces.
pub fn write_side<W: Write + ?Sized>(out: &mut W, pairs: &[ParallelPair], side: Side) -> std::io::Result<()> {
    for pair in pairs {
        let seq = match side {
            Side::Source => &pair.src,
            Side::Target => &pair.tgt,
        };
        writeln!(out, "{seq}")?;
    }
    Ok(())
}
