use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line count mismatch: source has {src_lines} lines, target has {tgt_lines}")]
    LineCountMismatch { src_lines: usize, tgt_lines: usize },

    #[error("empty {side} sentence at line {line}")]
    EmptyLine { side: &'static str, line: usize },

    #[error("invalid token {token:?}: tokens must be non-empty and contain no whitespace")]
    InvalidToken { token: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("cannot learn merges from an empty corpus")]
    EmptyCorpus,

    #[error("malformed merge line {line}: {text:?}")]
    MalformedMerge { line: usize, text: String },

    #[error("dangling continuation subword {token:?} at end of sequence")]
    DanglingContinuation { token: String },

    #[error("malformed alignment item {item:?}")]
    MalformedAlignment { item: String },

    #[error("alignment item {item:?} out of range for lengths ({src_len}, {tgt_len})")]
    AlignmentOutOfRange {
        item: String,
        src_len: usize,
        tgt_len: usize,
    },

    #[error("alignment length mismatch: ({0}, {1}) vs ({2}, {3})")]
    AlignmentLengthMismatch(usize, usize, usize, usize),

    #[error("target index {target} has {links} links; expected at most one")]
    MultiLinkTarget { target: usize, links: usize },

    #[error("alignment is not one-to-one")]
    NotOneToOne,

    #[error("alignment refers to unknown pair_id {0}")]
    UnknownPair(u64),

    #[error("missing alignment for pair_id {0}")]
    MissingAlignment(u64),

    #[error("duplicate pair_id {0}")]
    DuplicatePairId(u64),

    #[error("lexicon is empty but {0} replacements were requested")]
    EmptyLexicon(usize),

    #[error("malformed lexicon line {line}: {text:?}")]
    MalformedLexicon { line: usize, text: String },

    #[error("unknown back-translation mode {0:?}")]
    UnknownBtMode(String),

    #[error("unknown transform {0:?}")]
    UnknownTransform(String),

    #[error("{transform} requires {what}")]
    MissingResource {
        transform: &'static str,
        what: &'static str,
    },

    #[error("need at least {needed} values, got {got}")]
    TooFewValues { needed: usize, got: usize },

    #[error("negative contribution {0}")]
    NegativeContribution(f64),

    #[error("no scorable tokens in dumps")]
    NoTokens,

    #[error("least-squares system is rank deficient (condition estimate {condition:.3e})")]
    RankDeficient { condition: f64 },

    #[error("invalid dump {id}: {reason}")]
    InvalidDump { id: u64, reason: String },

    #[error("invalid similarity record {id}: {reason}")]
    InvalidRecord { id: u64, reason: String },

    #[error("zero-norm vector")]
    ZeroVector,

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("malformed JSON at line {line}: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },

    #[error("{path}:{line}: {source}")]
    AtLine {
        path: PathBuf,
        line: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn at_line(self, path: impl Into<PathBuf>, line: usize) -> Self {
        Error::AtLine {
            path: path.into(),
            line,
            source: Box::new(self),
        }
    }
}
