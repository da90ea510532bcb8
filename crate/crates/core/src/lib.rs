//! Deterministic multi-task data augmentation for sequence-to-sequence
//! corpora.
//!
//! The crate reads whitespace-tokenized parallel corpora, derives word
//! alignments and a bilingual lexicon, applies six target-side
//! transformations, and assembles per-epoch task-tagged sample streams with
//! loss weights and token-count batches. The [`analysis`] module computes
//! source-contribution statistics and embedding-similarity densities from
//! model dumps.

pub mod alignment;
pub mod analysis;
pub mod corpus;
mod error;
pub mod rng;
pub mod stream;
pub mod subword;
pub mod transforms;

pub use alignment::{AlignmentSet, AlignmentTable, BilingualLexicon, LexiconEntry};
pub use corpus::{Origin, ParallelPair, TokenSeq};
pub use error::{Error, Result};
pub use rng::{derive_stream, DrawStream, RandomStream};
pub use stream::{Batch, BtMode, CorpusEntry, Phase, Resources, StreamConfig, TaskTokens};
pub use subword::MergeTable;
pub use transforms::{Alpha, AugmentedSample, Task, TransformId, Weight};
