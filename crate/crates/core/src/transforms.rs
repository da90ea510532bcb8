//! The six target-side transformations.
//!
//! Each transformation is a pure function of the pair, its parameters, and a
//! [`RandomStream`]. With `m` target words and fraction `alpha`:
//!
//! * `swap` exchanges `floor(alpha*m/2)` disjoint position pairs;
//! * `unk` masks `floor(alpha*m)` context positions with `UNK`;
//! * `replace` rewrites `min(floor(alpha*m), links)` aligned word pairs.

use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};

use crate::alignment::{target_to_source, AlignmentSet, BilingualLexicon};
use crate::corpus::{Origin, ParallelPair, TokenSeq};
use crate::error::{Error, Result};
use crate::rng::RandomStream;
use crate::subword::UNK;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TransformId {
    Swap,
    Unk,
    Source,
    Reverse,
    Mono,
    Replace,
}

impl TransformId {
    pub const ALL: [TransformId; 6] = [
        TransformId::Swap,
        TransformId::Unk,
        TransformId::Source,
        TransformId::Reverse,
        TransformId::Mono,
        TransformId::Replace,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TransformId::Swap => "swap",
            TransformId::Unk => "unk",
            TransformId::Source => "source",
            TransformId::Reverse => "reverse",
            TransformId::Mono => "mono",
            TransformId::Replace => "replace",
        }
    }

    /// Whether the output depends on `alpha` and random draws.
    pub fn is_random(self) -> bool {
        matches!(self, TransformId::Swap | TransformId::Unk | TransformId::Replace)
    }
}

impl fmt::Display for TransformId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TransformId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TransformId::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::UnknownTransform(s.to_owned()))
    }
}

/// Which task produced a sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Task {
    Original,
    Transform(TransformId),
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Original => "orig",
            Task::Transform(t) => t.name(),
        }
    }

    pub(crate) fn code(self) -> u8 {
        match self {
            Task::Original => 0,
            Task::Transform(t) => 1 + t as u8,
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for Task {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

/// Fraction of target words affected, in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Alpha(f64);

impl Alpha {
    pub const ZERO: Alpha = Alpha(0.0);

    pub fn new(value: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::InvalidArgument(format!("alpha {value} outside [0, 1]")));
        }
        Ok(Alpha(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// `floor(alpha * m)`. Products within 1e-9 below an integer round up so
    /// that decimal grid values such as 0.7 behave like exact tenths.
    pub fn affected(self, m: usize) -> usize {
        ((self.0 * m as f64) + 1e-9).floor() as usize
    }
}

/// A loss weight `1/den`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Weight {
    den: u32,
}

impl Weight {
    pub const ONE: Weight = Weight { den: 1 };

    /// The weight shared by the `tasks` samples of one pair.
    pub fn share_of(tasks: u32) -> Self {
        assert!(tasks > 0);
        Weight { den: tasks }
    }

    pub fn denominator(self) -> u32 {
        self.den
    }

    pub fn as_f64(self) -> f64 {
        1.0 / self.den as f64
    }
}

impl Serialize for Weight {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_f64(self.as_f64())
    }
}

/// A task-tagged training sample. `src` excludes the task token; `tgt_ctx` is
/// the decoder input and `tgt_lbl` the expected output.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedSample {
    pub task: Task,
    pub src: TokenSeq,
    pub tgt_ctx: TokenSeq,
    pub tgt_lbl: TokenSeq,
    pub weight: Weight,
    pub pair_id: u64,
    pub epoch: u64,
    pub origin: Origin,
    /// Set for back-translated pairs whose samples carry a bt task token.
    pub bt_tagged: bool,
}

impl AugmentedSample {
    /// The untouched pair as an `Original` sample with weight 1.
    pub fn original(pair: &ParallelPair) -> Self {
        AugmentedSample {
            task: Task::Original,
            src: pair.src.clone(),
            tgt_ctx: pair.tgt.clone(),
            tgt_lbl: pair.tgt.clone(),
            weight: Weight::ONE,
            pair_id: pair.pair_id,
            epoch: 0,
            origin: pair.origin,
            bt_tagged: false,
        }
    }

    fn with_target(pair: &ParallelPair, task: TransformId, tgt: TokenSeq) -> Self {
        AugmentedSample {
            task: Task::Transform(task),
            tgt_ctx: tgt.clone(),
            tgt_lbl: tgt,
            ..Self::original(pair)
        }
    }
}

pub fn t_swap(pair: &ParallelPair, alpha: Alpha, rng: &mut impl RandomStream) -> AugmentedSample {
    let m = pair.tgt.len();
    let swaps = alpha.affected(m) / 2;
    let mut tgt = pair.tgt.clone();
    if swaps > 0 {
        let positions = rng.distinct(m, 2 * swaps);
        let tokens = tgt.tokens_mut();
        for p in positions.chunks_exact(2) {
            tokens.swap(p[0], p[1]);
        }
    }
    AugmentedSample::with_target(pair, TransformId::Swap, tgt)
}

pub fn t_unk(pair: &ParallelPair, alpha: Alpha, rng: &mut impl RandomStream) -> AugmentedSample {
    let m = pair.tgt.len();
    let masked = alpha.affected(m);
    let mut ctx = pair.tgt.clone();
    if masked > 0 {
        let tokens = ctx.tokens_mut();
        for p in rng.distinct(m, masked) {
            tokens[p] = UNK.to_owned();
        }
    }
    AugmentedSample {
        task: Task::Transform(TransformId::Unk),
        tgt_ctx: ctx,
        ..AugmentedSample::original(pair)
    }
}

pub fn t_source(pair: &ParallelPair) -> AugmentedSample {
    AugmentedSample::with_target(pair, TransformId::Source, pair.src.clone())
}

pub fn t_reverse(pair: &ParallelPair) -> AugmentedSample {
    let mut tokens = pair.tgt.clone().into_inner();
    tokens.reverse();
    AugmentedSample::with_target(pair, TransformId::Reverse, TokenSeq::from_vec_unchecked(tokens))
}

/// Sort keys for monotone reordering: the aligned source index, or the key of
/// the nearest preceding aligned target position (-1 before any).
pub fn mono_keys(a_st: &AlignmentSet) -> Result<Vec<i64>> {
    let map = target_to_source(a_st)?;
    let mut last = -1i64;
    Ok(map
        .into_iter()
        .map(|s| {
            if let Some(s) = s {
                last = s as i64;
            }
            last
        })
        .collect())
}

pub fn t_mono(pair: &ParallelPair, a_st: &AlignmentSet) -> Result<AugmentedSample> {
    check_lengths(pair, a_st)?;
    let keys = mono_keys(a_st)?;
    let mut order: Vec<usize> = (0..keys.len()).collect();
    order.sort_by_key(|&j| keys[j]);
    let tokens = order.into_iter().map(|j| pair.tgt.tokens()[j].clone()).collect();
    Ok(AugmentedSample::with_target(
        pair,
        TransformId::Mono,
        TokenSeq::from_vec_unchecked(tokens),
    ))
}

pub fn t_replace(
    pair: &ParallelPair,
    one_to_one: &AlignmentSet,
    lexicon: &BilingualLexicon,
    alpha: Alpha,
    rng: &mut impl RandomStream,
) -> Result<AugmentedSample> {
    check_lengths(pair, one_to_one)?;
    if !one_to_one.is_one_to_one() {
        return Err(Error::NotOneToOne);
    }
    let links: Vec<(usize, usize)> = one_to_one.links().collect();
    let n = alpha.affected(pair.tgt.len()).min(links.len());
    let mut src = pair.src.clone();
    let mut tgt = pair.tgt.clone();
    if n > 0 {
        if lexicon.is_empty() {
            return Err(Error::EmptyLexicon(n));
        }
        let entries = lexicon.entry_list();
        for link in rng.distinct(links.len(), n) {
            let (s, t) = links[link];
            let entry = &entries[rng.below(entries.len())];
            src.tokens_mut()[s] = entry.source.clone();
            tgt.tokens_mut()[t] = entry.target.clone();
        }
    }
    Ok(AugmentedSample {
        task: Task::Transform(TransformId::Replace),
        src,
        tgt_ctx: tgt.clone(),
        tgt_lbl: tgt,
        ..AugmentedSample::original(pair)
    })
}

fn check_lengths(pair: &ParallelPair, a: &AlignmentSet) -> Result<()> {
    if (a.src_len(), a.tgt_len()) != (pair.src.len(), pair.tgt.len()) {
        return Err(Error::AlignmentLengthMismatch(
            a.src_len(),
            a.tgt_len(),
            pair.src.len(),
            pair.tgt.len(),
        ));
    }
    Ok(())
}
