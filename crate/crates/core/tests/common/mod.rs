//! Fixtures and independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::{HashMap, VecDeque};

use taskaug_core::{
    derive_stream, AlignmentSet, AlignmentTable, BilingualLexicon, DrawStream, LexiconEntry, Origin,
    ParallelPair, RandomStream, Task, TokenSeq,
};

/// A `RandomStream` that replays fixed values in order.
pub struct Scripted(VecDeque<usize>);

impl Scripted {
    pub fn new(values: &[usize]) -> Self {
        Scripted(values.iter().copied().collect())
    }

    pub fn exhausted(&self) -> bool {
        self.0.is_empty()
    }
}

impl RandomStream for Scripted {
    fn below(&mut self, n: usize) -> usize {
        let v = self.0.pop_front().expect("script exhausted");
        assert!(v < n, "scripted value {v} out of range {n}");
        v
    }

    fn distinct(&mut self, n: usize, k: usize) -> Vec<usize> {
        (0..k).map(|_| self.below(n)).collect()
    }
}

pub fn seq(line: &str) -> TokenSeq {
    TokenSeq::from_line(line)
}

pub fn pair(id: u64, src: &str, tgt: &str) -> ParallelPair {
    ParallelPair::new(id, seq(src), seq(tgt), Origin::Parallel).unwrap()
}

pub const REF_SRC: &str = "Es gibt andere Möglichkeiten , die Pyramide zu durchbrechen .";
pub const REF_TGT: &str = "There 's other ways of breaking the pyramid .";

pub fn reference_pair() -> ParallelPair {
    pair(0, REF_SRC, REF_TGT)
}

pub fn reference_alignment() -> AlignmentSet {
    AlignmentSet::new(
        [(0, 1), (1, 0), (2, 2), (3, 3), (5, 6), (6, 7), (7, 4), (8, 5), (9, 8)],
        10,
        9,
    )
    .unwrap()
}

/// Test-side random source built on the crate's own keyed streams, so test
/// inputs are reproducible without an extra dependency.
pub struct Gen(DrawStream);

impl Gen {
    pub fn new(seed: u64) -> Self {
        Gen(derive_stream(seed, 0xfeed, 0xbeef, Task::Original))
    }

    pub fn below(&mut self, n: usize) -> usize {
        self.0.below(n)
    }

    pub fn range(&mut self, lo: usize, hi: usize) -> usize {
        lo + self.0.below(hi - lo + 1)
    }

    /// Uniform in `[0, 1)` with 53 bits.
    pub fn unit(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn shuffle<T>(&mut self, v: &mut [T]) {
        for i in (1..v.len()).rev() {
            let j = self.below(i + 1);
            v.swap(i, j);
        }
    }

    pub fn word(&mut self, alphabet: &[char], max_len: usize) -> String {
        let len = self.range(1, max_len);
        (0..len).map(|_| alphabet[self.below(alphabet.len())]).collect()
    }
}

/// A pair whose tokens are all distinct (`s0 s1 ...` / `t0 t1 ...`).
pub fn distinct_pair(id: u64, src_len: usize, tgt_len: usize) -> ParallelPair {
    let side = |p: &str, n: usize| (0..n).map(|i| format!("{p}{i}")).collect::<Vec<_>>().join(" ");
    pair(id, &side("s", src_len), &side("t", tgt_len))
}

/// A random one-to-one alignment with `links` links.
pub fn random_one_to_one(g: &mut Gen, src_len: usize, tgt_len: usize, links: usize) -> AlignmentSet {
    let mut s: Vec<usize> = (0..src_len).collect();
    let mut t: Vec<usize> = (0..tgt_len).collect();
    g.shuffle(&mut s);
    g.shuffle(&mut t);
    AlignmentSet::new(s.into_iter().zip(t).take(links), src_len, tgt_len).unwrap()
}

/// A random alignment where every target is linked to at most one source,
/// while sources may link to several targets.
pub fn random_one_to_many(g: &mut Gen, src_len: usize, tgt_len: usize) -> AlignmentSet {
    let mut links = Vec::new();
    for t in 0..tgt_len {
        if g.below(3) > 0 {
            links.push((g.below(src_len), t));
        }
    }
    AlignmentSet::new(links, src_len, tgt_len).unwrap()
}

/// Lexicon of words that never occur in generated corpora.
pub fn foreign_lexicon(n: usize) -> BilingualLexicon {
    BilingualLexicon::from_entries(
        (0..n)
            .map(|i| LexiconEntry {
                source: format!("LEXS{i}"),
                target: format!("LEXT{i}"),
                count: 1,
            })
            .collect(),
    )
    .unwrap()
}

/// A small corpus with both alignment tables and a lexicon.
pub struct Fixture {
    pub pairs: Vec<ParallelPair>,
    pub align_st: AlignmentTable,
    pub one_to_one: AlignmentTable,
    pub lexicon: BilingualLexicon,
}

pub fn fixture(seed: u64, n: usize) -> Fixture {
    let mut g = Gen::new(seed);
    let mut pairs = Vec::with_capacity(n);
    let mut align_st = HashMap::new();
    let mut one_to_one = HashMap::new();
    for id in 0..n as u64 {
        let sl = g.range(2, 20);
        let tl = g.range(2, 20);
        let p = distinct_pair(id, sl, tl);
        align_st.insert(id, random_one_to_many(&mut g, sl, tl));
        let links = g.range(0, sl.min(tl));
        one_to_one.insert(id, random_one_to_one(&mut g, sl, tl, links));
        pairs.push(p);
    }
    Fixture {
        pairs,
        align_st,
        one_to_one,
        lexicon: foreign_lexicon(25),
    }
}

// ---- oracles -------------------------------------------------------------

/// Textbook two-pass population variance.
pub fn two_pass_variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n
}

pub fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    xs.windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| (x[1] - x[0]) * (y[0] + y[1]) / 2.0)
        .sum()
}

pub fn sum_squared_residuals(xs: &[f64], ys: &[f64], coef: &[f64]) -> f64 {
    xs.iter()
        .zip(ys)
        .map(|(&x, &y)| {
            let fx: f64 = coef.iter().enumerate().map(|(k, c)| c * x.powi(k as i32)).sum();
            (y - fx).powi(2)
        })
        .sum()
}

/// Mono keys recomputed from the definition.
pub fn oracle_mono_keys(a: &AlignmentSet) -> Vec<i64> {
    let mut src_of = vec![None; a.tgt_len()];
    for (s, t) in a.links() {
        src_of[t] = Some(s as i64);
    }
    let mut keys = Vec::with_capacity(src_of.len());
    let mut prev = -1;
    for s in src_of {
        prev = s.unwrap_or(prev);
        keys.push(prev);
    }
    keys
}

/// Enumerates every permutation of `0..m` and returns those whose keys are
/// non-decreasing and which keep equal-key positions in original order.
pub fn brute_force_monotone_orders(keys: &[i64]) -> Vec<Vec<usize>> {
    let mut found = Vec::new();
    let mut perm: Vec<usize> = (0..keys.len()).collect();
    permute(&mut perm, 0, &mut |p| {
        let ok = p.windows(2).all(|w| {
            let (a, b) = (w[0], w[1]);
            keys[a] < keys[b] || (keys[a] == keys[b] && a < b)
        });
        if ok {
            found.push(p.to_vec());
        }
    });
    found
}

fn permute(v: &mut Vec<usize>, k: usize, visit: &mut impl FnMut(&[usize])) {
    if k == v.len() {
        visit(v);
        return;
    }
    for i in k..v.len() {
        v.swap(k, i);
        permute(v, k + 1, visit);
        v.swap(k, i);
    }
}

pub fn positions_differing(a: &TokenSeq, b: &TokenSeq) -> usize {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

pub fn sorted_tokens(s: &TokenSeq) -> Vec<String> {
    let mut v = s.tokens().to_vec();
    v.sort();
    v
}
