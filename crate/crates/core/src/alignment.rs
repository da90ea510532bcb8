//! Word alignments in Pharaoh format and the bilingual lexicon built from them.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{BufRead, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::corpus::{nfc, read_lines, ParallelPair};
use crate::error::{Error, Result};

/// A set of `(source index, target index)` links, 0-based.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AlignmentSet {
    links: BTreeSet<(usize, usize)>,
    src_len: usize,
    tgt_len: usize,
}

impl AlignmentSet {
    pub fn new(
        links: impl IntoIterator<Item = (usize, usize)>,
        src_len: usize,
        tgt_len: usize,
    ) -> Result<Self> {
        let links: BTreeSet<_> = links.into_iter().collect();
        if let Some(&(s, t)) = links.iter().find(|&&(s, t)| s >= src_len || t >= tgt_len) {
            return Err(Error::AlignmentOutOfRange {
                item: format!("{s}-{t}"),
                src_len,
                tgt_len,
            });
        }
        Ok(AlignmentSet {
            links,
            src_len,
            tgt_len,
        })
    }

    pub fn empty(src_len: usize, tgt_len: usize) -> Self {
        AlignmentSet {
            links: BTreeSet::new(),
            src_len,
            tgt_len,
        }
    }

    /// Links in ascending `(s, t)` order.
    pub fn links(&self) -> impl ExactSizeIterator<Item = (usize, usize)> + '_ {
        self.links.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    pub fn contains(&self, s: usize, t: usize) -> bool {
        self.links.contains(&(s, t))
    }

    pub fn src_len(&self) -> usize {
        self.src_len
    }

    pub fn tgt_len(&self) -> usize {
        self.tgt_len
    }

    /// Swaps the roles of source and target.
    pub fn transposed(&self) -> Self {
        AlignmentSet {
            links: self.links.iter().map(|&(s, t)| (t, s)).collect(),
            src_len: self.tgt_len,
            tgt_len: self.src_len,
        }
    }

    pub fn is_one_to_one(&self) -> bool {
        let mut seen_s = BTreeSet::new();
        let mut seen_t = BTreeSet::new();
        self.links
            .iter()
            .all(|&(s, t)| seen_s.insert(s) && seen_t.insert(t))
    }

    /// Renders the links as a Pharaoh line.
    pub fn to_pharaoh(&self) -> String {
        self.links
            .iter()
            .map(|(s, t)| format!("{s}-{t}"))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Parses a line of space-separated `i-j` items.
pub fn parse_pharaoh(line: &str, src_len: usize, tgt_len: usize) -> Result<AlignmentSet> {
    let mut links = BTreeSet::new();
    for item in line.split_whitespace() {
        let malformed = || Error::MalformedAlignment {
            item: item.to_owned(),
        };
        let (s, t) = item.split_once('-').ok_or_else(malformed)?;
        let s: usize = s.parse().map_err(|_| malformed())?;
        let t: usize = t.parse().map_err(|_| malformed())?;
        if s >= src_len || t >= tgt_len {
            return Err(Error::AlignmentOutOfRange {
                item: item.to_owned(),
                src_len,
                tgt_len,
            });
        }
        links.insert((s, t));
    }
    Ok(AlignmentSet {
        links,
        src_len,
        tgt_len,
    })
}

/// Intersects two alignments given in `(s, t)` orientation and prunes the
/// result to one-to-one: any index still occurring in more than one link
/// loses all of its links.
pub fn intersect(a_st: &AlignmentSet, a_ts: &AlignmentSet) -> Result<AlignmentSet> {
    if (a_st.src_len, a_st.tgt_len) != (a_ts.src_len, a_ts.tgt_len) {
        return Err(Error::AlignmentLengthMismatch(
            a_st.src_len,
            a_st.tgt_len,
            a_ts.src_len,
            a_ts.tgt_len,
        ));
    }
    let common: Vec<(usize, usize)> = a_st.links.intersection(&a_ts.links).copied().collect();
    let mut src_deg: HashMap<usize, usize> = HashMap::new();
    let mut tgt_deg: HashMap<usize, usize> = HashMap::new();
    for &(s, t) in &common {
        *src_deg.entry(s).or_default() += 1;
        *tgt_deg.entry(t).or_default() += 1;
    }
    let links = common
        .into_iter()
        .filter(|(s, t)| src_deg[s] == 1 && tgt_deg[t] == 1)
        .collect();
    Ok(AlignmentSet {
        links,
        src_len: a_st.src_len,
        tgt_len: a_st.tgt_len,
    })
}

/// Inverts a one-to-many source-to-target alignment into a partial map
/// `target index -> source index`, indexed by target position.
pub fn target_to_source(a_st: &AlignmentSet) -> Result<Vec<Option<usize>>> {
    let mut map = vec![None; a_st.tgt_len];
    let mut degree = vec![0usize; a_st.tgt_len];
    for &(s, t) in &a_st.links {
        degree[t] += 1;
        map[t] = Some(s);
    }
    if let Some((target, &links)) = degree.iter().enumerate().find(|(_, &d)| d > 1) {
        return Err(Error::MultiLinkTarget { target, links });
    }
    Ok(map)
}

/// Alignments keyed by `pair_id`.
pub type AlignmentTable = HashMap<u64, AlignmentSet>;

/// Reads a Pharaoh file line-parallel with the pre-filter corpus. Only lines
/// whose number matches a pair id in `pairs` are kept. With `reversed`, items
/// are read as `t-s` and flipped into `(s, t)` orientation.
pub fn read_alignments(path: &Path, pairs: &[ParallelPair], reversed: bool) -> Result<AlignmentTable> {
    let lines = read_lines(path)?;
    let mut table = AlignmentTable::with_capacity(pairs.len());
    for pair in pairs {
        let line_no = pair.pair_id as usize;
        let line = lines
            .get(line_no)
            .ok_or(Error::MissingAlignment(pair.pair_id))?;
        let set = if reversed {
            parse_pharaoh(line, pair.tgt.len(), pair.src.len()).map(|a| a.transposed())
        } else {
            parse_pharaoh(line, pair.src.len(), pair.tgt.len())
        }
        .map_err(|e| e.at_line(path, line_no))?;
        table.insert(pair.pair_id, set);
    }
    Ok(table)
}

/// Intersects two directional tables pair by pair.
pub fn intersect_tables(st: &AlignmentTable, ts: &AlignmentTable) -> Result<AlignmentTable> {
    st.iter()
        .map(|(&id, a)| {
            let b = ts.get(&id).ok_or(Error::MissingAlignment(id))?;
            Ok((id, intersect(a, b)?))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexiconEntry {
    pub source: String,
    pub target: String,
    pub count: u64,
}

/// Source word -> most frequently aligned target word.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BilingualLexicon {
    entries: Vec<LexiconEntry>,
    index: HashMap<String, usize>,
}

impl BilingualLexicon {
    /// Entries are sorted by source word; duplicates are rejected.
    pub fn from_entries(mut entries: Vec<LexiconEntry>) -> Result<Self> {
        entries.sort_by(|a, b| a.source.cmp(&b.source));
        let mut index = HashMap::with_capacity(entries.len());
        for (i, e) in entries.iter().enumerate() {
            if e.count == 0 {
                return Err(Error::InvalidArgument(format!(
                    "lexicon entry {:?} has zero count",
                    e.source
                )));
            }
            if index.insert(e.source.clone(), i).is_some() {
                return Err(Error::InvalidArgument(format!(
                    "duplicate lexicon source word {:?}",
                    e.source
                )));
            }
        }
        Ok(BilingualLexicon { entries, index })
    }

    pub fn get(&self, source: &str) -> Option<&LexiconEntry> {
        self.index.get(source).map(|&i| &self.entries[i])
    }

    /// Entries in stable (source-sorted) order.
    pub fn entry_list(&self) -> &[LexiconEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// TSV lines `source<TAB>target<TAB>count`.
    pub fn write_tsv<W: Write + ?Sized>(&self, out: &mut W) -> std::io::Result<()> {
        for e in &self.entries {
            writeln!(out, "{}\t{}\t{}", e.source, e.target, e.count)?;
        }
        Ok(())
    }

    pub fn read_tsv<R: BufRead>(reader: R) -> Result<Self> {
        let mut entries = Vec::new();
        for (line_no, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io("<lexicon>", e))?;
            if line.is_empty() {
                continue;
            }
            let malformed = || Error::MalformedLexicon {
                line: line_no,
                text: line.clone(),
            };
            let mut cols = line.split('\t');
            let (Some(s), Some(t), Some(c), None) = (cols.next(), cols.next(), cols.next(), cols.next())
            else {
                return Err(malformed());
            };
            let count: u64 = c.trim().parse().map_err(|_| malformed())?;
            if s.is_empty() || t.is_empty() || s.contains(char::is_whitespace) || t.contains(char::is_whitespace) {
                return Err(malformed());
            }
            entries.push(LexiconEntry {
                source: nfc(s),
                target: nfc(t),
                count,
            });
        }
        Self::from_entries(entries)
    }
}

/// Counts every aligned `(source word, target word)` occurrence and keeps the
/// most frequent target per source word. Count ties go to the
/// lexicographically smallest target word.
pub fn build_lexicon(pairs: &[ParallelPair], one_to_one: &AlignmentTable) -> Result<BilingualLexicon> {
    let by_id: HashMap<u64, &ParallelPair> = pairs.iter().map(|p| (p.pair_id, p)).collect();
    let mut ids: Vec<u64> = one_to_one.keys().copied().collect();
    ids.sort_unstable();
    if let Some(&unknown) = ids.iter().find(|id| !by_id.contains_key(id)) {
        return Err(Error::UnknownPair(unknown));
    }

    let counts: HashMap<(&str, &str), u64> = ids
        .par_iter()
        .fold(HashMap::new, |mut acc: HashMap<(&str, &str), u64>, id| {
            let pair = by_id[id];
            for (s, t) in one_to_one[id].links() {
                if let (Some(sw), Some(tw)) = (pair.src.tokens().get(s), pair.tgt.tokens().get(t)) {
                    *acc.entry((sw.as_str(), tw.as_str())).or_default() += 1;
                }
            }
            acc
        })
        .reduce(HashMap::new, |mut a, b| {
            for (k, v) in b {
                *a.entry(k).or_default() += v;
            }
            a
        });

    let mut best: BTreeMap<&str, (&str, u64)> = BTreeMap::new();
    for ((s, t), c) in counts {
        match best.get(s) {
            Some(&(bt, bc)) if bc > c || (bc == c && bt <= t) => {}
            _ => {
                best.insert(s, (t, c));
            }
        }
    }
    BilingualLexicon::from_entries(
        best.into_iter()
            .map(|(s, (t, c))| LexiconEntry {
                source: s.to_owned(),
                target: t.to_owned(),
                count: c,
            })
            .collect(),
    )
}
