//! Exact k-mer anchoring against a center sequence.
//!
//! The center's k-mers go into a keyword tree with failure links, so a query
//! is scanned once, left to right, and every shared k-mer is reported as it
//! is completed. Hits on the same diagonal are merged into maximal blocks and
//! a co-linear chain of blocks becomes the anchor set for the pairwise step.

use std::collections::VecDeque;
use std::ops::Range;

use crate::error::{Error, Result};
use crate::seqio::Sequence;

const NONE: u32 = u32::MAX;
const ROOT: u32 = 0;
const SIGMA: usize = 4;

/// Default k-mer length for nucleotide anchoring.
pub const DEFAULT_KMER: usize = 15;

/// Maps a nucleotide to its trie symbol. T and U share a symbol; anything
/// else (N, ambiguity codes) cannot be part of an anchor.
#[inline]
fn symbol(r: u8) -> Option<usize> {
    match r {
        b'A' => Some(0),
        b'C' => Some(1),
        b'G' => Some(2),
        b'T' | b'U' => Some(3),
        _ => None,
    }
}

#[derive(Debug, Clone)]
pub struct KmerTrie {
    k: usize,
    children: Vec<[u32; SIGMA]>,
    fail: Vec<u32>,
    depth: Vec<u32>,
    /// For leaf nodes, an index into `leaf_offsets`.
    leaf: Vec<u32>,
    leaf_offsets: Vec<Vec<u32>>,
    center_len: usize,
}

/// One shared k-mer occurrence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Hit {
    pub center_start: usize,
    pub query_start: usize,
    pub len: usize,
}

impl Hit {
    pub fn new(center_start: usize, query_start: usize, len: usize) -> Self {
        Hit {
            center_start,
            query_start,
            len,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MatchStats {
    /// Goto plus failure-link moves made while scanning the query.
    pub transitions: usize,
    pub hits: usize,
}

impl KmerTrie {
    pub fn build(center: &Sequence, k: usize) -> Result<Self> {
        if !center.alphabet.is_nucleotide() {
            return Err(Error::AlphabetMismatch(format!(
                "k-mer anchoring needs a nucleotide center, '{}' is {}",
                center.id, center.alphabet.kind
            )));
        }
        Self::from_residues(&center.residues, k)
    }

    pub fn from_residues(center: &[u8], k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::KTooSmall);
        }
        if k > center.len() {
            return Err(Error::KTooLarge { k, len: center.len() });
        }
        let mut trie = KmerTrie {
            k,
            children: vec![[NONE; SIGMA]],
            fail: vec![ROOT],
            depth: vec![0],
            leaf: vec![NONE],
            leaf_offsets: Vec::new(),
            center_len: center.len(),
        };
        let symbols: Vec<Option<usize>> = center.iter().map(|&r| symbol(r)).collect();
        // Windows with an unindexable residue are skipped; `clean` counts the
        // run of valid symbols ending at each position.
        let mut clean = 0usize;
        for end in 0..symbols.len() {
            clean = if symbols[end].is_some() { clean + 1 } else { 0 };
            if clean < k {
                continue;
            }
            let start = end + 1 - k;
            let mut node = ROOT;
            for s in &symbols[start..=end] {
                node = trie.child_or_insert(node, s.expect("window is clean"));
            }
            let slot = &mut trie.leaf[node as usize];
            if *slot == NONE {
                *slot = trie.leaf_offsets.len() as u32;
                trie.leaf_offsets.push(Vec::new());
            }
            trie.leaf_offsets[*slot as usize].push(start as u32);
        }
        trie.link_failures();
        Ok(trie)
    }

    fn child_or_insert(&mut self, node: u32, s: usize) -> u32 {
        let next = self.children[node as usize][s];
        if next != NONE {
            return next;
        }
        let id = self.children.len() as u32;
        self.children.push([NONE; SIGMA]);
        self.fail.push(ROOT);
        self.depth.push(self.depth[node as usize] + 1);
        self.leaf.push(NONE);
        self.children[node as usize][s] = id;
        id
    }

    fn link_failures(&mut self) {
        let mut queue = VecDeque::new();
        for s in 0..SIGMA {
            let c = self.children[ROOT as usize][s];
            if c != NONE {
                self.fail[c as usize] = ROOT;
                queue.push_back(c);
            }
        }
        while let Some(u) = queue.pop_front() {
            for s in 0..SIGMA {
                let v = self.children[u as usize][s];
                if v == NONE {
                    continue;
                }
                let mut f = self.fail[u as usize];
                let link = loop {
                    let c = self.children[f as usize][s];
                    if c != NONE {
                        break c;
                    }
                    if f == ROOT {
                        break ROOT;
                    }
                    f = self.fail[f as usize];
                };
                self.fail[v as usize] = link;
                queue.push_back(v);
            }
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn center_len(&self) -> usize {
        self.center_len
    }

    pub fn node_count(&self) -> usize {
        self.children.len()
    }

    /// Distinct indexed k-mers with their sorted center offsets.
    pub fn leaves(&self) -> Vec<(Vec<u8>, Vec<usize>)> {
        let mut out = Vec::new();
        let mut stack = vec![(ROOT, Vec::new())];
        while let Some((node, path)) = stack.pop() {
            let slot = self.leaf[node as usize];
            if slot != NONE {
                let offs = self.leaf_offsets[slot as usize].iter().map(|&o| o as usize).collect();
                out.push((path.clone(), offs));
            }
            for s in (0..SIGMA).rev() {
                let c = self.children[node as usize][s];
                if c != NONE {
                    let mut p = path.clone();
                    p.push(b"ACGT"[s]);
                    stack.push((c, p));
                }
            }
        }
        out.sort();
        out
    }

    /// String spelled by the failure target of the node reached by `s`, if
    /// `s` is a path in the trie.
    pub fn failure_of(&self, s: &[u8]) -> Option<Vec<u8>> {
        let mut node = ROOT;
        for &r in s {
            node = self.children[node as usize][symbol(r)?];
            if node == NONE {
                return None;
            }
        }
        let target = self.fail[node as usize];
        let d = self.depth[target as usize] as usize;
        Some(s[s.len() - d..].to_vec())
    }

    /// Streams `query` through the automaton, reporting every position where
    /// one of its k-mers occurs in the center.
    pub fn match_stream(&self, query: &[u8]) -> (Vec<Hit>, MatchStats) {
        let mut hits = Vec::new();
        let mut stats = MatchStats::default();
        let mut state = ROOT;
        for (pos, &r) in query.iter().enumerate() {
            let Some(s) = symbol(r) else {
                if state != ROOT {
                    state = ROOT;
                    stats.transitions += 1;
                }
                continue;
            };
            loop {
                let next = self.children[state as usize][s];
                if next != NONE {
                    state = next;
                    stats.transitions += 1;
                    break;
                }
                if state == ROOT {
                    break;
                }
                state = self.fail[state as usize];
                stats.transitions += 1;
            }
            let slot = self.leaf[state as usize];
            if slot != NONE {
                let qs = pos + 1 - self.k;
                for &c in &self.leaf_offsets[slot as usize] {
                    hits.push(Hit::new(c as usize, qs, self.k));
                }
            }
        }
        stats.hits = hits.len();
        (hits, stats)
    }

    pub fn match_sequence(&self, query: &Sequence) -> Result<Vec<Hit>> {
        if !query.alphabet.is_nucleotide() {
            return Err(Error::AlphabetMismatch(format!(
                "query '{}' is {}, the trie indexes nucleotides",
                query.id, query.alphabet.kind
            )));
        }
        Ok(self.match_stream(&query.residues).0)
    }
}

pub fn build_trie(center: &Sequence, k: usize) -> Result<KmerTrie> {
    KmerTrie::build(center, k)
}

pub fn match_stream(trie: &KmerTrie, query: &Sequence) -> Result<Vec<Hit>> {
    trie.match_sequence(query)
}

/// Exact-match block shared by center and query.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Anchor {
    pub center_start: usize,
    pub query_start: usize,
    pub len: usize,
}

impl Anchor {
    pub fn center_end(&self) -> usize {
        self.center_start + self.len
    }

    pub fn query_end(&self) -> usize {
        self.query_start + self.len
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnchorChain {
    pub anchors: Vec<Anchor>,
    pub center_len: usize,
    pub query_len: usize,
}

impl AnchorChain {
    /// Unanchored regions as (center range, query range): before the first
    /// anchor, between anchors, and after the last. Empty pairs are kept so
    /// there is always one more gap than anchors.
    pub fn gaps(&self) -> Vec<(Range<usize>, Range<usize>)> {
        let mut out = Vec::with_capacity(self.anchors.len() + 1);
        let (mut c, mut q) = (0, 0);
        for a in &self.anchors {
            out.push((c..a.center_start, q..a.query_start));
            c = a.center_end();
            q = a.query_end();
        }
        out.push((c..self.center_len, q..self.query_len));
        out
    }

    pub fn anchored_len(&self) -> usize {
        self.anchors.iter().map(|a| a.len).sum()
    }
}

/// Merges hits into maximal same-diagonal blocks.
pub fn merge_hits(hits: &[Hit]) -> Vec<Anchor> {
    let mut sorted: Vec<Hit> = hits.to_vec();
    sorted.sort_by_key(|h| (h.center_start as i64 - h.query_start as i64, h.query_start));
    sorted.dedup();
    let mut blocks: Vec<Anchor> = Vec::new();
    for h in sorted {
        if let Some(last) = blocks.last_mut() {
            let same_diag = last.center_start as i64 - last.query_start as i64
                == h.center_start as i64 - h.query_start as i64;
            if same_diag && h.query_start <= last.query_end() {
                let end = (h.query_start + h.len).max(last.query_end());
                last.len = end - last.query_start;
                continue;
            }
        }
        blocks.push(Anchor {
            center_start: h.center_start,
            query_start: h.query_start,
            len: h.len,
        });
    }
    blocks
}

/// Highest total-length co-linear chain of merged hits. Later blocks are
/// trimmed at their start so no two anchors overlap on either sequence;
/// a trimmed block must keep at least `min_len` residues.
pub fn chain_anchors(hits: &[Hit], center_len: usize, query_len: usize) -> AnchorChain {
    let min_len = hits.iter().map(|h| h.len).min().unwrap_or(1);
    let mut blocks = merge_hits(hits);
    blocks.sort_by_key(|b| (b.center_start, b.query_start));

    // best[j] = (total, predecessor, trim applied to block j)
    let mut best: Vec<(usize, usize, usize)> = Vec::with_capacity(blocks.len());
    for (j, bj) in blocks.iter().enumerate() {
        let mut entry = (bj.len, usize::MAX, 0);
        for (i, bi) in blocks[..j].iter().enumerate() {
            if bi.center_start >= bj.center_start || bi.query_start >= bj.query_start {
                continue;
            }
            if bi.center_end() > bj.center_end() || bi.query_end() > bj.query_end() {
                continue;
            }
            let trim = bi
                .center_end()
                .saturating_sub(bj.center_start)
                .max(bi.query_end().saturating_sub(bj.query_start));
            if bj.len < trim + min_len {
                continue;
            }
            let total = best[i].0 + bj.len - trim;
            if total > entry.0 {
                entry = (total, i, trim);
            }
        }
        best.push(entry);
    }

    let mut anchors = Vec::new();
    let mut tail = None;
    for (j, e) in best.iter().enumerate() {
        if tail.is_none_or(|t: usize| e.0 > best[t].0) {
            tail = Some(j);
        }
    }
    while let Some(j) = tail {
        let (_, prev, trim) = best[j];
        let b = blocks[j];
        anchors.push(Anchor {
            center_start: b.center_start + trim,
            query_start: b.query_start + trim,
            len: b.len - trim,
        });
        tail = (prev != usize::MAX).then_some(prev);
    }
    anchors.reverse();
    AnchorChain {
        anchors,
        center_len,
        query_len,
    }
}
