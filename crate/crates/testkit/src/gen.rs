//! Random inputs.

use rand::Rng;
use starmsa::phylo::PhyloTree;
use starmsa::scoring::ScoreScheme;
use starmsa::seqio::{Alphabet, Sequence};

pub const DNA: &[u8] = b"ACGT";
pub const AMINO: &[u8] = b"ACDEFGHIKLMNPQRSTVWY";

pub fn residues(rng: &mut impl Rng, alphabet: &[u8], len: usize) -> Vec<u8> {
    (0..len).map(|_| alphabet[rng.random_range(0..alphabet.len())]).collect()
}

/// Applies `edits` random substitutions, single-residue insertions or
/// deletions. Never empties the sequence.
pub fn mutate(rng: &mut impl Rng, seq: &[u8], alphabet: &[u8], edits: usize) -> Vec<u8> {
    let mut s = seq.to_vec();
    for _ in 0..edits {
        let r = alphabet[rng.random_range(0..alphabet.len())];
        match rng.random_range(0..3) {
            0 if !s.is_empty() => {
                let p = rng.random_range(0..s.len());
                s[p] = r;
            }
            1 if s.len() > 1 => {
                let p = rng.random_range(0..s.len());
                s.remove(p);
            }
            _ => {
                let p = rng.random_range(0..=s.len());
                s.insert(p, r);
            }
        }
    }
    s
}

/// Substitutes each position with probability `rate` (to a different base)
/// and, with the same probability, inserts or deletes one residue there.
pub fn mutate_rate(rng: &mut impl Rng, seq: &[u8], rate: f64) -> Vec<u8> {
    let mut out = Vec::with_capacity(seq.len() + 8);
    for &c in seq {
        if rng.random_bool(rate) {
            match rng.random_range(0..3) {
                0 => {
                    let mut r = c;
                    while r == c {
                        r = DNA[rng.random_range(0..4)];
                    }
                    out.push(r);
                }
                1 => {}
                _ => {
                    out.push(c);
                    out.push(DNA[rng.random_range(0..4)]);
                }
            }
        } else {
            out.push(c);
        }
    }
    if out.is_empty() {
        out.push(b'A');
    }
    out
}

pub fn sequences(rows: &[Vec<u8>], alphabet: Alphabet) -> Vec<Sequence> {
    rows.iter()
        .enumerate()
        .map(|(i, r)| Sequence::new(format!("s{i}"), r, alphabet).expect("generated residues are valid"))
        .collect()
}

/// `n` clones of one random root, each with up to `max_edits` edits.
pub fn clone_family(rng: &mut impl Rng, n: usize, len: usize, max_edits: usize) -> Vec<Sequence> {
    let root = residues(rng, DNA, len);
    let rows: Vec<Vec<u8>> = (0..n)
        .map(|_| {
            let e = rng.random_range(0..=max_edits);
            mutate(rng, &root, DNA, e)
        })
        .collect();
    sequences(&rows, Alphabet::DNA)
}

/// `n` clones of a random root of length `len`, mutated at `rate`.
pub fn clone_dataset(rng: &mut impl Rng, n: usize, len: usize, rate: f64) -> Vec<Sequence> {
    let root = residues(rng, DNA, len);
    let rows: Vec<Vec<u8>> = (0..n).map(|_| mutate_rate(rng, &root, rate)).collect();
    sequences(&rows, Alphabet::DNA)
}

/// Small integer scheme: match 1..=5, mismatch -5..=0, open 1..=6,
/// extend 0..=open.
pub fn scheme(rng: &mut impl Rng) -> ScoreScheme {
    let open = rng.random_range(1..=6);
    ScoreScheme::simple(
        rng.random_range(1..=5),
        rng.random_range(-5..=0),
        open,
        rng.random_range(0..=open),
    )
    .expect("generated scheme is valid")
}

/// Random gap-bearing rows of equal length.
pub fn gapped_rows(rng: &mut impl Rng, n: usize, len: usize, gap_rate: f64) -> Vec<Vec<u8>> {
    (0..n)
        .map(|_| {
            (0..len)
                .map(|_| if rng.random_bool(gap_rate) { b'-' } else { DNA[rng.random_range(0..4)] })
                .collect()
        })
        .collect()
}

/// Random unrooted binary tree on `n >= 3` leaves labeled `t0..`, built by
/// repeatedly splitting a random edge. Branch lengths are multiples of 0.1
/// in `[lo, hi]`.
pub fn random_tree(rng: &mut impl Rng, n: usize, lo: f64, hi: f64) -> PhyloTree {
    let steps = ((hi - lo) * 10.0).round() as u32;
    let len = |rng: &mut dyn rand::RngCore| lo + rng.random_range(0..=steps) as f64 / 10.0;
    let mut edges: Vec<(usize, usize, f64)> = Vec::new();
    // node ids: leaves 0..n, internal nodes after
    let mut next_internal = n;
    let hub = next_internal;
    next_internal += 1;
    for leaf in 0..3 {
        edges.push((hub, leaf, len(rng)));
    }
    for leaf in 3..n {
        let e = rng.random_range(0..edges.len());
        let (a, b, l) = edges.swap_remove(e);
        let mid = next_internal;
        next_internal += 1;
        edges.push((a, mid, l / 2.0));
        edges.push((mid, b, l / 2.0));
        edges.push((mid, leaf, len(rng)));
    }
    let mut t = PhyloTree::new();
    for i in 0..n {
        t.add_leaf(format!("t{i}"));
    }
    for _ in n..next_internal {
        t.add_internal();
    }
    for (a, b, l) in edges {
        t.connect(a, b, l);
    }
    t
}
