//! Alignment and tree quality scores.

use std::collections::HashMap;

use serde::Serialize;

use crate::engine::{par_map, RunConfig};
use crate::error::{Error, Result};
use crate::msa::Msa;
use crate::phylo::PhyloTree;
use crate::seqio::{AlphabetKind, GAP};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpReport {
    pub total_sp: u64,
    pub avg_sp: f64,
    pub n_pairs: u64,
}

/// Column penalties: one-sided gap 2, differing residues 1, otherwise 0.
pub fn sp_pair(a: &[u8], b: &[u8]) -> Result<u64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch { a: a.len(), b: b.len() });
    }
    Ok(sp_cols(a, b))
}

fn sp_cols(a: &[u8], b: &[u8]) -> u64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| match (x == GAP, y == GAP) {
            (true, true) => 0,
            (true, false) | (false, true) => 2,
            _ => u64::from(x != y),
        })
        .sum()
}

pub fn sp_report(msa: &Msa) -> Result<SpReport> {
    sp_report_with(msa, &RunConfig::with_threads(1))
}

/// Row-parallel sum over all unordered row pairs.
pub fn sp_report_with(msa: &Msa, run: &RunConfig) -> Result<SpReport> {
    let n = msa.n_rows();
    if n < 2 {
        return Err(Error::TooFewSequences { need: 2, got: n });
    }
    let idx: Vec<usize> = (0..n).collect();
    let (per_row, _) = par_map(
        "sp",
        &idx,
        msa,
        |msa, _, &i| Ok(((i + 1)..n).map(|j| sp_cols(msa.row(i), msa.row(j))).sum::<u64>()),
        run,
    )?;
    let total_sp: u64 = per_row.iter().sum();
    let n_pairs = (n as u64) * (n as u64 - 1) / 2;
    Ok(SpReport {
        total_sp,
        avg_sp: total_sp as f64 / n_pairs as f64,
        n_pairs,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TreeScore {
    /// Natural log.
    pub log_likelihood: f64,
    pub model: &'static str,
}

/// Transition probabilities (same state, different state) after time `t`.
pub fn jc69_probs(t: f64) -> (f64, f64) {
    let e = (-4.0 * t / 3.0).exp();
    (0.25 + 0.75 * e, 0.25 - 0.25 * e)
}

fn state(r: u8) -> Option<usize> {
    match r {
        b'A' => Some(0),
        b'C' => Some(1),
        b'G' => Some(2),
        b'T' | b'U' => Some(3),
        _ => None,
    }
}

pub fn jc69_loglik(msa: &Msa, tree: &PhyloTree) -> Result<TreeScore> {
    jc69_loglik_with(msa, tree, &RunConfig::with_threads(1))
}

/// Felsenstein pruning under JC69. Gaps, N and ambiguity codes are missing
/// data. Identical columns are scored once and weighted by multiplicity.
pub fn jc69_loglik_with(msa: &Msa, tree: &PhyloTree, run: &RunConfig) -> Result<TreeScore> {
    if msa.alphabet().kind == AlphabetKind::Protein {
        return Err(Error::ProteinUnsupported);
    }
    let leaf_row = leaf_rows(msa, tree)?;

    // column patterns in first-occurrence order
    let mut index: HashMap<Vec<u8>, usize> = HashMap::new();
    let mut patterns: Vec<(Vec<u8>, u64)> = Vec::new();
    for c in 0..msa.n_cols() {
        let col: Vec<u8> = msa.rows().iter().map(|r| r[c]).collect();
        match index.get(&col) {
            Some(&p) => patterns[p].1 += 1,
            None => {
                index.insert(col.clone(), patterns.len());
                patterns.push((col, 1));
            }
        }
    }

    let root = (0..tree.len()).find(|&v| !tree.is_leaf(v)).unwrap_or(0);
    let (parent, plen, order) = tree.orient(root);
    let probs: Vec<(f64, f64)> = plen.iter().map(|&t| jc69_probs(t)).collect();
    let shared = Pruning {
        leaf_row: &leaf_row,
        parent: &parent,
        order: &order,
        probs: &probs,
        root,
    };
    let (site_ll, _) = par_map("likelihood", &patterns, &shared, |s, _, (col, count)| Ok(s.column(col) * *count as f64), run)?;
    Ok(TreeScore {
        log_likelihood: site_ll.iter().sum(),
        model: "JC69",
    })
}

/// Maps tree node id to msa row; internal nodes map to `None`.
fn leaf_rows(msa: &Msa, tree: &PhyloTree) -> Result<Vec<Option<usize>>> {
    let mut by_id: HashMap<&str, usize> = HashMap::new();
    for (i, id) in msa.ids().iter().enumerate() {
        if by_id.insert(id.as_str(), i).is_some() {
            return Err(Error::LeafMismatch(format!("alignment id '{id}' appears twice")));
        }
    }
    let mut used = vec![false; msa.n_rows()];
    let mut out = vec![None; tree.len()];
    for (v, slot) in out.iter_mut().enumerate() {
        if let Some(label) = &tree.node(v).label {
            let &row = by_id
                .get(label.as_str())
                .ok_or_else(|| Error::LeafMismatch(format!("tree leaf '{label}' has no alignment row")))?;
            if std::mem::replace(&mut used[row], true) {
                return Err(Error::LeafMismatch(format!("tree leaf '{label}' appears twice")));
            }
            *slot = Some(row);
        }
    }
    if let Some(row) = used.iter().position(|u| !u) {
        return Err(Error::LeafMismatch(format!("alignment row '{}' is not a tree leaf", msa.ids()[row])));
    }
    Ok(out)
}

struct Pruning<'a> {
    leaf_row: &'a [Option<usize>],
    parent: &'a [usize],
    order: &'a [usize],
    probs: &'a [(f64, f64)],
    root: usize,
}

impl Pruning<'_> {
    /// Log-likelihood of one column. Partials are rescaled to a maximum of 1
    /// at every node and the scale factors accumulated in log space.
    fn column(&self, col: &[u8]) -> f64 {
        let n = self.order.len();
        let mut partial = vec![[1.0f64; 4]; n];
        let mut log_scale = 0.0;
        for &v in self.order.iter().rev() {
            if let Some(row) = self.leaf_row[v] {
                if let Some(s) = state(col[row]) {
                    let mut tip = [0.0; 4];
                    tip[s] = 1.0;
                    for (p, t) in partial[v].iter_mut().zip(tip) {
                        *p *= t;
                    }
                }
            }
            let max = partial[v].iter().copied().fold(0.0, f64::max);
            if max > 0.0 && max != 1.0 {
                for p in &mut partial[v] {
                    *p /= max;
                }
                log_scale += max.ln();
            }
            if v == self.root {
                break;
            }
            let (same, diff) = self.probs[v];
            let l = partial[v];
            let sum: f64 = l.iter().sum();
            let up: [f64; 4] = std::array::from_fn(|x| same * l[x] + diff * (sum - l[x]));
            let u = self.parent[v];
            for (p, q) in partial[u].iter_mut().zip(up) {
                *p *= q;
            }
        }
        let site: f64 = partial[self.root].iter().map(|p| 0.25 * p).sum();
        site.ln() + log_scale
    }
}
