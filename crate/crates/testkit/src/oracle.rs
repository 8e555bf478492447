//! Reference computations by exhaustive enumeration or textbook recurrences.

use std::collections::HashMap;

use starmsa::phylo::PhyloTree;
use starmsa::scoring::{ScoreScheme, Substitution};
use starmsa::seqio::Alphabet;

const GAP: u8 = b'-';
const NEG: i64 = i64::MIN / 4;

fn sub(scheme: &ScoreScheme, x: u8, y: u8) -> i64 {
    match &scheme.substitution {
        Substitution::Simple { matched, mismatched } => {
            let wild = |r: u8| !b"ACGTU".contains(&r);
            if x == y && !wild(x) {
                *matched as i64
            } else {
                *mismatched as i64
            }
        }
        Substitution::Matrix(_) => scheme.score(&Alphabet::PROTEIN, x, y) as i64,
    }
}

fn gap(scheme: &ScoreScheme, k: usize) -> i64 {
    if k == 0 {
        0
    } else {
        scheme.gap_open as i64 + scheme.gap_extend as i64 * (k as i64 - 1)
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Op {
    Diag,
    Up,
    Left,
}

/// Scores one full alignment, given as column operations, as a list of
/// items: one per residue pair and one per maximal gap run.
fn items(ops: &[Op], a: &[u8], b: &[u8], scheme: &ScoreScheme) -> Vec<i64> {
    let mut out = Vec::with_capacity(ops.len());
    let (mut i, mut j) = (0, 0);
    let mut k = 0;
    while k < ops.len() {
        match ops[k] {
            Op::Diag => {
                out.push(sub(scheme, a[i], b[j]));
                i += 1;
                j += 1;
                k += 1;
            }
            op => {
                let start = k;
                while k < ops.len() && ops[k] == op {
                    k += 1;
                }
                let run = k - start;
                out.push(-gap(scheme, run));
                if op == Op::Up {
                    i += run;
                } else {
                    j += run;
                }
            }
        }
    }
    out
}

fn enumerate(a: &[u8], b: &[u8], i: usize, j: usize, ops: &mut Vec<Op>, visit: &mut dyn FnMut(&[Op])) {
    if i == a.len() && j == b.len() {
        visit(ops);
        return;
    }
    if i < a.len() && j < b.len() {
        ops.push(Op::Diag);
        enumerate(a, b, i + 1, j + 1, ops, visit);
        ops.pop();
    }
    if i < a.len() {
        ops.push(Op::Up);
        enumerate(a, b, i + 1, j, ops, visit);
        ops.pop();
    }
    if j < b.len() {
        ops.push(Op::Left);
        enumerate(a, b, i, j + 1, ops, visit);
        ops.pop();
    }
}

/// Best end-to-end score over every alignment of `a` and `b`.
pub fn brute_global_score(a: &[u8], b: &[u8], scheme: &ScoreScheme) -> i64 {
    let mut best = i64::MIN;
    enumerate(a, b, 0, 0, &mut Vec::new(), &mut |ops| {
        best = best.max(items(ops, a, b, scheme).iter().sum());
    });
    best
}

/// Best local score: every alignment of the full strings is enumerated and
/// its best contiguous stretch of items taken (empty stretch scores 0). Any
/// local alignment worth reporting starts and ends on a residue pair, so it
/// is such a stretch of some full alignment.
pub fn brute_local_score(a: &[u8], b: &[u8], scheme: &ScoreScheme) -> i64 {
    let mut best = 0i64;
    enumerate(a, b, 0, 0, &mut Vec::new(), &mut |ops| {
        let mut run = 0i64;
        for s in items(ops, a, b, scheme) {
            run = (run + s).max(0);
            best = best.max(run);
        }
    });
    best
}

/// Textbook three-matrix affine global alignment with full traceback
/// matrices. Ties: residue pair, then gap in `b`, then gap in `a`; inside a
/// gap the shorter run wins. Returns (score, row a, row b).
pub fn naive_global(a: &[u8], b: &[u8], scheme: &ScoreScheme) -> (i64, Vec<u8>, Vec<u8>) {
    let (n, m) = (a.len(), b.len());
    let (o, e) = (scheme.gap_open as i64, scheme.gap_extend as i64);
    let mut h = vec![vec![NEG; m + 1]; n + 1];
    let mut up = vec![vec![NEG; m + 1]; n + 1];
    let mut left = vec![vec![NEG; m + 1]; n + 1];
    h[0][0] = 0;
    for i in 1..=n {
        h[i][0] = -gap(scheme, i);
        up[i][0] = h[i][0];
    }
    for j in 1..=m {
        h[0][j] = -gap(scheme, j);
        left[0][j] = h[0][j];
    }
    for i in 1..=n {
        for j in 1..=m {
            up[i][j] = (h[i - 1][j] - o).max(up[i - 1][j] - e);
            left[i][j] = (h[i][j - 1] - o).max(left[i][j - 1] - e);
            let d = h[i - 1][j - 1] + sub(scheme, a[i - 1], b[j - 1]);
            h[i][j] = d.max(up[i][j]).max(left[i][j]);
        }
    }

    let (mut ra, mut rb) = (Vec::new(), Vec::new());
    let (mut i, mut j) = (n, m);
    // 0: best, 1: inside a gap in b, 2: inside a gap in a
    let mut lane = 0;
    while i > 0 || j > 0 {
        if i == 0 {
            lane = 2;
        } else if j == 0 {
            lane = 1;
        }
        match lane {
            0 => {
                if h[i][j] == h[i - 1][j - 1] + sub(scheme, a[i - 1], b[j - 1]) {
                    ra.push(a[i - 1]);
                    rb.push(b[j - 1]);
                    i -= 1;
                    j -= 1;
                } else if h[i][j] == up[i][j] {
                    lane = 1;
                } else {
                    lane = 2;
                }
            }
            1 => {
                let opened = j == 0 || up[i][j] == h[i - 1][j] - o;
                ra.push(a[i - 1]);
                rb.push(GAP);
                i -= 1;
                if opened && j > 0 {
                    lane = 0;
                }
            }
            _ => {
                let opened = i == 0 || left[i][j] == h[i][j - 1] - o;
                ra.push(GAP);
                rb.push(b[j - 1]);
                j -= 1;
                if opened && i > 0 {
                    lane = 0;
                }
            }
        }
    }
    ra.reverse();
    rb.reverse();
    (h[n][m], ra, rb)
}

/// Slides gap runs left one column at a time while the score is unchanged:
/// the residue pair just left of a run is re-paired with the run's last
/// column when the gapless row holds the same letter in both, and the slide
/// must not make the run touch another gap run in the same row.
pub fn shift_gaps_left(a: &mut [u8], b: &mut [u8]) {
    let len = a.len();
    loop {
        let mut moved = false;
        // one-column slides; each row is tried as the gapped one
        for flip in [false, true] {
            let mut c = 1;
            while c < len {
                let (g, o): (&mut [u8], &[u8]) = if flip { (&mut *a, &*b) } else { (&mut *b, &*a) };
                let run_starts = g[c] == GAP && o[c] != GAP && !(g[c - 1] == GAP && o[c - 1] != GAP);
                if run_starts && g[c - 1] != GAP && o[c - 1] != GAP {
                    let mut e = c;
                    while e < len && g[e] == GAP && o[e] != GAP {
                        e += 1;
                    }
                    let touches = c >= 2 && g[c - 2] == GAP && o[c - 2] != GAP;
                    if o[c - 1] == o[e - 1] && !touches {
                        g[e - 1] = g[c - 1];
                        g[c - 1] = GAP;
                        moved = true;
                    }
                }
                c += 1;
            }
        }
        if !moved {
            return;
        }
    }
}

/// Center-star alignment by full DP and progressive column merging: each
/// new pairwise alignment is threaded into the growing alignment, opening a
/// fresh column whenever it needs more insertion room than exists. Inside an
/// insertion region a row's own residues come first. Rows are returned in
/// input order.
pub fn naive_center_star(seqs: &[Vec<u8>], center: usize, scheme: &ScoreScheme) -> Vec<Vec<u8>> {
    let mut rows: Vec<Option<Vec<u8>>> = vec![None; seqs.len()];
    rows[center] = Some(seqs[center].clone());
    for (k, s) in seqs.iter().enumerate() {
        if k == center {
            continue;
        }
        let (_, mut ca, mut qb) = naive_global(&seqs[center], s, scheme);
        shift_gaps_left(&mut ca, &mut qb);
        let mut new_row = Vec::new();
        let (mut p, mut q) = (0, 0);
        loop {
            let cur_len = rows[center].as_ref().expect("center present").len();
            let mgap = p < cur_len && rows[center].as_ref().expect("center present")[p] == GAP;
            let pgap = q < ca.len() && ca[q] == GAP;
            if p >= cur_len && q >= ca.len() {
                break;
            }
            if mgap && pgap {
                new_row.push(qb[q]);
                p += 1;
                q += 1;
            } else if mgap || (p < cur_len && q >= ca.len()) {
                new_row.push(GAP);
                p += 1;
            } else if pgap {
                for r in rows.iter_mut().flatten() {
                    r.insert(p, GAP);
                }
                new_row.push(qb[q]);
                p += 1;
                q += 1;
            } else {
                new_row.push(qb[q]);
                p += 1;
                q += 1;
            }
        }
        rows[k] = Some(new_row);
    }
    rows.into_iter().map(|r| r.expect("every row filled")).collect()
}

/// Sum-of-pairs penalty summed column by column.
pub fn sp_by_columns(rows: &[Vec<u8>]) -> u64 {
    let len = rows.first().map_or(0, Vec::len);
    let mut total = 0;
    for c in 0..len {
        let col: Vec<u8> = rows.iter().map(|r| r[c]).collect();
        let gaps = col.iter().filter(|&&x| x == GAP).count() as u64;
        let res = col.len() as u64 - gaps;
        total += 2 * gaps * res;
        let mut counts: HashMap<u8, u64> = HashMap::new();
        for &x in col.iter().filter(|&&x| x != GAP) {
            *counts.entry(x).or_default() += 1;
        }
        let same: u64 = counts.values().map(|c| c * (c - 1) / 2).sum();
        total += res * (res.saturating_sub(1)) / 2 - same;
    }
    total
}

/// Every (center offset, query offset) where a k-mer of plain bases (T and
/// U equivalent) occurs in both.
pub fn naive_kmer_hits(center: &[u8], query: &[u8], k: usize) -> Vec<(usize, usize)> {
    let norm = |r: u8| if r == b'U' { b'T' } else { r };
    let plain = |w: &[u8]| w.iter().all(|&r| b"ACGTU".contains(&r));
    let mut out = Vec::new();
    if k == 0 || center.len() < k || query.len() < k {
        return out;
    }
    for q in 0..=query.len() - k {
        for c in 0..=center.len() - k {
            let (wc, wq) = (&center[c..c + k], &query[q..q + k]);
            if plain(wc) && plain(wq) && wc.iter().zip(wq).all(|(&x, &y)| norm(x) == norm(y)) {
                out.push((c, q));
            }
        }
    }
    out.sort_unstable();
    out
}

/// Path-length matrix over the labeled leaves of `tree`, labels sorted.
pub fn path_sums(tree: &PhyloTree) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut leaves: Vec<(String, usize)> = (0..tree.len())
        .filter_map(|v| tree.node(v).label.clone().map(|l| (l, v)))
        .collect();
    leaves.sort();
    let n = leaves.len();
    let mut d = vec![vec![0.0; n]; n];
    for (a, (_, src)) in leaves.iter().enumerate() {
        let mut dist = vec![f64::NAN; tree.len()];
        dist[*src] = 0.0;
        let mut stack = vec![*src];
        while let Some(v) = stack.pop() {
            for &(w, l) in &tree.node(v).edges {
                if dist[w].is_nan() {
                    dist[w] = dist[v] + l;
                    stack.push(w);
                }
            }
        }
        for (b, (_, dst)) in leaves.iter().enumerate().skip(a + 1) {
            d[a][b] = dist[*dst];
            d[b][a] = dist[*dst];
        }
    }
    (leaves.into_iter().map(|l| l.0).collect(), d)
}

fn jc(same: bool, t: f64) -> f64 {
    let e = (-4.0 * t / 3.0).exp();
    if same {
        0.25 + 0.75 * e
    } else {
        0.25 - 0.25 * e
    }
}

/// JC69 log-likelihood by summing over every assignment of states to the
/// internal nodes. `rows` are looked up by leaf label through `ids`.
#[allow(clippy::needless_range_loop)]
pub fn jc69_brute(tree: &PhyloTree, ids: &[String], rows: &[Vec<u8>]) -> f64 {
    let internal: Vec<usize> = (0..tree.len()).filter(|&v| tree.node(v).label.is_none()).collect();
    let row_of: HashMap<&str, usize> = ids.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    let mut edges = Vec::new();
    for v in 0..tree.len() {
        for &(w, l) in &tree.node(v).edges {
            if v < w {
                edges.push((v, w, l));
            }
        }
    }
    let state = |r: u8| match r {
        b'A' => Some(0usize),
        b'C' => Some(1),
        b'G' => Some(2),
        b'T' | b'U' => Some(3),
        _ => None,
    };
    let len = rows.first().map_or(0, Vec::len);
    let mut total = 0.0;
    for c in 0..len {
        let mut known: Vec<Option<usize>> = vec![None; tree.len()];
        for v in 0..tree.len() {
            if let Some(l) = &tree.node(v).label {
                known[v] = state(rows[row_of[l.as_str()]][c]);
            }
        }
        // leaves with missing data are summed out, which removes their edge
        let mut site = 0.0;
        let combos = 4usize.pow(internal.len() as u32);
        let mut assign = vec![0usize; tree.len()];
        let root = internal.first().copied().unwrap_or(0);
        for code in 0..combos {
            let mut x = code;
            for &v in &internal {
                assign[v] = x % 4;
                x /= 4;
            }
            let mut p = 0.25;
            if internal.is_empty() {
                // a tree without internal nodes is a single edge; sum over
                // the state at one end
                let mut s = 0.0;
                for r in 0..4 {
                    if known[root].is_some_and(|k| k != r) {
                        continue;
                    }
                    assign[root] = r;
                    let mut q = 0.25;
                    for &(u, w, l) in &edges {
                        let su = if u == root { Some(r) } else { known[u] };
                        let sw = if w == root { Some(r) } else { known[w] };
                        if let (Some(a), Some(b)) = (su, sw) {
                            q *= jc(a == b, l);
                        }
                    }
                    s += q;
                }
                site += s;
                break;
            }
            for &(u, w, l) in &edges {
                let su = if tree.node(u).label.is_some() { known[u] } else { Some(assign[u]) };
                let sw = if tree.node(w).label.is_some() { known[w] } else { Some(assign[w]) };
                if let (Some(a), Some(b)) = (su, sw) {
                    p *= jc(a == b, l);
                }
            }
            site += p;
        }
        total += site.ln();
    }
    total
}
