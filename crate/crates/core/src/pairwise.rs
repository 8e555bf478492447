//! Pairwise dynamic programming: Smith-Waterman local alignment and a
//! global (Needleman-Wunsch style) aligner, both with affine gaps.
//!
//! The fill uses three lanes per cell: `diag` (residue pair), `up` (a gap in
//! `b`, consuming a residue of `a`) and `left` (a gap in `a`). With affine
//! penalties this equals taking the max over every gap length ending at the
//! cell. Ties are resolved diagonal, then up, then left; inside a gap lane the
//! shortest gap wins. The same order drives both fill and traceback so the
//! output is reproducible.

use std::ops::Range;

use crate::error::{Error, Result};
use crate::scoring::{ScoreScheme, ScoreTable};
use crate::seqio::{Alphabet, Sequence, GAP};

const NEG_INF: i32 = i32::MIN / 4;

// Traceback byte layout.
const SRC_MASK: u8 = 0b11;
const SRC_DIAG: u8 = 0;
const SRC_UP: u8 = 1;
const SRC_LEFT: u8 = 2;
const SRC_ZERO: u8 = 3;
const UP_OPENS: u8 = 1 << 2;
const LEFT_OPENS: u8 = 1 << 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlignMode {
    Local,
    Global,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairAlignment {
    pub aligned_a: Vec<u8>,
    pub aligned_b: Vec<u8>,
    pub score: i32,
    pub span_a: Range<usize>,
    pub span_b: Range<usize>,
    pub mode: AlignMode,
}

impl PairAlignment {
    pub fn len(&self) -> usize {
        self.aligned_a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.aligned_a.is_empty()
    }

    /// Recomputes the alignment score column by column.
    pub fn rescore(&self, scheme: &ScoreScheme, alphabet: &Alphabet) -> i64 {
        score_columns(&self.aligned_a, &self.aligned_b, scheme, alphabet)
    }
}

/// Scores two equal-length gapped rows under an affine scheme. A gap run in
/// one row is a maximal run of columns where only that row has `-`.
pub fn score_columns(a: &[u8], b: &[u8], scheme: &ScoreScheme, alphabet: &Alphabet) -> i64 {
    let mut total = 0i64;
    let mut run_a = 0usize;
    let mut run_b = 0usize;
    for (&x, &y) in a.iter().zip(b) {
        match (x == GAP, y == GAP) {
            (false, false) => {
                total -= scheme.gap_cost(run_a) + scheme.gap_cost(run_b);
                run_a = 0;
                run_b = 0;
                total += scheme.score(alphabet, x, y) as i64;
            }
            (true, false) => {
                total -= scheme.gap_cost(run_b);
                run_b = 0;
                run_a += 1;
            }
            (false, true) => {
                total -= scheme.gap_cost(run_a);
                run_a = 0;
                run_b += 1;
            }
            (true, true) => {}
        }
    }
    total - scheme.gap_cost(run_a) - scheme.gap_cost(run_b)
}

/// Moves every gap run as far left as it can go without changing the
/// score: a run may slide over a residue pair whose residue in the gapless
/// row equals that row's residue at the run's last column, unless the slide
/// would join it to another run in the same row. Returns whether anything
/// moved.
pub fn left_align_gaps(a: &mut [u8], b: &mut [u8]) -> bool {
    let mut moved = false;
    loop {
        let mut changed = false;
        let mut c = 0;
        while c < a.len() {
            let (gapped, other) = match (a[c] == GAP, b[c] == GAP) {
                (false, true) => (&mut *b, &*a),
                (true, false) => (&mut *a, &*b),
                _ => {
                    c += 1;
                    continue;
                }
            };
            let s = c;
            let mut e = c;
            while e < gapped.len() && gapped[e] == GAP && other[e] != GAP {
                e += 1;
            }
            let mut start = s;
            while start > 0
                && gapped[start - 1] != GAP
                && other[start - 1] != GAP
                && other[start - 1] == other[e - 1 - (s - start)]
                && !(start >= 2 && gapped[start - 2] == GAP && other[start - 2] != GAP)
            {
                start -= 1;
            }
            if start < s {
                // residues of the gapped row in start..s move behind the run
                gapped[start..e].rotate_left(s - start);
                changed = true;
            }
            c = e;
        }
        if !changed {
            return moved;
        }
        moved = true;
    }
}

/// Filled Smith-Waterman matrix. `H` has `rows x cols` cells with a zero
/// first row and column.
#[derive(Debug, Clone)]
pub struct DpMatrix {
    pub rows: usize,
    pub cols: usize,
    cells: Vec<i32>,
    trace: Vec<u8>,
    pub best_cell: (usize, usize),
}

impl DpMatrix {
    pub fn get(&self, i: usize, j: usize) -> i32 {
        self.cells[i * self.cols + j]
    }

    pub fn best_score(&self) -> i32 {
        self.get(self.best_cell.0, self.best_cell.1)
    }

    pub fn cells(&self) -> &[i32] {
        &self.cells
    }
}

/// Reusable DP driver for one scheme and alphabet.
pub struct Aligner {
    table: ScoreTable,
    open: i32,
    extend: i32,
    alphabet: Alphabet,
}

impl Aligner {
    pub fn new(scheme: &ScoreScheme, alphabet: Alphabet) -> Self {
        Aligner {
            table: scheme.profile(&alphabet),
            open: scheme.gap_open,
            extend: scheme.gap_extend,
            alphabet,
        }
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    fn check_bounds(&self, n: usize, m: usize) -> Result<()> {
        let per_column = self.table.max_abs() + self.open as i64 + self.extend as i64;
        if (n as i64 + m as i64) * per_column >= (i32::MAX / 4) as i64 {
            return Err(Error::SequenceTooLong { len_a: n, len_b: m });
        }
        Ok(())
    }

    /// Local alignment matrix of `a` against `b`.
    pub fn sw_fill(&self, a: &[u8], b: &[u8]) -> Result<DpMatrix> {
        if a.is_empty() || b.is_empty() {
            return Err(Error::EmptyInput);
        }
        self.check_bounds(a.len(), b.len())?;
        let (ea, eb) = (ScoreTable::encode(a), ScoreTable::encode(b));
        let cols = b.len() + 1;
        let mut cells = vec![0i32; (a.len() + 1) * cols];
        let mut trace = vec![SRC_ZERO; (a.len() + 1) * cols];
        let mut up = vec![NEG_INF; cols];
        let mut best = (0usize, 0usize);
        let mut best_score = 0;
        for i in 1..=a.len() {
            let mut left = NEG_INF;
            for j in 1..cols {
                let (h, tb) = self.cell(&cells, cols, i, j, &mut up, &mut left, ea[i - 1], eb[j - 1], true);
                cells[i * cols + j] = h;
                trace[i * cols + j] = tb;
                if h > best_score {
                    best_score = h;
                    best = (i, j);
                }
            }
        }
        Ok(DpMatrix {
            rows: a.len() + 1,
            cols,
            cells,
            trace,
            best_cell: best,
        })
    }

    #[allow(clippy::too_many_arguments)]
    #[inline(always)]
    fn cell(
        &self,
        h: &[i32],
        cols: usize,
        i: usize,
        j: usize,
        up: &mut [i32],
        left: &mut i32,
        ra: u8,
        rb: u8,
        local: bool,
    ) -> (i32, u8) {
        let mut tb = 0u8;
        let open_up = h[(i - 1) * cols + j] - self.open;
        let ext_up = up[j] - self.extend;
        let u = if open_up >= ext_up {
            tb |= UP_OPENS;
            open_up
        } else {
            ext_up
        };
        up[j] = u;
        let open_left = h[i * cols + j - 1] - self.open;
        let ext_left = *left - self.extend;
        let l = if open_left >= ext_left {
            tb |= LEFT_OPENS;
            open_left
        } else {
            ext_left
        };
        *left = l;
        let d = h[(i - 1) * cols + j - 1] + self.table.get(ra, rb);
        let (mut best, mut src) = (d, SRC_DIAG);
        if u > best {
            best = u;
            src = SRC_UP;
        }
        if l > best {
            best = l;
            src = SRC_LEFT;
        }
        if local && best <= 0 {
            return (0, tb | SRC_ZERO);
        }
        (best, tb | src)
    }

    /// Walks back from `best_cell` to the first zero cell.
    pub fn sw_traceback(&self, m: &DpMatrix, a: &[u8], b: &[u8]) -> PairAlignment {
        let (bi, bj) = m.best_cell;
        let (mut ra, mut rb) = (Vec::new(), Vec::new());
        let (i, j) = walk(&m.trace, m.cols, a, b, bi, bj, &mut ra, &mut rb, true);
        ra.reverse();
        rb.reverse();
        PairAlignment {
            aligned_a: ra,
            aligned_b: rb,
            score: m.get(bi, bj),
            span_a: i..bi,
            span_b: j..bj,
            mode: AlignMode::Local,
        }
    }

    /// Best local score in linear memory.
    pub fn local_score(&self, a: &[u8], b: &[u8]) -> Result<i32> {
        if a.is_empty() || b.is_empty() {
            return Err(Error::EmptyInput);
        }
        self.check_bounds(a.len(), b.len())?;
        let (ea, eb) = (ScoreTable::encode(a), ScoreTable::encode(b));
        let cols = eb.len() + 1;
        let mut prev = vec![0i32; cols];
        let mut cur = vec![0i32; cols];
        let mut up = vec![NEG_INF; cols];
        let mut best = 0;
        for &ra in &ea {
            let mut left = NEG_INF;
            cur[0] = 0;
            for j in 1..cols {
                let u = (prev[j] - self.open).max(up[j] - self.extend);
                up[j] = u;
                let l = (cur[j - 1] - self.open).max(left - self.extend);
                left = l;
                let d = prev[j - 1] + self.table.get(ra, eb[j - 1]);
                let h = d.max(u).max(l).max(0);
                cur[j] = h;
                best = best.max(h);
            }
            std::mem::swap(&mut prev, &mut cur);
        }
        Ok(best)
    }

    /// End-to-end alignment of two residue segments; either may be empty.
    pub fn global(&self, a: &[u8], b: &[u8]) -> Result<PairAlignment> {
        self.check_bounds(a.len(), b.len())?;
        let (n, m) = (a.len(), b.len());
        if n == 0 || m == 0 {
            let score = -(self.gap_cost(n.max(m)) as i32);
            let (aligned_a, aligned_b) = if n == 0 {
                (vec![GAP; m], b.to_vec())
            } else {
                (a.to_vec(), vec![GAP; n])
            };
            return Ok(PairAlignment {
                aligned_a,
                aligned_b,
                score,
                span_a: 0..n,
                span_b: 0..m,
                mode: AlignMode::Global,
            });
        }
        let (ea, eb) = (ScoreTable::encode(a), ScoreTable::encode(b));
        let cols = m + 1;
        // Two rolling rows of H; traceback bytes for every cell.
        let mut trace = vec![0u8; (n + 1) * cols];
        let mut h = vec![0i32; 2 * cols];
        let mut up = vec![NEG_INF; cols];
        for j in 1..cols {
            h[j] = -(self.gap_cost(j) as i32);
            trace[j] = SRC_LEFT | if j == 1 { LEFT_OPENS } else { 0 };
        }
        for i in 1..=n {
            let (cur, prev) = if i % 2 == 1 { (cols, 0) } else { (0, cols) };
            h[cur] = -(self.gap_cost(i) as i32);
            trace[i * cols] = SRC_UP | if i == 1 { UP_OPENS } else { 0 };
            up[0] = h[cur];
            let mut left = NEG_INF;
            let ra = ea[i - 1];
            for j in 1..cols {
                let mut tb = 0u8;
                let open_up = h[prev + j] - self.open;
                let ext_up = up[j] - self.extend;
                let u = if open_up >= ext_up {
                    tb |= UP_OPENS;
                    open_up
                } else {
                    ext_up
                };
                up[j] = u;
                let open_left = h[cur + j - 1] - self.open;
                let ext_left = left - self.extend;
                let l = if open_left >= ext_left {
                    tb |= LEFT_OPENS;
                    open_left
                } else {
                    ext_left
                };
                left = l;
                let d = h[prev + j - 1] + self.table.get(ra, eb[j - 1]);
                let (mut best, mut src) = (d, SRC_DIAG);
                if u > best {
                    best = u;
                    src = SRC_UP;
                }
                if l > best {
                    best = l;
                    src = SRC_LEFT;
                }
                h[cur + j] = best;
                trace[i * cols + j] = tb | src;
            }
        }
        let score = h[if n % 2 == 1 { cols } else { 0 } + m];
        let (mut ra, mut rb) = (Vec::with_capacity(n + m), Vec::with_capacity(n + m));
        walk(&trace, cols, a, b, n, m, &mut ra, &mut rb, false);
        ra.reverse();
        rb.reverse();
        Ok(PairAlignment {
            aligned_a: ra,
            aligned_b: rb,
            score,
            span_a: 0..n,
            span_b: 0..m,
            mode: AlignMode::Global,
        })
    }

    /// Score of an ungapped block.
    pub fn block_score(&self, a: &[u8], b: &[u8]) -> i32 {
        a.iter()
            .zip(b)
            .map(|(&x, &y)| self.table.get(ScoreTable::code(x), ScoreTable::code(y)))
            .sum()
    }

    fn gap_cost(&self, k: usize) -> i64 {
        if k == 0 {
            0
        } else {
            self.open as i64 + self.extend as i64 * (k as i64 - 1)
        }
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Lane {
    Best,
    Up,
    Left,
}

/// Follows traceback bytes from `(i, j)`, pushing columns in reverse.
/// Returns the cell where the walk stopped.
#[allow(clippy::too_many_arguments)]
fn walk(
    trace: &[u8],
    cols: usize,
    a: &[u8],
    b: &[u8],
    mut i: usize,
    mut j: usize,
    ra: &mut Vec<u8>,
    rb: &mut Vec<u8>,
    local: bool,
) -> (usize, usize) {
    let mut lane = Lane::Best;
    loop {
        if !local && i == 0 && j == 0 {
            break;
        }
        let tb = trace[i * cols + j];
        match lane {
            Lane::Best => match tb & SRC_MASK {
                SRC_ZERO => break,
                SRC_DIAG => {
                    ra.push(a[i - 1]);
                    rb.push(b[j - 1]);
                    i -= 1;
                    j -= 1;
                }
                SRC_UP => lane = Lane::Up,
                _ => lane = Lane::Left,
            },
            Lane::Up => {
                ra.push(a[i - 1]);
                rb.push(GAP);
                if tb & UP_OPENS != 0 {
                    lane = Lane::Best;
                }
                i -= 1;
            }
            Lane::Left => {
                ra.push(GAP);
                rb.push(b[j - 1]);
                if tb & LEFT_OPENS != 0 {
                    lane = Lane::Best;
                }
                j -= 1;
            }
        }
    }
    (i, j)
}

fn check_alphabets(a: &Sequence, b: &Sequence) -> Result<()> {
    if a.alphabet.kind != b.alphabet.kind {
        return Err(Error::AlphabetMismatch(format!(
            "'{}' is {} but '{}' is {}",
            a.id, a.alphabet.kind, b.id, b.alphabet.kind
        )));
    }
    Ok(())
}

pub fn sw_fill(a: &Sequence, b: &Sequence, scheme: &ScoreScheme) -> Result<DpMatrix> {
    check_alphabets(a, b)?;
    Aligner::new(scheme, a.alphabet).sw_fill(&a.residues, &b.residues)
}

pub fn sw_traceback(m: &DpMatrix, a: &Sequence, b: &Sequence, scheme: &ScoreScheme) -> PairAlignment {
    Aligner::new(scheme, a.alphabet).sw_traceback(m, &a.residues, &b.residues)
}

pub fn global_align(a: &Sequence, b: &Sequence, scheme: &ScoreScheme) -> Result<PairAlignment> {
    check_alphabets(a, b)?;
    Aligner::new(scheme, a.alphabet).global(&a.residues, &b.residues)
}
