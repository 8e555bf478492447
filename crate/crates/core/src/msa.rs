//! Center-star multiple alignment.
//!
//! Every sequence is aligned end-to-end against one center sequence. Each
//! pairwise result is reduced to a compact record of where gaps fall relative
//! to the center; the per-offset maximum of the center-side gap runs defines
//! the final center row, and every other row is re-rendered against it.
//! Within an insertion run a sequence's own residues come first, padding
//! gaps after.

use crate::anchor::{chain_anchors, KmerTrie, DEFAULT_KMER};
use crate::engine::{par_map, par_map_reduce, MemoryProbe, RunConfig, RunReport, StageReport};
use crate::error::{Error, Result};
use crate::pairwise::{left_align_gaps, AlignMode, Aligner, PairAlignment};
use crate::scoring::ScoreScheme;
use crate::seqio::{Alphabet, Sequence, GAP};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Msa {
    ids: Vec<String>,
    rows: Vec<Vec<u8>>,
    alphabet: Alphabet,
    n_cols: usize,
}

impl Msa {
    /// Rows must all have the same length.
    pub fn new(ids: Vec<String>, rows: Vec<Vec<u8>>, alphabet: Alphabet) -> Result<Self> {
        if ids.len() != rows.len() {
            return Err(Error::InvalidMsa(format!("{} ids for {} rows", ids.len(), rows.len())));
        }
        let n_cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != n_cols) {
            return Err(Error::LengthMismatch {
                a: n_cols,
                b: bad.len(),
            });
        }
        Ok(Msa {
            ids,
            rows,
            alphabet,
            n_cols,
        })
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn rows(&self) -> &[Vec<u8>] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &[u8] {
        &self.rows[i]
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn ungapped(&self, i: usize) -> Vec<u8> {
        self.rows[i].iter().copied().filter(|&c| c != GAP).collect()
    }

    pub fn first_all_gap_column(&self) -> Option<usize> {
        (0..self.n_cols).find(|&c| self.rows.iter().all(|r| r[c] == GAP))
    }

    /// Keeps only the listed rows, in the given order.
    pub fn select(&self, rows: &[usize]) -> Msa {
        Msa {
            ids: rows.iter().map(|&i| self.ids[i].clone()).collect(),
            rows: rows.iter().map(|&i| self.rows[i].clone()).collect(),
            alphabet: self.alphabet,
            n_cols: self.n_cols,
        }
    }
}

/// How a pairwise alignment places gaps relative to the center.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PairGaps {
    /// (center offset, run): query residues inserted before that center
    /// residue; offset == center length means trailing.
    pub inserts: Vec<(usize, usize)>,
    /// (center offset, run): center residues facing a gap in the query.
    pub deletions: Vec<(usize, usize)>,
}

impl PairGaps {
    /// Reads a global alignment whose first row is the center.
    pub fn from_alignment(aln: &PairAlignment, center: &[u8], index: usize) -> Result<Self> {
        let mut gaps = PairGaps::default();
        let mut offset = 0usize;
        let mut run = 0usize;
        for (&c, &q) in aln.aligned_a.iter().zip(&aln.aligned_b) {
            if c == GAP {
                if q == GAP {
                    return Err(Error::InvalidMsa(format!("pair {index} has an all-gap column")));
                }
                run += 1;
                continue;
            }
            if center.get(offset) != Some(&c) {
                return Err(Error::InconsistentCenter { index });
            }
            if run > 0 {
                gaps.inserts.push((offset, run));
                run = 0;
            }
            if q == GAP {
                match gaps.deletions.last_mut() {
                    Some((start, len)) if *start + *len == offset => *len += 1,
                    _ => gaps.deletions.push((offset, 1)),
                }
            }
            offset += 1;
        }
        if offset != center.len() {
            return Err(Error::InconsistentCenter { index });
        }
        if run > 0 {
            gaps.inserts.push((offset, run));
        }
        Ok(gaps)
    }

    pub fn entries(&self) -> usize {
        self.inserts.len() + self.deletions.len()
    }

    fn query_len(&self, center_len: usize) -> usize {
        let ins: usize = self.inserts.iter().map(|x| x.1).sum();
        let del: usize = self.deletions.iter().map(|x| x.1).sum();
        center_len + ins - del
    }
}

/// Inserted-space record for a whole run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GapLedger {
    /// Maximum insertion run before each center offset (`len + 1` entries).
    pub center_gaps: Vec<usize>,
    pub per_seq_gaps: Vec<PairGaps>,
}

impl GapLedger {
    pub fn new(center_len: usize) -> Self {
        GapLedger {
            center_gaps: vec![0; center_len + 1],
            per_seq_gaps: Vec::new(),
        }
    }

    pub fn push(&mut self, gaps: PairGaps) {
        for &(o, run) in &gaps.inserts {
            let slot = &mut self.center_gaps[o];
            *slot = (*slot).max(run);
        }
        self.per_seq_gaps.push(gaps);
    }

    pub fn n_cols(&self) -> usize {
        self.center_gaps.len() - 1 + self.center_gaps.iter().sum::<usize>()
    }

    pub fn entries(&self) -> usize {
        self.per_seq_gaps.iter().map(PairGaps::entries).sum()
    }

    pub fn center_row(&self, center: &[u8]) -> Vec<u8> {
        let mut row = Vec::with_capacity(self.n_cols());
        for (o, &run) in self.center_gaps.iter().enumerate() {
            row.extend(std::iter::repeat_n(GAP, run));
            if let Some(&c) = center.get(o) {
                row.push(c);
            }
        }
        row
    }

    /// Renders a query row from its own gap record.
    pub fn render(&self, gaps: &PairGaps, query: &[u8]) -> Vec<u8> {
        let mut row = Vec::with_capacity(self.n_cols());
        let mut ins = gaps.inserts.iter().peekable();
        let mut del = gaps.deletions.iter().peekable();
        let mut q = 0usize;
        for (o, &run) in self.center_gaps.iter().enumerate() {
            let own = match ins.peek() {
                Some(&&(at, r)) if at == o => {
                    ins.next();
                    r
                }
                _ => 0,
            };
            row.extend_from_slice(&query[q..q + own]);
            q += own;
            row.extend(std::iter::repeat_n(GAP, run - own));
            if o + 1 == self.center_gaps.len() {
                break;
            }
            while del.peek().is_some_and(|&&(s, l)| s + l <= o) {
                del.next();
            }
            if del.peek().is_some_and(|&&(s, _)| s <= o) {
                row.push(GAP);
            } else {
                row.push(query[q]);
                q += 1;
            }
        }
        row
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CenterMode {
    First,
    Sampled,
}

impl CenterMode {
    pub fn default_for(alphabet: &Alphabet) -> Self {
        if alphabet.is_nucleotide() {
            CenterMode::First
        } else {
            CenterMode::Sampled
        }
    }
}

impl std::str::FromStr for CenterMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "first" => Ok(CenterMode::First),
            "sampled" => Ok(CenterMode::Sampled),
            other => Err(format!("unknown center mode '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MsaConfig {
    /// `None` picks First for nucleotides, Sampled for proteins.
    pub center_mode: Option<CenterMode>,
    pub kmer: usize,
    pub run: RunConfig,
}

impl Default for MsaConfig {
    fn default() -> Self {
        MsaConfig {
            center_mode: None,
            kmer: DEFAULT_KMER,
            run: RunConfig::default(),
        }
    }
}

/// `count` indices spread over `0..n` with a fixed stride, starting at 0.
pub fn stride_sample(n: usize, count: usize) -> Vec<usize> {
    let count = count.min(n);
    if count == 0 {
        return Vec::new();
    }
    let stride = (n / count).max(1);
    (0..count).map(|i| i * stride).collect()
}

fn ceil_sqrt(n: usize) -> usize {
    let mut r = (n as f64).sqrt() as usize;
    while r * r < n {
        r += 1;
    }
    while r > 0 && (r - 1) * (r - 1) >= n {
        r -= 1;
    }
    r
}

/// Candidate centers for Sampled mode and, per candidate, the sequences it
/// is scored against.
pub fn center_sample(n: usize) -> Vec<(usize, Vec<usize>)> {
    let c = ceil_sqrt(n);
    stride_sample(n, c)
        .into_iter()
        .map(|cand| {
            let others: Vec<usize> = (0..n).filter(|&i| i != cand).collect();
            let refs = stride_sample(others.len(), c).into_iter().map(|i| others[i]).collect();
            (cand, refs)
        })
        .collect()
}

/// Picks the center. Sampled mode scores candidates by shared k-mer hits
/// (nucleotides) or summed Smith-Waterman scores (proteins); ties go to the
/// smaller index.
pub fn select_center(seqs: &[Sequence], mode: CenterMode, scheme: &ScoreScheme, kmer: usize, run: &RunConfig) -> Result<usize> {
    if seqs.len() < 2 {
        return Err(Error::TooFewSequences {
            need: 2,
            got: seqs.len(),
        });
    }
    if mode == CenterMode::First {
        return Ok(0);
    }
    let alphabet = seqs[0].alphabet;
    let aligner = Aligner::new(scheme, alphabet);
    let plan = center_sample(seqs.len());
    let (scores, _) = par_map(
        "select_center",
        &plan,
        seqs,
        |seqs, _, (cand, refs)| -> Result<u64> {
            let center = &seqs[*cand];
            if alphabet.is_nucleotide() {
                let Ok(trie) = KmerTrie::build(center, kmer) else {
                    return Ok(0);
                };
                Ok(refs.iter().map(|&r| trie.match_stream(&seqs[r].residues).1.hits as u64).sum())
            } else {
                refs.iter()
                    .map(|&r| aligner.local_score(&center.residues, &seqs[r].residues).map(|s| s as u64))
                    .sum()
            }
        },
        run,
    )?;
    let mut best = 0;
    for (i, s) in scores.iter().enumerate() {
        if *s > scores[best] {
            best = i;
        }
    }
    Ok(plan[best].0)
}

/// Per-pair work counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AlignStats {
    pub dp_cells: u64,
    pub anchored: u64,
}

/// Immutable state shared by every pairwise task of a run.
pub struct CenterContext<'a> {
    pub center: &'a Sequence,
    pub aligner: Aligner,
    pub trie: Option<KmerTrie>,
}

impl<'a> CenterContext<'a> {
    pub fn new(center: &'a Sequence, scheme: &ScoreScheme, kmer: usize) -> Result<Self> {
        let trie = if center.alphabet.is_nucleotide() && kmer <= center.len() {
            Some(KmerTrie::build(center, kmer)?)
        } else if kmer == 0 {
            return Err(Error::KTooSmall);
        } else {
            None
        };
        Ok(CenterContext {
            center,
            aligner: Aligner::new(scheme, center.alphabet),
            trie,
        })
    }

    /// Full-length alignment of `query` against the center (center is row a),
    /// with gaps moved to their leftmost equivalent position.
    pub fn align(&self, query: &Sequence) -> Result<(PairAlignment, AlignStats)> {
        if query.alphabet.kind != self.center.alphabet.kind {
            return Err(Error::AlphabetMismatch(format!(
                "'{}' is {} but the center '{}' is {}",
                query.id, query.alphabet.kind, self.center.id, self.center.alphabet.kind
            )));
        }
        let c = &self.center.residues;
        let q = &query.residues;
        let mut stats = AlignStats::default();
        let trie = match &self.trie {
            Some(t) if q.len() >= t.k() => t,
            _ => {
                stats.dp_cells = (c.len() * q.len()) as u64;
                let mut aln = self.aligner.global(c, q)?;
                left_align_gaps(&mut aln.aligned_a, &mut aln.aligned_b);
                return Ok((aln, stats));
            }
        };
        let (hits, _) = trie.match_stream(q);
        let chain = chain_anchors(&hits, c.len(), q.len());
        drop(hits);
        let mut aligned_a = Vec::with_capacity(c.len() + q.len() / 8);
        let mut aligned_b = Vec::with_capacity(aligned_a.capacity());
        let mut score = 0i32;
        let gaps = chain.gaps();
        for (g, (cr, qr)) in gaps.iter().enumerate() {
            stats.dp_cells += (cr.len() * qr.len()) as u64;
            let seg = self.aligner.global(&c[cr.clone()], &q[qr.clone()])?;
            score += seg.score;
            aligned_a.extend_from_slice(&seg.aligned_a);
            aligned_b.extend_from_slice(&seg.aligned_b);
            if let Some(a) = chain.anchors.get(g) {
                let block_c = &c[a.center_start..a.center_end()];
                let block_q = &q[a.query_start..a.query_end()];
                aligned_a.extend_from_slice(block_c);
                aligned_b.extend_from_slice(block_q);
                score += self.aligner.block_score(block_c, block_q);
                stats.anchored += a.len as u64;
            }
        }
        left_align_gaps(&mut aligned_a, &mut aligned_b);
        Ok((
            PairAlignment {
                aligned_a,
                aligned_b,
                score,
                span_a: 0..c.len(),
                span_b: 0..q.len(),
                mode: AlignMode::Global,
            },
            stats,
        ))
    }
}

pub fn align_to_center(center: &Sequence, query: &Sequence, scheme: &ScoreScheme, kmer: usize) -> Result<PairAlignment> {
    Ok(CenterContext::new(center, scheme, kmer)?.align(query)?.0)
}

/// Merges per-sequence alignments against `center` into one Msa. `pairs[i]`
/// aligns the center (row a) with `seqs[i]` (row b).
pub fn merge_alignments(center: &Sequence, seqs: &[Sequence], pairs: &[PairAlignment]) -> Result<Msa> {
    if seqs.len() != pairs.len() {
        return Err(Error::InvalidMsa(format!("{} pairs for {} sequences", pairs.len(), seqs.len())));
    }
    let mut ledger = GapLedger::new(center.len());
    for (i, (p, s)) in pairs.iter().zip(seqs).enumerate() {
        let gaps = PairGaps::from_alignment(p, &center.residues, i)?;
        let stripped: Vec<u8> = p.aligned_b.iter().copied().filter(|&c| c != GAP).collect();
        if stripped != s.residues {
            return Err(Error::InvalidMsa(format!("pair {i} does not reproduce sequence '{}'", s.id)));
        }
        ledger.push(gaps);
    }
    let rows = seqs
        .iter()
        .zip(&ledger.per_seq_gaps)
        .map(|(s, g)| ledger.render(g, &s.residues))
        .collect();
    let msa = Msa::new(seqs.iter().map(|s| s.id.clone()).collect(), rows, center.alphabet)?;
    check_columns(&msa)?;
    Ok(msa)
}

fn check_columns(msa: &Msa) -> Result<()> {
    match msa.first_all_gap_column() {
        Some(c) => Err(Error::InvalidMsa(format!("column {c} is all gaps"))),
        None => Ok(()),
    }
}

fn check_uniform(seqs: &[Sequence]) -> Result<()> {
    if seqs.len() < 2 {
        return Err(Error::TooFewSequences {
            need: 2,
            got: seqs.len(),
        });
    }
    let kind = seqs[0].alphabet.kind;
    if let Some(s) = seqs.iter().find(|s| s.alphabet.kind != kind) {
        return Err(Error::AlphabetMismatch(format!(
            "'{}' is {} but '{}' is {}",
            s.id, s.alphabet.kind, seqs[0].id, kind
        )));
    }
    Ok(())
}

struct LedgerAcc {
    ledger: GapLedger,
    stats: AlignStats,
}

/// Full pipeline: pick the center, align everything to it in parallel,
/// reduce the gap ledger, then render rows in parallel.
pub fn run_msa(seqs: &[Sequence], scheme: &ScoreScheme, cfg: &MsaConfig) -> Result<(Msa, RunReport)> {
    check_uniform(seqs)?;
    let probe = MemoryProbe::start();
    let mut report = RunReport {
        threads: cfg.run.resolved_threads(),
        ..Default::default()
    };
    let alphabet = seqs[0].alphabet;
    let mode = cfg.center_mode.unwrap_or_else(|| CenterMode::default_for(&alphabet));

    let t0 = std::time::Instant::now();
    let center_idx = select_center(seqs, mode, scheme, cfg.kmer, &cfg.run)?;
    report.stages.push(StageReport {
        name: "select_center".into(),
        wall_secs: t0.elapsed().as_secs_f64(),
        items: seqs.len(),
        tasks: if mode == CenterMode::Sampled { cfg.run.task_count(ceil_sqrt(seqs.len())) } else { 0 },
        chunk_size: 0,
    });

    let center = &seqs[center_idx];
    let t0 = std::time::Instant::now();
    let ctx = CenterContext::new(center, scheme, cfg.kmer)?;
    report.stages.push(StageReport {
        name: "index".into(),
        wall_secs: t0.elapsed().as_secs_f64(),
        items: 1,
        tasks: 1,
        chunk_size: 1,
    });

    let (acc, stage) = par_map_reduce(
        "align",
        seqs,
        &ctx,
        |ctx, i, s| -> Result<(PairGaps, AlignStats)> {
            if i == center_idx {
                return Ok((PairGaps::default(), AlignStats::default()));
            }
            let (aln, stats) = ctx.align(s)?;
            Ok((PairGaps::from_alignment(&aln, &ctx.center.residues, i)?, stats))
        },
        LedgerAcc {
            ledger: GapLedger::new(center.len()),
            stats: AlignStats::default(),
        },
        |mut acc, _, (gaps, stats)| {
            acc.ledger.push(gaps);
            acc.stats.dp_cells += stats.dp_cells;
            acc.stats.anchored += stats.anchored;
            Ok(acc)
        },
        &cfg.run,
    )?;
    report.stages.push(stage);
    let ledger = acc.ledger;
    drop(ctx);

    let indexed: Vec<usize> = (0..seqs.len()).collect();
    let (rows, stage) = par_map(
        "merge",
        &indexed,
        &(&ledger, seqs),
        |(ledger, seqs), _, &i| Ok(ledger.render(&ledger.per_seq_gaps[i], &seqs[i].residues)),
        &cfg.run,
    )?;
    report.stages.push(stage);

    report.add_counter("center_index", center_idx as u64);
    report.add_counter("dp_cells", acc.stats.dp_cells);
    report.add_counter("anchored_residues", acc.stats.anchored);
    report.add_counter("ledger_entries", ledger.entries() as u64);
    let msa = Msa::new(seqs.iter().map(|s| s.id.clone()).collect(), rows, alphabet)?;
    for (i, s) in seqs.iter().enumerate() {
        debug_assert_eq!(ledger.per_seq_gaps[i].query_len(center.len()), s.len());
    }
    check_columns(&msa)?;
    probe.finish(&mut report);
    Ok((msa, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity(center: &Sequence) -> PairAlignment {
        PairAlignment {
            aligned_a: center.residues.clone(),
            aligned_b: center.residues.clone(),
            score: 0,
            span_a: 0..center.len(),
            span_b: 0..center.len(),
            mode: AlignMode::Global,
        }
    }

    fn dna(id: &str, s: &str) -> Sequence {
        Sequence::new(id, s.as_bytes(), Alphabet::DNA).unwrap()
    }

    fn cfg(kmer: usize) -> MsaConfig {
        MsaConfig {
            kmer,
            run: RunConfig::with_threads(1),
            ..Default::default()
        }
    }

    fn rows(msa: &Msa) -> Vec<String> {
        msa.rows().iter().map(|r| String::from_utf8(r.clone()).unwrap()).collect()
    }

    #[test]
    fn ceil_sqrt_values() {
        let got: Vec<_> = [1, 2, 4, 5, 9, 10, 2000].iter().map(|&n| ceil_sqrt(n)).collect();
        assert_eq!(got, vec![1, 2, 2, 3, 3, 4, 45]);
    }

    #[test]
    fn center_first_and_identical_sampled() {
        let scheme = ScoreScheme::default_nucleotide();
        let seqs: Vec<_> = (0..5).map(|i| dna(&format!("s{i}"), "ACGTACGTAA")).collect();
        let run = RunConfig::with_threads(1);
        assert_eq!(select_center(&seqs, CenterMode::First, &scheme, 3, &run).unwrap(), 0);
        assert_eq!(select_center(&seqs, CenterMode::Sampled, &scheme, 3, &run).unwrap(), 0);
        assert!(matches!(
            select_center(&seqs[..1], CenterMode::First, &scheme, 3, &run),
            Err(Error::TooFewSequences { .. })
        ));
    }

    #[test]
    fn deletion_against_center() {
        let scheme = ScoreScheme::default_nucleotide();
        let c = dna("c", "ACGTACGT");
        let aln = align_to_center(&c, &dna("q", "ACGACGT"), &scheme, 3).unwrap();
        assert_eq!(aln.aligned_a, b"ACGTACGT");
        assert_eq!(aln.aligned_b, b"ACG-ACGT");
        let full = Aligner::new(&scheme, Alphabet::DNA).global(b"ACGTACGT", b"ACGACGT").unwrap();
        assert_eq!(full, aln);
    }

    #[test]
    fn short_query_falls_back_to_global() {
        let scheme = ScoreScheme::default_nucleotide();
        let c = dna("c", "ACGTACGTTTGA");
        let q = dna("q", "CGTA");
        let aln = align_to_center(&c, &q, &scheme, 5).unwrap();
        let full = Aligner::new(&scheme, Alphabet::DNA).global(&c.residues, &q.residues).unwrap();
        assert_eq!(aln, full);
    }

    #[test]
    fn identity_merge() {
        let seqs = vec![dna("a", "ACGT"), dna("b", "ACGT")];
        let pairs = vec![identity(&seqs[0]), identity(&seqs[0])];
        let msa = merge_alignments(&seqs[0], &seqs, &pairs).unwrap();
        assert_eq!(rows(&msa), vec!["ACGT", "ACGT"]);
        assert_eq!(msa.n_cols(), 4);
    }

    #[test]
    fn max_merge_pads_shorter_runs() {
        let center = dna("c", "ACGT");
        let seqs = vec![center.clone(), dna("q1", "ACTGT"), dna("q2", "ACTTTGT")];
        let pairs = vec![
            identity(&center),
            PairAlignment {
                aligned_a: b"AC-GT".to_vec(),
                aligned_b: b"ACTGT".to_vec(),
                ..identity(&center)
            },
            PairAlignment {
                aligned_a: b"AC---GT".to_vec(),
                aligned_b: b"ACTTTGT".to_vec(),
                ..identity(&center)
            },
        ];
        let msa = merge_alignments(&center, &seqs, &pairs).unwrap();
        assert_eq!(rows(&msa), vec!["AC---GT", "ACT--GT", "ACTTTGT"]);

        let bad = vec![identity(&center), identity(&dna("x", "AGGT")), pairs[2].clone()];
        assert!(matches!(merge_alignments(&center, &seqs, &bad), Err(Error::InconsistentCenter { index: 1 })));
    }

    #[test]
    fn deletions_render_as_gaps() {
        let center = dna("c", "ACGTAC");
        let seqs = vec![center.clone(), dna("q", "AGTTAC")];
        let pairs = vec![
            identity(&center),
            PairAlignment {
                aligned_a: b"ACGT-AC".to_vec(),
                aligned_b: b"A-GTTAC".to_vec(),
                ..identity(&center)
            },
        ];
        let msa = merge_alignments(&center, &seqs, &pairs).unwrap();
        assert_eq!(rows(&msa), vec!["ACGT-AC", "A-GTTAC"]);
    }

    #[test]
    fn run_examples() {
        let scheme = ScoreScheme::default_nucleotide();
        let s = "ACGTTGCAAGGCTTACCGATAGCTTAGGCATCGAT";
        let two = vec![dna("a", s), dna("b", s)];
        let (msa, _) = run_msa(&two, &scheme, &cfg(5)).unwrap();
        assert_eq!(rows(&msa), vec![s, s]);

        let mut sub = s.as_bytes().to_vec();
        sub[10] = b'A';
        let mut set: Vec<_> = (0..4).map(|i| dna(&format!("c{i}"), s)).collect();
        set.push(Sequence::new("m", &sub, Alphabet::DNA).unwrap());
        let (msa, report) = run_msa(&set, &scheme, &cfg(5)).unwrap();
        assert_eq!(msa.n_cols(), s.len());
        assert!(msa.rows().iter().all(|r| !r.contains(&GAP)));
        assert_eq!(report.stage("align").unwrap().items, 5);
    }

    #[test]
    fn run_rejects_mixed_alphabets() {
        let scheme = ScoreScheme::default_nucleotide();
        let seqs = vec![dna("a", "ACGT"), Sequence::new("p", b"MKVL", Alphabet::PROTEIN).unwrap()];
        assert!(matches!(run_msa(&seqs, &scheme, &cfg(3)), Err(Error::AlphabetMismatch(_))));
    }

    #[test]
    fn protein_pipeline() {
        let scheme = ScoreScheme::default_protein();
        let p = |id: &str, s: &str| Sequence::new(id, s.as_bytes(), Alphabet::PROTEIN).unwrap();
        let seqs = vec![p("a", "MKVLITGAGS"), p("b", "MKVITGAGS"), p("c", "MKVLITGWAGS")];
        let (msa, report) = run_msa(&seqs, &scheme, &MsaConfig::default()).unwrap();
        for (i, s) in seqs.iter().enumerate() {
            assert_eq!(msa.ungapped(i), s.residues);
        }
        assert!(report.counters["dp_cells"] > 0);
    }
}
