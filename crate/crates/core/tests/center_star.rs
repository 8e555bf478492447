use proptest::prelude::*;
use starmsa::msa::{run_msa, CenterMode, MsaConfig};
use starmsa::scoring::ScoreScheme;
use starmsa::seqio::GAP;
use starmsa::RunConfig;
use starmsa_testkit::{gen, oracle, rng};

fn cfg(threads: usize, kmer: usize) -> MsaConfig {
    MsaConfig {
        center_mode: Some(CenterMode::First),
        kmer,
        run: RunConfig::with_threads(threads),
    }
}

fn check_against_oracle(seed: u64, kmer: usize) -> Result<(), String> {
    let mut r = rng(seed);
    let n = 2 + (seed % 5) as usize;
    let m = 5 + (seed % 26) as usize;
    let seqs = gen::clone_family(&mut r, n, m, 3);
    let scheme = ScoreScheme::default_nucleotide();
    let (msa, _) = run_msa(&seqs, &scheme, &cfg(2, kmer)).map_err(|e| e.to_string())?;
    let raw: Vec<Vec<u8>> = seqs.iter().map(|s| s.residues.clone()).collect();
    let want = oracle::naive_center_star(&raw, 0, &scheme);
    if msa.rows() != want.as_slice() {
        let show = |rows: &[Vec<u8>]| rows.iter().map(|r| String::from_utf8_lossy(r).into_owned()).collect::<Vec<_>>().join("\n");
        return Err(format!("seed {seed}\ngot:\n{}\nwant:\n{}", show(msa.rows()), show(&want)));
    }
    Ok(())
}

#[test]
fn matches_full_dp_oracle_with_default_anchors() {
    for seed in 0..200 {
        check_against_oracle(seed, starmsa::anchor::DEFAULT_KMER).unwrap();
    }
}

proptest! {
    #[test]
    fn rows_recover_inputs(seed in any::<u64>(), n in 2usize..8, m in 1usize..60, edits in 0usize..8, k in 2usize..16) {
        let mut r = rng(seed);
        let seqs = gen::clone_family(&mut r, n, m, edits);
        let (msa, _) = run_msa(&seqs, &ScoreScheme::default_nucleotide(), &cfg(1, k)).unwrap();
        for (row, s) in msa.rows().iter().zip(&seqs) {
            let stripped: Vec<u8> = row.iter().copied().filter(|&c| c != GAP).collect();
            prop_assert_eq!(&stripped, &s.residues);
        }
        prop_assert_eq!(msa.first_all_gap_column(), None);
    }

    #[test]
    fn thread_count_does_not_change_output(seed in any::<u64>(), n in 2usize..20, chunk in 1usize..5) {
        let mut r = rng(seed);
        let seqs = gen::clone_family(&mut r, n, 40, 4);
        let scheme = ScoreScheme::default_nucleotide();
        let (one, _) = run_msa(&seqs, &scheme, &cfg(1, 8)).unwrap();
        let mut c = cfg(4, 8);
        c.run.chunk_size = Some(chunk);
        let (many, _) = run_msa(&seqs, &scheme, &c).unwrap();
        prop_assert_eq!(one, many);
    }
}

#[test]
fn protein_sampled_center_recovers_rows() {
    let mut r = rng(7);
    let root = gen::residues(&mut r, gen::AMINO, 40);
    let rows: Vec<Vec<u8>> = (0..9).map(|_| gen::mutate(&mut r, &root, gen::AMINO, 4)).collect();
    let seqs = gen::sequences(&rows, starmsa::Alphabet::PROTEIN);
    let (msa, report) = run_msa(&seqs, &ScoreScheme::default_protein(), &MsaConfig::default()).unwrap();
    for (row, s) in msa.rows().iter().zip(&seqs) {
        let stripped: Vec<u8> = row.iter().copied().filter(|&c| c != GAP).collect();
        assert_eq!(stripped, s.residues);
    }
    assert!(report.counters.contains_key("center_index"));
}

/// Short k-mers anchor spurious matches, so optimality is not guaranteed,
/// only that the reported score is the score of the returned alignment and
/// never exceeds the full DP optimum.
#[test]
fn short_anchors_never_beat_full_dp() {
    let scheme = ScoreScheme::default_nucleotide();
    for seed in 0..300u64 {
        let mut r = rng(seed);
        let seqs = gen::clone_family(&mut r, 4, 5 + (seed % 26) as usize, 3);
        for s in &seqs[1..] {
            let a = starmsa::msa::align_to_center(&seqs[0], s, &scheme, 4).unwrap();
            let (best, _, _) = oracle::naive_global(&seqs[0].residues, &s.residues, &scheme);
            assert!(a.score as i64 <= best, "seed {seed}");
            assert_eq!(a.rescore(&scheme, &starmsa::Alphabet::DNA), a.score as i64, "seed {seed}");
        }
    }
}
