use proptest::prelude::*;
use starmsa::pairwise::{left_align_gaps, score_columns, Aligner};
use starmsa::scoring::ScoreScheme;
use starmsa::seqio::{Alphabet, GAP};
use starmsa_testkit::{gen, oracle, rng};

fn dna(max: usize) -> impl Strategy<Value = Vec<u8>> {
    prop::collection::vec(prop::sample::select(gen::DNA.to_vec()), 1..=max)
}

fn scheme() -> impl Strategy<Value = ScoreScheme> {
    (1i32..=5, -5i32..=0, 1i32..=6, 0i32..=6)
        .prop_filter("extend <= open", |(_, _, o, e)| e <= o)
        .prop_map(|(m, x, o, e)| ScoreScheme::simple(m, x, o, e).unwrap())
}

#[test]
fn sw_matches_local_enumeration_on_fixed_seeds() {
    for seed in 0..150 {
        let mut r = rng(seed);
        let s = gen::scheme(&mut r);
        let la = 1 + (seed as usize * 7) % 7;
        let lb = 1 + (seed as usize * 3) % 7;
        let a = gen::residues(&mut r, gen::DNA, la);
        let b = gen::residues(&mut r, gen::DNA, lb);
        let m = Aligner::new(&s, Alphabet::DNA).sw_fill(&a, &b).unwrap();
        assert_eq!(m.best_score() as i64, oracle::brute_local_score(&a, &b, &s), "seed {seed}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn sw_matches_local_enumeration(a in dna(6), b in dna(6), s in scheme()) {
        let aligner = Aligner::new(&s, Alphabet::DNA);
        let m = aligner.sw_fill(&a, &b).unwrap();
        prop_assert_eq!(m.best_score() as i64, oracle::brute_local_score(&a, &b, &s));
        prop_assert_eq!(aligner.local_score(&a, &b).unwrap(), m.best_score());
    }

    #[test]
    fn sw_traceback_scores_its_own_alignment(a in dna(20), b in dna(20), s in scheme()) {
        let aligner = Aligner::new(&s, Alphabet::DNA);
        let m = aligner.sw_fill(&a, &b).unwrap();
        let aln = aligner.sw_traceback(&m, &a, &b);
        prop_assert_eq!(aln.score, m.best_score());
        prop_assert_eq!(aln.rescore(&s, &Alphabet::DNA), aln.score as i64);
        let ra: Vec<u8> = aln.aligned_a.iter().copied().filter(|&c| c != GAP).collect();
        let rb: Vec<u8> = aln.aligned_b.iter().copied().filter(|&c| c != GAP).collect();
        prop_assert_eq!(&ra[..], &a[aln.span_a.clone()]);
        prop_assert_eq!(&rb[..], &b[aln.span_b.clone()]);
    }

    #[test]
    fn local_score_is_symmetric(a in dna(30), b in dna(30), s in scheme()) {
        let aligner = Aligner::new(&s, Alphabet::DNA);
        prop_assert_eq!(aligner.local_score(&a, &b).unwrap(), aligner.local_score(&b, &a).unwrap());
    }

    #[test]
    fn global_matches_enumeration(a in dna(6), b in dna(6), s in scheme()) {
        let g = Aligner::new(&s, Alphabet::DNA).global(&a, &b).unwrap();
        prop_assert_eq!(g.score as i64, oracle::brute_global_score(&a, &b, &s));
    }

    #[test]
    fn global_matches_textbook_dp_exactly(a in dna(40), b in dna(40), s in scheme()) {
        let g = Aligner::new(&s, Alphabet::DNA).global(&a, &b).unwrap();
        let (score, ra, rb) = oracle::naive_global(&a, &b, &s);
        prop_assert_eq!(g.score as i64, score);
        prop_assert_eq!(g.aligned_a, ra);
        prop_assert_eq!(g.aligned_b, rb);
    }

    /// With open == extend the affine recurrences reduce to linear gaps.
    #[test]
    fn linear_gaps_as_affine_special_case(a in dna(6), b in dna(6), m in 1i32..4, x in -3i32..=0, g in 1i32..4) {
        let s = ScoreScheme::linear(m, x, g).unwrap();
        let local = Aligner::new(&s, Alphabet::DNA).local_score(&a, &b).unwrap();
        prop_assert_eq!(local as i64, oracle::brute_local_score(&a, &b, &s));
    }

    #[test]
    fn left_alignment_keeps_score_and_residues(a in dna(30), b in dna(30), s in scheme()) {
        let g = Aligner::new(&s, Alphabet::DNA).global(&a, &b).unwrap();
        let (mut ra, mut rb) = (g.aligned_a.clone(), g.aligned_b.clone());
        left_align_gaps(&mut ra, &mut rb);
        prop_assert_eq!(score_columns(&ra, &rb, &s, &Alphabet::DNA), g.score as i64);
        let strip = |r: &[u8]| r.iter().copied().filter(|&c| c != GAP).collect::<Vec<u8>>();
        prop_assert_eq!(strip(&ra), a);
        prop_assert_eq!(strip(&rb), b);
        // idempotent
        let (ca, cb) = (ra.clone(), rb.clone());
        prop_assert!(!left_align_gaps(&mut ra, &mut rb));
        prop_assert_eq!((ra, rb), (ca, cb));
    }
}

#[test]
fn left_alignment_examples() {
    let (mut a, mut b) = (b"ACGGGT".to_vec(), b"ACGG-T".to_vec());
    assert!(left_align_gaps(&mut a, &mut b));
    assert_eq!(b, b"AC-GGT");
    let (mut a, mut b) = (b"AT--T".to_vec(), b"ATTTT".to_vec());
    left_align_gaps(&mut a, &mut b);
    assert_eq!(a, b"A--TT");
}
