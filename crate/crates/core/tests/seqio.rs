use std::io::Write;

use flate2::write::GzEncoder;
use flate2::Compression;
use proptest::prelude::*;
use starmsa::msa::Msa;
use starmsa::seqio::{parse_aligned_fasta, parse_fasta, write_fasta, write_sequences, Alphabet, ParseOptions};
use starmsa_testkit::{gen, rng};

proptest! {
    #[test]
    fn sequences_round_trip(seed in any::<u64>(), n in 1usize..20, max_len in 1usize..300) {
        let mut r = rng(seed);
        let rows: Vec<Vec<u8>> = (0..n).map(|i| gen::residues(&mut r, gen::DNA, 1 + (i * 37) % max_len)).collect();
        let seqs = gen::sequences(&rows, Alphabet::DNA);
        let mut text = Vec::new();
        write_sequences(&seqs, &mut text).unwrap();
        let back = parse_fasta(text.as_slice(), ParseOptions::default()).unwrap();
        prop_assert_eq!(back.len(), n);
        for (a, b) in back.iter().zip(&seqs) {
            prop_assert_eq!(&a.id, &b.id);
            prop_assert_eq!(&a.residues, &b.residues);
        }

        let mut gz = GzEncoder::new(Vec::new(), Compression::fast());
        gz.write_all(&text).unwrap();
        let zipped = parse_fasta(gz.finish().unwrap().as_slice(), ParseOptions::default()).unwrap();
        prop_assert_eq!(zipped, back);
    }

    #[test]
    fn alignments_round_trip(seed in any::<u64>(), n in 1usize..10, len in 1usize..200) {
        let mut r = rng(seed);
        let mut rows = gen::gapped_rows(&mut r, n, len, 0.2);
        // every row needs at least one residue
        for row in rows.iter_mut() {
            row[0] = b'A';
        }
        let msa = Msa::new((0..n).map(|i| format!("r{i}")).collect(), rows, Alphabet::DNA).unwrap();
        let mut text = Vec::new();
        write_fasta(&msa, &mut text).unwrap();
        prop_assert_eq!(parse_aligned_fasta(text.as_slice(), ParseOptions::default()).unwrap(), msa);
    }
}
