#![allow(clippy::needless_range_loop)]

use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::Rng;
use starmsa::msa::Msa;
use starmsa::phylo::{
    build_tree, cluster_rf_diagnostic, cluster_sequences, nj_build, nj_build_traced, p_distance_pair, parse_newick,
    ClusterConfig, DistMatrix, PhyloTree, TreeConfig,
};
use starmsa::seqio::Alphabet;
use starmsa::RunConfig;
use starmsa_testkit::{gen, oracle, rng};

fn same_tree(a: &PhyloTree, b: &PhyloTree, tol: f64) -> Result<(), String> {
    let (sa, sb) = (a.split_lengths(), b.split_lengths());
    let ka: BTreeSet<_> = sa.keys().collect();
    let kb: BTreeSet<_> = sb.keys().collect();
    if ka != kb {
        return Err(format!("split sets differ: {} vs {}", a.to_newick(), b.to_newick()));
    }
    for (k, la) in &sa {
        if (la - sb[k]).abs() > tol {
            return Err(format!("branch length {la} vs {}", sb[k]));
        }
    }
    Ok(())
}

proptest! {
    #[test]
    fn nj_recovers_additive_trees(seed in any::<u64>(), n in 4usize..=8) {
        let mut r = rng(seed);
        let truth = gen::random_tree(&mut r, n, 0.1, 5.0);
        let (labels, rows) = oracle::path_sums(&truth);
        let got = nj_build(&DistMatrix::from_rows(labels, &rows).unwrap()).unwrap();
        got.validate().unwrap();
        let mut truth = truth;
        truth.normalize();
        prop_assert!(same_tree(&got, &truth, 1e-9).is_ok(), "{:?}", same_tree(&got, &truth, 1e-9));
    }

    #[test]
    fn nj_join_is_exhaustive_q_argmin(seed in any::<u64>(), n in 3usize..=7) {
        let mut r = rng(seed);
        let mut rows = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in (i + 1)..n {
                let v = r.random_range(1..20) as f64 / 4.0;
                rows[i][j] = v;
                rows[j][i] = v;
            }
        }
        let labels = (0..n).map(|i| format!("x{i}")).collect();
        let (tree, steps) = nj_build_traced(&DistMatrix::from_rows(labels, &rows).unwrap()).unwrap();
        tree.validate().unwrap();
        for step in &steps {
            let m = &step.matrix;
            let k = m.len();
            let sum = |i: usize| m[i].iter().sum::<f64>();
            let mut cands = Vec::new();
            for i in 0..k {
                for j in (i + 1)..k {
                    cands.push(((k as f64 - 2.0) * m[i][j] - sum(i) - sum(j), (i, j)));
                }
            }
            let min = cands.iter().map(|c| c.0).fold(f64::INFINITY, f64::min);
            let first = cands.iter().find(|c| c.0 == min).unwrap().1;
            prop_assert_eq!(step.joined, first);
        }
    }

    #[test]
    fn newick_round_trips(seed in any::<u64>(), n in 3usize..=12) {
        let mut r = rng(seed);
        let mut t = gen::random_tree(&mut r, n, 0.1, 5.0);
        t.normalize();
        let text = t.to_newick();
        let back = parse_newick(&text).unwrap();
        prop_assert_eq!(back.to_newick(), text);
        prop_assert!(same_tree(&t, &back, 0.0).is_ok());
    }

    #[test]
    fn clusters_respect_the_cap(seed in any::<u64>(), n in 10usize..120, cap in prop::sample::select(vec![0.1, 0.2, 0.5])) {
        let mut r = rng(seed);
        let root = gen::residues(&mut r, gen::DNA, 40);
        let rows: Vec<Vec<u8>> = (0..n).map(|_| gen::mutate_rate(&mut r, &root, 0.15).into_iter().take(30).collect()).collect();
        let rows: Vec<Vec<u8>> = rows.into_iter().map(|mut v| { v.resize(30, b'-'); v }).collect();
        let msa = Msa::new((0..n).map(|i| format!("s{i}")).collect(), rows, Alphabet::DNA).unwrap();
        let cfg = ClusterConfig { balance_cap: cap, seed, ..Default::default() };
        let plan = cluster_sequences(&msa, &cfg, &RunConfig::with_threads(2)).unwrap();
        let limit = (cap * n as f64).ceil() as usize;
        prop_assert_eq!(plan.assignments.len(), n);
        prop_assert_eq!(plan.sizes.iter().sum::<usize>(), n);
        for c in 0..plan.len() {
            let members = plan.members(c);
            prop_assert_eq!(members.len(), plan.sizes[c]);
            prop_assert!(members.contains(&plan.medoids[c]));
            let identical = members.iter().all(|&m| p_distance_pair(msa.row(m), msa.row(plan.medoids[c])).unwrap_or(1.0) == 0.0);
            prop_assert!(plan.sizes[c] <= limit || identical, "cluster {} has {} > {}", c, plan.sizes[c], limit);
        }
    }

    #[test]
    fn clustered_tree_keeps_every_leaf(seed in any::<u64>(), n in 10usize..60, threads in 1usize..4) {
        let mut r = rng(seed);
        let root = gen::residues(&mut r, gen::DNA, 30);
        let rows: Vec<Vec<u8>> = (0..n).map(|_| {
            let mut v = root.clone();
            for c in v.iter_mut() {
                if r.random_bool(0.2) {
                    *c = gen::DNA[r.random_range(0..4)];
                }
            }
            v
        }).collect();
        let ids: Vec<String> = (0..n).map(|i| format!("s{i}")).collect();
        let msa = Msa::new(ids.clone(), rows, Alphabet::DNA).unwrap();
        let cfg = |t| TreeConfig { force_cluster: true, run: RunConfig::with_threads(t), cluster: ClusterConfig { seed, ..Default::default() }, ..Default::default() };
        let tree = build_tree(&msa, &cfg(threads)).unwrap();
        tree.validate().unwrap();
        let mut want = ids;
        want.sort();
        prop_assert_eq!(tree.leaf_labels(), want);
        prop_assert_eq!(tree.to_newick(), build_tree(&msa, &cfg(1)).unwrap().to_newick());
    }
}

fn families(count: usize, size: usize, len: usize, seed: u64) -> (Msa, Vec<Vec<String>>) {
    let mut r = rng(seed);
    let mut ids = Vec::new();
    let mut rows = Vec::new();
    let mut groups = Vec::new();
    for f in 0..count {
        let root = gen::residues(&mut r, gen::DNA, len);
        let mut g = Vec::new();
        for k in 0..size {
            let id = format!("f{f}_{k}");
            g.push(id.clone());
            ids.push(id);
            rows.push(root.clone());
        }
        groups.push(g);
    }
    (Msa::new(ids, rows, Alphabet::DNA).unwrap(), groups)
}

#[test]
fn two_clone_families_form_two_clusters() {
    let (msa, groups) = families(2, 50, 60, 11);
    let cfg = ClusterConfig { balance_cap: 0.6, seed: 5, ..Default::default() };
    let plan = cluster_sequences(&msa, &cfg, &RunConfig::with_threads(2)).unwrap();
    assert_eq!(plan.len(), 2);
    let got: BTreeSet<BTreeSet<String>> =
        (0..2).map(|c| plan.members(c).into_iter().map(|i| msa.ids()[i].clone()).collect()).collect();
    let want: BTreeSet<BTreeSet<String>> = groups.into_iter().map(|g| g.into_iter().collect()).collect();
    assert_eq!(got, want);
    // every sequence sits with its nearest medoid
    for i in 0..msa.n_rows() {
        let d = |m: usize| p_distance_pair(msa.row(i), msa.row(m)).unwrap();
        let own = d(plan.medoids[plan.assignments[i]]);
        assert!(plan.medoids.iter().all(|&m| own <= d(m)));
    }
}

#[test]
fn identical_sequences_form_one_cluster() {
    let (msa, _) = families(1, 40, 30, 2);
    let plan = cluster_sequences(&msa, &ClusterConfig::default(), &RunConfig::with_threads(1)).unwrap();
    assert_eq!(plan.sizes, vec![40]);
}

#[test]
fn merged_tree_keeps_families_as_clades() {
    let (msa, groups) = families(4, 5, 50, 21);
    let cfg = TreeConfig { direct_threshold: 4, run: RunConfig::with_threads(2), ..Default::default() };
    let tree = build_tree(&msa, &cfg).unwrap();
    tree.validate().unwrap();
    let labels = tree.leaf_labels();
    let splits = tree.split_lengths();
    for g in groups {
        // encode the family as a split, normalized to exclude the first label
        let members: BTreeSet<&str> = g.iter().map(String::as_str).collect();
        let mut bits = vec![0u64; labels.len().div_ceil(64)];
        let flip = members.contains(labels[0].as_str());
        for (i, l) in labels.iter().enumerate() {
            if members.contains(l.as_str()) != flip {
                bits[i / 64] |= 1 << (i % 64);
            }
        }
        assert!(splits.contains_key(&bits), "family {g:?} is not a clade in {}", tree.to_newick());
    }
}

#[test]
fn clustered_vs_direct_distance_is_reported() {
    let mut r = rng(99);
    let rows = gen::gapped_rows(&mut r, 20, 40, 0.0);
    let msa = Msa::new((0..20).map(|i| format!("s{i}")).collect(), rows, Alphabet::DNA).unwrap();
    let rf = cluster_rf_diagnostic(&msa, &TreeConfig::default()).unwrap();
    assert!(rf <= 2 * (20 - 3));
}

#[test]
fn three_taxa_build_equals_nj() {
    let rows = vec![b"ACGTAC".to_vec(), b"ACGTTC".to_vec(), b"TCGATC".to_vec()];
    let msa = Msa::new(vec!["a".into(), "b".into(), "c".into()], rows, Alphabet::DNA).unwrap();
    let direct = nj_build(&starmsa::phylo::p_distance(&msa).unwrap()).unwrap();
    assert_eq!(build_tree(&msa, &TreeConfig::default()).unwrap().to_newick(), direct.to_newick());
}
