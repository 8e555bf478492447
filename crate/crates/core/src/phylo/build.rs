//! Tree construction: direct neighbor joining for moderate inputs, and a
//! cluster / subtree / graft pipeline for large ones.

use std::time::Instant;

use super::cluster::{cluster_sequences, ClusterConfig, ClusterPlan};
use super::distance::{p_distance_pair, p_distance_with, DistMatrix};
use super::nj::nj_build;
use super::tree::{robinson_foulds, PhyloTree};
use crate::engine::{par_map, MemoryProbe, RunConfig, RunReport, StageReport};
use crate::error::{Error, Result};
use crate::msa::Msa;

pub const DEFAULT_DIRECT_THRESHOLD: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeConfig {
    /// Inputs up to this size are joined directly.
    pub direct_threshold: usize,
    pub force_cluster: bool,
    pub cluster: ClusterConfig,
    pub run: RunConfig,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig {
            direct_threshold: DEFAULT_DIRECT_THRESHOLD,
            force_cluster: false,
            cluster: ClusterConfig::default(),
            run: RunConfig::default(),
        }
    }
}

impl TreeConfig {
    pub fn uses_clusters(&self, n: usize) -> bool {
        self.force_cluster || n > self.direct_threshold
    }
}

pub fn build_tree(msa: &Msa, cfg: &TreeConfig) -> Result<PhyloTree> {
    build_tree_with_report(msa, cfg).map(|(t, _)| t)
}

pub fn build_tree_with_report(msa: &Msa, cfg: &TreeConfig) -> Result<(PhyloTree, RunReport)> {
    let n = msa.n_rows();
    if n < 3 {
        return Err(Error::TooFewSequences { need: 3, got: n });
    }
    let probe = MemoryProbe::start();
    let mut report = RunReport {
        threads: cfg.run.resolved_threads(),
        ..Default::default()
    };
    let tree = if cfg.uses_clusters(n) {
        clustered(msa, cfg, &mut report)?
    } else {
        let d = p_distance_with(msa, &cfg.run)?;
        report.add_counter("undefined_pairs", d.undefined_pairs.len() as u64);
        let t0 = Instant::now();
        let tree = nj_build(&d)?;
        report.stages.push(timed("nj", t0, n, 1));
        tree
    };
    probe.finish(&mut report);
    Ok((tree, report))
}

/// Robinson-Foulds distance between the clustered and the direct tree for
/// the same input. Diagnostic only: the clustered path is an approximation.
pub fn cluster_rf_diagnostic(msa: &Msa, cfg: &TreeConfig) -> Result<usize> {
    let direct = build_tree(msa, &TreeConfig { force_cluster: false, direct_threshold: usize::MAX, ..*cfg })?;
    let clustered = build_tree(msa, &TreeConfig { force_cluster: true, ..*cfg })?;
    robinson_foulds(&direct, &clustered)
}

fn timed(name: &str, t0: Instant, items: usize, tasks: usize) -> StageReport {
    StageReport {
        name: name.into(),
        wall_secs: t0.elapsed().as_secs_f64(),
        items,
        tasks,
        chunk_size: 0,
    }
}

fn submatrix(msa: &Msa, rows: &[usize]) -> DistMatrix {
    let mut d = DistMatrix::zeros(rows.iter().map(|&r| msa.ids()[r].clone()).collect());
    for a in 0..rows.len() {
        for b in (a + 1)..rows.len() {
            let v = p_distance_pair(msa.row(rows[a]), msa.row(rows[b])).unwrap_or_else(|| {
                d.undefined_pairs.push((a, b));
                1.0
            });
            d.set(a, b, v);
        }
    }
    d
}

/// Tree over `rows` whose leaf node ids are `0..rows.len()` in order. One and
/// two member groups are handled without neighbor joining.
fn group_tree(msa: &Msa, rows: &[usize]) -> Result<PhyloTree> {
    let d = submatrix(msa, rows);
    match rows.len() {
        0 => Ok(PhyloTree::new()),
        1 | 2 => {
            let mut t = PhyloTree::new();
            for l in d.labels() {
                t.add_leaf(l.clone());
            }
            if rows.len() == 2 {
                t.connect(0, 1, d.get(0, 1));
            }
            Ok(t)
        }
        _ => nj_build(&d),
    }
}

fn clustered(msa: &Msa, cfg: &TreeConfig, report: &mut RunReport) -> Result<PhyloTree> {
    let n = msa.n_rows();
    let t0 = Instant::now();
    let plan: ClusterPlan = cluster_sequences(msa, &cfg.cluster, &cfg.run)?;
    report.stages.push(timed("cluster", t0, n, 1));
    report.add_counter("clusters", plan.len() as u64);
    report.add_counter("largest_cluster", plan.sizes.iter().copied().max().unwrap_or(0) as u64);

    // each member list starts with the medoid so its leaf is node 0
    let groups: Vec<Vec<usize>> = (0..plan.len())
        .map(|c| {
            let mut g = vec![plan.medoids[c]];
            g.extend(plan.members(c).into_iter().filter(|&m| m != plan.medoids[c]));
            g
        })
        .collect();
    let (subtrees, stage) = par_map("subtrees", &groups, msa, |msa, _, g| group_tree(msa, g), &cfg.run)?;
    report.stages.push(stage);

    let t0 = Instant::now();
    let mut tree = group_tree(msa, &plan.medoids)?;
    for (c, sub) in subtrees.into_iter().enumerate() {
        graft(&mut tree, c, &sub);
    }
    tree.normalize();
    report.stages.push(timed("graft", t0, plan.len(), 1));
    tree.validate()?;
    Ok(tree)
}

/// Replaces skeleton leaf `leaf` by `sub`, whose node 0 is the same taxon.
///
/// With skeleton edge `a - leaf` of length `l` and subtree edge `m - p` of
/// length `ls`, a new node `x` is joined as `a - x` (l/2), `x - m` (l/2) and
/// `x - p` (max(0, ls - l/2)), so the medoid keeps its skeleton distance to
/// the rest of the tree.
fn graft(tree: &mut PhyloTree, leaf: usize, sub: &PhyloTree) {
    if sub.len() <= 1 {
        return;
    }
    let offset = tree.len();
    for i in 0..sub.len() {
        match &sub.node(i).label {
            Some(l) => tree.add_leaf(l.clone()),
            None => tree.add_internal(),
        };
    }
    for i in 0..sub.len() {
        for &(j, len) in &sub.node(i).edges {
            if i < j {
                tree.connect(offset + i, offset + j, len);
            }
        }
    }
    let m = offset;
    let (p, ls) = tree.node(m).edges[0];
    tree.disconnect(m, p);

    let attach = tree.node(leaf).edges.first().copied();
    tree.clear_label(leaf);
    let x = tree.add_internal();
    match attach {
        Some((a, l)) => {
            tree.disconnect(leaf, a);
            tree.connect(a, x, l / 2.0);
            tree.connect(x, m, l / 2.0);
            tree.connect(x, p, (ls - l / 2.0).max(0.0));
        }
        None => {
            // the skeleton was this single leaf
            tree.connect(x, m, ls / 2.0);
            tree.connect(x, p, ls / 2.0);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seqio::Alphabet;

    fn msa_of(ids: Vec<String>, rows: Vec<Vec<u8>>) -> Msa {
        Msa::new(ids, rows, Alphabet::DNA).unwrap()
    }

    #[test]
    fn three_rows_match_direct_nj() {
        let msa = msa_of(
            vec!["a".into(), "b".into(), "c".into()],
            vec![b"ACGTACGT".to_vec(), b"ACGTACGA".to_vec(), b"TCGTACCA".to_vec()],
        );
        let t = build_tree(&msa, &TreeConfig::default()).unwrap();
        let direct = nj_build(&p_distance_with(&msa, &RunConfig::with_threads(1)).unwrap()).unwrap();
        assert_eq!(t.to_newick(), direct.to_newick());
    }

    #[test]
    fn clustered_path_keeps_every_leaf() {
        let base = b"ACGTACGTTGCAACGTACGTTGCA".to_vec();
        let mut ids = Vec::new();
        let mut rows = Vec::new();
        for i in 0..30 {
            let mut r = base.clone();
            r[i % base.len()] = b'A' + (i as u8 % 3);
            r[(i * 7) % base.len()] = b'T';
            ids.push(format!("s{i}"));
            rows.push(r);
        }
        let msa = msa_of(ids.clone(), rows);
        let cfg = TreeConfig {
            force_cluster: true,
            run: RunConfig::with_threads(2),
            ..Default::default()
        };
        let t = build_tree(&msa, &cfg).unwrap();
        t.validate().unwrap();
        let mut want = ids;
        want.sort();
        assert_eq!(t.leaf_labels(), want);
        assert!(cluster_rf_diagnostic(&msa, &cfg).is_ok());
    }
}
