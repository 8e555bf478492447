//! Distances, neighbor joining, clustering and Newick I/O.

pub mod build;
pub mod cluster;
pub mod distance;
pub mod nj;
pub mod tree;

pub use build::{build_tree, build_tree_with_report, cluster_rf_diagnostic, TreeConfig, DEFAULT_DIRECT_THRESHOLD};
pub use cluster::{cluster_sequences, ClusterConfig, ClusterPlan};
pub use distance::{p_distance, p_distance_pair, p_distance_with, DistMatrix};
pub use nj::{nj_build, nj_build_traced, NjStep};
pub use tree::{parse_newick, quote_label, robinson_foulds, write_newick, PhyloTree, Split, TreeNode};
