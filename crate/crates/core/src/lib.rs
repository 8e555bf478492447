//! Center-star multiple sequence alignment with trie anchoring, affine
//! Smith-Waterman and global DP, neighbor-joining trees and JC69 scoring,
//! driven by a deterministic chunked parallel engine.

pub mod anchor;
pub mod engine;
pub mod error;
pub mod metrics;
pub mod msa;
pub mod pairwise;
pub mod phylo;
pub mod scoring;
pub mod seqio;

pub use error::{Error, Result};
pub use metrics::{jc69_loglik, sp_pair, sp_report, SpReport, TreeScore};
pub use msa::{run_msa, CenterMode, Msa, MsaConfig};
pub use pairwise::{global_align, sw_fill, sw_traceback, AlignMode, PairAlignment};
pub use phylo::{build_tree, nj_build, p_distance, PhyloTree, TreeConfig};
pub use scoring::{ScoreScheme, SubstitutionMatrix};
pub use seqio::{Alphabet, AlphabetKind, Sequence};
pub use engine::{RunConfig, RunReport};
