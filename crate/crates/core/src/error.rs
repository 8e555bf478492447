use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    // seqio
    #[error("input contains no FASTA records")]
    EmptyFile,
    #[error("line {line}: sequence data before the first '>' header")]
    MalformedHeader { line: usize },
    #[error("record '{id}': illegal residue '{residue}' at offset {offset}")]
    IllegalResidue {
        id: String,
        residue: char,
        offset: usize,
    },
    #[error("record '{id}' has no residues")]
    EmptyRecord { id: String },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("i/o failure: {0}")]
    IoFailure(#[from] std::io::Error),

    // pairwise
    #[error("cannot align an empty sequence")]
    EmptyInput,
    #[error("alphabet mismatch: {0}")]
    AlphabetMismatch(String),
    #[error("sequences of lengths {len_a} and {len_b} could overflow 32-bit scores")]
    SequenceTooLong { len_a: usize, len_b: usize },
    #[error("invalid scoring scheme: {0}")]
    InvalidScheme(String),
    #[error("substitution matrix line {line}: {msg}")]
    MatrixParse { line: usize, msg: String },

    // anchor
    #[error("k-mer length {k} exceeds center length {len}")]
    KTooLarge { k: usize, len: usize },
    #[error("k-mer length must be at least 1")]
    KTooSmall,

    // msa / metrics / phylo
    #[error("need at least {need} sequences, got {got}")]
    TooFewSequences { need: usize, got: usize },
    #[error("pairwise alignment {index} does not reproduce the center sequence")]
    InconsistentCenter { index: usize },
    #[error("rows have different lengths ({a} vs {b})")]
    LengthMismatch { a: usize, b: usize },
    #[error("tree leaves do not match alignment rows: {0}")]
    LeafMismatch(String),
    #[error("likelihood scoring supports nucleotide alignments only")]
    ProteinUnsupported,
    #[error("distance between '{a}' and '{b}' is not finite")]
    NonFiniteDistance { a: String, b: String },
    #[error("invalid alignment: {0}")]
    InvalidMsa(String),
    #[error("newick parse error at byte {pos}: {msg}")]
    Newick { pos: usize, msg: String },

    // engine
    #[error("worker task panicked: {0}")]
    TaskPanic(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
