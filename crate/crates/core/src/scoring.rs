//! Substitution scores and affine gap penalties.

use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};
use crate::seqio::{Alphabet, AlphabetKind};

const BLOSUM62_TEXT: &str = include_str!("../data/BLOSUM62");

/// Number of residue codes: `A`..=`Z` plus `*`.
const CODES: usize = 27;

fn code(r: u8) -> usize {
    match r {
        b'A'..=b'Z' => (r - b'A') as usize,
        _ => 26,
    }
}

/// A square substitution table over `A`..=`Z` and `*`.
#[derive(Clone, PartialEq, Eq)]
pub struct SubstitutionMatrix {
    name: String,
    table: Box<[[i32; CODES]; CODES]>,
    present: [bool; CODES],
}

impl fmt::Debug for SubstitutionMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SubstitutionMatrix").field("name", &self.name).finish()
    }
}

impl SubstitutionMatrix {
    pub fn blosum62() -> Self {
        Self::parse_ncbi("BLOSUM62", BLOSUM62_TEXT).expect("embedded BLOSUM62 is well formed")
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        Self::parse_ncbi(&name, &text)
    }

    /// Parses the NCBI text layout: `#` comments, a header row of residue
    /// letters, then one row per letter.
    pub fn parse_ncbi(name: &str, text: &str) -> Result<Self> {
        let mut header: Option<Vec<usize>> = None;
        let mut table = Box::new([[0i32; CODES]; CODES]);
        let mut present = [false; CODES];
        let mut seen_rows = [false; CODES];
        let err = |line: usize, msg: String| Error::MatrixParse { line: line + 1, msg };

        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields = line.split_whitespace();
            let Some(cols) = &header else {
                let mut cols = Vec::new();
                for f in fields {
                    let letter = single_letter(f).ok_or_else(|| err(lineno, format!("bad column label '{f}'")))?;
                    let c = code(letter);
                    if present[c] {
                        return Err(err(lineno, format!("duplicate column '{f}'")));
                    }
                    present[c] = true;
                    cols.push(c);
                }
                header = Some(cols);
                continue;
            };
            let label = fields.next().unwrap_or_default();
            let row = single_letter(label)
                .map(code)
                .filter(|c| present[*c])
                .ok_or_else(|| err(lineno, format!("row label '{label}' not in header")))?;
            let values: Vec<&str> = fields.collect();
            if values.len() != cols.len() {
                return Err(err(lineno, format!("expected {} scores, found {}", cols.len(), values.len())));
            }
            for (&col, v) in cols.iter().zip(values) {
                table[row][col] = v.parse().map_err(|_| err(lineno, format!("bad score '{v}'")))?;
            }
            seen_rows[row] = true;
        }
        if header.is_none() {
            return Err(Error::MatrixParse { line: 0, msg: "no header row".into() });
        }
        if let Some(missing) = (0..CODES).find(|&c| present[c] && !seen_rows[c]) {
            let letter = if missing == 26 { '*' } else { (b'A' + missing as u8) as char };
            return Err(Error::MatrixParse { line: 0, msg: format!("missing row '{letter}'") });
        }
        Ok(SubstitutionMatrix {
            name: name.to_string(),
            table,
            present,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn contains(&self, r: u8) -> bool {
        self.present[code(r)]
    }

    pub fn get(&self, a: u8, b: u8) -> i32 {
        self.table[code(a)][code(b)]
    }
}

fn single_letter(field: &str) -> Option<u8> {
    match field.as_bytes() {
        [c] if c.is_ascii_alphabetic() || *c == b'*' => Some(c.to_ascii_uppercase()),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Substitution {
    Simple { matched: i32, mismatched: i32 },
    Matrix(SubstitutionMatrix),
}

/// Substitution function plus an affine gap family where a gap of length `k`
/// costs `gap_open + gap_extend * (k - 1)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScoreScheme {
    pub substitution: Substitution,
    pub gap_open: i32,
    pub gap_extend: i32,
}

impl ScoreScheme {
    pub fn simple(matched: i32, mismatched: i32, gap_open: i32, gap_extend: i32) -> Result<Self> {
        Self {
            substitution: Substitution::Simple { matched, mismatched },
            gap_open,
            gap_extend,
        }
        .validated()
    }

    /// Linear gaps: `W_k = gap * k`.
    pub fn linear(matched: i32, mismatched: i32, gap: i32) -> Result<Self> {
        Self::simple(matched, mismatched, gap, gap)
    }

    pub fn with_matrix(matrix: SubstitutionMatrix, gap_open: i32, gap_extend: i32) -> Result<Self> {
        Self {
            substitution: Substitution::Matrix(matrix),
            gap_open,
            gap_extend,
        }
        .validated()
    }

    /// +1/-1, open 2, extend 1.
    pub fn default_nucleotide() -> Self {
        Self::simple(1, -1, 2, 1).expect("valid defaults")
    }

    /// BLOSUM62, open 11, extend 1.
    pub fn default_protein() -> Self {
        Self::with_matrix(SubstitutionMatrix::blosum62(), 11, 1).expect("valid defaults")
    }

    pub fn default_for(kind: AlphabetKind) -> Self {
        if kind.is_nucleotide() {
            Self::default_nucleotide()
        } else {
            Self::default_protein()
        }
    }

    fn validated(self) -> Result<Self> {
        if self.gap_open < 1 || self.gap_extend < 0 {
            return Err(Error::InvalidScheme(format!(
                "gap penalties must satisfy open >= 1 and extend >= 0 (got {}, {})",
                self.gap_open, self.gap_extend
            )));
        }
        Ok(self)
    }

    /// Penalty of a gap run of length `k >= 1`.
    pub fn gap_cost(&self, k: usize) -> i64 {
        if k == 0 {
            0
        } else {
            self.gap_open as i64 + self.gap_extend as i64 * (k as i64 - 1)
        }
    }

    /// Score of aligning residue `a` against `b`. Wildcards (N, X and
    /// ambiguity codes) never score as a match.
    pub fn score(&self, alphabet: &Alphabet, a: u8, b: u8) -> i32 {
        let wild = alphabet.is_wildcard(a) || alphabet.is_wildcard(b);
        match &self.substitution {
            Substitution::Simple { matched, mismatched } => {
                if a == b && !wild {
                    *matched
                } else {
                    *mismatched
                }
            }
            Substitution::Matrix(m) => {
                let s = if m.contains(a) && m.contains(b) {
                    m.get(a, b)
                } else if m.contains(b'X') {
                    m.get(b'X', if m.contains(a) { a } else { b })
                } else {
                    -1
                };
                if wild {
                    s.min(-1)
                } else {
                    s
                }
            }
        }
    }

    /// Precomputed score table for one alphabet, indexed by residue code.
    pub fn profile(&self, alphabet: &Alphabet) -> ScoreTable {
        let mut table = Box::new([[0i32; CODES]; CODES]);
        for a in 0..CODES {
            for b in 0..CODES {
                table[a][b] = self.score(alphabet, letter(a), letter(b));
            }
        }
        let max_abs = table.iter().flatten().map(|s| s.unsigned_abs()).max().unwrap_or(0);
        ScoreTable {
            table,
            max_abs: max_abs as i64,
        }
    }
}

fn letter(c: usize) -> u8 {
    if c == 26 {
        b'*'
    } else {
        b'A' + c as u8
    }
}

/// Dense substitution lookup used inside the DP loops.
pub struct ScoreTable {
    table: Box<[[i32; CODES]; CODES]>,
    max_abs: i64,
}

impl ScoreTable {
    #[inline]
    pub fn encode(seq: &[u8]) -> Vec<u8> {
        seq.iter().map(|&r| code(r) as u8).collect()
    }

    #[inline]
    pub fn code(r: u8) -> u8 {
        code(r) as u8
    }

    #[inline]
    pub fn get(&self, a: u8, b: u8) -> i32 {
        self.table[a as usize][b as usize]
    }

    pub fn max_abs(&self) -> i64 {
        self.max_abs
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blosum62_spot_values() {
        let m = SubstitutionMatrix::blosum62();
        assert_eq!(m.get(b'A', b'A'), 4);
        assert_eq!(m.get(b'W', b'W'), 11);
        assert_eq!(m.get(b'C', b'C'), 9);
        assert_eq!(m.get(b'W', b'C'), -2);
        assert_eq!(m.get(b'*', b'*'), 1);
        for a in b"ACDEFGHIKLMNPQRSTVWY" {
            assert!(m.get(*a, *a) > 0);
            for b in b"ACDEFGHIKLMNPQRSTVWY" {
                assert_eq!(m.get(*a, *b), m.get(*b, *a));
            }
        }
    }

    #[test]
    fn wildcards_never_match() {
        let dna = ScoreScheme::default_nucleotide();
        assert_eq!(dna.score(&Alphabet::DNA, b'N', b'N'), -1);
        assert_eq!(dna.score(&Alphabet::DNA, b'A', b'A'), 1);
        let prot = ScoreScheme::default_protein();
        assert!(prot.score(&Alphabet::PROTEIN, b'X', b'X') < 0);
        assert!(prot.score(&Alphabet::PROTEIN, b'X', b'A') < 0);
        for a in b"ACDEFGHIKLMNPQRSTVWY" {
            assert!(prot.score(&Alphabet::PROTEIN, *a, *a) > 0);
        }
    }

    #[test]
    fn gap_family() {
        let s = ScoreScheme::simple(1, -1, 2, 1).unwrap();
        assert_eq!((s.gap_cost(1), s.gap_cost(2), s.gap_cost(5)), (2, 3, 6));
        assert!(ScoreScheme::simple(1, -1, 0, 0).is_err());
        assert!(ScoreScheme::simple(1, -1, 1, -1).is_err());
    }

    #[test]
    fn matrix_parse_errors() {
        assert!(SubstitutionMatrix::parse_ncbi("m", "# only comments\n").is_err());
        assert!(SubstitutionMatrix::parse_ncbi("m", "A C\nA 1 0\n").is_err());
        assert!(SubstitutionMatrix::parse_ncbi("m", "A C\nA 1 0\nC 0 x\n").is_err());
        let m = SubstitutionMatrix::parse_ncbi("m", " A C\nA 2 -1\nC -1 3\n").unwrap();
        assert_eq!(m.get(b'C', b'C'), 3);
    }
}
