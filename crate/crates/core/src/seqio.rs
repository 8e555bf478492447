//! FASTA ingest and output.
//!
//! Parsing is strict by default: residues are upper-cased, gap characters are
//! rejected, and the alphabet is fixed by the first record. Aligned FASTA
//! (gap-bearing rows) goes through [`parse_aligned_fasta`] instead.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use flate2::read::MultiGzDecoder;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::msa::Msa;

pub const GAP: u8 = b'-';
const LINE_WIDTH: usize = 80;
const GZIP_MAGIC: [u8; 2] = [0x1f, 0x8b];

const PROTEIN_CANONICAL: &[u8] = b"ACDEFGHIKLMNPQRSTVWY";
const NUCLEOTIDE_AMBIGUITY: &[u8] = b"RYKMSWBDHV";
const PROTEIN_AMBIGUITY: &[u8] = b"BZJUO*";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum AlphabetKind {
    Dna,
    Rna,
    Protein,
}

impl AlphabetKind {
    pub fn is_nucleotide(self) -> bool {
        matches!(self, AlphabetKind::Dna | AlphabetKind::Rna)
    }
}

impl fmt::Display for AlphabetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AlphabetKind::Dna => "dna",
            AlphabetKind::Rna => "rna",
            AlphabetKind::Protein => "protein",
        })
    }
}

impl std::str::FromStr for AlphabetKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "dna" => Ok(AlphabetKind::Dna),
            "rna" => Ok(AlphabetKind::Rna),
            "protein" | "aa" => Ok(AlphabetKind::Protein),
            other => Err(format!("unknown sequence type '{other}'")),
        }
    }
}

/// Residue alphabet of a dataset. Ambiguity codes beyond N/X are only
/// accepted when `allows_ambiguity` is set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Alphabet {
    pub kind: AlphabetKind,
    pub allows_ambiguity: bool,
}

impl Alphabet {
    pub const DNA: Alphabet = Alphabet::strict(AlphabetKind::Dna);
    pub const RNA: Alphabet = Alphabet::strict(AlphabetKind::Rna);
    pub const PROTEIN: Alphabet = Alphabet::strict(AlphabetKind::Protein);

    pub const fn strict(kind: AlphabetKind) -> Self {
        Alphabet {
            kind,
            allows_ambiguity: false,
        }
    }

    pub const fn permissive(kind: AlphabetKind) -> Self {
        Alphabet {
            kind,
            allows_ambiguity: true,
        }
    }

    pub fn is_nucleotide(&self) -> bool {
        self.kind.is_nucleotide()
    }

    /// Whether an upper-case residue byte belongs to this alphabet.
    pub fn accepts(&self, r: u8) -> bool {
        let canonical = match self.kind {
            AlphabetKind::Dna => b"ACGTN".contains(&r),
            AlphabetKind::Rna => b"ACGUN".contains(&r),
            AlphabetKind::Protein => PROTEIN_CANONICAL.contains(&r) || r == b'X',
        };
        canonical
            || (self.allows_ambiguity
                && match self.kind {
                    AlphabetKind::Dna | AlphabetKind::Rna => NUCLEOTIDE_AMBIGUITY.contains(&r),
                    AlphabetKind::Protein => PROTEIN_AMBIGUITY.contains(&r),
                })
    }

    /// Residues that never count as a match, including against themselves.
    pub fn is_wildcard(&self, r: u8) -> bool {
        match self.kind {
            AlphabetKind::Dna | AlphabetKind::Rna => {
                r == b'N' || NUCLEOTIDE_AMBIGUITY.contains(&r)
            }
            AlphabetKind::Protein => r == b'X' || PROTEIN_AMBIGUITY.contains(&r),
        }
    }

    fn detect(residues: &[u8], allows_ambiguity: bool) -> Alphabet {
        let nucleotide = |r: &u8| {
            b"ACGTUN".contains(r) || (allows_ambiguity && NUCLEOTIDE_AMBIGUITY.contains(r))
        };
        let kind = if !residues.iter().all(nucleotide) {
            AlphabetKind::Protein
        } else if residues.contains(&b'U') {
            AlphabetKind::Rna
        } else {
            AlphabetKind::Dna
        };
        Alphabet {
            kind,
            allows_ambiguity,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sequence {
    pub id: String,
    pub residues: Vec<u8>,
    /// Zero-based position of the record in its input file.
    pub index: usize,
    pub alphabet: Alphabet,
}

impl Sequence {
    /// Builds a sequence from in-memory text, validating it like the parser does.
    pub fn new(id: impl Into<String>, residues: &[u8], alphabet: Alphabet) -> Result<Self> {
        let id = id.into();
        if residues.is_empty() {
            return Err(Error::EmptyRecord { id });
        }
        let mut out = Vec::with_capacity(residues.len());
        for (offset, &r) in residues.iter().enumerate() {
            let r = r.to_ascii_uppercase();
            if !alphabet.accepts(r) {
                return Err(Error::IllegalResidue {
                    id,
                    residue: r as char,
                    offset,
                });
            }
            out.push(r);
        }
        Ok(Sequence {
            id,
            residues: out,
            index: 0,
            alphabet,
        })
    }

    pub fn len(&self) -> usize {
        self.residues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.residues.is_empty()
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ParseOptions {
    /// Skips detection; every record is validated against this alphabet.
    pub alphabet_hint: Option<Alphabet>,
    /// Accept ambiguity codes beyond N/X (scored as mismatches).
    pub permissive: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetStats {
    pub count: usize,
    pub min_len: usize,
    pub max_len: usize,
    pub avg_len: f64,
    pub total_bytes: u64,
}

impl fmt::Display for DatasetStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "count={}\nmin_len={}\nmax_len={}\navg_len={:.1}\ntotal_bytes={}",
            self.count, self.min_len, self.max_len, self.avg_len, self.total_bytes
        )
    }
}

struct RawRecord {
    id: String,
    body: Vec<u8>,
}

/// Splits FASTA text into (id, concatenated body) pairs. Bodies are
/// upper-cased with whitespace removed; no residue validation happens here.
fn split_records(text: &[u8]) -> Result<Vec<RawRecord>> {
    let mut records: Vec<RawRecord> = Vec::new();
    for (lineno, line) in text.split(|&b| b == b'\n').enumerate() {
        let line = line.strip_suffix(b"\r").unwrap_or(line);
        if let Some(header) = line.strip_prefix(b">") {
            let header = String::from_utf8_lossy(header);
            let id = header.split_whitespace().next().unwrap_or("").to_string();
            if id.is_empty() {
                return Err(Error::MalformedHeader { line: lineno + 1 });
            }
            records.push(RawRecord {
                id,
                body: Vec::new(),
            });
            continue;
        }
        if line.iter().all(u8::is_ascii_whitespace) {
            continue;
        }
        let Some(rec) = records.last_mut() else {
            return Err(Error::MalformedHeader { line: lineno + 1 });
        };
        rec.body.extend(
            line.iter()
                .filter(|b| !b.is_ascii_whitespace())
                .map(u8::to_ascii_uppercase),
        );
    }
    if records.is_empty() {
        return Err(Error::EmptyFile);
    }
    Ok(records)
}

fn decompress_if_gzip(raw: Vec<u8>) -> Result<Vec<u8>> {
    if raw.starts_with(&GZIP_MAGIC) {
        let mut out = Vec::new();
        MultiGzDecoder::new(raw.as_slice()).read_to_end(&mut out)?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

/// Parses unaligned FASTA. Gzip input is detected by its magic bytes.
pub fn parse_fasta(mut input: impl Read, opts: ParseOptions) -> Result<Vec<Sequence>> {
    let mut raw = Vec::new();
    input.read_to_end(&mut raw)?;
    let text = decompress_if_gzip(raw)?;
    let records = split_records(&text)?;

    let mut alphabet = opts.alphabet_hint;
    let mut out = Vec::with_capacity(records.len());
    for (index, rec) in records.into_iter().enumerate() {
        if rec.body.is_empty() {
            return Err(Error::EmptyRecord { id: rec.id });
        }
        let alpha = *alphabet.get_or_insert_with(|| Alphabet::detect(&rec.body, opts.permissive));
        if let Some(offset) = rec.body.iter().position(|&r| !alpha.accepts(r)) {
            return Err(Error::IllegalResidue {
                residue: rec.body[offset] as char,
                id: rec.id,
                offset,
            });
        }
        out.push(Sequence {
            id: rec.id,
            residues: rec.body,
            index,
            alphabet: alpha,
        });
    }
    Ok(out)
}

pub fn read_fasta(path: impl AsRef<Path>, opts: ParseOptions) -> Result<Vec<Sequence>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_fasta(std::io::BufReader::new(file), opts)
}

/// Parses gap-bearing FASTA into an [`Msa`]. Gaps are stripped before the
/// residues are validated, so the same alphabet rules apply.
pub fn parse_aligned_fasta(mut input: impl Read, opts: ParseOptions) -> Result<Msa> {
    let mut raw = Vec::new();
    input.read_to_end(&mut raw)?;
    let text = decompress_if_gzip(raw)?;
    let records = split_records(&text)?;

    let mut alphabet = opts.alphabet_hint;
    let mut ids = Vec::with_capacity(records.len());
    let mut rows = Vec::with_capacity(records.len());
    for rec in records {
        let residues: Vec<u8> = rec.body.iter().copied().filter(|&b| b != GAP).collect();
        if residues.is_empty() {
            return Err(Error::EmptyRecord { id: rec.id });
        }
        let alpha = *alphabet.get_or_insert_with(|| Alphabet::detect(&residues, opts.permissive));
        if let Some(offset) = rec.body.iter().position(|&r| r != GAP && !alpha.accepts(r)) {
            return Err(Error::IllegalResidue {
                residue: rec.body[offset] as char,
                id: rec.id,
                offset,
            });
        }
        ids.push(rec.id);
        rows.push(rec.body);
    }
    let alphabet = alphabet.expect("at least one record");
    Msa::new(ids, rows, alphabet)
}

pub fn read_aligned_fasta(path: impl AsRef<Path>, opts: ParseOptions) -> Result<Msa> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_aligned_fasta(std::io::BufReader::new(file), opts)
}

pub fn dataset_stats(seqs: &[Sequence]) -> Result<DatasetStats> {
    if seqs.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let lens = seqs.iter().map(Sequence::len);
    let total: u64 = lens.clone().map(|l| l as u64).sum();
    Ok(DatasetStats {
        count: seqs.len(),
        min_len: lens.clone().min().unwrap_or(0),
        max_len: lens.max().unwrap_or(0),
        avg_len: total as f64 / seqs.len() as f64,
        total_bytes: total,
    })
}

/// Writes rows in input order, wrapped at 80 columns.
pub fn write_fasta(msa: &Msa, mut sink: impl Write) -> Result<()> {
    if msa.is_empty() {
        return Err(Error::EmptyDataset);
    }
    for (id, row) in msa.ids().iter().zip(msa.rows()) {
        writeln!(sink, ">{id}")?;
        for chunk in row.chunks(LINE_WIDTH) {
            sink.write_all(chunk)?;
            sink.write_all(b"\n")?;
        }
    }
    sink.flush()?;
    Ok(())
}

pub fn write_sequences(seqs: &[Sequence], mut sink: impl Write) -> Result<()> {
    for s in seqs {
        writeln!(sink, ">{}", s.id)?;
        for chunk in s.residues.chunks(LINE_WIDTH) {
            sink.write_all(chunk)?;
            sink.write_all(b"\n")?;
        }
    }
    sink.flush()?;
    Ok(())
}
