//! Python bindings. Sequences cross the boundary as `(id, residues)`
//! tuples of strings; alignments and trees are opaque handles.

use std::str::FromStr;

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use starmsa::metrics::{jc69_loglik_with, sp_report_with};
use starmsa::msa::{run_msa, CenterMode, Msa, MsaConfig};
use starmsa::pairwise::Aligner;
use starmsa::phylo::{build_tree_with_report, parse_newick, robinson_foulds, ClusterConfig, PhyloTree, TreeConfig};
use starmsa::scoring::{ScoreScheme, SubstitutionMatrix};
use starmsa::seqio::{self, Alphabet, AlphabetKind, ParseOptions, Sequence};
use starmsa::{Error, RunConfig, RunReport};

create_exception!(starmsa, StarmsaError, PyException, "Invalid input or failed run.");

fn err(e: Error) -> PyErr {
    StarmsaError::new_err(e.to_string())
}

fn parse_options(kind: Option<&str>, permissive: bool) -> PyResult<ParseOptions> {
    let hint = kind
        .map(|k| AlphabetKind::from_str(k).map_err(PyValueError::new_err))
        .transpose()?
        .map(|k| if permissive { Alphabet::permissive(k) } else { Alphabet::strict(k) });
    Ok(ParseOptions {
        alphabet_hint: hint,
        permissive,
    })
}

fn to_sequences(records: Vec<(String, String)>, opts: ParseOptions) -> PyResult<Vec<Sequence>> {
    let mut text = String::new();
    for (id, residues) in &records {
        text.push('>');
        text.push_str(id);
        text.push('\n');
        text.push_str(residues);
        text.push('\n');
    }
    seqio::parse_fasta(text.as_bytes(), opts).map_err(err)
}

fn scheme_for(
    kind: AlphabetKind,
    matched: Option<i32>,
    mismatch: Option<i32>,
    matrix: Option<&str>,
    gap_open: Option<i32>,
    gap_extend: Option<i32>,
) -> PyResult<ScoreScheme> {
    let base = ScoreScheme::default_for(kind);
    let open = gap_open.unwrap_or(base.gap_open);
    let extend = gap_extend.unwrap_or(base.gap_extend);
    let scheme = match matrix {
        Some(_) if matched.is_some() || mismatch.is_some() => {
            return Err(PyValueError::new_err("matrix cannot be combined with match or mismatch"));
        }
        Some(m) if m.eq_ignore_ascii_case("blosum62") => {
            ScoreScheme::with_matrix(SubstitutionMatrix::blosum62(), open, extend)
        }
        Some(path) => SubstitutionMatrix::from_file(path).and_then(|m| ScoreScheme::with_matrix(m, open, extend)),
        None if matched.is_some() || mismatch.is_some() || kind.is_nucleotide() => {
            ScoreScheme::simple(matched.unwrap_or(1), mismatch.unwrap_or(-1), open, extend)
        }
        None => Ok(base),
    };
    scheme.map_err(err)
}

fn report_dict<'py>(py: Python<'py>, report: &RunReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("threads", report.threads)?;
    d.set_item("tasks", report.tasks())?;
    d.set_item("total_secs", report.total_secs())?;
    d.set_item("peak_memory_bytes", report.peak_memory_bytes)?;
    d.set_item("memory_source", report.memory_source)?;
    let counters = PyDict::new(py);
    for (k, v) in &report.counters {
        counters.set_item(k, v)?;
    }
    d.set_item("counters", counters)?;
    Ok(d)
}

/// A multiple alignment: equal-length rows of residues and `-`.
#[pyclass(name = "Msa", module = "starmsa", frozen)]
struct PyMsa {
    inner: Msa,
}

#[pymethods]
impl PyMsa {
    #[new]
    #[pyo3(signature = (records, kind = None))]
    fn new(records: Vec<(String, String)>, kind: Option<&str>) -> PyResult<Self> {
        let (ids, rows): (Vec<String>, Vec<Vec<u8>>) =
            records.into_iter().map(|(id, row)| (id, row.into_bytes())).unzip();
        let alphabet = match kind {
            Some(k) => Alphabet::strict(AlphabetKind::from_str(k).map_err(PyValueError::new_err)?),
            None => Alphabet::DNA,
        };
        Msa::new(ids, rows, alphabet).map(|inner| PyMsa { inner }).map_err(err)
    }

    #[getter]
    fn ids(&self) -> Vec<String> {
        self.inner.ids().to_vec()
    }

    #[getter]
    fn rows(&self) -> Vec<String> {
        self.inner.rows().iter().map(|r| String::from_utf8_lossy(r).into_owned()).collect()
    }

    #[getter]
    fn n_cols(&self) -> usize {
        self.inner.n_cols()
    }

    fn __len__(&self) -> usize {
        self.inner.n_rows()
    }

    fn __repr__(&self) -> String {
        format!("Msa(rows={}, cols={})", self.inner.n_rows(), self.inner.n_cols())
    }

    fn to_fasta(&self) -> PyResult<String> {
        let mut out = Vec::new();
        seqio::write_fasta(&self.inner, &mut out).map_err(err)?;
        Ok(String::from_utf8_lossy(&out).into_owned())
    }

    /// Sum-of-pairs penalty: mismatch 1, one gap 2, two gaps 0.
    #[pyo3(signature = (threads = 0))]
    fn sp_report<'py>(&self, py: Python<'py>, threads: usize) -> PyResult<Bound<'py, PyDict>> {
        let rep = sp_report_with(&self.inner, &RunConfig::with_threads(threads)).map_err(err)?;
        let d = PyDict::new(py);
        d.set_item("total_sp", rep.total_sp)?;
        d.set_item("avg_sp", rep.avg_sp)?;
        d.set_item("n_pairs", rep.n_pairs)?;
        Ok(d)
    }

    /// Neighbor-joining tree over p-distances.
    #[allow(clippy::too_many_arguments)]
    #[pyo3(signature = (threads = 0, seed = 0, force_cluster = false, balance_cap = None, sample_frac = None, direct_threshold = None))]
    fn tree(
        &self,
        py: Python<'_>,
        threads: usize,
        seed: u64,
        force_cluster: bool,
        balance_cap: Option<f64>,
        sample_frac: Option<f64>,
        direct_threshold: Option<usize>,
    ) -> PyResult<PyTree> {
        let defaults = TreeConfig::default();
        let cfg = TreeConfig {
            direct_threshold: direct_threshold.unwrap_or(defaults.direct_threshold),
            force_cluster,
            cluster: ClusterConfig {
                balance_cap: balance_cap.unwrap_or(defaults.cluster.balance_cap),
                sample_frac: sample_frac.unwrap_or(defaults.cluster.sample_frac),
                seed,
            },
            run: RunConfig { seed, ..RunConfig::with_threads(threads) },
        };
        let msa = &self.inner;
        py.detach(|| build_tree_with_report(msa, &cfg))
            .map(|(inner, _)| PyTree { inner })
            .map_err(err)
    }
}

/// An unrooted tree with branch lengths.
#[pyclass(name = "Tree", module = "starmsa", frozen)]
struct PyTree {
    inner: PhyloTree,
}

#[pymethods]
impl PyTree {
    #[staticmethod]
    fn from_newick(text: &str) -> PyResult<Self> {
        parse_newick(text).map(|inner| PyTree { inner }).map_err(err)
    }

    fn to_newick(&self) -> String {
        self.inner.to_newick()
    }

    fn __str__(&self) -> String {
        self.inner.to_newick()
    }

    #[getter]
    fn leaf_labels(&self) -> Vec<String> {
        self.inner.leaf_labels()
    }

    fn robinson_foulds(&self, other: &PyTree) -> PyResult<usize> {
        robinson_foulds(&self.inner, &other.inner).map_err(err)
    }

    /// JC69 log-likelihood of a nucleotide alignment on this tree.
    #[pyo3(signature = (msa, threads = 0))]
    fn jc69_loglik(&self, msa: &PyMsa, threads: usize) -> PyResult<f64> {
        jc69_loglik_with(&msa.inner, &self.inner, &RunConfig::with_threads(threads))
            .map(|s| s.log_likelihood)
            .map_err(err)
    }
}

/// Parses FASTA text into `(id, residues)` tuples.
#[pyfunction]
#[pyo3(signature = (text, kind = None, permissive = false))]
fn parse_fasta(text: &str, kind: Option<&str>, permissive: bool) -> PyResult<Vec<(String, String)>> {
    let seqs = seqio::parse_fasta(text.as_bytes(), parse_options(kind, permissive)?).map_err(err)?;
    Ok(seqs.into_iter().map(|s| (s.id, String::from_utf8_lossy(&s.residues).into_owned())).collect())
}

/// Reads an aligned FASTA file.
#[pyfunction]
fn read_alignment(path: &str) -> PyResult<PyMsa> {
    seqio::read_aligned_fasta(path, ParseOptions::default()).map(|inner| PyMsa { inner }).map_err(err)
}

/// count, min_len, max_len, avg_len and total_bytes of a record list.
#[pyfunction]
#[pyo3(signature = (records, kind = None))]
fn dataset_stats<'py>(py: Python<'py>, records: Vec<(String, String)>, kind: Option<&str>) -> PyResult<Bound<'py, PyDict>> {
    let st = seqio::dataset_stats(&to_sequences(records, parse_options(kind, false)?)?).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("count", st.count)?;
    d.set_item("min_len", st.min_len)?;
    d.set_item("max_len", st.max_len)?;
    d.set_item("avg_len", st.avg_len)?;
    d.set_item("total_bytes", st.total_bytes)?;
    Ok(d)
}

/// Center-star alignment. Returns the alignment and a run report dict.
#[pyfunction]
#[pyo3(signature = (
    records, kind = None, permissive = false, r#match = None, mismatch = None, matrix = None,
    gap_open = None, gap_extend = None, kmer = None, center = None, threads = 0, chunk_size = None, seed = 0
))]
#[allow(clippy::too_many_arguments)]
fn align<'py>(
    py: Python<'py>,
    records: Vec<(String, String)>,
    kind: Option<&str>,
    permissive: bool,
    r#match: Option<i32>,
    mismatch: Option<i32>,
    matrix: Option<&str>,
    gap_open: Option<i32>,
    gap_extend: Option<i32>,
    kmer: Option<usize>,
    center: Option<&str>,
    threads: usize,
    chunk_size: Option<usize>,
    seed: u64,
) -> PyResult<(PyMsa, Bound<'py, PyDict>)> {
    let seqs = to_sequences(records, parse_options(kind, permissive)?)?;
    let first = seqs.first().ok_or_else(|| StarmsaError::new_err("no sequences"))?;
    let scheme = scheme_for(first.alphabet.kind, r#match, mismatch, matrix, gap_open, gap_extend)?;
    let defaults = MsaConfig::default();
    let cfg = MsaConfig {
        center_mode: center.map(|c| CenterMode::from_str(c).map_err(PyValueError::new_err)).transpose()?,
        kmer: kmer.unwrap_or(defaults.kmer),
        run: RunConfig {
            threads,
            chunk_size,
            seed,
        },
    };
    let (msa, report) = py.detach(|| run_msa(&seqs, &scheme, &cfg)).map_err(err)?;
    Ok((PyMsa { inner: msa }, report_dict(py, &report)?))
}

/// Optimal global alignment of two sequences: `(score, row_a, row_b)`.
#[pyfunction]
#[pyo3(signature = (a, b, kind = None, r#match = None, mismatch = None, matrix = None, gap_open = None, gap_extend = None))]
#[allow(clippy::too_many_arguments)]
fn global_align(
    a: &str,
    b: &str,
    kind: Option<&str>,
    r#match: Option<i32>,
    mismatch: Option<i32>,
    matrix: Option<&str>,
    gap_open: Option<i32>,
    gap_extend: Option<i32>,
) -> PyResult<(i32, String, String)> {
    let seqs = to_sequences(vec![("a".into(), a.into()), ("b".into(), b.into())], parse_options(kind, false)?)?;
    let alphabet = seqs[0].alphabet;
    let scheme = scheme_for(alphabet.kind, r#match, mismatch, matrix, gap_open, gap_extend)?;
    let aln = Aligner::new(&scheme, alphabet).global(&seqs[0].residues, &seqs[1].residues).map_err(err)?;
    let text = |r: &[u8]| String::from_utf8_lossy(r).into_owned();
    Ok((aln.score, text(&aln.aligned_a), text(&aln.aligned_b)))
}

/// Smith-Waterman local alignment score.
#[pyfunction]
#[pyo3(signature = (a, b, kind = None, r#match = None, mismatch = None, matrix = None, gap_open = None, gap_extend = None))]
#[allow(clippy::too_many_arguments)]
fn local_score(
    a: &str,
    b: &str,
    kind: Option<&str>,
    r#match: Option<i32>,
    mismatch: Option<i32>,
    matrix: Option<&str>,
    gap_open: Option<i32>,
    gap_extend: Option<i32>,
) -> PyResult<i32> {
    let seqs = to_sequences(vec![("a".into(), a.into()), ("b".into(), b.into())], parse_options(kind, false)?)?;
    let alphabet = seqs[0].alphabet;
    let scheme = scheme_for(alphabet.kind, r#match, mismatch, matrix, gap_open, gap_extend)?;
    Aligner::new(&scheme, alphabet).local_score(&seqs[0].residues, &seqs[1].residues).map_err(err)
}

#[pymodule]
#[pyo3(name = "starmsa")]
fn starmsa_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("StarmsaError", m.py().get_type::<StarmsaError>())?;
    m.add_class::<PyMsa>()?;
    m.add_class::<PyTree>()?;
    m.add_function(wrap_pyfunction!(parse_fasta, m)?)?;
    m.add_function(wrap_pyfunction!(read_alignment, m)?)?;
    m.add_function(wrap_pyfunction!(dataset_stats, m)?)?;
    m.add_function(wrap_pyfunction!(align, m)?)?;
    m.add_function(wrap_pyfunction!(global_align, m)?)?;
    m.add_function(wrap_pyfunction!(local_score, m)?)?;
    Ok(())
}
