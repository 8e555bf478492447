//! Command-line front end. [`run`] parses arguments, executes one
//! subcommand and returns the process exit code:
//! 0 success, 1 usage error, 2 data error, 3 internal error.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use starmsa::engine::{RunConfig, RunReport};
use starmsa::metrics::{jc69_loglik_with, sp_report_with};
use starmsa::msa::{run_msa, CenterMode, Msa, MsaConfig};
use starmsa::phylo::{build_tree_with_report, cluster_rf_diagnostic, parse_newick, ClusterConfig, TreeConfig};
use starmsa::scoring::{ScoreScheme, SubstitutionMatrix};
use starmsa::seqio::{self, Alphabet, AlphabetKind, ParseOptions, Sequence};
use starmsa::Error;

#[derive(Parser, Debug)]
#[command(name = "starmsa", version, about = "Center-star multiple sequence alignment and neighbor-joining trees")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Align sequences around a center sequence.
    Align(AlignArgs),
    /// Sum-of-pairs penalty of an alignment.
    Score(ScoreArgs),
    /// Neighbor-joining tree from an alignment.
    Tree(TreeArgs),
    /// JC69 log-likelihood of a tree for an alignment.
    Treescore(TreescoreArgs),
    /// Dataset statistics of a FASTA file.
    Stats(StatsArgs),
}

#[derive(Args, Debug, Default)]
struct Common {
    /// Worker threads (0 = one per core).
    #[arg(long)]
    threads: Option<usize>,
    /// Sequences per parallel task.
    #[arg(long)]
    chunk_size: Option<usize>,
    /// Write the run report here; a `.json` extension selects JSON.
    #[arg(long, value_name = "FILE")]
    report: Option<PathBuf>,
    /// key=value defaults for any long flag of this subcommand.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
struct Scoring {
    /// Residue alphabet; detected from the first record when omitted.
    #[arg(long = "type", value_name = "dna|rna|protein")]
    kind: Option<String>,
    /// Match score (nucleotide default 1).
    #[arg(long = "match", allow_hyphen_values = true, conflicts_with = "matrix")]
    matched: Option<i32>,
    /// Mismatch score (nucleotide default -1).
    #[arg(long, allow_hyphen_values = true, conflicts_with = "matrix")]
    mismatch: Option<i32>,
    /// Substitution matrix in NCBI text format, or `blosum62`.
    #[arg(long, value_name = "FILE")]
    matrix: Option<String>,
    /// Gap open penalty: a gap of length k costs open + extend * (k - 1).
    #[arg(long)]
    gap_open: Option<i32>,
    #[arg(long)]
    gap_extend: Option<i32>,
    /// k-mer length for anchoring nucleotide alignments.
    #[arg(long)]
    kmer: Option<usize>,
    /// Center selection: first or sampled.
    #[arg(long)]
    center: Option<String>,
    /// Accept IUPAC ambiguity codes (scored as mismatches).
    #[arg(long)]
    permissive: bool,
}

#[derive(Args, Debug)]
struct AlignArgs {
    #[arg(long = "in", value_name = "FASTA")]
    input: PathBuf,
    /// Aligned FASTA output; standard output when omitted.
    #[arg(long, value_name = "FASTA")]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    scoring: Scoring,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct ScoreArgs {
    #[arg(long = "in", value_name = "FASTA")]
    input: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct TreeArgs {
    #[arg(long = "in", value_name = "FASTA")]
    input: PathBuf,
    /// Newick output; standard output when omitted.
    #[arg(long, value_name = "NEWICK")]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Use the sample / cluster / graft pipeline regardless of input size.
    #[arg(long)]
    force_cluster: bool,
    /// Largest cluster as a fraction of all sequences.
    #[arg(long)]
    balance_cap: Option<f64>,
    /// Fraction of sequences sampled for the initial clustering.
    #[arg(long)]
    sample_frac: Option<f64>,
    /// Inputs above this size are clustered.
    #[arg(long)]
    direct_threshold: Option<usize>,
    /// Input is raw FASTA; align it first.
    #[arg(long)]
    align_first: bool,
    #[command(flatten)]
    scoring: Scoring,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct TreescoreArgs {
    #[arg(long = "in", value_name = "FASTA")]
    input: PathBuf,
    #[arg(long, value_name = "NEWICK")]
    tree: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct StatsArgs {
    #[arg(long = "in", value_name = "FASTA")]
    input: PathBuf,
    #[arg(long = "type", value_name = "dna|rna|protein")]
    kind: Option<String>,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Internal(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Internal(m) => m,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::TaskPanic(_) => CliError::Internal(e.to_string()),
            Error::InvalidScheme(_) | Error::KTooSmall => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Runs the command line with standard output and error streams.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = io::stdout();
    let stderr = io::stderr();
    run_with(args, &mut stdout.lock(), &mut stderr.lock())
}

/// Like [`run`], writing results to `out` and diagnostics to `err`.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message());
            e.exit_code()
        }
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> CliResult<()> {
    match cmd {
        Command::Align(a) => align(a, out),
        Command::Score(a) => score(a, out),
        Command::Tree(a) => tree(a, out),
        Command::Treescore(a) => treescore(a, out),
        Command::Stats(a) => stats(a, out),
    }
}

/// key=value settings from `--config`, consumed as flags are resolved so
/// leftovers can be reported.
struct Config {
    values: BTreeMap<String, String>,
}

impl Config {
    fn load(path: Option<&Path>) -> CliResult<Self> {
        let mut values = BTreeMap::new();
        let Some(path) = path else {
            return Ok(Config { values });
        };
        let text =
            std::fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                CliError::Usage(format!("{}:{}: expected key=value", path.display(), n + 1))
            })?;
            values.insert(k.trim().trim_start_matches("--").replace('_', "-"), v.trim().to_string());
        }
        Ok(Config { values })
    }

    /// Flag value if given, else the config value, else `None`.
    fn pick<T: FromStr>(&mut self, flag: Option<T>, key: &str) -> CliResult<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        let from_file = self.values.remove(key);
        if flag.is_some() {
            return Ok(flag);
        }
        from_file
            .map(|v| v.parse::<T>().map_err(|e| CliError::Usage(format!("config key '{key}': {e}"))))
            .transpose()
    }

    fn pick_bool(&mut self, flag: bool, key: &str) -> CliResult<bool> {
        Ok(flag || self.pick::<bool>(None, key)?.unwrap_or(false))
    }

    fn finish(self) -> CliResult<()> {
        match self.values.keys().next() {
            Some(k) => Err(CliError::Usage(format!("unknown config key '{k}'"))),
            None => Ok(()),
        }
    }
}

struct Resolved {
    run: RunConfig,
    report: Option<PathBuf>,
}

fn resolve_common(c: &Common, cfg: &mut Config, seed: Option<u64>) -> CliResult<Resolved> {
    let threads = cfg.pick(c.threads, "threads")?.unwrap_or(0);
    let chunk_size = cfg.pick(c.chunk_size, "chunk-size")?;
    if chunk_size == Some(0) {
        return Err(CliError::Usage("--chunk-size must be at least 1".into()));
    }
    let report = cfg.pick(c.report.clone(), "report")?;
    Ok(Resolved {
        run: RunConfig {
            threads,
            chunk_size,
            seed: seed.unwrap_or(0),
        },
        report,
    })
}

fn parse_kind(s: Option<String>) -> CliResult<Option<Alphabet>> {
    s.map(|k| AlphabetKind::from_str(&k).map(Alphabet::strict).map_err(CliError::Usage))
        .transpose()
}

struct AlignSetup {
    scheme: ScoreScheme,
    msa_cfg: MsaConfig,
}

/// Reads scoring flags and builds the scheme once the alphabet is known.
struct ScoringFlags {
    kind: Option<Alphabet>,
    matched: Option<i32>,
    mismatch: Option<i32>,
    matrix: Option<String>,
    gap_open: Option<i32>,
    gap_extend: Option<i32>,
    kmer: Option<usize>,
    center: Option<CenterMode>,
    permissive: bool,
}

fn resolve_scoring(s: &Scoring, cfg: &mut Config) -> CliResult<ScoringFlags> {
    let flags = ScoringFlags {
        kind: parse_kind(cfg.pick(s.kind.clone(), "type")?)?,
        matched: cfg.pick(s.matched, "match")?,
        mismatch: cfg.pick(s.mismatch, "mismatch")?,
        matrix: cfg.pick(s.matrix.clone(), "matrix")?,
        gap_open: cfg.pick(s.gap_open, "gap-open")?,
        gap_extend: cfg.pick(s.gap_extend, "gap-extend")?,
        kmer: cfg.pick(s.kmer, "kmer")?,
        center: cfg
            .pick(s.center.clone(), "center")?
            .map(|c| CenterMode::from_str(&c).map_err(CliError::Usage))
            .transpose()?,
        permissive: cfg.pick_bool(s.permissive, "permissive")?,
    };
    if flags.matrix.is_some() {
        for (name, v) in [("--match", flags.matched.is_some()), ("--mismatch", flags.mismatch.is_some())] {
            if v {
                return Err(CliError::Usage(format!("--matrix cannot be combined with {name}")));
            }
        }
    }
    Ok(flags)
}

impl ScoringFlags {
    fn parse_options(&self) -> ParseOptions {
        ParseOptions {
            alphabet_hint: self.kind.map(|a| if self.permissive { Alphabet::permissive(a.kind) } else { a }),
            permissive: self.permissive,
        }
    }

    fn setup(&self, kind: AlphabetKind, run: RunConfig) -> CliResult<AlignSetup> {
        let base = ScoreScheme::default_for(kind);
        let open = self.gap_open.unwrap_or(base.gap_open);
        let extend = self.gap_extend.unwrap_or(base.gap_extend);
        let scheme = if let Some(m) = &self.matrix {
            let matrix = if m.eq_ignore_ascii_case("blosum62") {
                SubstitutionMatrix::blosum62()
            } else {
                SubstitutionMatrix::from_file(m)?
            };
            ScoreScheme::with_matrix(matrix, open, extend)?
        } else if self.matched.is_some() || self.mismatch.is_some() || kind.is_nucleotide() {
            ScoreScheme::simple(self.matched.unwrap_or(1), self.mismatch.unwrap_or(-1), open, extend)?
        } else {
            ScoreScheme::with_matrix(SubstitutionMatrix::blosum62(), open, extend)?
        };
        Ok(AlignSetup {
            scheme,
            msa_cfg: MsaConfig {
                center_mode: self.center,
                kmer: self.kmer.unwrap_or(starmsa::anchor::DEFAULT_KMER),
                run,
            },
        })
    }
}

fn read_sequences(path: &Path, opts: ParseOptions) -> CliResult<Vec<Sequence>> {
    Ok(seqio::read_fasta(path, opts)?)
}

fn do_align(seqs: &[Sequence], flags: &ScoringFlags, run: RunConfig) -> CliResult<(Msa, RunReport)> {
    let setup = flags.setup(seqs[0].alphabet.kind, run)?;
    if seqs.len() < 2 {
        return Err(CliError::Data(format!("need at least 2 sequences to align, found {}", seqs.len())));
    }
    Ok(run_msa(seqs, &setup.scheme, &setup.msa_cfg)?)
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn emit(out_path: Option<&Path>, out: &mut dyn Write, write: impl FnOnce(&mut dyn Write) -> starmsa::Result<()>) -> CliResult<()> {
    match out_path {
        Some(p) => {
            let mut f = create(p)?;
            write(&mut f)?;
            f.flush().map_err(|e| CliError::Data(format!("{}: {e}", p.display())))
        }
        None => Ok(write(out)?),
    }
}

fn write_report(path: Option<&Path>, report: &RunReport) -> CliResult<()> {
    let Some(path) = path else {
        return Ok(());
    };
    let body = if path.extension().is_some_and(|e| e == "json") {
        report.to_json() + "\n"
    } else {
        report.to_key_value()
    };
    std::fs::write(path, body).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn align(a: AlignArgs, out: &mut dyn Write) -> CliResult<()> {
    let mut cfg = Config::load(a.common.config.as_deref())?;
    let seed = cfg.pick(a.seed, "seed")?;
    let res = resolve_common(&a.common, &mut cfg, seed)?;
    let flags = resolve_scoring(&a.scoring, &mut cfg)?;
    let out_path = cfg.pick(a.out, "out")?;
    cfg.finish()?;
    let seqs = read_sequences(&a.input, flags.parse_options())?;
    let (msa, report) = do_align(&seqs, &flags, res.run)?;
    emit(out_path.as_deref(), out, |w| seqio::write_fasta(&msa, w))?;
    write_report(res.report.as_deref(), &report)
}

fn read_msa(path: &Path) -> CliResult<Msa> {
    Ok(seqio::read_aligned_fasta(path, ParseOptions::default())?)
}

fn score(a: ScoreArgs, out: &mut dyn Write) -> CliResult<()> {
    let mut cfg = Config::load(a.common.config.as_deref())?;
    let res = resolve_common(&a.common, &mut cfg, None)?;
    cfg.finish()?;
    let msa = read_msa(&a.input)?;
    let rep = sp_report_with(&msa, &res.run)?;
    let text = format!("total_sp={}\navg_sp={:.1}\nn_pairs={}\n", rep.total_sp, rep.avg_sp, rep.n_pairs);
    out.write_all(text.as_bytes()).map_err(|e| CliError::Data(e.to_string()))?;
    write_report(res.report.as_deref(), &RunReport { threads: res.run.resolved_threads(), ..Default::default() })
}

fn tree(a: TreeArgs, out: &mut dyn Write) -> CliResult<()> {
    let mut cfg = Config::load(a.common.config.as_deref())?;
    let seed = cfg.pick(a.seed, "seed")?;
    let res = resolve_common(&a.common, &mut cfg, seed)?;
    let flags = resolve_scoring(&a.scoring, &mut cfg)?;
    let defaults = ClusterConfig::default();
    let cluster = ClusterConfig {
        sample_frac: cfg.pick(a.sample_frac, "sample-frac")?.unwrap_or(defaults.sample_frac),
        balance_cap: cfg.pick(a.balance_cap, "balance-cap")?.unwrap_or(defaults.balance_cap),
        seed: seed.unwrap_or(0),
    };
    for (name, v) in [("--sample-frac", cluster.sample_frac), ("--balance-cap", cluster.balance_cap)] {
        if !(v > 0.0 && v <= 1.0) {
            return Err(CliError::Usage(format!("{name} must be in (0, 1], got {v}")));
        }
    }
    let tree_cfg = TreeConfig {
        direct_threshold: cfg
            .pick(a.direct_threshold, "direct-threshold")?
            .unwrap_or(starmsa::phylo::DEFAULT_DIRECT_THRESHOLD),
        force_cluster: cfg.pick_bool(a.force_cluster, "force-cluster")?,
        cluster,
        run: res.run,
    };
    let align_first = cfg.pick_bool(a.align_first, "align-first")?;
    let out_path = cfg.pick(a.out, "out")?;
    cfg.finish()?;

    let mut report = RunReport::default();
    let msa = if align_first {
        let seqs = read_sequences(&a.input, flags.parse_options())?;
        let (msa, r) = do_align(&seqs, &flags, res.run)?;
        report = r;
        msa
    } else {
        seqio::read_aligned_fasta(&a.input, flags.parse_options())?
    };
    let (tree, r) = build_tree_with_report(&msa, &tree_cfg)?;
    report.threads = r.threads;
    report.stages.extend(r.stages);
    report.peak_memory_bytes = report.peak_memory_bytes.max(r.peak_memory_bytes);
    report.memory_source = r.memory_source;
    for (k, v) in r.counters {
        report.add_counter(&k, v);
    }
    // the direct tree is affordable exactly when clustering was forced
    if tree_cfg.force_cluster && msa.n_rows() <= tree_cfg.direct_threshold {
        report.add_counter("rf_clustered_vs_direct", cluster_rf_diagnostic(&msa, &tree_cfg)? as u64);
    }
    emit(out_path.as_deref(), out, |w| tree.write_newick(w))?;
    write_report(res.report.as_deref(), &report)
}

fn treescore(a: TreescoreArgs, out: &mut dyn Write) -> CliResult<()> {
    let mut cfg = Config::load(a.common.config.as_deref())?;
    let res = resolve_common(&a.common, &mut cfg, None)?;
    cfg.finish()?;
    let msa = read_msa(&a.input)?;
    let text = std::fs::read_to_string(&a.tree).map_err(|e| CliError::Data(format!("{}: {e}", a.tree.display())))?;
    let tree = parse_newick(&text)?;
    let score = jc69_loglik_with(&msa, &tree, &res.run)?;
    writeln!(out, "log_likelihood={}\nmodel={}", score.log_likelihood, score.model).map_err(|e| CliError::Data(e.to_string()))?;
    write_report(res.report.as_deref(), &RunReport { threads: res.run.resolved_threads(), ..Default::default() })
}

fn stats(a: StatsArgs, out: &mut dyn Write) -> CliResult<()> {
    let mut cfg = Config::load(a.common.config.as_deref())?;
    let res = resolve_common(&a.common, &mut cfg, None)?;
    let kind = parse_kind(cfg.pick(a.kind, "type")?)?;
    cfg.finish()?;
    let seqs = read_sequences(
        &a.input,
        ParseOptions {
            alphabet_hint: kind,
            permissive: false,
        },
    )?;
    let st = seqio::dataset_stats(&seqs)?;
    writeln!(out, "{st}").map_err(|e| CliError::Data(e.to_string()))?;
    write_report(res.report.as_deref(), &RunReport { threads: res.run.resolved_threads(), ..Default::default() })
}
