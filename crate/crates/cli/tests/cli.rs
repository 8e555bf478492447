use std::path::{Path, PathBuf};
use std::process::Command;

use starmsa::seqio::write_sequences;
use starmsa_testkit::{gen, rng};
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_starmsa"))
}

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = starmsa_cli::run_with(std::iter::once("starmsa").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn dataset(dir: &Path, n: usize, len: usize, seed: u64) -> PathBuf {
    let mut r = rng(seed);
    let seqs = gen::clone_family(&mut r, n, len, 4);
    let path = dir.join("in.fa");
    let mut f = std::fs::File::create(&path).unwrap();
    write_sequences(&seqs, &mut f).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn align_score_tree_treescore_pipeline() {
    let dir = TempDir::new().unwrap();
    let input = dataset(dir.path(), 8, 60, 1);
    let aln = dir.path().join("aln.fa");
    let nwk = dir.path().join("t.nwk");
    assert_eq!(run(&["align", "--in", s(&input), "--out", s(&aln)]).0, 0);
    let (code, out, _) = run(&["score", "--in", s(&aln)]);
    assert_eq!(code, 0);
    assert!(out.contains("total_sp=") && out.contains("avg_sp=") && out.contains("n_pairs=28"), "{out}");
    assert_eq!(run(&["tree", "--in", s(&aln), "--out", s(&nwk)]).0, 0);
    let (code, out, _) = run(&["treescore", "--in", s(&aln), "--tree", s(&nwk)]);
    assert_eq!(code, 0);
    assert!(out.contains("model=JC69"), "{out}");
    let ll: f64 = out.lines().next().unwrap().trim_start_matches("log_likelihood=").parse().unwrap();
    assert!(ll < 0.0);
}

#[test]
fn stats_prints_dataset_summary() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("s.fa");
    std::fs::write(&path, ">a\nACGT\n>b\nACGTAC\n").unwrap();
    let (code, out, _) = run(&["stats", "--in", s(&path)]);
    assert_eq!(code, 0);
    assert_eq!(out, "count=2\nmin_len=4\nmax_len=6\navg_len=5.0\ntotal_bytes=10\n");
}

#[test]
fn exit_codes_follow_error_class() {
    let dir = TempDir::new().unwrap();
    assert_eq!(run(&["align"]).0, 1);
    assert_eq!(run(&["frobnicate"]).0, 1);
    assert_eq!(run(&["align", "--in", "/definitely/missing.fa"]).0, 2);
    let bad = dir.path().join("bad.fa");
    std::fs::write(&bad, ">a\nACGJ\n>b\nACGT\n").unwrap();
    let (code, _, err) = run(&["align", "--in", s(&bad)]);
    assert_eq!(code, 2);
    assert!(err.starts_with("error:"), "{err}");
    let ragged = dir.path().join("ragged.fa");
    std::fs::write(&ragged, ">a\nAC-T\n>b\nACG\n").unwrap();
    assert_eq!(run(&["score", "--in", s(&ragged)]).0, 2);
    assert_eq!(run(&["--help"]).0, 0);
    assert_eq!(run(&["--version"]).0, 0);
}

#[test]
fn matrix_conflicts_with_match_scores() {
    let dir = TempDir::new().unwrap();
    let input = dataset(dir.path(), 3, 20, 2);
    for flag in ["--match", "--mismatch"] {
        let (code, _, err) = run(&["align", "--in", s(&input), "--matrix", "blosum62", flag, "2"]);
        assert_eq!(code, 1);
        assert!(err.contains("--matrix") && err.contains(flag), "{err}");
    }
    let cfg = dir.path().join("c.cfg");
    std::fs::write(&cfg, "matrix=blosum62\n").unwrap();
    let (code, _, err) = run(&["align", "--in", s(&input), "--config", s(&cfg), "--match", "2"]);
    assert_eq!(code, 1);
    assert!(err.contains("--matrix") && err.contains("--match"), "{err}");
}

#[test]
fn config_file_sets_defaults_and_flags_win() {
    let dir = TempDir::new().unwrap();
    let input = dataset(dir.path(), 6, 40, 3);
    let cfg = dir.path().join("c.cfg");
    std::fs::write(&cfg, "# scoring\ngap-open=100\ngap_extend=1\n").unwrap();
    let (_, with_cfg, _) = run(&["align", "--in", s(&input), "--config", s(&cfg)]);
    let (_, explicit, _) = run(&["align", "--in", s(&input), "--gap-open", "100", "--gap-extend", "1"]);
    assert_eq!(with_cfg, explicit);
    let (_, flag_wins, _) = run(&["align", "--in", s(&input), "--config", s(&cfg), "--gap-open", "3"]);
    let (_, plain, _) = run(&["align", "--in", s(&input), "--gap-open", "3", "--gap-extend", "1"]);
    assert_eq!(flag_wins, plain);

    std::fs::write(&cfg, "no-such-key=1\n").unwrap();
    let (code, _, err) = run(&["align", "--in", s(&input), "--config", s(&cfg)]);
    assert_eq!(code, 1);
    assert!(err.contains("no-such-key"));
}

#[test]
fn reports_are_written_in_both_formats() {
    let dir = TempDir::new().unwrap();
    let input = dataset(dir.path(), 5, 50, 4);
    let json = dir.path().join("r.json");
    let kv = dir.path().join("r.txt");
    assert_eq!(run(&["align", "--in", s(&input), "--report", s(&json)]).0, 0);
    assert_eq!(run(&["align", "--in", s(&input), "--report", s(&kv), "--threads", "2"]).0, 0);
    let j: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert!(j["peak_memory_bytes"].is_u64() && j["stages"].is_array());
    let text = std::fs::read_to_string(&kv).unwrap();
    assert!(text.contains("threads=2\n") && text.contains("counter.dp_cells="), "{text}");
}

#[test]
fn forced_clustering_reports_rf_diagnostic() {
    let dir = TempDir::new().unwrap();
    let input = dataset(dir.path(), 24, 80, 5);
    let rep = dir.path().join("r.txt");
    let (code, out, _) = run(&[
        "tree", "--in", s(&input), "--align-first", "--force-cluster", "--balance-cap", "0.3", "--report", s(&rep),
    ]);
    assert_eq!(code, 0);
    assert!(out.trim_end().ends_with(';'));
    let text = std::fs::read_to_string(&rep).unwrap();
    assert!(text.contains("counter.rf_clustered_vs_direct="), "{text}");
    assert!(text.contains("stage.graft."), "{text}");
    assert_eq!(run(&["tree", "--in", s(&input), "--align-first", "--balance-cap", "1.5"]).0, 1);
}

#[test]
fn binary_output_is_thread_independent() {
    let dir = TempDir::new().unwrap();
    let input = dataset(dir.path(), 30, 120, 6);
    let outputs: Vec<(Vec<u8>, Vec<u8>)> = ["1", "2", "8"]
        .iter()
        .map(|t| {
            let a = bin().args(["align", "--in", s(&input), "--seed", "9", "--threads", t]).output().unwrap();
            assert!(a.status.success());
            let tr = bin()
                .args(["tree", "--in", s(&input), "--align-first", "--force-cluster", "--seed", "9", "--threads", t])
                .output()
                .unwrap();
            assert!(tr.status.success());
            (a.stdout, tr.stdout)
        })
        .collect();
    assert!(outputs.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn binary_help_lists_flags_and_usage_exit_code() {
    let help = bin().args(["align", "--help"]).output().unwrap();
    assert_eq!(help.status.code(), Some(0));
    let text = String::from_utf8(help.stdout).unwrap();
    for flag in ["--in", "--out", "--matrix", "--gap-open", "--gap-extend", "--kmer", "--threads", "--chunk-size", "--report", "--config", "--seed"] {
        assert!(text.contains(flag), "missing {flag}");
    }
    let bad = bin().args(["align", "--threads", "x"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(1));
    assert!(bad.stdout.is_empty());
}
