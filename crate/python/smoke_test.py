"""Smoke test for the Python extension. Run after installing crates/py."""

import math

import starmsa

RECORDS = [
    ("a", "ACGTACGTACGTTAGC"),
    ("b", "ACGTACGAACGTTAGC"),
    ("c", "ACGTACGTCGTTAGC"),
    ("d", "ACGTTCGTACGTTAGCA"),
    ("e", "ACTTACGTACGTAGC"),
]


def strip(row):
    return row.replace("-", "")


def main():
    msa, report = starmsa.align(RECORDS, seed=3, threads=2)
    assert len(msa) == len(RECORDS)
    assert len({len(r) for r in msa.rows}) == 1
    assert [strip(r) for r in msa.rows] == [s for _, s in RECORDS]
    assert report["counters"]["dp_cells"] > 0

    again, _ = starmsa.align(RECORDS, seed=3, threads=1)
    assert again.to_fasta() == msa.to_fasta()

    sp = msa.sp_report()
    assert sp["n_pairs"] == 10
    assert sp["avg_sp"] == sp["total_sp"] / 10

    assert starmsa.Msa([("x", "A-CT"), ("y", "AGC-")]).sp_report()["total_sp"] == 4

    tree = msa.tree(seed=1)
    assert sorted(tree.leaf_labels) == ["a", "b", "c", "d", "e"]
    back = starmsa.Tree.from_newick(tree.to_newick())
    assert back.robinson_foulds(tree) == 0
    ll = tree.jc69_loglik(msa)
    assert ll < 0 and math.isfinite(ll)

    score, ra, rb = starmsa.global_align("ACGT", "AGT")
    assert strip(ra) == "ACGT" and strip(rb) == "AGT"
    assert starmsa.local_score("ACGT", "ACGT") == 4

    recs = starmsa.parse_fasta(">p\nACGT\n>q\nAC\n")
    stats = starmsa.dataset_stats(recs)
    assert (stats["count"], stats["min_len"], stats["max_len"]) == (2, 2, 4)

    for bad in (lambda: starmsa.parse_fasta(">p\nACGJ\n"),
                lambda: starmsa.Msa([("x", "AC"), ("y", "A")])):
        try:
            bad()
        except starmsa.StarmsaError:
            pass
        else:
            raise AssertionError("expected StarmsaError")

    try:
        starmsa.align(RECORDS, matrix="blosum62", mismatch=-2)
    except ValueError as e:
        assert "matrix" in str(e)
    else:
        raise AssertionError("expected ValueError")

    print("smoke test passed")


if __name__ == "__main__":
    main()
