import math
import os
from pathlib import Path

import pytest

import disco

DATA = Path(os.environ.get("DISCO_TEST_DATA", Path(__file__).resolve().parents[2] / "tests" / "data"))


def mini_corpus():
    return (DATA / "mini_corpus.conllu").read_text(encoding="utf-8")


def test_parse_conllu():
    docs = disco.parse_conllu(mini_corpus())
    assert [d["doc_id"] for d in docs][:2] == ["jacket", "jacket-long"]
    first = docs[0]["sentences"][0]
    assert first[0][1] == "I"


def test_extract_matches_golden_file():
    result = disco.extract(mini_corpus())
    golden = [line.split("\t") for line in (DATA / "mini_golden_pairs.tsv").read_text().splitlines()]
    assert [[p["s1"], p["s2"], p["marker"]] for p in result["accepted"]] == golden
    reasons = {r["reason"] for r in result["rejected"]}
    assert {"TooShort", "NoGovernor", "OrderViolation"} <= reasons


def test_books5_subset():
    all_pairs = disco.extract(mini_corpus())["accepted"]
    b5 = disco.extract(mini_corpus(), markers="books5")["accepted"]
    assert b5 == [p for p in all_pairs if p["marker"] in disco.marker_set("books5")]


def test_levenshtein():
    assert disco.levenshtein("kitten", "sitting") == 3
    assert math.isclose(disco.normalized_levenshtein("kitten", "sitting"), 3 / 7)
    assert disco.levenshtein("café", "cafe") == 1


def test_align_uses_closer_side():
    gold = [("aaaa", "she stayed late", "so")]
    r = disco.align([("zzzz", "she stayed late", "so")], gold)
    assert r["alignments"][0]["quality"] == 0.5
    assert disco.align([("zzzz", "qqqqqqqqqqqqqqq", "so")], gold)["unaligned"] == [0]


def test_split_and_balance():
    pairs = [(f"a {i}", f"b {i}", "and" if i % 3 else "but") for i in range(100)]
    s = disco.split(pairs, (0.9, 0.05, 0.05), 42)
    assert (len(s["train"]), len(s["valid"]), len(s["test"])) == (90, 5, 5)
    assert s == disco.split(pairs, (0.9, 0.05, 0.05), 42)
    bal = disco.balance(pairs, 10)
    assert sum(1 for p in bal if p[2] == "and") == 10
    with pytest.raises(ValueError):
        disco.split([], (0.9, 0.05, 0.05), 1)


def test_metrics():
    r = disco.per_class_prf(["a", "a", "b"], ["a", "b", "b"])
    assert r["classes"]["a"]["recall"] == 0.5
    assert math.isclose(r["accuracy"], 2 / 3)
    assert disco.confusion(["a", "b"], ["b", "b"], ["a", "b"]) == [[0, 1], [0, 1]]


def test_grad_check():
    r = disco.grad_check(hidden=2)
    assert r["max_relative_error"] < 1e-4
    assert r["coordinates"] > 0


def test_cli_roundtrip(tmp_path):
    code, out, _ = disco.run(["--version"])
    assert code == 0 and "0.1.0" in out
    code, _, _ = disco.run(["extract", "--in", str(DATA / "mini_corpus.conllu"), "--out", str(tmp_path / "p.tsv")])
    assert code == 0
    assert (tmp_path / "p.tsv").read_text() == (DATA / "mini_golden_pairs.tsv").read_text()
    assert disco.run(["no-such-command"])[0] == 1


def test_parse_error_is_raised():
    with pytest.raises(ValueError):
        disco.parse_conllu("1\tonly-two-columns\n\n")
