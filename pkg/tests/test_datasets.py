import numpy as np
import pytest

from natlog.datasets import (
    LabeledDataset,
    RELATION_LABELS,
    SplitDataset,
    read_labeled_tsv,
    read_meta,
    read_split,
    read_statements,
    statements_to_dataset,
    write_labeled_tsv,
    write_meta,
    write_split,
    write_statements,
)
from natlog.relations import Relation
from natlog.worlds import Statement

R = {r.token: r for r in Relation}


def test_statement_tsv_round_trip(tmp_path):
    statements = [
        Statement("a", "b", R["<"]),
        Statement("b", "a", R[">"]),
        Statement("c", "c", R["="]),
    ]
    path = tmp_path / "s.tsv"
    write_statements(path, statements)
    assert read_statements(path) == statements
    assert path.read_text() == "a\tb\t<\nb\ta\t>\nc\tc\t=\n"


def test_statement_tsv_rejects_malformed(tmp_path):
    path = tmp_path / "bad.tsv"
    path.write_text("a\tb\n")
    with pytest.raises(ValueError, match="bad.tsv:1"):
        read_statements(path)
    path.write_text("a\tb\t?\n")
    with pytest.raises(ValueError):
        read_statements(path)


def test_labeled_dataset_from_triples():
    ds = LabeledDataset.from_triples(
        [("dog", "animal", "hyponym"), ("animal", "dog", "hypernym")],
        ["hypernym", "hyponym", "coordinate"],
    )
    assert ds.terms == ["dog", "animal"]
    assert len(ds) == 2
    assert ds.label_counts() == {"hypernym": 1, "hyponym": 1, "coordinate": 0}


def test_labeled_dataset_rejects_bad_indices():
    with pytest.raises(ValueError):
        LabeledDataset(["a"], ["x"], np.array([[0, 1, 0]]))


def test_labeled_tsv_round_trip(tmp_path):
    labels = ["hypernym", "hyponym", "coordinate"]
    ds = LabeledDataset.from_triples(
        [("dog", "animal", "hyponym"), ("pug", "dalmatian", "coordinate")], labels
    )
    path = tmp_path / "pairs.tsv"
    write_labeled_tsv(path, ds)
    back = read_labeled_tsv(path, labels)
    assert back.label_counts() == ds.label_counts()
    assert [tuple(row) for row in back.examples] == [
        (back.term_index["dog"], back.term_index["animal"], 1),
        (back.term_index["pug"], back.term_index["dalmatian"], 2),
    ]


def test_labeled_tsv_rejects_unknown_label(tmp_path):
    path = tmp_path / "pairs.tsv"
    path.write_text("a\tb\tsibling\n")
    with pytest.raises(ValueError, match="unknown label"):
        read_labeled_tsv(path, ["hypernym"])


def test_statements_to_dataset_uses_full_relation_inventory():
    statements = [Statement("a", "b", R["<"])]
    ds = statements_to_dataset(statements, ["a", "b", "c"])
    assert ds.label_names == list(RELATION_LABELS)
    assert ds.num_classes == 7
    assert ds.terms == ["a", "b", "c"]
    assert tuple(ds.examples[0]) == (0, 1, int(R["<"]))


def test_subset_keeps_vocabulary():
    ds = LabeledDataset.from_triples(
        [("a", "b", "x"), ("b", "a", "x"), ("a", "a", "y")], ["x", "y"]
    )
    sub = ds.subset(np.array([2]))
    assert sub.terms == ds.terms
    assert len(sub) == 1 and tuple(sub.examples[0]) == (0, 0, 1)


def test_meta_round_trip(tmp_path):
    path = tmp_path / "meta"
    write_meta(path, {"seed": 3, "domain_size": 7, "note": "x"})
    assert read_meta(path) == {"seed": "3", "domain_size": "7", "note": "x"}


def test_split_directory_round_trip(tmp_path):
    split = SplitDataset(
        train=[Statement("a", "b", R["<"])],
        test_provable=[Statement("b", "a", R[">"])],
        test_unprovable=[Statement("a", "a", R["="])],
    )
    write_split(tmp_path / "d", split, {"seed": 0})
    back = read_split(tmp_path / "d")
    assert back == split
    meta = read_meta(tmp_path / "d" / "meta")
    assert meta["n_train"] == "1"
    assert meta["n_test_provable"] == "1"
    assert meta["n_test_unprovable"] == "1"
