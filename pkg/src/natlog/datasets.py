"""Dataset containers and the on-disk formats shared by the experiments.

Statement files are TSV, one statement per line::

    left_term<TAB>right_term<TAB>label

For simulated-world data the label is a one-character relation token
(``= < > ^ | v #``); for taxonomy data it is one of ``hypernym``,
``hyponym``, ``coordinate``.  A generated split directory holds
``train.tsv``, ``test_provable.tsv``, ``test_unprovable.tsv`` and a ``meta``
file of ``key = value`` lines recording the generation parameters and counts.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .relations import Relation, relation_from_token
from .worlds import Statement

RELATION_LABELS = tuple(r.token for r in Relation)


@dataclass
class LabeledDataset:
    """Indexed (left, right, label) examples over a fixed vocabulary.

    ``examples`` is an int array of shape (n, 3): columns are left term
    index, right term index, label index.  ``label_names`` is the full label
    inventory (classes may be absent from ``examples`` but not vice versa).
    """

    terms: list[str]
    label_names: list[str]
    examples: np.ndarray
    term_index: dict[str, int] = field(init=False)

    def __post_init__(self) -> None:
        self.examples = np.asarray(self.examples, dtype=np.int64).reshape(-1, 3)
        self.term_index = {t: i for i, t in enumerate(self.terms)}
        if len(self.term_index) != len(self.terms):
            raise ValueError("duplicate terms in vocabulary")
        if len(self.examples) and (
            self.examples[:, :2].max() >= len(self.terms)
            or self.examples[:, 2].max() >= len(self.label_names)
            or self.examples.min() < 0
        ):
            raise ValueError("example indices out of range")

    def __len__(self) -> int:
        return len(self.examples)

    @property
    def num_classes(self) -> int:
        return len(self.label_names)

    def label_counts(self) -> dict[str, int]:
        counts = np.bincount(self.examples[:, 2], minlength=self.num_classes)
        return {name: int(c) for name, c in zip(self.label_names, counts)}

    def subset(self, indices: np.ndarray) -> "LabeledDataset":
        """Same vocabulary and labels, examples restricted to ``indices``."""
        return LabeledDataset(self.terms, self.label_names, self.examples[indices])

    @classmethod
    def from_triples(
        cls,
        triples: list[tuple[str, str, str]],
        label_names: list[str],
        terms: list[str] | None = None,
    ) -> "LabeledDataset":
        if terms is None:
            seen: dict[str, None] = {}
            for l, r, _ in triples:
                seen.setdefault(l)
                seen.setdefault(r)
            terms = list(seen)
        term_index = {t: i for i, t in enumerate(terms)}
        label_index = {name: i for i, name in enumerate(label_names)}
        rows = [
            (term_index[l], term_index[r], label_index[lab]) for l, r, lab in triples
        ]
        examples = np.array(rows, dtype=np.int64).reshape(-1, 3)
        return cls(terms, list(label_names), examples)


def statements_to_dataset(
    statements: list[Statement], terms: list[str]
) -> LabeledDataset:
    """Statements as training examples; the label inventory is all 7 tokens."""
    triples = [(s.left, s.right, s.relation.token) for s in statements]
    return LabeledDataset.from_triples(triples, list(RELATION_LABELS), terms)


# ---------------------------------------------------------------------------
# TSV and meta-file I/O


def write_statements(path: str, statements: list[Statement]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for s in statements:
            f.write(f"{s.left}\t{s.right}\t{s.relation.token}\n")


def read_statements(path: str) -> list[Statement]:
    statements = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise ValueError(f"{path}:{lineno}: expected 3 tab-separated fields")
            left, right, token = parts
            statements.append(Statement(left, right, relation_from_token(token)))
    return statements


def write_labeled_tsv(path: str, dataset: LabeledDataset) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for l, r, y in dataset.examples:
            f.write(f"{dataset.terms[l]}\t{dataset.terms[r]}\t{dataset.label_names[y]}\n")


def read_labeled_tsv(path: str, label_names: list[str]) -> LabeledDataset:
    triples = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise ValueError(f"{path}:{lineno}: expected 3 tab-separated fields")
            if parts[2] not in label_names:
                raise ValueError(f"{path}:{lineno}: unknown label {parts[2]!r}")
            triples.append((parts[0], parts[1], parts[2]))
    return LabeledDataset.from_triples(triples, label_names)


def write_meta(path: str, entries: dict) -> None:
    """Flat ``key = value`` sidecar, stable key order as given."""
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for key, value in entries.items():
            f.write(f"{key} = {value}\n")


def read_meta(path: str) -> dict[str, str]:
    entries: dict[str, str] = {}
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, value = line.partition("=")
            entries[key.strip()] = value.strip()
    return entries


@dataclass
class SplitDataset:
    """One generated world's statements, split three ways."""

    train: list[Statement]
    test_provable: list[Statement]
    test_unprovable: list[Statement]

    def all_statements(self) -> list[Statement]:
        return self.train + self.test_provable + self.test_unprovable


SPLIT_FILES = {
    "train": "train.tsv",
    "test_provable": "test_provable.tsv",
    "test_unprovable": "test_unprovable.tsv",
}


def write_split(directory: str, split: SplitDataset, meta: dict) -> None:
    os.makedirs(directory, exist_ok=True)
    write_statements(os.path.join(directory, SPLIT_FILES["train"]), split.train)
    write_statements(
        os.path.join(directory, SPLIT_FILES["test_provable"]), split.test_provable
    )
    write_statements(
        os.path.join(directory, SPLIT_FILES["test_unprovable"]), split.test_unprovable
    )
    counts = {
        "n_train": len(split.train),
        "n_test_provable": len(split.test_provable),
        "n_test_unprovable": len(split.test_unprovable),
    }
    write_meta(os.path.join(directory, "meta"), {**meta, **counts})


def read_split(directory: str) -> SplitDataset:
    return SplitDataset(
        train=read_statements(os.path.join(directory, SPLIT_FILES["train"])),
        test_provable=read_statements(
            os.path.join(directory, SPLIT_FILES["test_provable"])
        ),
        test_unprovable=read_statements(
            os.path.join(directory, SPLIT_FILES["test_unprovable"])
        ),
    )
