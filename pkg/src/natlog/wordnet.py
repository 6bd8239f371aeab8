"""Taxonomy ingestion: from a noun hypernym graph to a labeled pair dataset.

Two input formats produce the same :class:`TaxonomyGraph`:

* the standard WordNet 3.0 noun database file (``data.noun``), whose lines
  carry a synset offset, word count and words, and a pointer list in which
  the ``@`` pointer marks a hypernym edge;
* a plain edge-list TSV, ``child<TAB>parent<TAB>lemma1,lemma2,...``, where
  the lemma list describes the child synset.  A line with an empty parent
  field declares a node (typically the root) without adding an edge.

From a chosen root, :func:`extract_terms` keeps the root's subtree and picks
one single-word term per synset; :func:`generate_pairs` then emits, for every
ancestor/descendant term pair at any distance, a hyponym example and its
mirror hypernym example, and for every two terms sharing a direct hypernym a
coordinate example in both directions (ancestry wins when both apply).
Coordinates are downsampled pairwise to balance the label distribution, and
:func:`make_folds` carves disjoint test slices for crossvalidation.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from .datasets import LabeledDataset

WORDNET_LABELS = ["hypernym", "hyponym", "coordinate"]
HYPERNYM, HYPONYM, COORDINATE = 0, 1, 2


@dataclass
class TaxonomyGraph:
    """Synset nodes with ordered lemma lists and child -> parent hypernym edges."""

    lemmas: dict[str, list[str]]
    parents: dict[str, list[str]]
    children: dict[str, list[str]] = field(init=False)

    def __post_init__(self) -> None:
        self.children = {node: [] for node in self.lemmas}
        for child, ps in self.parents.items():
            for p in ps:
                self.children[p].append(child)
        for kids in self.children.values():
            kids.sort()

    def validate(self) -> None:
        """Reject dangling edge endpoints and hypernym cycles."""
        for child, ps in self.parents.items():
            if child not in self.lemmas:
                raise ValueError(f"edge from unknown synset {child!r}")
            for p in ps:
                if p not in self.lemmas:
                    raise ValueError(f"synset {child!r} points to unknown {p!r}")
        # Kahn's algorithm; leftovers mean a cycle.
        out_degree = {node: len(self.parents.get(node, ())) for node in self.lemmas}
        queue = [node for node, d in out_degree.items() if d == 0]
        seen = 0
        while queue:
            node = queue.pop()
            seen += 1
            for child in self.children[node]:
                out_degree[child] -= 1
                if out_degree[child] == 0:
                    queue.append(child)
        if seen != len(self.lemmas):
            raise ValueError("hypernym graph contains a cycle")


_WNDB_OFFSET = re.compile(r"^\d{8}$")


def parse_wndb(text: str) -> TaxonomyGraph:
    """Parse WordNet database-file lines (the ``data.noun`` format).

    Token layout per line: synset offset, lexicographer file number, synset
    type, word count (2-digit hex) followed by word/lex-id pairs, pointer
    count (3-digit decimal) followed by 4-token pointers, then ``|`` and the
    gloss.  Hypernym edges come from pointers whose symbol is exactly ``@``;
    other pointer symbols are skipped.  License header lines (leading space)
    are ignored.  Malformed lines raise ValueError with their line number.
    """
    lemmas: dict[str, list[str]] = {}
    parents: dict[str, list[str]] = {}
    pending_edges: list[tuple[str, str, int]] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line or line.startswith(" "):
            continue
        data, _, _gloss = line.partition(" | ")
        toks = data.split()
        try:
            offset = toks[0]
            if not _WNDB_OFFSET.match(offset):
                raise ValueError("synset offset is not 8 digits")
            w_cnt = int(toks[3], 16)
            if w_cnt < 1:
                raise ValueError("word count must be >= 1")
            words = [toks[4 + 2 * i] for i in range(w_cnt)]
            p_pos = 4 + 2 * w_cnt
            p_cnt = int(toks[p_pos], 10)
            for i in range(p_cnt):
                base = p_pos + 1 + 4 * i
                symbol, target = toks[base], toks[base + 1]
                if not _WNDB_OFFSET.match(target):
                    raise ValueError(f"pointer target {target!r} is not an offset")
                if symbol == "@":
                    pending_edges.append((offset, target, lineno))
        except (IndexError, ValueError) as exc:
            raise ValueError(f"line {lineno}: malformed synset entry: {exc}") from None
        if offset in lemmas:
            raise ValueError(f"line {lineno}: duplicate synset offset {offset}")
        lemmas[offset] = words
        parents[offset] = []
    for child, parent, lineno in pending_edges:
        if parent not in lemmas:
            raise ValueError(f"line {lineno}: hypernym target {parent} not in file")
        parents[child].append(parent)
    graph = TaxonomyGraph(lemmas=lemmas, parents=parents)
    graph.validate()
    return graph


def parse_edge_list(text: str) -> TaxonomyGraph:
    """Parse ``child<TAB>parent<TAB>lemma1,lemma2,...`` lines.

    The lemma field describes the child and may be empty; an empty parent
    field declares the child without adding an edge.  Repeating a child on
    several lines accumulates parents (multiple inheritance), but its lemma
    list may only be given once.
    """
    lemmas: dict[str, list[str]] = {}
    parents: dict[str, list[str]] = {}

    def ensure(node: str) -> None:
        lemmas.setdefault(node, [])
        parents.setdefault(node, [])

    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.rstrip("\n").split("\t")
        if len(parts) != 3:
            raise ValueError(
                f"line {lineno}: expected child<TAB>parent<TAB>lemmas, "
                f"got {len(parts)} fields"
            )
        child, parent, lemma_field = parts
        if not child:
            raise ValueError(f"line {lineno}: empty child synset id")
        ensure(child)
        new_lemmas = [l for l in lemma_field.split(",") if l]
        if new_lemmas:
            if lemmas[child] and lemmas[child] != new_lemmas:
                raise ValueError(
                    f"line {lineno}: conflicting lemma lists for {child!r}"
                )
            lemmas[child] = new_lemmas
        if parent:
            ensure(parent)
            if parent not in parents[child]:
                parents[child].append(parent)
    graph = TaxonomyGraph(lemmas=lemmas, parents=parents)
    graph.validate()
    return graph


def parse_taxonomy(text: str, fmt: str = "auto") -> TaxonomyGraph:
    """Dispatch to the wndb or edge-list parser; ``auto`` sniffs the content."""
    if fmt == "auto":
        fmt = "wndb" if _looks_like_wndb(text) else "edges"
    if fmt == "wndb":
        return parse_wndb(text)
    if fmt == "edges":
        return parse_edge_list(text)
    raise ValueError(f"unknown taxonomy format {fmt!r}")


def _looks_like_wndb(text: str) -> bool:
    for line in text.splitlines():
        if not line or line.startswith(" "):
            continue
        return bool(re.match(r"^\d{8} ", line))
    return False


_SENSE_SPEC = re.compile(r"^(?P<lemma>.+)\.n\.(?P<sense>\d+)$")


def resolve_root(graph: TaxonomyGraph, root: str) -> str:
    """Map a root spec to a synset id.

    Accepts a synset id directly, a bare lemma (first matching synset in
    sorted-id order), or ``lemma.n.k`` (k-th matching synset in sorted-id
    order, 1-based).  WordNet's own sense numbering lives outside the data
    file, so for wndb input the k-th-by-offset rule is an approximation; it
    agrees with sense order for the common case of frequency-ordered senses.
    """
    if root in graph.lemmas:
        return root
    m = _SENSE_SPEC.match(root)
    lemma, sense = (m.group("lemma"), int(m.group("sense"))) if m else (root, 1)
    matches = sorted(node for node, ls in graph.lemmas.items() if lemma in ls)
    if not matches:
        raise KeyError(f"no synset has lemma {lemma!r}")
    if sense < 1 or sense > len(matches):
        raise KeyError(f"{root!r}: only {len(matches)} synsets have this lemma")
    return matches[sense - 1]


@dataclass
class TermGraph:
    """The root's subtree with one single-word term chosen per synset.

    ``nodes`` is the deterministic (breadth-first, children sorted by id)
    traversal order; ``term_of`` covers only term-carrying synsets: a synset
    is dropped when it has no single-word lemma or when its first single-word
    lemma was already claimed by an earlier synset.
    """

    root: str
    nodes: list[str]
    parents: dict[str, list[str]]
    term_of: dict[str, str]
    terms: list[str]


def _single_word(lemma: str) -> bool:
    return "_" not in lemma and " " not in lemma


def extract_terms(graph: TaxonomyGraph, root: str) -> TermGraph:
    """Keep the subtree under ``root`` and assign terms to its synsets."""
    root = resolve_root(graph, root)
    order: list[str] = []
    seen = {root}
    queue = [root]
    while queue:
        node = queue.pop(0)
        order.append(node)
        for child in graph.children[node]:
            if child not in seen:
                seen.add(child)
                queue.append(child)
    in_subtree = seen
    parents = {
        node: [p for p in graph.parents[node] if p in in_subtree] for node in order
    }
    term_of: dict[str, str] = {}
    claimed: set[str] = set()
    for node in order:
        candidates = [l for l in graph.lemmas[node] if _single_word(l)]
        if not candidates or candidates[0] in claimed:
            continue
        term_of[node] = candidates[0]
        claimed.add(candidates[0])
    terms = [term_of[node] for node in order if node in term_of]
    return TermGraph(root=root, nodes=order, parents=parents, term_of=term_of, terms=terms)


def generate_pairs(term_graph: TermGraph) -> LabeledDataset:
    """All hypernym/hyponym/coordinate examples over the term graph.

    Ancestry pairs use the full transitive closure (any distance), each
    emitted in both directions (hyponym upward, hypernym downward).
    Coordinate pairs share at least one direct hypernym synset and are
    emitted in both directions unless the pair is already in an ancestry
    relation.  Pairs in none of the three relations are omitted.
    """
    nodes = term_graph.nodes
    node_pos = {node: i for i, node in enumerate(nodes)}
    parents = term_graph.parents

    # Strict ancestor sets within the subtree, memoized over the DAG.
    ancestors: dict[str, frozenset[str]] = {}

    def anc(node: str) -> frozenset[str]:
        got = ancestors.get(node)
        if got is None:
            acc: set[str] = set()
            for p in parents[node]:
                acc.add(p)
                acc |= anc(p)
            got = ancestors[node] = frozenset(acc)
        return got

    term_of = term_graph.term_of
    triples: list[tuple[str, str, str]] = []
    ancestry_pairs: set[tuple[str, str]] = set()
    for node in nodes:
        if node not in term_of:
            continue
        below = term_of[node]
        for up_node in sorted(anc(node), key=node_pos.__getitem__):
            if up_node not in term_of:
                continue
            above = term_of[up_node]
            triples.append((below, above, "hyponym"))
            triples.append((above, below, "hypernym"))
            ancestry_pairs.add((below, above))
            ancestry_pairs.add((above, below))

    coordinate_pairs: set[tuple[str, str]] = set()
    # Children within the subtree, per parent node.
    children: dict[str, list[str]] = {node: [] for node in nodes}
    for node in nodes:
        for p in parents[node]:
            children[p].append(node)
    for node in nodes:
        carriers = [c for c in children[node] if c in term_of]
        for i in range(len(carriers)):
            for j in range(i + 1, len(carriers)):
                a, b = term_of[carriers[i]], term_of[carriers[j]]
                if (a, b) in ancestry_pairs or (a, b) in coordinate_pairs:
                    continue
                coordinate_pairs.add((a, b))
                coordinate_pairs.add((b, a))
                triples.append((a, b, "coordinate"))
                triples.append((b, a, "coordinate"))

    return LabeledDataset.from_triples(
        triples, WORDNET_LABELS, terms=list(term_graph.terms)
    )


def downsample_coordinates(
    dataset: LabeledDataset,
    rng: np.random.Generator,
    target_ratio: float = 0.7,
) -> LabeledDataset:
    """Randomly drop coordinate pairs until their count balances the labels.

    Removes whole mirror pairs (both directions together) until the number
    of coordinate examples is at most ``target_ratio`` times the number of
    hypernym examples.  The default ratio makes hypernym the most frequent
    class at roughly a 37% share.  No-op if already at or under the target.
    """
    examples = dataset.examples
    label = examples[:, 2]
    n_hyper = int(np.sum(label == HYPERNYM))
    coord_idx = np.flatnonzero(label == COORDINATE)
    target = target_ratio * n_hyper
    if len(coord_idx) <= target:
        return dataset

    keys = {}
    for idx in coord_idx:
        l, r = int(examples[idx, 0]), int(examples[idx, 1])
        keys.setdefault((min(l, r), max(l, r)), []).append(idx)
    pair_keys = sorted(keys)
    n_remove = int(np.ceil((len(coord_idx) - target) / 2.0))
    removed = rng.permutation(len(pair_keys))[:n_remove]
    drop = np.zeros(len(examples), dtype=bool)
    for k in removed:
        drop[keys[pair_keys[k]]] = True
    return LabeledDataset(dataset.terms, dataset.label_names, examples[~drop])


@dataclass
class FoldPlan:
    """Crossvalidation plan: disjoint test slices plus per-fold train pools.

    Index arrays refer to rows of the dataset the plan was built from.
    """

    test_slices: list[np.ndarray]
    train_pools: list[np.ndarray]

    @property
    def num_folds(self) -> int:
        return len(self.test_slices)


def make_folds(
    dataset: LabeledDataset,
    rng: np.random.Generator,
    num_slices: int = 10,
    num_folds: int = 5,
) -> FoldPlan:
    """Partition examples into equal slices; the first ``num_folds`` serve as
    test sets, each fold training on everything outside its slice."""
    n = len(dataset)
    if n < num_slices:
        raise ValueError(f"need at least {num_slices} examples, got {n}")
    order = rng.permutation(n)
    slices = np.array_split(order, num_slices)
    test_slices = [np.sort(s) for s in slices[:num_folds]]
    train_pools = []
    for i in range(num_folds):
        pool = np.concatenate([s for j, s in enumerate(slices) if j != i])
        train_pools.append(np.sort(pool))
    return FoldPlan(test_slices=test_slices, train_pools=train_pools)


def subsample_pool(
    pool: np.ndarray, fraction: float, rng: np.random.Generator
) -> np.ndarray:
    """A uniform random subset holding ``round(fraction * len(pool))`` rows."""
    if not 0.0 < fraction <= 1.0:
        raise ValueError("fraction must be in (0, 1]")
    if fraction == 1.0:
        return pool
    size = int(round(fraction * len(pool)))
    picked = rng.permutation(len(pool))[:size]
    return np.sort(pool[picked])


@dataclass
class PretrainedVectors:
    matrix: np.ndarray
    coverage: float
    covered: list[str]


def load_pretrained_vectors(
    text: str,
    terms: list[str],
    embed_dim: int,
    rng: np.random.Generator,
    init_scale: float = 0.1,
) -> PretrainedVectors:
    """Initialization matrix from a ``token v1 ... v_d`` vector file.

    Rows for vocabulary terms found in the file are copied; missing terms
    fall back to uniform random initialization.  Every file row must have
    exactly ``embed_dim`` values.  Returns the matrix together with the
    fraction of the vocabulary that was covered.
    """
    index = {t: i for i, t in enumerate(terms)}
    matrix = rng.uniform(-init_scale, init_scale, size=(len(terms), embed_dim))
    covered: list[str] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split(" ")
        token, values = parts[0], parts[1:]
        if len(values) != embed_dim:
            raise ValueError(
                f"line {lineno}: expected {embed_dim} values, got {len(values)}"
            )
        if token not in index:
            continue
        try:
            matrix[index[token]] = [float(v) for v in values]
        except ValueError:
            raise ValueError(f"line {lineno}: unparseable vector component") from None
        covered.append(token)
    coverage = len(covered) / len(terms) if terms else 0.0
    return PretrainedVectors(matrix=matrix, coverage=coverage, covered=covered)


def dataset_stats(dataset: LabeledDataset) -> dict:
    """Stats sidecar entries: term count, per-label counts, baseline share."""
    counts = dataset.label_counts()
    total = len(dataset)
    baseline = max(counts.values()) / total if total else 0.0
    return {
        "term_count": len(dataset.terms),
        "n_examples": total,
        **{f"n_{name}": c for name, c in counts.items()},
        "baseline_share": f"{baseline:.4f}",
    }
