"""Random boolean worlds and the provability structure of their statements.

A boolean structure assigns each named term a nonempty proper subset of a
small finite domain.  Enumerating every ordered pair of terms (self-pairs
included) gives the full list of ground-truth relation statements; a random
half becomes the training set and the rest the test set.  The test set is
then partitioned by whether each statement can be *proved* from the training
statements alone, using three inference rules:

  1. reflexivity: ``t = t`` for every term,
  2. converse:    from ``a R b`` infer ``b converse(R) a``,
  3. composition: from ``a R b`` and ``b S c`` infer ``a join(R,S) c``
                  whenever the join is determined.

The closure of these rules is a least fixpoint, computed here semi-naively
with boolean matrix products over the term-by-term relation matrix (cheap at
the scale this is used: at most a few hundred terms).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .relations import (
    RELATIONS,
    Relation,
    converse,
    full_mask,
    JOIN_TABLE,
    relation_of_sets,
)


@dataclass(frozen=True)
class Statement:
    """An ordered pair of terms and the relation asserted between them."""

    left: str
    right: str
    relation: Relation


@dataclass
class BooleanStructure:
    """A domain plus an assignment of terms to subsets (bitmasks) of it.

    Distinct terms may denote the same subset, and not every subset need be
    named.  Every denotation must be a nonempty proper subset of the domain.
    """

    domain_size: int
    terms: list[str]
    denotation: dict[str, int]

    def validate(self) -> None:
        full = full_mask(self.domain_size)
        for term in self.terms:
            mask = self.denotation[term]
            if mask <= 0 or mask >= full:
                raise ValueError(
                    f"denotation of {term!r} is not a nonempty proper subset"
                )


def sample_structure(
    num_terms: int,
    domain_size: int,
    rng: np.random.Generator,
    term_prefix: str = "t",
) -> BooleanStructure:
    """Draw each term's denotation uniformly from the nonempty proper subsets.

    Sampling is with replacement, so several terms can share a denotation
    (which is what makes learning ``=`` non-trivial downstream).  Requires
    ``domain_size >= 2``; smaller domains have no admissible subsets.
    """
    if domain_size < 2:
        raise ValueError("domain_size must be >= 2 so proper subsets exist")
    if num_terms < 1:
        raise ValueError("num_terms must be >= 1")
    terms = [f"{term_prefix}{i}" for i in range(num_terms)]
    # Masks 1 .. 2^d - 2 are exactly the nonempty proper subsets.
    masks = rng.integers(1, full_mask(domain_size), size=num_terms)
    return BooleanStructure(
        domain_size=domain_size,
        terms=terms,
        denotation={t: int(m) for t, m in zip(terms, masks)},
    )


def enumerate_statements(structure: BooleanStructure) -> list[Statement]:
    """Ground-truth statements for every ordered term pair, self-pairs included.

    Returns ``len(terms) ** 2`` statements.
    """
    d = structure.domain_size
    den = structure.denotation
    return [
        Statement(a, b, relation_of_sets(den[a], den[b], d))
        for a in structure.terms
        for b in structure.terms
    ]


def split_statements(
    statements: list[Statement],
    test_fraction: float,
    rng: np.random.Generator,
) -> tuple[list[Statement], list[Statement]]:
    """Random train/test partition with ``|test| = round(fraction * n)``."""
    if not 0.0 < test_fraction < 1.0:
        raise ValueError("test_fraction must be strictly between 0 and 1")
    n = len(statements)
    n_test = int(round(test_fraction * n))
    order = rng.permutation(n)
    test = [statements[i] for i in order[:n_test]]
    train = [statements[i] for i in order[n_test:]]
    return train, test


class InconsistentStatementsError(ValueError):
    """Two different relations were asserted or derived for the same pair."""


_UNKNOWN = -1


def provability_closure(
    train: list[Statement],
    terms: list[str],
) -> dict[tuple[str, str], Relation]:
    """Everything derivable from the training statements by the three rules.

    Returns a map from ordered term pair to the derived relation.  The map
    always contains ``(t, t) -> =`` for every term, both directions of every
    training statement, and every composition reachable through any chain of
    intermediate terms (least fixpoint).

    Raises :class:`InconsistentStatementsError` if two distinct relations are
    asserted or derived for one ordered pair; this cannot happen when the
    training statements come from a single structure.
    """
    index = {t: i for i, t in enumerate(terms)}
    n = len(terms)
    known = np.full((n, n), _UNKNOWN, dtype=np.int8)
    np.fill_diagonal(known, int(Relation.EQUIVALENCE))

    fresh = np.zeros((n, n), dtype=bool)
    np.fill_diagonal(fresh, True)
    for st in train:
        for a, b, r in (
            (st.left, st.right, st.relation),
            (st.right, st.left, converse(st.relation)),
        ):
            i, j = index[a], index[b]
            if known[i, j] != _UNKNOWN and known[i, j] != int(r):
                raise InconsistentStatementsError(
                    f"({a}, {b}) asserted as both "
                    f"{Relation(int(known[i, j])).token} and {r.token}"
                )
            known[i, j] = int(r)
            fresh[i, j] = True

    # Semi-naive iteration: each round composes paths that use at least one
    # fact discovered in the previous round.
    while fresh.any():
        by_rel_known = [known == int(r) for r in RELATIONS]
        by_rel_fresh = [b & fresh for b in by_rel_known]
        derived = np.full((n, n), _UNKNOWN, dtype=np.int8)
        for r in RELATIONS:
            for s in RELATIONS:
                t = JOIN_TABLE[r][s]
                if t is None:
                    continue
                reach = (
                    by_rel_fresh[r].astype(np.int32) @ by_rel_known[s].astype(np.int32)
                    + by_rel_known[r].astype(np.int32) @ by_rel_fresh[s].astype(np.int32)
                ) > 0
                clash = reach & (derived != _UNKNOWN) & (derived != int(t))
                if clash.any():
                    i, j = np.argwhere(clash)[0]
                    raise InconsistentStatementsError(
                        f"({terms[i]}, {terms[j]}) derived as both "
                        f"{Relation(int(derived[i, j])).token} and {t.token}"
                    )
                derived[reach] = int(t)

        new = (derived != _UNKNOWN) & (known == _UNKNOWN)
        clash = (derived != _UNKNOWN) & (known != _UNKNOWN) & (derived != known)
        if clash.any():
            i, j = np.argwhere(clash)[0]
            raise InconsistentStatementsError(
                f"({terms[i]}, {terms[j]}) derived as "
                f"{Relation(int(derived[i, j])).token} but already known as "
                f"{Relation(int(known[i, j])).token}"
            )
        known[new] = derived[new]
        # Close under converse immediately; keeps each round symmetric.
        conv_new = np.zeros_like(fresh)
        for i, j in np.argwhere(new):
            r = Relation(int(known[i, j]))
            cr = converse(r)
            if known[j, i] == _UNKNOWN:
                known[j, i] = int(cr)
                conv_new[j, i] = True
            elif known[j, i] != int(cr):
                raise InconsistentStatementsError(
                    f"({terms[j]}, {terms[i]}) known as "
                    f"{Relation(int(known[j, i])).token} but converse gives {cr.token}"
                )
        fresh = new | conv_new

    out: dict[tuple[str, str], Relation] = {}
    for i, j in np.argwhere(known != _UNKNOWN):
        out[(terms[i], terms[j])] = Relation(int(known[i, j]))
    return out


def partition_test(
    test: list[Statement],
    closure: dict[tuple[str, str], Relation],
) -> tuple[list[Statement], list[Statement]]:
    """Split test statements into (provable, unprovable).

    A statement is provable iff the closure assigns its ordered pair exactly
    its relation.  For data generated from one structure the closure never
    assigns a *different* relation (soundness); pairs simply absent from the
    closure are unprovable.
    """
    provable, unprovable = [], []
    for st in test:
        if closure.get((st.left, st.right)) is st.relation:
            provable.append(st)
        else:
            unprovable.append(st)
    return provable, unprovable
