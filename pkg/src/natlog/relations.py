"""Exact algebra of the seven natural logic relations over finite sets.

A domain of size ``d`` is the set of entities ``{0, ..., d-1}``; a set over
that domain is represented as a bitmask (bit ``i`` set means entity ``i`` is
a member).  Between any two *nonempty proper* subsets of a domain exactly one
of seven relations holds:

========  =====  =====================================================
name      token  condition
========  =====  =====================================================
``=``     ``=``  x = y
``<``     ``<``  x is a strict subset of y
``>``     ``>``  x is a strict superset of y
``^``     ``^``  x, y disjoint and x + y exhausts the domain
``|``     ``|``  x, y disjoint and x + y does not exhaust the domain
``v``     ``v``  x, y overlap and x + y exhausts the domain (cover)
``#``     ``#``  none of the above (independence)
========  =====  =====================================================

Subset/superset are strict by convention here: identical sets are always
``=``, never ``<``.  Empty sets and full-domain sets are rejected outright
because the seven conditions stop being mutually exclusive for them (the
empty set is both a subset of and disjoint from everything), so admitting
them would break the partition property.

Relations compose: knowing how ``a`` relates to ``b`` and ``b`` to ``c``
sometimes pins down how ``a`` relates to ``c``.  The composition ("join")
table is stored as literal data, and :func:`verify_join_soundness` can
brute-force check it against the set-theoretic definitions on any small
domain.

Everything in this module is a pure function over immutable values.
"""

from __future__ import annotations

import enum
from typing import Iterable, Iterator, Optional


class Relation(enum.IntEnum):
    """The seven relations, in canonical order."""

    EQUIVALENCE = 0
    ENTAILMENT = 1          # strict subset
    REVERSE_ENTAILMENT = 2  # strict superset
    NEGATION = 3            # disjoint, exhaustive
    ALTERNATION = 4         # disjoint, non-exhaustive
    COVER = 5               # overlapping, exhaustive
    INDEPENDENCE = 6        # anything else

    @property
    def token(self) -> str:
        """One-character ASCII token used in dataset files and reports."""
        return _TOKENS[self]

    @property
    def symbol(self) -> str:
        """Unicode rendering for human-readable output."""
        return _SYMBOLS[self]

    def __str__(self) -> str:
        return self.token


RELATIONS = tuple(Relation)

_TOKENS = {
    Relation.EQUIVALENCE: "=",
    Relation.ENTAILMENT: "<",
    Relation.REVERSE_ENTAILMENT: ">",
    Relation.NEGATION: "^",
    Relation.ALTERNATION: "|",
    Relation.COVER: "v",
    Relation.INDEPENDENCE: "#",
}

_SYMBOLS = {
    Relation.EQUIVALENCE: "≡",          # ≡
    Relation.ENTAILMENT: "⊏",           # ⊏
    Relation.REVERSE_ENTAILMENT: "⊐",   # ⊐
    Relation.NEGATION: "^",
    Relation.ALTERNATION: "|",
    Relation.COVER: "‿",                # ‿
    Relation.INDEPENDENCE: "#",
}

_FROM_TOKEN = {tok: rel for rel, tok in _TOKENS.items()}


def relation_from_token(token: str) -> Relation:
    """Inverse of ``Relation.token``; raises ValueError on unknown tokens."""
    try:
        return _FROM_TOKEN[token]
    except KeyError:
        raise ValueError(f"unknown relation token {token!r}") from None


class VacuousSetError(ValueError):
    """Raised when a relation is requested for an empty or full-domain set."""


def full_mask(domain_size: int) -> int:
    """Bitmask of the whole domain."""
    if domain_size < 1:
        raise ValueError(f"domain size must be >= 1, got {domain_size}")
    return (1 << domain_size) - 1


def mask_of(members: Iterable[int], domain_size: int) -> int:
    """Build a bitmask from an iterable of entity indices."""
    mask = 0
    for m in members:
        if not 0 <= m < domain_size:
            raise ValueError(f"entity {m} outside domain of size {domain_size}")
        mask |= 1 << m
    return mask


def members_of(mask: int, domain_size: int) -> frozenset[int]:
    """The entity indices contained in a bitmask."""
    return frozenset(i for i in range(domain_size) if mask >> i & 1)


def proper_nonempty_subsets(domain_size: int) -> Iterator[int]:
    """All bitmasks other than the empty set and the full domain.

    Yields ``2**domain_size - 2`` masks; empty for a one-element domain.
    """
    for mask in range(1, full_mask(domain_size)):
        yield mask


def relation_of_sets(x: int, y: int, domain_size: int) -> Relation:
    """The unique relation holding between bitmask sets ``x`` and ``y``.

    Both arguments must be nonempty proper subsets of the domain;
    :class:`VacuousSetError` is raised otherwise, since the defining
    conditions overlap for the empty set and the full domain.
    """
    full = full_mask(domain_size)
    if x & ~full or y & ~full or x < 0 or y < 0:
        raise ValueError("set contains entities outside the domain")
    if x == 0 or y == 0 or x == full or y == full:
        raise VacuousSetError(
            "relations are only defined for nonempty proper subsets "
            f"(got x={x:#b}, y={y:#b}, domain size {domain_size})"
        )
    if x == y:
        return Relation.EQUIVALENCE
    if x & y == x:
        return Relation.ENTAILMENT
    if x & y == y:
        return Relation.REVERSE_ENTAILMENT
    if x & y == 0:
        if x | y == full:
            return Relation.NEGATION
        return Relation.ALTERNATION
    if x | y == full:
        return Relation.COVER
    return Relation.INDEPENDENCE


def converse(r: Relation) -> Relation:
    """The relation holding between (y, x) given the one between (x, y).

    Only ``<`` and ``>`` swap; the other five are symmetric.
    """
    if r is Relation.ENTAILMENT:
        return Relation.REVERSE_ENTAILMENT
    if r is Relation.REVERSE_ENTAILMENT:
        return Relation.ENTAILMENT
    return r


# Composition table: row = relation of (a, b), column = relation of (b, c),
# cell = relation of (a, c) when determined, None when no inference is valid.
# Stored as literal data (not computed) so the intended table is explicit;
# verify_join_soundness() brute-force checks every cell against the
# set-theoretic definitions.
_EQ = Relation.EQUIVALENCE
_LT = Relation.ENTAILMENT
_GT = Relation.REVERSE_ENTAILMENT
_NEG = Relation.NEGATION
_ALT = Relation.ALTERNATION
_COV = Relation.COVER
_IND = Relation.INDEPENDENCE

JOIN_TABLE: tuple[tuple[Optional[Relation], ...], ...] = (
    #  =      <      >      ^      |      v      #
    (_EQ,   _LT,   _GT,   _NEG,  _ALT,  _COV,  _IND),   # =
    (_LT,   _LT,   None,  _ALT,  _ALT,  None,  None),   # <
    (_GT,   None,  _GT,   _COV,  None,  _COV,  None),   # >
    (_NEG,  _COV,  _ALT,  _EQ,   _GT,   _LT,   _IND),   # ^
    (_ALT,  None,  _ALT,  _LT,   None,  _LT,   None),   # |
    (_COV,  _COV,  None,  _GT,   _GT,   None,  None),   # v
    (_IND,  None,  None,  _IND,  None,  None,  None),   # #
)


def join(r: Relation, s: Relation) -> Optional[Relation]:
    """Compose relations: given a R b and b S c, the relation of (a, c).

    Returns None when the premise pair does not determine a unique
    conclusion (the undetermined cells of the composition table).
    """
    return JOIN_TABLE[r][s]


def verify_join_soundness(domain_size: int) -> list[tuple[int, int, int, Relation, Relation]]:
    """Brute-force check of the composition table on one domain.

    For every triple (x, y, z) of nonempty proper subsets with
    ``join(rel(x,y), rel(y,z))`` defined, checks that the predicted relation
    equals ``relation_of_sets(x, z)``.  Returns the list of counterexamples
    ``(x, y, z, predicted, actual)``; an empty list means the table is sound
    for this domain.  Intended for small domains (size <= 5 keeps the triple
    enumeration under 30k x 30 items).
    """
    violations = []
    subsets = list(proper_nonempty_subsets(domain_size))
    # Precompute pairwise relations once; the triple loop then only indexes.
    rel = {
        (x, y): relation_of_sets(x, y, domain_size)
        for x in subsets
        for y in subsets
    }
    for x in subsets:
        for y in subsets:
            r = rel[(x, y)]
            for z in subsets:
                t = JOIN_TABLE[r][rel[(y, z)]]
                if t is not None and rel[(x, z)] is not t:
                    violations.append((x, y, z, t, rel[(x, z)]))
    return violations
