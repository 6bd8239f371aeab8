import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from natlog.relations import Relation, full_mask, relation_of_sets
from natlog.seeding import substream
from natlog.worlds import (
    BooleanStructure,
    InconsistentStatementsError,
    Statement,
    enumerate_statements,
    partition_test,
    provability_closure,
    sample_structure,
    split_statements,
)

R = {r.token: r for r in Relation}


def stmt(a, b, tok):
    return Statement(a, b, R[tok])


# ---------------------------------------------------------------------------
# sampling


def test_sample_structure_shape_and_admissibility():
    s = sample_structure(80, 7, substream(1, "t"))
    assert len(s.terms) == 80
    full = full_mask(7)
    for term in s.terms:
        assert 0 < s.denotation[term] < full
    s.validate()


def test_sample_structure_rejects_tiny_domain():
    with pytest.raises(ValueError):
        sample_structure(5, 1, substream(0, "t"))


def test_sample_structure_single_term_two_elements():
    s = sample_structure(1, 2, substream(3, "t"))
    assert s.denotation[s.terms[0]] in (0b01, 0b10)


def test_sample_structure_uniform_over_admissible_subsets():
    # 10k draws over the 126 nonempty proper subsets of a 7-element domain:
    # every cell within 3 sigma of the binomial expectation, and a chi-square
    # statistic that is unremarkable for 125 degrees of freedom.
    n = 10_000
    s = sample_structure(n, 7, substream(2, "data"))
    counts = np.zeros(full_mask(7) + 1, dtype=int)
    for term in s.terms:
        counts[s.denotation[term]] += 1
    assert counts[0] == 0 and counts[full_mask(7)] == 0
    cells = counts[1 : full_mask(7)]
    assert cells.shape == (126,)
    p = 1 / 126
    sigma = np.sqrt(n * p * (1 - p))
    assert np.all(np.abs(cells - n * p) <= 3 * sigma)
    chi2 = float(np.sum((cells - n * p) ** 2 / (n * p)))
    # 125 dof: mean 125, sd ~15.8; anything under 200 is unremarkable.
    assert chi2 < 200


def test_sample_structure_deterministic():
    a = sample_structure(20, 7, substream(7, "data"))
    b = sample_structure(20, 7, substream(7, "data"))
    assert a.denotation == b.denotation


# ---------------------------------------------------------------------------
# enumeration


def test_enumerate_includes_self_pairs():
    s = sample_structure(80, 7, substream(1, "t"))
    statements = enumerate_statements(s)
    assert len(statements) == 6400
    diagonal = [x for x in statements if x.left == x.right]
    assert len(diagonal) == 80
    assert all(x.relation is R["="] for x in diagonal)


def test_enumerate_single_term():
    s = BooleanStructure(domain_size=3, terms=["a"], denotation={"a": 0b001})
    statements = enumerate_statements(s)
    assert statements == [stmt("a", "a", "=")]


def test_enumerate_duplicate_denotations_are_equivalent():
    s = BooleanStructure(
        domain_size=3, terms=["a", "b"], denotation={"a": 0b011, "b": 0b011}
    )
    statements = enumerate_statements(s)
    assert len(statements) == 4
    assert all(x.relation is R["="] for x in statements)


# ---------------------------------------------------------------------------
# splitting


def test_split_sizes():
    s = sample_structure(80, 7, substream(1, "t"))
    statements = enumerate_statements(s)
    train, test = split_statements(statements, 0.5, substream(1, "split"))
    assert len(train) == len(test) == 3200
    as_pairs = lambda lst: {(x.left, x.right) for x in lst}
    assert not (as_pairs(train) & as_pairs(test))
    assert as_pairs(train) | as_pairs(test) == as_pairs(statements)


def test_split_deterministic_and_seed_sensitive():
    statements = [stmt(f"t{i}", f"t{i}", "=") for i in range(10)]
    a1, b1 = split_statements(statements, 0.5, substream(5, "s"))
    a2, b2 = split_statements(statements, 0.5, substream(5, "s"))
    assert a1 == a2 and b1 == b2
    a3, _ = split_statements(statements, 0.5, substream(6, "s"))
    assert len(a3) == len(a1) == 5
    assert a3 != a1  # overwhelmingly likely under distinct seeds


def test_split_rejects_bad_fraction():
    with pytest.raises(ValueError):
        split_statements([], 0.0, substream(0, "s"))
    with pytest.raises(ValueError):
        split_statements([], 1.0, substream(0, "s"))


# ---------------------------------------------------------------------------
# provability closure


def test_closure_transitivity_example():
    closure = provability_closure(
        [stmt("a", "b", ">"), stmt("b", "c", ">")], ["a", "b", "c"]
    )
    assert closure[("a", "c")] is R[">"]
    assert closure[("c", "a")] is R["<"]  # converse of the derived fact


def test_closure_reflexivity_only():
    closure = provability_closure([], ["b"])
    assert closure == {("b", "b"): R["="]}


def test_closure_blocked_by_undetermined_join():
    closure = provability_closure(
        [stmt("b", "c", "v"), stmt("c", "e", ">")], ["b", "c", "e"]
    )
    assert ("b", "e") not in closure
    assert ("e", "b") not in closure


def test_closure_negation_chain():
    closure = provability_closure(
        [stmt("a", "b", "^"), stmt("b", "c", "^")], ["a", "b", "c"]
    )
    assert closure[("a", "c")] is R["="]


def test_closure_contains_converses_of_train():
    closure = provability_closure([stmt("a", "b", "<")], ["a", "b"])
    assert closure[("a", "b")] is R["<"]
    assert closure[("b", "a")] is R[">"]


def test_closure_detects_direct_inconsistency():
    with pytest.raises(InconsistentStatementsError):
        provability_closure([stmt("a", "b", "<"), stmt("a", "b", ">")], ["a", "b"])


def test_closure_detects_derived_inconsistency():
    # a < b and b < c force a < c; asserting a = c contradicts it.
    with pytest.raises(InconsistentStatementsError):
        provability_closure(
            [stmt("a", "b", "<"), stmt("b", "c", "<"), stmt("a", "c", "=")],
            ["a", "b", "c"],
        )


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), num_terms=st.integers(2, 14))
def test_closure_sound_and_idempotent_on_generated_worlds(seed, num_terms):
    rng = substream(seed, "hyp")
    s = sample_structure(num_terms, 5, rng)
    statements = enumerate_statements(s)
    train, _ = split_statements(statements, 0.5, rng)
    closure = provability_closure(train, s.terms)
    # Soundness: every derived entry matches ground truth.
    for (a, b), r in closure.items():
        assert relation_of_sets(s.denotation[a], s.denotation[b], 5) is r
    # Idempotence: feeding the closure back in adds nothing.
    closure_statements = [Statement(a, b, r) for (a, b), r in closure.items()]
    again = provability_closure(closure_statements, s.terms)
    assert again == closure


def test_closure_monotone_in_training_statements():
    rng = substream(11, "mono")
    s = sample_structure(12, 5, rng)
    statements = enumerate_statements(s)
    train, test = split_statements(statements, 0.5, rng)
    small = provability_closure(train[: len(train) // 2], s.terms)
    big = provability_closure(train, s.terms)
    for pair, r in small.items():
        assert big[pair] is r


# ---------------------------------------------------------------------------
# test partitioning


def test_partition_counts_at_paper_scale():
    rng = substream(0, "data", 0)
    s = sample_structure(80, 7, rng)
    statements = enumerate_statements(s)
    train, test = split_statements(statements, 0.5, rng)
    closure = provability_closure(train, s.terms)
    provable, unprovable = partition_test(test, closure)
    assert len(provable) + len(unprovable) == 3200
    assert 2700 <= len(provable) <= 3150


def test_partition_empty_training_set():
    s = sample_structure(6, 5, substream(3, "d"))
    statements = enumerate_statements(s)
    closure = provability_closure([], s.terms)
    provable, unprovable = partition_test(statements, closure)
    assert {(x.left, x.right) for x in provable} == {(t, t) for t in s.terms}
    assert len(unprovable) == len(statements) - len(s.terms)


def test_partition_never_contradicts_ground_truth():
    rng = substream(9, "d")
    s = sample_structure(20, 7, rng)
    statements = enumerate_statements(s)
    train, test = split_statements(statements, 0.5, rng)
    closure = provability_closure(train, s.terms)
    for x in test:
        derived = closure.get((x.left, x.right))
        assert derived is None or derived is x.relation
