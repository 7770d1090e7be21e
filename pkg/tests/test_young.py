"""Partition branching rules and hook-length dimensions."""

from itertools import permutations
from math import factorial

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from liouvsim import young
from liouvsim.errors import ConfigError


def brute_force_dim(p):
    """Count standard fillings directly: chains () -> p in the lattice."""
    if not p:
        return 1
    return sum(brute_force_dim(r) for r in young.restrict(p))


def test_restrict_examples():
    assert set(young.restrict((2, 1))) == {(1, 1), (2,)}
    assert young.restrict((1,)) == [()]
    assert young.restrict((2, 2)) == [(2, 1)]
    assert young.restrict(()) == []


def test_induce_examples():
    assert young.induce(()) == [(1,)]
    assert set(young.induce((1,))) == {(2,), (1, 1)}
    assert set(young.induce((2, 1))) == {(3, 1), (2, 2), (2, 1, 1)}


def test_hook_dim_examples():
    assert young.hook_dim((2, 1)) == 2
    assert young.hook_dim((3, 1)) == 3
    for n in range(1, 9):
        assert young.hook_dim((n,)) == 1
        assert young.hook_dim((1,) * n) == 1


def test_hook_dim_matches_lattice_path_count():
    for n in range(9):
        for p in young.lattice_level(n):
            assert young.hook_dim(p) == brute_force_dim(p)


def test_lattice_level_counts_and_truncation():
    assert len(young.lattice_level(4)) == 5
    assert set(young.lattice_level(3, max_rows=2)) == {(3,), (2, 1)}
    assert young.lattice_level(0) == [()]
    # box truncation: partitions of 6 inside a 3x3 box
    boxed = young.lattice_level(6, max_rows=3, max_cols=3)
    assert set(boxed) == {(3, 3), (3, 2, 1), (2, 2, 2)}


def test_check_branching_sum_examples():
    assert young.check_branching_sum((1,)) == (2, 2)
    assert young.check_branching_sum(()) == (1, 1)
    assert young.check_branching_sum((2, 1)) == (8, 8)


def test_branching_sums_exhaustive_to_ten():
    for n in range(11):
        for p in young.lattice_level(n):
            lhs, rhs = young.check_branching_sum(p)
            assert lhs == rhs, p
            if n:
                assert young.hook_dim(p) == sum(
                    young.hook_dim(r) for r in young.restrict(p)
                ), p


def test_completeness_sum_of_squares():
    for n in range(11):
        assert sum(young.hook_dim(p) ** 2 for p in young.lattice_level(n)) == factorial(n)


def test_restrict_induce_adjoint():
    for n in range(9):
        for p in young.lattice_level(n):
            for q in young.induce(p):
                assert p in young.restrict(q)
            for r in young.restrict(p):
                assert p in young.induce(r)


def test_conjugate_involution_and_dim_invariance():
    for n in range(9):
        for p in young.lattice_level(n):
            assert young.conjugate(young.conjugate(p)) == p
            assert young.hook_dim(young.conjugate(p)) == young.hook_dim(p)


def test_rejects_bad_partitions():
    with pytest.raises(ConfigError):
        young.restrict((1, 2))
    with pytest.raises(ConfigError):
        young.hook_dim((2, 0))
    with pytest.raises(ConfigError):
        young.lattice_level(-1)


@st.composite
def partitions(draw, max_n=12):
    n = draw(st.integers(0, max_n))
    parts = []
    remaining = n
    largest = n
    while remaining:
        k = draw(st.integers(1, min(largest, remaining)))
        parts.append(k)
        largest = k
        remaining -= k
    return tuple(parts)


@settings(max_examples=80, deadline=None)
@given(partitions())
def test_branch_sets_are_distinct_and_adjacent(p):
    down = young.restrict(p)
    up = young.induce(p)
    assert len(set(down)) == len(down)
    assert len(set(up)) == len(up)
    assert all(sum(q) == sum(p) - 1 for q in down)
    assert all(sum(q) == sum(p) + 1 for q in up)
    # number of addable boxes exceeds removable boxes by exactly one
    assert len(up) == len(down) + 1


@settings(max_examples=40, deadline=None)
@given(partitions(max_n=9))
def test_dim_counts_standard_fillings(p):
    assert young.hook_dim(p) == brute_force_dim(p)


def test_dim_equals_permutation_count_small():
    """dim^2 summed over shapes counts permutations (RSK), n <= 5."""
    for n in range(1, 6):
        total = sum(young.hook_dim(p) ** 2 for p in young.lattice_level(n))
        assert total == len(list(permutations(range(n))))
