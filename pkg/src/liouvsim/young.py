"""Integer-partition combinatorics: diagrams, branching, hook lengths.

Partitions are weakly decreasing tuples of positive integers; () is the
unique partition of 0.  Removing/adding one box gives the restriction and
induction branch sets; dimensions come from the hook length formula.
All arithmetic is exact (Python integers).
"""

from __future__ import annotations

from functools import lru_cache
from math import factorial

from .errors import ConfigError

Partition = tuple


def check_partition(parts) -> Partition:
    """Validate and normalize a partition to a tuple."""
    p = tuple(int(k) for k in parts)
    if any(k < 1 for k in p):
        raise ConfigError(f"partition parts must be positive, got {p}")
    if any(p[i] < p[i + 1] for i in range(len(p) - 1)):
        raise ConfigError(f"partition must be weakly decreasing, got {p}")
    return p


def restrict(p) -> list[Partition]:
    """All partitions reachable by removing one removable box."""
    p = check_partition(p)
    out = []
    for i in range(len(p)):
        if i == len(p) - 1 or p[i] > p[i + 1]:
            q = p[:i] + (p[i] - 1,) + p[i + 1:]
            out.append(tuple(k for k in q if k))
    return out


def induce(p) -> list[Partition]:
    """All partitions reachable by adding one addable box."""
    p = check_partition(p)
    out = [(p[0] + 1,) + p[1:]] if p else [(1,)]
    for i in range(1, len(p)):
        if p[i] < p[i - 1]:
            out.append(p[:i] + (p[i] + 1,) + p[i + 1:])
    if p:
        out.append(p + (1,))
    return out


def conjugate(p) -> Partition:
    """Transpose of the diagram."""
    p = check_partition(p)
    if not p:
        return ()
    return tuple(sum(1 for k in p if k > j) for j in range(p[0]))


@lru_cache(maxsize=None)
def hook_dim(p) -> int:
    """Number of standard tableaux: n! / product of hook lengths."""
    p = check_partition(p)
    n = sum(p)
    conj = conjugate(p)
    hooks = 1
    for i, row in enumerate(p):
        for j in range(row):
            hooks *= row - j + conj[j] - i - 1
    return factorial(n) // hooks


def lattice_level(n, max_rows=None, max_cols=None) -> list[Partition]:
    """All partitions of n with <= max_rows parts, each <= max_cols."""
    if n < 0:
        raise ConfigError(f"level must be nonnegative, got {n}")
    rows = n if max_rows is None else min(max_rows, n)
    cols = n if max_cols is None else min(max_cols, n)

    def gen(remaining, largest, slots):
        if remaining == 0:
            yield ()
            return
        if slots == 0:
            return
        for k in range(min(remaining, largest), 0, -1):
            for rest in gen(remaining - k, k, slots - 1):
                yield (k,) + rest

    return list(gen(n, cols, rows))


def check_branching_sum(p) -> tuple[int, int]:
    """Both sides of the induction sum rule at n = |p| + 1.

    Returns ``(n * hook_dim(p), sum of hook_dim over induce(p))``; the
    branching identity says the two are equal.
    """
    p = check_partition(p)
    n = sum(p) + 1
    return n * hook_dim(p), sum(hook_dim(q) for q in induce(p))
