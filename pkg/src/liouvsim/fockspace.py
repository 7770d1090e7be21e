"""N-fermion Fock space on an L-site chain.

Basis states are L-bit occupation masks (bit j-1 = site j, sites numbered
1..L) listed in ascending integer order.  Fermionic signs follow the
ascending-site operator ordering, so a hop c_i^dag c_j picks up
(-1)^(number of occupied sites strictly between i and j); nearest-neighbor
hops are sign-free.

The module also translates between occupation masks and the excitation
labels [k_Ne, ..., k_1]: with occupied sites s_1 < ... < s_N, the label
parts are k_i = s_(N+1-i) - (N+1-i) with zeros dropped, and the tilt
eigenvalue is B = sum_j s_j = sum_i k_i + N(N+1)/2.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb

import numpy as np
from scipy import sparse

from .errors import ConfigError, DimensionCapError

BASIS_CAP = 10**6

OPEN = "open"
PERIODIC = "periodic"


@dataclass(frozen=True)
class LatticeSpec:
    """Chain geometry: length L, particle number N, boundary condition."""

    L: int
    N: int
    boundary: str = OPEN

    def __post_init__(self):
        if self.L < 1:
            raise ConfigError(f"need at least one site, got L={self.L}")
        if not 0 <= self.N <= self.L:
            raise ConfigError(f"need 0 <= N <= L, got N={self.N}, L={self.L}")
        if self.boundary not in (OPEN, PERIODIC):
            raise ConfigError(f"unknown boundary {self.boundary!r}")

    @property
    def dim(self) -> int:
        return comb(self.L, self.N)


@dataclass(frozen=True)
class FockBasis:
    """Enumerated N-particle masks plus the inverse index map."""

    spec: LatticeSpec
    states: np.ndarray                      # int64 masks, ascending
    index: dict = field(repr=False)         # mask -> position

    @property
    def dim(self) -> int:
        return len(self.states)


def build_basis(spec: LatticeSpec, cap: int = BASIS_CAP) -> FockBasis:
    """Enumerate all C(L, N) occupation masks in ascending order."""
    if spec.dim > cap:
        raise DimensionCapError(
            f"basis dimension C({spec.L},{spec.N}) = {spec.dim} exceeds cap {cap}"
        )
    masks = []
    state = (1 << spec.N) - 1
    limit = 1 << spec.L
    if spec.N == 0:
        masks.append(0)
    else:
        while state < limit:
            masks.append(state)
            # Gosper's hack: next integer with the same popcount
            c = state & -state
            r = state + c
            state = (((r ^ state) >> 2) // c) | r
    states = np.array(masks, dtype=np.int64)
    return FockBasis(spec, states, {int(m): i for i, m in enumerate(states)})


def _hop_sign(mask: int, i: int, j: int) -> int:
    """Sign of c_i^dag c_j on `mask`: parity of occupation strictly between."""
    lo, hi = (i, j) if i < j else (j, i)
    between = mask & (((1 << (hi - 1)) - 1) ^ ((1 << lo) - 1))
    return -1 if bin(between).count("1") % 2 else 1


def hop_matrix(basis: FockBasis, i: int, j: int) -> sparse.csr_matrix:
    """Sparse matrix of c_i^dag c_j (1-based sites) on the N-particle basis."""
    L = basis.spec.L
    if not (1 <= i <= L and 1 <= j <= L):
        raise ConfigError(f"sites must lie in 1..{L}, got ({i}, {j})")
    rows, cols, vals = [], [], []
    bi, bj = 1 << (i - 1), 1 << (j - 1)
    for col, m in enumerate(basis.states):
        m = int(m)
        if not m & bj:
            continue
        if i == j:
            rows.append(col)
            cols.append(col)
            vals.append(1.0)
            continue
        if m & bi:
            continue
        rows.append(basis.index[(m ^ bj) | bi])
        cols.append(col)
        vals.append(float(_hop_sign(m, i, j)))
    return sparse.csr_matrix(
        (vals, (rows, cols)), shape=(basis.dim, basis.dim), dtype=complex
    )


def K_matrix(basis: FockBasis) -> sparse.csr_matrix:
    """Collective hop toward site 1: K = sum_j c_j^dag c_(j+1) (+ wrap if periodic)."""
    L = basis.spec.L
    K = sparse.csr_matrix((basis.dim, basis.dim), dtype=complex)
    for j in range(1, L):
        K = K + hop_matrix(basis, j, j + 1)
    if basis.spec.boundary == PERIODIC and L > 1:
        K = K + hop_matrix(basis, L, 1)
    return sparse.csr_matrix(K)


def B_matrix(basis: FockBasis) -> sparse.csr_matrix:
    """Tilt generator B = sum_j j * n_j (diagonal)."""
    diag = np.array([_site_sum(int(m)) for m in basis.states], dtype=float)
    return sparse.diags(diag.astype(complex)).tocsr()


def number_matrix(basis: FockBasis, j: int) -> sparse.csr_matrix:
    """Number operator n_j (diagonal 0/1)."""
    return hop_matrix(basis, j, j)


def _site_sum(mask: int) -> int:
    total = 0
    j = 1
    while mask:
        if mask & 1:
            total += j
        mask >>= 1
        j += 1
    return total


def occupied_sites(mask: int) -> tuple[int, ...]:
    """Ascending 1-based site indices set in `mask`."""
    sites = []
    j = 1
    while mask:
        if mask & 1:
            sites.append(j)
        mask >>= 1
        j += 1
    return tuple(sites)


def excitation_of(basis: FockBasis, mask: int) -> tuple[tuple[int, ...], int]:
    """Excitation label and B-eigenvalue of a basis mask.

    Returns ``(parts, B)`` where ``parts = (k_1, k_2, ...)`` is weakly
    decreasing with zeros dropped.
    """
    if int(mask) not in basis.index:
        raise ConfigError(f"mask {mask:#x} not in basis")
    N = basis.spec.N
    sites = occupied_sites(int(mask))
    parts = []
    for i in range(1, N + 1):
        k = sites[N - i] - (N + 1 - i)
        if k == 0:
            break
        parts.append(k)
    return tuple(parts), sum(sites)


def mask_of_label(spec: LatticeSpec, parts: tuple[int, ...]) -> int:
    """Inverse of :func:`excitation_of`: occupation mask of a label."""
    N = spec.N
    if len(parts) > N:
        raise ConfigError(f"label {parts} has more than N={N} parts")
    if any(parts[i] < parts[i + 1] for i in range(len(parts) - 1)):
        raise ConfigError(f"label {parts} is not weakly decreasing")
    if parts and (parts[0] > spec.L - N or parts[-1] < 1):
        raise ConfigError(f"label {parts} does not fit on L={spec.L}, N={N}")
    mask = 0
    for i, k in enumerate(parts, start=1):
        mask |= 1 << (k + (N + 1 - i) - 1)
    for s in range(1, N - len(parts) + 1):
        mask |= 1 << (s - 1)
    return mask


def basis_vector(basis: FockBasis, parts: tuple[int, ...]) -> np.ndarray:
    """Unit vector of the excitation-label basis state."""
    v = np.zeros(basis.dim, dtype=complex)
    v[basis.index[mask_of_label(basis.spec, parts)]] = 1.0
    return v


def apply_K(basis: FockBasis, vec: np.ndarray) -> np.ndarray:
    """Matrix-free K |vec>: move one fermion one site toward site 1."""
    return _apply_hops(basis, vec, lower=True)


def apply_Kdag(basis: FockBasis, vec: np.ndarray) -> np.ndarray:
    """Matrix-free K^dag |vec>: move one fermion one site toward site L."""
    return _apply_hops(basis, vec, lower=False)


def _apply_hops(basis: FockBasis, vec: np.ndarray, lower: bool) -> np.ndarray:
    L = basis.spec.L
    out = np.zeros_like(vec, dtype=complex)
    index = basis.index
    for pos, m in enumerate(basis.states):
        a = vec[pos]
        if a == 0:
            continue
        m = int(m)
        for j in range(1, L):
            # K term c_j^dag c_(j+1); adjoint is c_(j+1)^dag c_j
            src, dst = (j + 1, j) if lower else (j, j + 1)
            bs, bd = 1 << (src - 1), 1 << (dst - 1)
            if m & bs and not m & bd:
                out[index[(m ^ bs) | bd]] += a
        if basis.spec.boundary == PERIODIC and L > 1:
            src, dst = (1, L) if lower else (L, 1)
            bs, bd = 1 << (src - 1), 1 << (dst - 1)
            if m & bs and not m & bd:
                out[index[(m ^ bs) | bd]] += a * _hop_sign(m, dst, src)
    return out
