"""Vectorized Liouvillian superoperators and U(1) sector decompositions.

Density matrices vectorize row-major, |i><j| -> i*d + j, so left/right
multiplication become A (x) I and I (x) B^T and the master equation

    d rho/dt = -i[H, rho] + sum_mu gamma_mu (2 K_mu rho K_mu^dag
               - K_mu^dag K_mu rho - rho K_mu^dag K_mu)

turns into the sparse matrix

    -i (H (x) I - I (x) H^T)
    + sum_mu gamma_mu (2 K_mu (x) conj(K_mu) - K_mu^dag K_mu (x) I
                       - I (x) (K_mu^dag K_mu)^T).

The fermion model conserves the tilt charge f = B_left - B_right at s=0,
which splits the superoperator into 2N(L-N)+1 diagonal blocks; the
symmetry-breaking hop couples blocks with |f_i - f_j| = 1 only.  Under a
periodic boundary the wrap hop conserves only f mod L.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.linalg import expm

from . import fockspace as fs
from .errors import ConfigError, DimensionCapError

SPIN_SITE_CAP = 12
DUMP_MAGIC = b"LVSO"
DUMP_VERSION = 1


@dataclass(frozen=True)
class FermionModelParams:
    """Tilted-lattice model: H = gamma K^dag K + delta B + s (K + K^dag)."""

    spec: fs.LatticeSpec
    gamma: float = 1.0
    delta: float = 0.0
    s: float = 0.0

    def __post_init__(self):
        if self.gamma <= 0:
            raise ConfigError(f"gamma must be positive, got {self.gamma}")


@dataclass(frozen=True)
class SpinModelParams:
    """Facilitated spin ring: N sites, interaction U, dissipation gamma."""

    N: int
    U: float = 1.0
    gamma: float = 1.0

    def __post_init__(self):
        if self.N < 3:
            raise ConfigError(f"spin ring needs N >= 3, got {self.N}")
        if self.gamma <= 0:
            raise ConfigError(f"gamma must be positive, got {self.gamma}")


@dataclass(frozen=True)
class SectorDecomposition:
    """Charge labels and vectorized-index sets of the diagonal blocks."""

    d: int
    charges: tuple                      # sorted sector labels
    indices: dict = field(repr=False)   # charge -> int array into the d^2 space
    charge_of: np.ndarray = field(repr=False)  # per vec index
    reduced_mod: int | None = None      # L when charges live in Z_L (periodic)
    matrix: sparse.csr_matrix | None = field(default=None, repr=False)

    def block_indices(self, f):
        if f not in self.indices:
            raise ConfigError(f"no sector with charge {f}")
        return self.indices[f]

    def with_matrix(self, matrix) -> "SectorDecomposition":
        return SectorDecomposition(
            self.d, self.charges, self.indices, self.charge_of,
            self.reduced_mod, sparse.csr_matrix(matrix),
        )


@dataclass(frozen=True)
class Superoperator:
    """Sparse Liouvillian with optional sector metadata."""

    matrix: sparse.csr_matrix
    d: int
    sectors: SectorDecomposition | None = None

    @property
    def dim(self) -> int:
        return self.d * self.d


def vectorize(rho: np.ndarray) -> np.ndarray:
    return np.asarray(rho, dtype=complex).reshape(-1)

def unvectorize(v: np.ndarray, d: int) -> np.ndarray:
    return np.asarray(v, dtype=complex).reshape(d, d)


def lindblad_matrix(H, jumps) -> sparse.csr_matrix:
    """Assemble the vectorized generator from H and (rate, K) pairs."""
    H = sparse.csr_matrix(H)
    d = H.shape[0]
    eye = sparse.identity(d, dtype=complex, format="csr")
    L = -1j * (sparse.kron(H, eye) - sparse.kron(eye, H.T))
    for rate, K in jumps:
        K = sparse.csr_matrix(K)
        KdK = (K.conj().T @ K).tocsr()
        L = L + rate * (
            2.0 * sparse.kron(K, K.conj())
            - sparse.kron(KdK, eye)
            - sparse.kron(eye, KdK.T)
        )
    return sparse.csr_matrix(L)


def charge_sectors(basis: fs.FockBasis) -> SectorDecomposition:
    """Group vectorized indices by f = B_left - B_right (mod L if periodic)."""
    d = basis.dim
    B = np.array([fs.excitation_of(basis, int(m))[1] for m in basis.states])
    f_grid = B[:, None] - B[None, :]
    mod = None
    if basis.spec.boundary == fs.PERIODIC:
        mod = basis.spec.L
        f_grid = np.mod(f_grid, mod)
    flat = f_grid.reshape(-1)
    charges = tuple(sorted(set(int(f) for f in flat)))
    indices = {f: np.flatnonzero(flat == f) for f in charges}
    return SectorDecomposition(d, charges, indices, flat, mod)


def build_fermion_liouvillian(
    params: FermionModelParams, cap: int = fs.BASIS_CAP
) -> tuple[Superoperator, SectorDecomposition]:
    """Sparse Liouvillian of the tilted-lattice model plus its sectors."""
    basis = fs.build_basis(params.spec, cap=cap)
    K = fs.K_matrix(basis)
    B = fs.B_matrix(basis)
    H = params.gamma * (K.conj().T @ K) + params.delta * B
    if params.s:
        H = H + params.s * (K + K.conj().T)
    L = lindblad_matrix(H, [(params.gamma, K)])
    decomp = charge_sectors(basis).with_matrix(L)
    return Superoperator(L, basis.dim, decomp), decomp


def breaking_superoperator(basis: fs.FockBasis) -> sparse.csr_matrix:
    """Unit-strength coherent perturbation -i[K + K^dag, .]."""
    K = fs.K_matrix(basis)
    V = (K + K.conj().T).tocsr()
    eye = sparse.identity(basis.dim, dtype=complex, format="csr")
    return sparse.csr_matrix(-1j * (sparse.kron(V, eye) - sparse.kron(eye, V.T)))


def _spin_site_op(N: int, j: int, op: np.ndarray) -> sparse.csr_matrix:
    """Operator on ring site j (1-based, bit j-1; site 1 is the LSB)."""
    j = (j - 1) % N + 1
    out = sparse.identity(1, dtype=complex, format="csr")
    for site in range(N, 0, -1):
        factor = sparse.csr_matrix(op) if site == j else sparse.identity(
            2, dtype=complex, format="csr"
        )
        out = sparse.kron(out, factor, format="csr")
    return out


def spin_up_pair_count(N: int) -> np.ndarray:
    """Adjacent up-up pair count per computational basis state (ring)."""
    counts = np.zeros(2**N, dtype=int)
    for m in range(2**N):
        counts[m] = sum(
            1 for j in range(N) if m >> j & 1 and m >> ((j + 1) % N) & 1
        )
    return counts


def build_spin_liouvillian(params: SpinModelParams) -> Superoperator:
    """Facilitated spin ring, operators taken as printed.

    H = (U/4) sum_j (sigma^z_j + 1)(sigma^z_(j+1) + 1) counts adjacent
    up-up pairs; the jump operator L_j = (gamma/4)(1 - sigma^z_(j-1))
    sigma^+_j (1 - sigma^z_(j+1)) keeps its own gamma/4 prefactor while
    the dissipator carries rate gamma as well.
    """
    N = params.N
    if N > SPIN_SITE_CAP:
        raise DimensionCapError(f"spin ring capped at {SPIN_SITE_CAP} sites, got {N}")
    # basis index bit = 1 means spin up
    sz = np.diag([-1.0, 1.0])
    sp = np.array([[0.0, 0.0], [1.0, 0.0]])  # |up><down|
    eye2 = np.eye(2)
    H = sparse.csr_matrix((2**N, 2**N), dtype=complex)
    for j in range(1, N + 1):
        a = _spin_site_op(N, j, sz + eye2)
        b = _spin_site_op(N, j + 1, sz + eye2)
        H = H + (params.U / 4.0) * (a @ b)
    jumps = []
    for j in range(1, N + 1):
        left = _spin_site_op(N, j - 1, eye2 - sz)
        mid = _spin_site_op(N, j, sp)
        right = _spin_site_op(N, j + 1, eye2 - sz)
        jumps.append((params.gamma, (params.gamma / 4.0) * (left @ mid @ right)))
    L = lindblad_matrix(H, jumps)
    counts = spin_up_pair_count(N)
    f_grid = (counts[:, None] - counts[None, :]).reshape(-1)
    charges = tuple(sorted(set(int(f) for f in f_grid)))
    indices = {f: np.flatnonzero(f_grid == f) for f in charges}
    decomp = SectorDecomposition(2**N, charges, indices, f_grid, None, L)
    return Superoperator(L, 2**N, decomp)


def symmetry_superoperator(A, theta: float) -> sparse.csr_matrix:
    """Rotation superoperator exp(i theta A) . exp(-i theta A)."""
    A = sparse.csr_matrix(A)
    skew = A - A.conj().T
    if skew.nnz and np.max(np.abs(skew.tocoo().data)) > 1e-12:
        raise ConfigError("symmetry generator must be Hermitian")
    diag = A.diagonal()
    if A.count_nonzero() == np.count_nonzero(diag):
        U = sparse.diags(np.exp(1j * theta * diag)).tocsr()
    else:
        U = sparse.csr_matrix(expm(1j * theta * A.toarray()))
    return sparse.csr_matrix(sparse.kron(U, U.conj()))


def check_commutes(L, U) -> float:
    """Max-norm residual of [L, U] on the vectorized space."""
    L = sparse.csr_matrix(L)
    U = sparse.csr_matrix(U)
    C = (L @ U - U @ L).tocoo()
    return float(np.max(np.abs(C.data))) if C.nnz else 0.0


def sector_block(decomp: SectorDecomposition, f, matrix=None) -> np.ndarray:
    """Dense diagonal block for sector charge f."""
    idx = decomp.block_indices(f)
    mat = decomp.matrix if matrix is None else sparse.csr_matrix(matrix)
    if mat is None:
        raise ConfigError("decomposition carries no matrix; pass one explicitly")
    return np.asarray(mat[np.ix_(idx, idx)].todense())


def offdiagonal_block_norm(superop: Superoperator, max_hop: int) -> float:
    """Largest |entry| between sectors separated by more than `max_hop`."""
    decomp = superop.sectors
    if decomp is None:
        raise ConfigError("superoperator carries no sector metadata")
    C = superop.matrix.tocoo()
    fr = decomp.charge_of[C.row].astype(int)
    fc = decomp.charge_of[C.col].astype(int)
    if decomp.reduced_mod:
        m = decomp.reduced_mod
        dist = np.minimum((fr - fc) % m, (fc - fr) % m)
    else:
        dist = np.abs(fr - fc)
    outside = dist > max_hop
    return float(np.max(np.abs(C.data[outside]))) if outside.any() else 0.0


def trace_functional_residual(superop: Superoperator) -> float:
    """Max |(T L)_v| where T is the trace row functional."""
    d = superop.d
    diag_idx = np.arange(d) * d + np.arange(d)
    col_sums = np.asarray(superop.matrix[diag_idx, :].sum(axis=0)).ravel()
    return float(np.max(np.abs(col_sums)))


def write_superoperator(path, superop: Superoperator) -> None:
    """Binary dump: header (magic, version, d, nnz, f-range) + LE triplets."""
    C = superop.matrix.tocoo()
    if superop.sectors is not None:
        f_min = int(min(superop.sectors.charges))
        f_max = int(max(superop.sectors.charges))
    else:
        f_min = f_max = 0
    with open(path, "wb") as fh:
        fh.write(DUMP_MAGIC)
        fh.write(struct.pack("<IQQqq", DUMP_VERSION, superop.d, C.nnz, f_min, f_max))
        rows = np.asarray(C.row, dtype="<u8")
        cols = np.asarray(C.col, dtype="<u8")
        re = np.asarray(C.data.real, dtype="<f8")
        im = np.asarray(C.data.imag, dtype="<f8")
        rec = np.empty(C.nnz, dtype=[("r", "<u8"), ("c", "<u8"), ("re", "<f8"), ("im", "<f8")])
        rec["r"], rec["c"], rec["re"], rec["im"] = rows, cols, re, im
        fh.write(rec.tobytes())


def read_superoperator(path) -> Superoperator:
    """Read a binary dump written by :func:`write_superoperator`."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != DUMP_MAGIC:
            raise ConfigError(f"bad magic {magic!r} in {path}")
        version, d, nnz, _f_min, _f_max = struct.unpack("<IQQqq", fh.read(4 + 8 + 8 + 8 + 8))
        if version != DUMP_VERSION:
            raise ConfigError(f"unsupported dump version {version}")
        rec = np.frombuffer(
            fh.read(nnz * 32),
            dtype=[("r", "<u8"), ("c", "<u8"), ("re", "<f8"), ("im", "<f8")],
        )
    dsq = d * d
    mat = sparse.csr_matrix(
        (rec["re"] + 1j * rec["im"], (rec["r"].astype(np.int64), rec["c"].astype(np.int64))),
        shape=(dsq, dsq),
    )
    return Superoperator(mat, int(d), None)
