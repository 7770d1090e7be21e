"""Spectral analysis of vectorized Liouvillians.

Sector blocks are the workhorse: at s = 0 the Liouvillian is block
diagonal over coherence charge, so dense eigensolvers on the blocks
cover lattices whose full superoperator would be out of reach.  The
full-space path handles charge-coupled problems below a dense cap, and
a shift-inverted Arnoldi path targets modes near a chosen point for
anything larger.  Every reported eigenpair is residual-checked.
"""

import json
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse.linalg as spla

from .errors import ConfigError, DimensionCapError, NumericalError
from .liouville import SectorDecomposition, Superoperator

BLOCK_CAP = 4096
FULL_CAP = 6000
TOL_DISSIPATIVE = 1e-9


@dataclass(frozen=True)
class SpectrumEntry:
    """One eigenvalue in units of gamma, optionally tagged and vectored."""

    value: complex
    f: int | None = None
    vector: np.ndarray | None = field(default=None, repr=False, compare=False)


@dataclass(frozen=True)
class SpectrumResult:
    entries: tuple

    @property
    def values(self) -> np.ndarray:
        return np.array([e.value for e in self.entries], dtype=complex)

    def in_sector(self, f: int) -> "SpectrumResult":
        return SpectrumResult(tuple(e for e in self.entries if e.f == f))

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class LadderEntry:
    """Weakly dissipative mode associated with the rung at -i*delta*f."""

    f: int
    value: complex
    gap: float
    shift: float


@dataclass(frozen=True)
class ImaginaryLadder:
    entries: tuple
    missing: tuple

    def entry(self, f: int) -> LadderEntry:
        for e in self.entries:
            if e.f == f:
                return e
        raise KeyError(f"no ladder entry for f={f}")


def _check_dissipative(values: np.ndarray, tol: float) -> None:
    worst = float(np.max(values.real)) if len(values) else 0.0
    if worst > tol:
        raise NumericalError(
            f"eigenvalue with Re = {worst:.3e} above dissipative tolerance {tol:.1e}"
        )


def _sorted_entries(entries) -> tuple:
    return tuple(
        sorted(
            entries,
            key=lambda e: (
                e.f if e.f is not None else 0,
                e.value.real,
                e.value.imag,
            ),
        )
    )


def sector_eig(
    decomp: SectorDecomposition,
    f: int,
    want_vectors: bool = False,
    block_cap: int = BLOCK_CAP,
):
    """Dense eigendecomposition of one charge block.

    Returns (values, vectors or None, block index array); vectors are
    columns in the block's own coordinates.
    """
    if decomp.matrix is None:
        raise ConfigError("sector decomposition carries no matrix")
    idx = decomp.block_indices(f)
    if len(idx) > block_cap:
        raise DimensionCapError(
            f"sector f={f} has dimension {len(idx)} > {block_cap}; "
            "use shift_invert_modes for targeted eigenvalues instead"
        )
    block = decomp.matrix[idx][:, idx].toarray()
    if want_vectors:
        w, v = np.linalg.eig(block)
        return w, v, idx
    return np.linalg.eigvals(block), None, idx


def eig_sectorwise(
    decomp: SectorDecomposition,
    want_vectors: bool = False,
    block_cap: int = BLOCK_CAP,
    tol_dissipative: float = TOL_DISSIPATIVE,
) -> SpectrumResult:
    """Union of dense block spectra, each eigenvalue tagged with its f."""
    entries = []
    d2 = decomp.d * decomp.d
    for f in sorted(decomp.charges):
        w, v, idx = sector_eig(decomp, f, want_vectors, block_cap)
        for i in range(len(w)):
            vec = None
            if want_vectors:
                vec = np.zeros(d2, dtype=complex)
                vec[idx] = v[:, i]
            entries.append(SpectrumEntry(complex(w[i]), int(f), vec))
    result = SpectrumResult(_sorted_entries(entries))
    _check_dissipative(result.values, tol_dissipative)
    return result


def eig_full(
    superop: Superoperator,
    want_vectors: bool = False,
    cap: int = FULL_CAP,
    tol_dissipative: float = TOL_DISSIPATIVE,
) -> SpectrumResult:
    """Dense spectrum of the full superoperator (charge-coupled case)."""
    n = superop.matrix.shape[0]
    if n > cap:
        raise DimensionCapError(
            f"superoperator dimension {n} > {cap}; "
            "use shift_invert_modes or the perturbative estimator"
        )
    dense = superop.matrix.toarray()
    if want_vectors:
        w, v = np.linalg.eig(dense)
        entries = [
            SpectrumEntry(complex(w[i]), None, v[:, i]) for i in range(len(w))
        ]
    else:
        w = np.linalg.eigvals(dense)
        entries = [SpectrumEntry(complex(val), None) for val in w]
    result = SpectrumResult(_sorted_entries(entries))
    _check_dissipative(result.values, tol_dissipative)
    return result


def shift_invert_modes(
    superop: Superoperator,
    sigma: complex,
    k: int,
    residual_tol: float | None = TOL_DISSIPATIVE,
) -> SpectrumResult:
    """k eigenpairs nearest sigma via shift-inverted Arnoldi.

    Deterministic (fixed start vector), and every returned pair is
    residual-verified against the sparse operator.  Pass
    residual_tol=None to skip the blanket gate when only a subset of the
    returned pairs matters; callers then verify the pairs they keep
    (Ritz pairs far from sigma converge last and may be loose).
    """
    matrix = superop.matrix.tocsc()
    n = matrix.shape[0]
    if k < 1:
        raise ConfigError(f"need k >= 1, got {k}")
    if k >= n - 1:
        raise ConfigError(
            f"k={k} too large for dimension {n}; use a dense eigensolver"
        )
    v0 = np.full(n, 1.0 / np.sqrt(n))
    w, v = spla.eigs(matrix, k=k, sigma=sigma, which="LM", v0=v0)
    entries = []
    for i in range(len(w)):
        vec = v[:, i]
        if residual_tol is not None:
            res = np.linalg.norm(matrix @ vec - w[i] * vec) / np.linalg.norm(vec)
            if res > residual_tol:
                raise NumericalError(
                    f"eigenpair residual {res:.3e} above {residual_tol:.1e} "
                    f"near sigma={sigma}"
                )
        entries.append(SpectrumEntry(complex(w[i]), None, vec))
    return SpectrumResult(_sorted_entries(entries))


def verify_residuals(superop: Superoperator, result: SpectrumResult) -> float:
    """Worst relative eigen-residual over entries that carry vectors."""
    worst = 0.0
    for e in result.entries:
        if e.vector is None:
            continue
        res = np.linalg.norm(superop.matrix @ e.vector - e.value * e.vector)
        worst = max(worst, float(res / np.linalg.norm(e.vector)))
    return worst


def imaginary_ladder(
    spectrum: SpectrumResult, delta: float, f_max: int, tie_tol: float = 1e-9
) -> ImaginaryLadder:
    """Associate each rung -i*delta*f, |f| <= f_max, with its nearest mode.

    Tagged spectra restrict candidates to the matching sector; untagged
    spectra compete globally.  Candidates within tie_tol of the minimal
    |Im lambda + delta f| count as tied, and ties break toward the larger
    real part (the more weakly dissipative mode).  Rungs with no
    candidates are reported in `missing`.
    """
    tagged = any(e.f is not None for e in spectrum.entries)
    entries = []
    missing = []
    for f in range(-f_max, f_max + 1):
        if tagged:
            candidates = [e for e in spectrum.entries if e.f == f]
        else:
            candidates = list(spectrum.entries)
        if not candidates:
            missing.append(f)
            continue
        nearest = min(abs(e.value.imag + delta * f) for e in candidates)
        tied = [
            e
            for e in candidates
            if abs(e.value.imag + delta * f) <= nearest + tie_tol
        ]
        best = max(
            tied,
            key=lambda e: (e.value.real, -abs(e.value.imag + delta * f)),
        )
        entries.append(
            LadderEntry(
                f=f,
                value=best.value,
                gap=-best.value.real,
                shift=best.value.imag + delta * f,
            )
        )
    return ImaginaryLadder(tuple(entries), tuple(missing))


def _hermitian_basis(vectors: list, d: int, tol: float = 1e-9) -> list:
    """Real-orthonormal Hermitian basis spanning the kernel, trace-normalized
    where the trace survives."""
    candidates = []
    for vec in vectors:
        rho = vec.reshape(d, d)
        candidates.append((rho + rho.conj().T) / 2)
        candidates.append((rho - rho.conj().T) / 2j)
    if not candidates:
        return []
    flat = np.array([c.ravel() for c in candidates])
    # Hermitian matrices form a real vector space; orthonormalize over it.
    real_rows = np.hstack([flat.real, flat.imag])
    _, svals, vt = np.linalg.svd(real_rows, full_matrices=False)
    rank = int(np.sum(svals > tol * svals[0]))
    out = []
    for i in range(rank):
        row = vt[i]
        mat = (row[: d * d] + 1j * row[d * d :]).reshape(d, d)
        mat = (mat + mat.conj().T) / 2
        tr = np.trace(mat).real
        if abs(tr) > tol:
            mat = mat / tr
        else:
            mat = mat / np.linalg.norm(mat)
        out.append(mat)
    return out


def steady_states(
    target,
    tol: float = TOL_DISSIPATIVE,
    block_cap: int = BLOCK_CAP,
    full_cap: int = FULL_CAP,
) -> list:
    """Kernel of the Liouvillian as Hermitian matrices.

    Accepts either a sector decomposition (preferred; blocks stay small)
    or a full superoperator.  Combinations are normalized to unit trace
    when the trace is nonzero, else to unit Frobenius norm.
    """
    vectors = []
    if isinstance(target, SectorDecomposition):
        d = target.d
        spectrum = eig_sectorwise(target, want_vectors=True, block_cap=block_cap)
    else:
        d = target.d
        spectrum = eig_full(target, want_vectors=True, cap=full_cap)
    for e in spectrum.entries:
        if abs(e.value) <= tol:
            vectors.append(e.vector)
    return _hermitian_basis(vectors, d)


def spectrum_to_csv(result: SpectrumResult) -> str:
    """Deterministic CSV: columns re,im,f (f empty when untagged)."""
    lines = ["re,im,f"]
    for e in result.entries:
        f_str = "" if e.f is None else str(e.f)
        lines.append(f"{e.value.real!r},{e.value.imag!r},{f_str}")
    return "\n".join(lines) + "\n"


def spectrum_to_json(result: SpectrumResult, metadata: dict | None = None) -> str:
    """JSON mirror of the CSV payload plus run metadata."""
    payload = {
        "metadata": dict(metadata or {}),
        "eigenvalues": [
            {"re": e.value.real, "im": e.value.imag, "f": e.f}
            for e in result.entries
        ],
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def ladder_to_csv(ladder: ImaginaryLadder) -> str:
    """Deterministic CSV for ladder entries: f,re,im,gap,shift."""
    lines = ["f,re,im,gap,shift"]
    for e in ladder.entries:
        lines.append(
            f"{e.f},{e.value.real!r},{e.value.imag!r},{e.gap!r},{e.shift!r}"
        )
    return "\n".join(lines) + "\n"
