"""Perturbative dark-coherence modes and power-law gap fits.

A dark-state pair rho_0 = |D1><D2| seeds a series rho = rho_0 + sum_n
rho_n whose terms are tower outer products K^dag^j rho_0 K^(n-j) with
closed-form coefficients alpha_n^(j).  The series satisfies the order-by-
order recurrence up to the localization cutoff l, after which boundary
terms break the ladder and open a dissipative gap of order s^(2l+2).

Three gap estimators are provided.  `rayleigh` (Tr(rho^dag L rho) /
Tr(rho^dag rho)) and `trace` (the literal series pairing Tr(rho L[rho]))
are kept for reference: neither reproduces the size of the gap.  The
first saturates at order s^(2l) because the sesquilinear pairing weights
the residual linearly.  The second pairs the series with itself
bilinearly, and charge conservation makes every contributing trace
vanish identically once f exceeds the cutoff l (and Tr(rho rho) = 0 for
all f != 0, so it admits no normalization either).  The default
`series` method continues the perturbation series past the localization
cutoff with deflated sector resolvents and reads each order's eigenvalue
correction off the secular defect against the pair's dual left kernel
vector.  Every defect is an exact multiple of s^n, so the estimate's
leading behavior reproduces the gap exponent at any lattice size for the
cost of a few sparse solves.  Pairs sharing a localization cutoff split
at the same order, so their leading corrections come from a small
secular matrix over the class rather than diagonal defects alone;
couplings to pairs that split earlier are left in the reduced subspace
and shift coefficients by small factors without ever affecting
exponents.  Subspace (Rayleigh-Ritz) projection over enriched tower
bases was tried and rejected: near-degenerate same-f pairs leave the
compressed eigenvalues with residual-level errors that swamp deep
branches.
"""

import json
import math
from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import fockspace as fs
from .darkmodes import DarkState, enumerate_dark_states
from .errors import ConfigError, NumericalError
from .liouville import (
    FermionModelParams,
    breaking_superoperator,
    build_fermion_liouvillian,
)
from .spectra import shift_invert_modes

DEFAULT_GRID = tuple(np.logspace(-2.0, -1.5, 8))
NUMERIC_FLOOR = 1e-13
_SINGULAR_SHIFT = 1e-8


def alpha_coefficient(n: int, j: int, gamma: float, delta: float, s: float) -> complex:
    """Series coefficient alpha_n^(j) of the tower term K^dag^j rho_0 K^(n-j)."""
    if not 0 <= j <= n:
        raise ConfigError(f"need 0 <= j <= n, got j={j}, n={n}")
    a = (1 - 1j) * gamma - 1j * delta
    b = (1 + 1j) * gamma + 1j * delta
    return (
        1j ** (n - 2 * j)
        * s**n
        / (a ** (n - j) * b**j * math.factorial(n - j) * math.factorial(j))
    )


@dataclass(frozen=True)
class PerturbativeMode:
    """Truncated series mode for one dark-state pair."""

    d1: DarkState
    d2: DarkState
    params: FermionModelParams
    f: int
    l: int
    towers1: tuple  # (K^dag)^j |D1> for j = 0..l+1
    towers2: tuple
    density: np.ndarray  # rho_0 + sum_{n<=l} rho_n, with s inside alpha

    def alpha(self, n: int, j: int) -> complex:
        return alpha_coefficient(
            n, j, self.params.gamma, self.params.delta, self.params.s
        )

    def term_matrices(self, n: int) -> list:
        """[(j, alpha_n^(j), K^dag^j rho_0 K^(n-j))] for one order n."""
        if not 0 <= n <= self.l:
            raise ConfigError(f"order n={n} outside 0..{self.l}")
        out = []
        for j in range(n + 1):
            outer = np.outer(self.towers1[j], self.towers2[n - j].conj())
            out.append((j, self.alpha(n, j), outer))
        return out

    def order_matrix(self, n: int) -> np.ndarray:
        """rho_n as a dense matrix."""
        total = None
        for _, coeff, outer in self.term_matrices(n):
            total = coeff * outer if total is None else total + coeff * outer
        return total


def build_mode(
    d1: DarkState, d2: DarkState, params: FermionModelParams, l: int | None = None
) -> PerturbativeMode:
    """Assemble the series for a dark pair up to order l (default: its cutoff)."""
    if (d1.L, d1.N) != (d2.L, d2.N):
        raise ConfigError("dark states live on different lattices")
    spec = params.spec
    if (d1.L, d1.N) != (spec.L, spec.N):
        raise ConfigError("dark states do not match the model lattice")
    cutoff = min(d1.l, d2.l)
    if l is None:
        l = cutoff
    if l > cutoff:
        raise ConfigError(f"order l={l} exceeds pair cutoff {cutoff}")
    basis = fs.build_basis(spec)
    towers1 = [d1.vector.astype(complex)]
    towers2 = [d2.vector.astype(complex)]
    for _ in range(l + 1):
        towers1.append(fs.apply_Kdag(basis, towers1[-1]))
        towers2.append(fs.apply_Kdag(basis, towers2[-1]))
    f = d1.B - d2.B
    density = np.outer(towers1[0], towers2[0].conj())
    for n in range(1, l + 1):
        for j in range(n + 1):
            coeff = alpha_coefficient(n, j, params.gamma, params.delta, params.s)
            density = density + coeff * np.outer(
                towers1[j], towers2[n - j].conj()
            )
    return PerturbativeMode(
        d1=d1,
        d2=d2,
        params=params,
        f=f,
        l=l,
        towers1=tuple(towers1),
        towers2=tuple(towers2),
        density=density,
    )


class ModeWorkspace:
    """Shared operators for repeated mode evaluations on one lattice.

    Holds the s-independent split L = L0 + s L1, the charge decomposition,
    and cached sector factorizations, so sweeps pay the build cost once.
    """

    def __init__(self, params: FermionModelParams):
        self.params = params
        base = replace(params, s=0.0)
        superop0, decomp = build_fermion_liouvillian(base)
        self.basis = fs.build_basis(params.spec)
        self.L0 = superop0.matrix.tocsr()
        self.L1 = breaking_superoperator(self.basis)
        self.decomp = decomp
        self.d = decomp.d
        self._solvers = {}
        self._left = {}
        self._series = {}
        self._dark = None

    def liouvillian(self, s: float) -> sp.csr_matrix:
        return (self.L0 + s * self.L1).tocsr()

    def dark_states(self):
        if self._dark is None:
            self._dark = enumerate_dark_states(self.basis)
        return self._dark

    def rung_pairs(self, f: int) -> list:
        """All ordered dark-state pairs (d1, d2) with B1 - B2 = f."""
        dark = self.dark_states()
        return [(a, b) for a in dark for b in dark if a.B - b.B == f]

    def rung_modes(self, f: int, s: float) -> list[PerturbativeMode]:
        """Series modes for every pair at rung f, at coupling s."""
        run = replace(self.params, s=s)
        return [build_mode(a, b, run) for a, b in self.rung_pairs(f)]

    def _rung_outers(self, f: int) -> np.ndarray:
        """Raw dark-pair outer products at rung f, in sector-f coordinates.

        Columns follow the rung_pairs(f) ordering; each has unit norm
        because the dark vectors are normalized.
        """
        idx = self.decomp.block_indices(f)
        pos = {int(p): r for r, p in enumerate(idx)}
        cols = []
        for da, db in self.rung_pairs(f):
            vec = np.zeros(len(idx), dtype=complex)
            outer = np.outer(da.vector, db.vector.conj()).ravel()
            for p in np.flatnonzero(np.abs(outer) > 0):
                vec[pos[int(p)]] = outer[p]
            cols.append(vec)
        if not cols:
            return np.zeros((len(idx), 0), dtype=complex)
        return np.column_stack(cols)

    def _kernel_vectors(self, f: int) -> np.ndarray:
        """Orthonormal exact kernel of (L0 + i*delta*f) inside sector f."""
        raw = self._rung_outers(f)
        if raw.shape[1] == 0:
            return raw
        q, _ = np.linalg.qr(raw)
        return q

    def sector_solve(
        self, g: int, f: int, delta: float, rhs: np.ndarray, deflate: bool = True
    ):
        """Solve (L0|_g + i*delta*f) x = rhs inside sector g.

        The g = f block is singular on the dark-pair kernel; by default
        the right-hand side is deflated off it (orthogonal projection)
        and the solve regularized by a tiny shift.  Callers that have
        already removed the kernel eigencomponents with the oblique
        (biorthogonal) projector pass deflate=False: re-deflating
        orthogonally would put those components back, and the shift
        amplifies anything along the kernel by its reciprocal.
        """
        idx = self.decomp.block_indices(g)
        key = (g, f, delta)
        if key not in self._solvers:
            block = self.L0[idx][:, idx].tocsc()
            shift = 1j * delta * f
            if g == f:
                shift += _SINGULAR_SHIFT
            mat = (block + shift * sp.identity(len(idx), format="csc")).tocsc()
            kernel = self._kernel_vectors(g) if g == f else None
            self._solvers[key] = (spla.splu(mat), kernel)
        solver, kernel = self._solvers[key]
        if deflate and kernel is not None and kernel.shape[1]:
            rhs = rhs - kernel @ (kernel.conj().T @ rhs)
        return solver.solve(rhs)

    def _sector_solve_adjoint(
        self, f: int, rhs: np.ndarray, deflate: bool = True
    ) -> np.ndarray:
        """Solve (L0|_f + i*delta*f)^H x = rhs inside sector f.

        Reuses the forward factorization via a conjugate-transpose solve.
        With deflate=True the right-hand side is first projected off the
        forward kernel (the dark-pair outers), which adjoint solvability
        requires of a genuine range-side solve; inverse iteration passes
        deflate=False because its input deliberately carries kernel
        content and the regularizing shift keeps the solve well posed.
        """
        delta = self.params.delta
        self.sector_solve(f, f, delta, np.zeros(len(self.decomp.block_indices(f)), dtype=complex))
        solver, kernel = self._solvers[(f, f, delta)]
        if deflate and kernel is not None and kernel.shape[1]:
            rhs = rhs - kernel @ (kernel.conj().T @ rhs)
        return solver.solve(rhs, trans="H")

    def left_rung_basis(self, f: int) -> np.ndarray:
        """Dual left kernel vectors of (L0 + i*delta*f) on sector f.

        Column p is the left null vector biorthogonal to the dark-pair
        outer products: <w_p, rho_0^(q)> = delta_pq in the rung_pairs(f)
        ordering.  The kernel is found as a subspace: tower-ansatz seeds
        sum_j |t1_j><t2_j| / j! are refined by block inverse iteration
        with QR renormalization (one step contracts non-kernel content by
        the regularization-to-bulk-gap ratio), and the per-pair identity
        comes entirely from the dual construction, which stays well posed
        when several dark states share a level.
        """
        if f in self._left:
            return self._left[f]
        pairs = self.rung_pairs(f)
        if not pairs:
            raise ConfigError(f"no dark pairs at rung f={f}")
        idx = self.decomp.block_indices(f)
        delta = self.params.delta
        block = self.L0[idx][:, idx].tocsr()
        blockH = block.conj().T.tocsr()
        seeds = []
        for da, db in pairs:
            t1 = da.vector.astype(complex)
            t2 = db.vector.astype(complex)
            seed = np.outer(t1, t2.conj()).ravel()
            fact = 1.0
            for j in range(1, min(da.l, db.l) + 1):
                t1 = fs.apply_Kdag(self.basis, t1)
                t2 = fs.apply_Kdag(self.basis, t2)
                fact *= j
                seed = seed + np.outer(t1, t2.conj()).ravel() / fact
            seeds.append(seed[idx])
        W, _ = np.linalg.qr(np.column_stack(seeds))
        for _ in range(5):
            resid = blockH @ W - 1j * delta * f * W
            if np.linalg.norm(resid, axis=0).max() <= 1e-12:
                break
            W = np.column_stack(
                [
                    self._sector_solve_adjoint(f, W[:, c], deflate=False)
                    for c in range(W.shape[1])
                ]
            )
            W, _ = np.linalg.qr(W)
        resid = blockH @ W - 1j * delta * f * W
        worst = float(np.linalg.norm(resid, axis=0).max())
        if worst > 1e-10:
            raise NumericalError(
                f"left kernel refinement stalled at rung f={f} "
                f"(residual {worst:.2e})"
            )
        gram = W.conj().T @ self._rung_outers(f)
        if np.linalg.cond(gram) > 1e8:
            raise NumericalError(
                f"left/right rung bases nearly degenerate at f={f}"
            )
        self._left[f] = W @ np.linalg.inv(gram).conj().T
        return self._left[f]

def recurrence_residuals(
    mode: PerturbativeMode, workspace: ModeWorkspace | None = None
) -> list[float]:
    """Relative residual of L0[rho_n] + i*delta*f*rho_n + s*L1[rho_(n-1)]."""
    ws = workspace or ModeWorkspace(mode.params)
    delta, s, f = mode.params.delta, mode.params.s, mode.f
    out = []
    prev = mode.order_matrix(0).ravel()
    for n in range(1, mode.l + 1):
        curr = mode.order_matrix(n).ravel()
        lhs = ws.L0 @ curr + 1j * delta * f * curr + s * (ws.L1 @ prev)
        norm = np.linalg.norm(curr)
        if norm == 0:
            raise NumericalError(f"vanishing series term at order {n}")
        out.append(float(np.linalg.norm(lhs) / norm))
        prev = curr
    return out


def expansion_identity_residuals(
    mode: PerturbativeMode, n: int, workspace: ModeWorkspace | None = None
) -> tuple[float, float]:
    """Termwise checks of the two series expansion identities at order n.

    The first expands L0[rho_n] + i*delta*f*rho_n over tower terms; the
    second expands -s*L1[rho_(n-1)].  Both returned as relative residuals.
    """
    if not 1 <= n <= mode.l:
        raise ConfigError(f"order n={n} outside 1..{mode.l}")
    ws = workspace or ModeWorkspace(mode.params)
    delta, s, f = mode.params.delta, mode.params.s, mode.f
    gamma = mode.params.gamma

    def tower(nn, j):
        return np.outer(mode.towers1[j], mode.towers2[nn - j].conj())

    curr = mode.order_matrix(n).ravel()
    lhs0 = (ws.L0 @ curr + 1j * delta * f * curr).reshape(mode.density.shape)
    rhs0 = np.zeros_like(lhs0)
    for j in range(n + 1):
        coeff = (1j * gamma + 1j * delta) * (2 * j - n) + gamma * n
        rhs0 -= coeff * mode.alpha(n, j) * tower(n, j)
    for j in range(1, n):
        rhs0 += 2 * gamma * j * (n - j) * mode.alpha(n, j) * tower(n - 2, j - 1)
    scale0 = np.linalg.norm(rhs0) or 1.0
    res0 = float(np.linalg.norm(lhs0 - rhs0) / scale0)

    prev = mode.order_matrix(n - 1).ravel()
    lhs1 = (-s * (ws.L1 @ prev)).reshape(mode.density.shape)
    rhs1 = np.zeros_like(lhs1)
    for j in range(1, n + 1):
        rhs1 += 1j * s * mode.alpha(n - 1, j - 1) * tower(n, j)
    for j in range(n):
        rhs1 -= 1j * s * mode.alpha(n - 1, j) * tower(n, j)
    for j in range(1, n):
        rhs1 += (
            1j
            * s
            * (j * mode.alpha(n - 1, j) - (n - j) * mode.alpha(n - 1, j - 1))
            * tower(n - 2, j - 1)
        )
    scale1 = np.linalg.norm(rhs1) or 1.0
    res1 = float(np.linalg.norm(lhs1 - rhs1) / scale1)
    return res0, res1


def _pair_column(ws: ModeWorkspace, mode: PerturbativeMode) -> int:
    """Index of the mode's dark pair inside the rung_pairs ordering."""
    key = (mode.d1.B, mode.d1.components, mode.d2.B, mode.d2.components)
    for p, (da, db) in enumerate(ws.rung_pairs(mode.f)):
        if (da.B, da.components, db.B, db.components) == key:
            return p
    raise ConfigError("mode's dark pair is not on this workspace's lattice")


def _chain_defect_rows(ws: ModeWorkspace, f: int, p: int, s: float) -> np.ndarray:
    """Continued-series defect rows for the p-th dark pair at rung f.

    Runs the reduced chain seeded by the pair's outer product to order
    2l+2 and returns an (orders, npairs) array whose [n-1, q] entry is
    the order-n solvability defect against the q-th dual left kernel
    vector.  Column p holds the pair's own eigenvalue corrections; the
    final row doubles as the pair's column of the secular matrix over
    whatever class it splits with.
    """
    pairs = ws.rung_pairs(f)
    da, db = pairs[p]
    ell = min(da.l, db.l)
    delta = ws.params.delta
    dual = ws.left_rung_basis(f)
    outers = ws._rung_outers(f)
    idx_f = ws.decomp.block_indices(f)
    charges = sorted({int(c) for c in ws.decomp.charges})
    hist = [np.outer(da.vector, db.vector.conj()).ravel().astype(complex)]
    rows = []
    for n in range(1, 2 * ell + 3):
        rhs = -s * (ws.L1 @ hist[-1])
        for k, row in enumerate(rows, start=1):
            rhs += row[p] * hist[n - k]
        rows.append(-(dual.conj().T @ rhs[idx_f]))
        if n == 2 * ell + 2:
            break
        scale = np.linalg.norm(rhs)
        nxt = np.zeros_like(rhs)
        for g in charges:
            if abs(g - f) > n or (g - f - n) % 2:
                continue
            idx = ws.decomp.block_indices(g)
            part = rhs[idx]
            if np.linalg.norm(part) <= 1e-14 * scale:
                continue
            if g == f:
                part = part - outers @ (dual.conj().T @ part)
                sol = ws.sector_solve(g, f, delta, part, deflate=False)
                sol = sol - outers @ (dual.conj().T @ sol)
            else:
                sol = ws.sector_solve(g, f, delta, part)
            nxt[idx] = sol
        hist.append(nxt)
    return np.asarray(rows)


def series_defects(
    mode: PerturbativeMode, workspace: ModeWorkspace | None = None
) -> np.ndarray:
    """Secular defects lambda_n of the continued series, n = 1..2l+2.

    The series is extended past the localization cutoff by solving each
    order with the deflated unperturbed resolvent; the solvability defect
    against the pair's dual left kernel vector is the order-n eigenvalue
    correction.  Defects are exact multiples of s^n, so they are returned
    unfiltered: orders below 2l+2 should vanish to the refinement floor,
    and the first structurally nonzero defect (n = 2l+2) carries the
    dissipative gap.  Resonant components along other rung pairs are
    projected out of every intermediate order, which keeps the chain in
    the reduced (non-secular) subspace.  These are diagonal secular
    elements: when several pairs share a localization cutoff, their
    splitting-order coupling is resolved by ``class_eigenvalues``, not
    here.
    """
    ws = workspace or ModeWorkspace(mode.params)
    rows = _chain_defect_rows(ws, mode.f, _pair_column(ws, mode), mode.params.s)
    return rows[:, _pair_column(ws, mode)]


def class_eigenvalues(
    ws: ModeWorkspace, f: int, s: float, ell: int
) -> dict:
    """Series eigenvalues for the rung-f pairs with localization cutoff ell.

    Pairs sharing a cutoff split at the same order 2*ell+2 and stay
    degenerate through every earlier order, so their leading corrections
    are the eigenvalues of the secular matrix S[q, p] = lambda_{2l+2}^(p
    -> q) built from each member's chain, not the diagonal defects alone
    (off-diagonal coupling can even flip the sign of a diagonal entry).
    Returns {pair index: eigenvalue estimate}, matching each secular
    eigenvalue to the member its eigenvector weights most heavily;
    sub-splitting diagonal defects (structural zeros, kept for honesty)
    are added to the matched eigenvalue.
    """
    key = (f, s, ell)
    if key in ws._series:
        return ws._series[key]
    pairs = ws.rung_pairs(f)
    members = [
        p for p, (da, db) in enumerate(pairs) if min(da.l, db.l) == ell
    ]
    if not members:
        raise ConfigError(f"no rung-{f} pairs with cutoff l={ell}")
    delta = ws.params.delta
    rows = {p: _chain_defect_rows(ws, f, p, s) for p in members}
    values = {}
    if len(members) == 1:
        p = members[0]
        values[p] = complex(-1j * delta * f + rows[p][:, p].sum())
    else:
        secular = np.array(
            [[rows[p][-1, q] for p in members] for q in members]
        )
        vals, vecs = np.linalg.eig(secular)
        order = sorted(
            ((k, j) for k in range(len(vals)) for j in range(len(members))),
            key=lambda kj: (-abs(vecs[kj[1], kj[0]]), kj[0], kj[1]),
        )
        taken_k, taken_j = set(), set()
        match = {}
        for k, j in order:
            if k in taken_k or j in taken_j:
                continue
            match[members[j]] = vals[k]
            taken_k.add(k)
            taken_j.add(j)
        for j, p in enumerate(members):
            below = rows[p][:-1, p].sum()
            values[p] = complex(-1j * delta * f + below + match[p])
    ws._series[key] = values
    return values


def trace_pairing(a: np.ndarray, b: np.ndarray) -> complex:
    """Tr(a b) via the flattened bilinear (not sesquilinear) pairing."""
    return complex(a.T.ravel() @ b.ravel())


def _match_by_overlap(values, vectors, target, delta, f, gamma, converged=None):
    """Pick the eigenvalue whose vector best overlaps the target.

    Candidates are confined to converged modes in the slow rung window
    whenever any exist there.
    """
    target = target / np.linalg.norm(target)
    norms = np.linalg.norm(vectors, axis=0)
    overlaps = np.abs(vectors.conj().T @ target) / norms
    near = (np.abs(values.imag + delta * f) < max(delta / 2, 1e-6)) & (
        values.real > -gamma / 4
    )
    if converged is not None:
        near = near & converged
    scores = np.where(near, overlaps, -1.0) if near.any() else overlaps
    return complex(values[int(np.argmax(scores))])


def approx_eigenvalue(
    mode: PerturbativeMode,
    method: str = "series",
    workspace: ModeWorkspace | None = None,
) -> complex:
    """Estimate the eigenvalue continuing -i*delta*f for this pair.

    method="series" (default) sums the secular defects of the continued
    series, which is exponent-exact at any lattice size; "rayleigh" is
    Tr(rho^dag L rho)/Tr(rho^dag rho); "trace" is the literal series
    pairing, normalized only when f = 0 (for f != 0 the pairing norm
    Tr(rho rho) vanishes identically, so the raw correction is added to
    the unperturbed value instead).
    """
    ws = workspace or ModeWorkspace(mode.params)
    delta, s, f = mode.params.delta, mode.params.s, mode.f
    if method == "series":
        return class_eigenvalues(ws, f, s, mode.l)[_pair_column(ws, mode)]
    L = ws.liouvillian(s)
    v = mode.density.ravel()
    if np.linalg.norm(v) == 0:
        raise NumericalError("zero-norm mode")
    Lv = L @ v
    if method == "rayleigh":
        return complex((v.conj() @ Lv) / (v.conj() @ v))
    if method == "trace":
        num = trace_pairing(mode.density, Lv.reshape(mode.density.shape))
        if f == 0:
            denom = trace_pairing(mode.density, mode.density)
            if abs(denom) < 1e-14:
                raise NumericalError("series pairing norm vanished")
            return complex(num / denom)
        return complex(-1j * delta * f + num)
    raise ConfigError(f"unknown estimator method {method!r}")


def rung_eigenvalues(
    ws: ModeWorkspace,
    f: int,
    s: float,
    method: str = "perturbative",
    strict: bool = True,
) -> np.ndarray:
    """Slow eigenvalues at rung f, sorted by decreasing real part.

    \"perturbative\" evaluates the series estimator for every dark pair
    at the rung; \"exact\" targets the full operator with shift-inverted
    Arnoldi and keeps the values inside the slow window (imaginary part
    within half a level spacing of -delta*f, real part above -gamma/10,
    which separates slow branches from the measured bulk edge by more
    than an order of magnitude for s <= 0.15).  With strict=True an
    exact slow count disagreeing with the dark-pair count raises
    NumericalError, so rank-matched comparisons never silently misalign;
    strict=False returns whatever lies in the window (slow branches
    drifting past the window edge at large s are then the caller's
    concern).
    """
    pairs = ws.rung_pairs(f)
    if not pairs:
        raise ConfigError(f"no dark pairs at rung f={f}")
    delta, gamma = ws.params.delta, ws.params.gamma
    if method == "perturbative":
        cutoffs = {min(da.l, db.l) for da, db in pairs}
        by_pair = {}
        for ell in sorted(cutoffs):
            by_pair.update(class_eigenvalues(ws, f, s, ell))
        slow = np.array([by_pair[p] for p in range(len(pairs))])
    elif method == "exact":
        from .liouville import Superoperator

        superop = Superoperator(ws.liouvillian(s), ws.d, None)
        k = max(len(pairs) + 4, 16)
        result = shift_invert_modes(
            superop, -1j * delta * f, k=k, residual_tol=None
        )
        values = np.array([e.value for e in result.entries])
        keep = (np.abs(values.imag + delta * f) < max(delta / 2, 1e-6)) & (
            values.real > -gamma / 10
        )
        matrix = superop.matrix
        for i in np.flatnonzero(keep):
            vec = result.entries[i].vector
            res = np.linalg.norm(matrix @ vec - values[i] * vec)
            res /= np.linalg.norm(vec)
            if res > 1e-8:
                raise NumericalError(
                    f"slow eigenpair residual {res:.3e} above 1e-08 "
                    f"at rung f={f}, s={s}"
                )
        slow = values[keep]
        if strict and len(slow) != len(pairs):
            raise NumericalError(
                f"rung f={f} at s={s}: found {len(slow)} slow modes "
                f"for {len(pairs)} dark pairs"
            )
    else:
        raise ConfigError(f"unknown rung method {method!r}")
    return slow[np.argsort(-slow.real)]


@dataclass(frozen=True)
class FitResult:
    p_hat: float
    stderr: float
    rms_residual: float
    n_used: int
    window: tuple


@dataclass(frozen=True)
class ScalingFit:
    f: int
    method: str
    samples: tuple  # (s, gap, shift)
    excluded: tuple  # s values dropped at the numeric floor
    fit: FitResult


def fit_exponent(samples, window: tuple) -> FitResult:
    """Least-squares slope of log(gap) against log(s) inside the window."""
    lo, hi = window
    pts = [(s, g) for s, g in samples if lo <= s <= hi and g > 0]
    if len(pts) < 5:
        raise ConfigError(
            f"need >= 5 usable points in window [{lo}, {hi}], got {len(pts)}"
        )
    x = np.log(np.array([p[0] for p in pts]))
    y = np.log(np.array([p[1] for p in pts]))
    coeffs, residuals, _, _ = np.linalg.lstsq(
        np.column_stack([x, np.ones_like(x)]), y, rcond=None
    )
    slope = float(coeffs[0])
    fitted = coeffs[0] * x + coeffs[1]
    r = y - fitted
    dof = max(len(pts) - 2, 1)
    var = float(r @ r) / dof
    sxx = float(np.sum((x - x.mean()) ** 2))
    stderr = math.sqrt(var / sxx) if sxx > 0 else float("inf")
    rms = math.sqrt(float(np.mean(r**2)))
    return FitResult(slope, stderr, rms, len(pts), (lo, hi))


def _exact_gap(ws: ModeWorkspace, mode: PerturbativeMode, s: float, k: int) -> complex:
    """Exact eigenvalue continuing this pair, via targeted Arnoldi.

    Candidates near the rung are matched to the pair by overlap with the
    perturbative series vector.
    """
    from .liouville import Superoperator

    delta, f = ws.params.delta, mode.f
    k = max(k, len(ws.rung_pairs(f)) + 4)
    L = ws.liouvillian(s)
    superop = Superoperator(matrix=L, d=ws.d, sectors=None)
    sigma = -1j * delta * f
    result = shift_invert_modes(superop, sigma, k=k, residual_tol=1e-8)
    if not result.entries:
        raise NumericalError(f"no targeted modes found near {sigma}")
    values = np.array([e.value for e in result.entries])
    vectors = np.column_stack([e.vector for e in result.entries])
    return _match_by_overlap(
        values, vectors, mode.density.ravel(), delta, f, ws.params.gamma
    )


def scaling_sweep(
    d1: DarkState,
    d2: DarkState,
    params: FermionModelParams,
    s_grid=DEFAULT_GRID,
    method: str = "perturbative",
    window: tuple | None = None,
    k: int = 6,
    estimator: str = "series",
) -> ScalingFit:
    """Gap and shift against s for one dark pair, plus the power-law fit.

    method="perturbative" evaluates the chosen approx_eigenvalue
    estimator at every grid point (default "series", the only one cheap
    and exponent-faithful at large lattices); "exact" targets the true
    eigenvalue with shift-inverted Arnoldi at each s.  Exact gaps below
    the eigensolver's double-precision floor are excluded from the fit
    and recorded; series gaps stay in at any size, because each defect
    is computed as an exact multiple of s^n rather than as a difference
    of noisy eigenvalues.
    """
    if method not in ("perturbative", "exact"):
        raise ConfigError(f"unknown sweep method {method!r}")
    s_values = sorted(float(s) for s in s_grid)
    if any(s <= 0 for s in s_values):
        raise ConfigError("s grid must be positive")
    ws = ModeWorkspace(replace(params, s=0.0))
    samples = []
    excluded = []
    f = d1.B - d2.B
    for s in s_values:
        run = replace(params, s=s)
        mode = build_mode(d1, d2, run)
        if method == "perturbative":
            lam = approx_eigenvalue(mode, method=estimator, workspace=ws)
        else:
            lam = _exact_gap(ws, mode, s, k)
        gap = -lam.real
        shift = abs(lam.imag + params.delta * f)
        if method == "exact" and gap < NUMERIC_FLOOR:
            excluded.append(s)
        else:
            samples.append((s, gap, shift))
    if window is None:
        window = (s_values[0], s_values[-1])
    fit = fit_exponent([(s, g) for s, g, _ in samples], window)
    return ScalingFit(
        f=f,
        method=method,
        samples=tuple(samples),
        excluded=tuple(excluded),
        fit=fit,
    )


def sweep_to_csv(fit: ScalingFit) -> str:
    """Deterministic CSV of sweep samples: s,f,gap,shift,method."""
    lines = ["s,f,gap,shift,method"]
    for s, gap, shift in fit.samples:
        lines.append(f"{s!r},{fit.f},{gap!r},{shift!r},{fit.method}")
    return "\n".join(lines) + "\n"


def fit_to_json(fit: ScalingFit) -> str:
    """Fit summary (exponent, error bars, window, exclusions) as JSON."""
    payload = {
        "f": fit.f,
        "method": fit.method,
        "p_hat": fit.fit.p_hat,
        "stderr": fit.fit.stderr,
        "rms_residual": fit.fit.rms_residual,
        "n_used": fit.fit.n_used,
        "window": list(fit.fit.window),
        "excluded": list(fit.excluded),
        "samples": [
            {"s": s, "gap": g, "shift": h} for s, g, h in fit.samples
        ],
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"
