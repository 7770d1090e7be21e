"""Long-time density-matrix propagation and oscillation diagnostics.

Two propagation routes cover every reachable size.  The spectral route
diagonalizes the Liouvillian once and evaluates rho(t) in closed form,
so t ~ 1e7/gamma costs the same as t ~ 1/gamma; when the operator is
block-diagonal over the conserved charge (the symmetric point s = 0),
each sector is diagonalized separately and much larger systems fit the
dense cap.  The stepping route applies the exponential action interval
by interval and is the cross-check and the fallback when dense
eigendecomposition is out of reach.

Observables include two-site and ranged hop correlators, excitation
number, site occupations, and the per-family weights on dark-pair
coherences: the literal bilinear pairing (which rotates at f*delta and
carries the oscillation phase) and a normalized projection weight onto
the orthonormal dark-pair basis of each family (positive, envelope
only, used for stage timing).  `oscillation_report` extracts the
dominant frequency of a windowed series with a Hann-windowed DFT and
quadratic peak interpolation.
"""

import json
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import fockspace as fs
from .darkmodes import best_localized, enumerate_dark_states
from .errors import ConfigError, DimensionCapError, NumericalError
from .liouville import Superoperator, unvectorize

FULL_CAP = 6000        # largest d^2 for one dense eigendecomposition
BLOCK_CAP = 4096       # largest single sector block for the sector route
STEP_BUDGET = 2e6      # rough matrix-vector product budget for stepping
LOG_POINTS_PER_DECADE = 64
LINEAR_POINTS_PER_PERIOD = 256

_PERIPHERAL_TOL = 1e-8     # relative Re-threshold for undamped eigenvalues
_CLUSTER_TOL = 1e-6        # relative Im-spacing that separates clusters
_SINGULAR_SHIFT = 1e-8     # regularization of the near-singular solves
_SAFE_LOG = 97.0           # decay horizon: e^-97 clears any transient growth


# --- initial states --------------------------------------------------------


@dataclass(frozen=True)
class InitialState:
    """Validated density matrix with a record of how it was built."""

    kind: str
    density: np.ndarray
    meta: dict = field(default_factory=dict)


def _validate_density(rho: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ConfigError(f"density matrix must be square, got {rho.shape}")
    herm = np.max(np.abs(rho - rho.conj().T))
    if herm > tol:
        raise ConfigError(f"density matrix not Hermitian (deviation {herm:.2e})")
    evals = np.linalg.eigvalsh((rho + rho.conj().T) / 2)
    if evals.min() < -tol:
        raise ConfigError(
            f"density matrix not positive semidefinite (min eig {evals.min():.2e})"
        )
    tr = float(rho.trace().real)
    if tr <= 0:
        raise ConfigError("density matrix has non-positive trace")
    return rho / tr


def dark_level_vector(basis: fs.FockBasis, level: int) -> np.ndarray:
    """Unit vector of the canonical (most localized) dark state at a level."""
    by_level = {}
    for st in enumerate_dark_states(basis):
        by_level.setdefault(st.level, []).append(st)
    if level not in by_level:
        raise ConfigError(f"no dark state at excitation level {level}")
    state = best_localized(by_level[level])[0]
    return state.vector.astype(complex)


def default_dark_levels(basis: fs.FockBasis) -> tuple:
    """Levels of the default dark-pair superposition.

    Picks the set of occupied dark-state levels, preferring four members
    over three, whose pairwise differences are exactly {1, 2, 3}: the
    resulting superposition carries coherence in the |f| = 1, 2, 3
    families and nothing beyond.  Deterministic (lexicographically
    smallest qualifying set).
    """
    from itertools import combinations

    available = sorted({st.level for st in enumerate_dark_states(basis)})
    for size in (4, 3):
        for combo in combinations(available, size):
            diffs = {b - a for a, b in combinations(combo, 2)}
            if diffs == {1, 2, 3}:
                return tuple(combo)
    raise ConfigError(
        "no combination of dark-state levels spans level differences "
        f"{{1, 2, 3}}; available levels: {available}"
    )


_KIND_ALIASES = {
    "uniform": "uniform_excitation_superposition",
    "darkpairs": "dark_pair_superposition",
}


def prepare_initial(
    kind: str,
    basis: fs.FockBasis | None = None,
    levels=None,
    mixture=None,
    density: np.ndarray | None = None,
) -> InitialState:
    """Build a validated initial density matrix.

    kind="uniform_excitation_superposition" (alias "uniform"): pure
    equal-weight superposition of every basis state.
    kind="dark_pair_superposition" (alias "darkpairs"): pure
    equal-amplitude superposition of the canonical (most localized) dark
    states at the given excitation levels; by default the levels come
    from default_dark_levels, so the state carries coherence at level
    differences exactly {1, 2, 3} with the maximal-cutoff member of each
    level present.  Pass mixture=[(levels, weight), ...] for a
    statistical mixture of such superpositions.  kind="custom": validate
    the given matrix.  All results are Hermitian, positive semidefinite
    to 1e-12, and unit trace.
    """
    kind = _KIND_ALIASES.get(kind, kind)
    if kind == "custom":
        if density is None:
            raise ConfigError("custom initial state needs a density matrix")
        rho = _validate_density(density)
        return InitialState("custom", rho, {"shape": rho.shape[0]})
    if basis is None:
        raise ConfigError(f"initial state kind {kind!r} needs a basis")
    if kind == "uniform_excitation_superposition":
        psi = np.full(basis.dim, 1.0 / np.sqrt(basis.dim), dtype=complex)
        rho = np.outer(psi, psi.conj())
        return InitialState(kind, rho, {"dim": basis.dim})
    if kind == "dark_pair_superposition":
        if mixture is None:
            if levels is None:
                levels = default_dark_levels(basis)
            mixture = [(tuple(levels), 1.0)]
        elif levels is not None:
            raise ConfigError("pass either levels or mixture, not both")
        weights = np.array([w for _, w in mixture], dtype=float)
        if np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-12:
            raise ConfigError("mixture weights must be nonnegative and sum to 1")
        rho = np.zeros((basis.dim, basis.dim), dtype=complex)
        for lvls, w in mixture:
            if not lvls:
                raise ConfigError("each mixture component needs >= 1 level")
            psi = np.zeros(basis.dim, dtype=complex)
            for lv in lvls:
                psi += dark_level_vector(basis, int(lv))
            psi /= np.linalg.norm(psi)
            rho += w * np.outer(psi, psi.conj())
        return InitialState(
            kind, _validate_density(rho), {"mixture": list(mixture)}
        )
    raise ConfigError(f"unknown initial state kind {kind!r}")


# --- time grids ------------------------------------------------------------


def log_time_grid(
    t_start: float, t_stop: float, per_decade: int = LOG_POINTS_PER_DECADE
) -> np.ndarray:
    """Log-spaced output times for envelope plots."""
    if not 0 < t_start < t_stop:
        raise ConfigError("need 0 < t_start < t_stop")
    decades = np.log10(t_stop / t_start)
    n = max(int(np.ceil(decades * per_decade)) + 1, 2)
    return np.logspace(np.log10(t_start), np.log10(t_stop), n)


def oscillation_window_grid(
    t_start: float,
    period: float,
    n_periods: int = 4,
    per_period: int = LINEAR_POINTS_PER_PERIOD,
) -> np.ndarray:
    """Linear grid resolving n_periods of the expected oscillation."""
    if period <= 0 or n_periods < 1:
        raise ConfigError("need positive period and >= 1 period in the window")
    n = n_periods * per_period + 1
    return np.linspace(t_start, t_start + n_periods * period, n)


# --- trajectories ----------------------------------------------------------


@dataclass(frozen=True)
class Trajectory:
    """Observable time series with worst-case invariant deviations."""

    times: np.ndarray
    series: dict
    trace_dev: float
    herm_dev: float
    min_eig: float
    meta: dict = field(default_factory=dict)


def _evaluate(observables: dict, rho: np.ndarray) -> dict:
    out = {}
    for name, op in observables.items():
        if callable(op):
            out[name] = float(op(rho))
        else:
            mat = op.toarray() if sp.issparse(op) else np.asarray(op)
            out[name] = float(np.trace(mat @ rho).real)
    return out


def _collect(times, densities, observables, meta) -> Trajectory:
    names = list(observables)
    series = {name: np.empty(len(times)) for name in names}
    trace_dev = herm_dev = 0.0
    min_eig = np.inf
    for k, rho in enumerate(densities):
        trace_dev = max(trace_dev, abs(float(rho.trace().real) - 1.0))
        herm_dev = max(herm_dev, float(np.max(np.abs(rho - rho.conj().T))))
        min_eig = min(
            min_eig, float(np.linalg.eigvalsh((rho + rho.conj().T) / 2).min())
        )
        values = _evaluate(observables, rho)
        for name in names:
            series[name][k] = values[name]
    return Trajectory(
        times=np.asarray(times, dtype=float),
        series=series,
        trace_dev=trace_dev,
        herm_dev=herm_dev,
        min_eig=min_eig,
        meta=meta,
    )


def _is_block_diagonal(matrix: sp.spmatrix, charge_of: np.ndarray) -> bool:
    coo = matrix.tocoo()
    return bool(np.all(charge_of[coo.row] == charge_of[coo.col]))


def _cluster_means(values: np.ndarray, tol: float) -> list:
    """Group complex values by imaginary-part proximity; return (mean, count)."""
    order = np.argsort(values.imag)
    groups = [[values[order[0]]]]
    for k in order[1:]:
        if values[k].imag - groups[-1][-1].imag <= tol:
            groups[-1].append(values[k])
        else:
            groups.append([values[k]])
    return [(complex(np.mean(g)), len(g)) for g in groups]


def _invariant_pair_basis(sub: sp.spmatrix, lam0: complex, m: int, rng):
    """Biorthonormal right/dual bases of an m-fold isolated eigenvalue.

    Subspace inverse iteration with a regularized shift, run on the
    operator and its adjoint; the dual is normalized against the right
    basis so that dual^H @ W = I, making W @ dual^H the (oblique)
    spectral projector of the cluster.  Raises when the iteration fails
    to reach an invariant subspace, which signals that the requested
    eigenvalue is not an isolated semisimple cluster.
    """
    n = sub.shape[0]
    ident = sp.identity(n, dtype=complex, format="csc")
    lu = spla.splu((sub - (lam0 + _SINGULAR_SHIFT) * ident).tocsc())
    scale = max(abs(lam0), 1.0)
    bases = []
    for adjoint in (False, True):
        W = rng.standard_normal((n, m)) + 1j * rng.standard_normal((n, m))
        W = np.linalg.qr(W)[0]
        op = sub.conj().T if adjoint else sub
        target = np.conj(lam0) if adjoint else lam0
        for _ in range(8):
            W = np.linalg.qr(lu.solve(W, trans="H" if adjoint else "N"))[0]
            resid = np.max(np.linalg.norm(op @ W - target * W, axis=0))
            if resid <= 1e-11 * scale:
                break
        else:
            raise NumericalError(
                f"inverse iteration stalled at residual {resid:.2e} for "
                f"eigenvalue cluster {lam0:.6g} (multiplicity {m})"
            )
        bases.append(W)
    W, left = bases
    gram = left.conj().T @ W
    if np.linalg.cond(gram) > 1e8:
        raise NumericalError(
            f"defective eigenvalue cluster at {lam0:.6g}: left/right bases "
            "are nearly orthogonal"
        )
    dual = left @ np.linalg.inv(gram).conj().T
    refined = complex(np.trace(dual.conj().T @ (sub @ W)) / m)
    return W, dual, refined


def _step_densities(matrix: sp.spmatrix, v0: np.ndarray, times, d: int):
    """Generator of density matrices along sorted times via stepping."""
    current = v0.copy()
    prev_t = 0.0
    for t in times:
        dt = t - prev_t
        if dt > 0:
            current = spla.expm_multiply(matrix * dt, current)
            prev_t = t
        yield unvectorize(current, d)


def _check_step_budget(matrix: sp.spmatrix, t_max: float, budget: float):
    one_norm = float(np.abs(matrix).sum(axis=0).max())
    est = one_norm * t_max
    if est > budget:
        raise DimensionCapError(
            f"stepping to t={t_max:.3g} needs ~{est:.2g} operator "
            f"applications (budget {budget:.2g}); the horizon is out of "
            "reach for exponential-action stepping"
        )


def propagate_spectral(
    superop: Superoperator,
    rho0: np.ndarray,
    times,
    observables: dict,
    sectorwise: bool | None = None,
) -> Trajectory:
    """Evolve via a one-time spectral analysis; exact at any output time.

    Block-diagonal operators (the symmetric point) take the sector
    route: each sector's undamped eigenvalue clusters (Re lambda ~ 0)
    get refined biorthogonal invariant bases, so arbitrarily late times
    reduce to pure phases with no loss; damped content is provably below
    e^-97 once t exceeds the slowest decay horizon, and earlier output
    times are delegated to exponential-action stepping.  Operators that
    couple sectors are diagonalized densely (d^2 <= FULL_CAP) with the
    eigenbasis verified by reconstructing rho(0); strong non-normality
    makes that reconstruction fail loudly rather than corrupt the
    trajectory silently.
    """
    times = np.asarray(sorted(float(t) for t in times))
    if times.size == 0 or times[0] < 0:
        raise ConfigError("need nonnegative output times")
    d = superop.d
    v0 = np.asarray(rho0, dtype=complex).reshape(d * d)
    if sectorwise is None:
        sectorwise = superop.sectors is not None and _is_block_diagonal(
            superop.matrix, superop.sectors.charge_of
        )
    if sectorwise:
        if superop.sectors is None:
            raise ConfigError("sectorwise propagation needs sector metadata")
        if not _is_block_diagonal(superop.matrix, superop.sectors.charge_of):
            raise ConfigError(
                "operator couples sectors; sectorwise propagation is invalid"
            )
        rng = np.random.default_rng(271828)
        clusters = []
        slowest_decay = np.inf
        for f in superop.sectors.charges:
            idx = superop.sectors.block_indices(f)
            if len(idx) > BLOCK_CAP:
                raise DimensionCapError(
                    f"sector block {len(idx)} exceeds cap {BLOCK_CAP}"
                )
            sub = superop.matrix[idx][:, idx].tocsc()
            lam = np.linalg.eigvals(sub.toarray())
            scale = max(float(np.abs(lam).max()), 1.0)
            undamped = lam[lam.real > -_PERIPHERAL_TOL * scale]
            damped = lam[lam.real <= -_PERIPHERAL_TOL * scale]
            if damped.size:
                slowest_decay = min(slowest_decay, -float(damped.real.max()))
            for lam0, m in (
                _cluster_means(undamped, _CLUSTER_TOL * scale)
                if undamped.size
                else []
            ):
                W, dual, refined = _invariant_pair_basis(sub, lam0, m, rng)
                clusters.append((idx, refined, W, dual.conj().T @ v0[idx]))
        t_safe = 0.0 if np.isinf(slowest_decay) else _SAFE_LOG / slowest_decay
        late = times >= t_safe
        if not late.all():
            _check_step_budget(
                superop.matrix, float(times[~late].max()), STEP_BUDGET
            )

        def densities():
            stepped = _step_densities(
                superop.matrix.tocsr(), v0, times[~late], d
            )
            for t, is_late in zip(times, late):
                if not is_late:
                    yield next(stepped)
                    continue
                v = np.zeros(d * d, dtype=complex)
                for idx, lam0, W, coeff in clusters:
                    v[idx] += W @ (coeff * np.exp(lam0 * t))
                yield unvectorize(v, d)

        meta = {
            "route": "spectral-sectorwise",
            "n_times": len(times),
            "t_safe": t_safe,
            "n_stepped": int((~late).sum()),
            "n_undamped_modes": sum(c[2].shape[1] for c in clusters),
        }
        return _collect(times, densities(), observables, meta)

    if d * d > FULL_CAP:
        raise DimensionCapError(
            f"dense eigendecomposition at dimension {d * d} exceeds cap "
            f"{FULL_CAP}; use propagate_stepping"
        )
    lam, V = np.linalg.eig(superop.matrix.toarray())
    c = np.linalg.solve(V, v0)
    err0 = float(np.max(np.abs(V @ c - v0)))
    floor = max(float(np.max(np.abs(v0))), 1e-300)
    if err0 > 1e-10 * floor:
        raise NumericalError(
            f"eigenbasis reconstructs rho(0) to only {err0:.2e}; the "
            "operator is too non-normal for a dense eigenbasis — use "
            "propagate_stepping"
        )

    def densities_full():
        for t in times:
            yield unvectorize(V @ (c * np.exp(lam * t)), d)

    meta = {"route": "spectral-full", "n_times": len(times)}
    return _collect(times, densities_full(), observables, meta)


def propagate_stepping(
    superop: Superoperator,
    rho0: np.ndarray,
    times,
    observables: dict,
    budget: float = STEP_BUDGET,
) -> Trajectory:
    """Evolve by exponential-action stepping between output times.

    Each interval applies the exponential of the sparse operator with
    scaled-Taylor action (error near machine precision per step); the
    trajectory invariants are verified on every output point, so drift
    beyond tolerance surfaces as NumericalError rather than silently.
    The cost grows linearly with the final time, so a horizon beyond the
    operator-application budget is rejected up front.
    """
    times = np.asarray(sorted(float(t) for t in times))
    if times.size == 0 or times[0] < 0:
        raise ConfigError("need nonnegative output times")
    d = superop.d
    matrix = superop.matrix.tocsr()
    _check_step_budget(matrix, float(times[-1]), budget)
    v = np.asarray(rho0, dtype=complex).reshape(d * d)
    meta = {"route": "stepping", "n_times": len(times)}
    traj = _collect(times, _step_densities(matrix, v, times, d), observables, meta)
    if traj.trace_dev > 1e-9:
        raise NumericalError(
            f"stepping propagation drifted: trace deviation {traj.trace_dev:.2e}"
        )
    return traj


def propagate(
    superop: Superoperator,
    rho0: np.ndarray,
    times,
    observables: dict,
    method: str = "auto",
) -> Trajectory:
    """Dispatch to a propagation route.

    method="spectral" or "stepping" forces a route; "auto" prefers the
    spectral route and falls back to stepping when the dense
    eigendecomposition caps are exceeded.
    """
    if method == "spectral":
        return propagate_spectral(superop, rho0, times, observables)
    if method == "stepping":
        return propagate_stepping(superop, rho0, times, observables)
    if method != "auto":
        raise ConfigError(f"unknown propagation method {method!r}")
    try:
        return propagate_spectral(superop, rho0, times, observables)
    except (DimensionCapError, NumericalError):
        return propagate_stepping(superop, rho0, times, observables)


# --- observables -----------------------------------------------------------


def bond_correlator(basis: fs.FockBasis, i: int, j: int) -> sp.csr_matrix:
    """Hermitian two-site hop c_i^dag c_j + c_j^dag c_i (1-based sites)."""
    hop = fs.hop_matrix(basis, i, j)
    return sp.csr_matrix(hop + hop.conj().T)


def ranged_hop_observable(basis: fs.FockBasis, r: int) -> sp.csr_matrix:
    """Hermitian sum of all hops of range r: sum_j c_j^dag c_(j+r) + h.c."""
    L = basis.spec.L
    if not 1 <= r < L:
        raise ConfigError(f"hop range must lie in 1..{L - 1}, got {r}")
    total = sp.csr_matrix((basis.dim, basis.dim), dtype=complex)
    for j in range(1, L - r + 1):
        total = total + fs.hop_matrix(basis, j, j + r)
    return sp.csr_matrix(total + total.conj().T)


def excitation_offset(basis: fs.FockBasis) -> sp.csr_matrix:
    """B minus its fully localized minimum N(N+1)/2 (vanishes on the sea)."""
    N = basis.spec.N
    base = N * (N + 1) // 2
    return sp.csr_matrix(
        fs.B_matrix(basis) - base * sp.identity(basis.dim, dtype=complex)
    )


def site_occupation(basis: fs.FockBasis, j: int) -> sp.csr_matrix:
    """Number operator of one site (1-based)."""
    return fs.number_matrix(basis, j)


def spin_x_observable(n_sites: int, site: int) -> np.ndarray:
    """sigma^x on one site of a spin-1/2 ring (1-based, site 1 = LSB)."""
    if not 1 <= site <= n_sites:
        raise ConfigError(f"site must lie in 1..{n_sites}, got {site}")
    sx = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
    op = np.eye(1, dtype=complex)
    for pos in range(n_sites, 0, -1):
        op = np.kron(op, sx if pos == site else np.eye(2, dtype=complex))
    return op


class FamilyWeights:
    """Per-|f| weights of a density matrix on dark-pair coherences.

    literal(rho)[|f|] is the plain bilinear pairing against the
    dark-pair products, summed over every ordered pair at level
    difference +-f; it is real for Hermitian rho and rotates at
    frequency f*delta under the symmetric evolution, so it carries the
    oscillation phase.  normalized(rho)[|f|] is the squared Frobenius
    weight of rho on an orthonormalized dark-pair basis (same-level dark
    vectors are orthonormalized first, making the outer products an
    orthonormal set): nonnegative, conserved at the symmetric point, and
    the right envelope for stage timing.
    """

    def __init__(self, basis: fs.FockBasis, f_max: int | None = None):
        states = enumerate_dark_states(basis)
        self.levels = [st.level for st in states]
        self.D = np.column_stack([st.vector.astype(complex) for st in states])
        ortho = self.D.copy()
        lv = np.array(self.levels)
        for level in sorted(set(self.levels)):
            cols = np.flatnonzero(lv == level)
            ortho[:, cols] = np.linalg.qr(ortho[:, cols])[0]
        self._ortho = ortho
        spread = max(self.levels) - min(self.levels)
        self.f_values = [
            f for f in range(1, spread + 1) if f_max is None or f <= f_max
        ]
        self._masks = {
            f: np.abs(lv[:, None] - lv[None, :]) == f for f in self.f_values
        }

    def literal(self, rho: np.ndarray) -> dict:
        M = self.D.conj().T @ rho @ self.D
        return {
            f: float(M.T[mask].sum().real) for f, mask in self._masks.items()
        }

    def normalized(self, rho: np.ndarray) -> dict:
        M = self._ortho.conj().T @ rho @ self._ortho
        return {
            f: float((np.abs(M[mask]) ** 2).sum()) for f, mask in self._masks.items()
        }

    def observables(self) -> dict:
        """Named callables for trajectory collection: P<f> literal, Q<f> normalized."""
        out = {}
        for f in self.f_values:
            out[f"P{f}"] = (
                lambda rho, f=f: self.literal(rho)[f]
            )
            out[f"Q{f}"] = (
                lambda rho, f=f: self.normalized(rho)[f]
            )
        return out


# --- oscillation analysis --------------------------------------------------


@dataclass(frozen=True)
class OscillationReport:
    """Dominant-tone summary of a windowed series."""

    window: tuple
    found: bool
    frequency: float | None = None  # cycles per unit time
    period: float | None = None
    amplitude: float | None = None
    f_inferred: int | None = None
    f_offset: float | None = None


def oscillation_report(
    times,
    values,
    window: tuple,
    delta: float | None = None,
    floor_ratio: float = 5.0,
) -> OscillationReport:
    """Dominant frequency in the window via Hann-windowed DFT.

    The peak bin is refined by quadratic interpolation of log magnitude;
    amplitude is corrected for the Hann coherent gain.  When delta is
    given, the rotation index f = 2*pi*frequency/delta is inferred and
    its distance from the nearest integer reported.  A peak below
    floor_ratio times the median spectral magnitude reports found=False.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    lo, hi = window
    mask = (times >= lo) & (times <= hi)
    t = times[mask]
    y = values[mask]
    if len(t) < 16:
        raise ConfigError(f"window {window} contains {len(t)} points; need >= 16")
    dt = np.diff(t)
    if np.max(np.abs(dt - dt[0])) > 1e-6 * dt[0]:
        raise ConfigError("oscillation window needs a uniform time grid")
    scale = float(np.max(np.abs(y))) if y.size else 0.0
    y = y - y.mean()
    hann = np.hanning(len(y))
    mags = np.abs(np.fft.rfft(hann * y))
    if len(mags) < 3:
        raise ConfigError("window too short for frequency analysis")
    interior = mags[1:]
    k = 1 + int(np.argmax(interior))
    floor = float(np.median(interior))
    # a peak that neither clears the spectral floor nor rises above
    # rounding noise relative to the raw signal is not an oscillation
    if mags[k] <= floor_ratio * floor or 2.0 * mags[k] <= 1e-12 * scale * hann.sum():
        return OscillationReport(window=(lo, hi), found=False)
    if 1 <= k < len(mags) - 1 and mags[k - 1] > 0 and mags[k + 1] > 0:
        lm = np.log(mags[k - 1 : k + 2])
        denom = lm[0] - 2 * lm[1] + lm[2]
        shift = 0.5 * (lm[0] - lm[2]) / denom if denom < 0 else 0.0
        shift = float(np.clip(shift, -0.5, 0.5))
    else:
        shift = 0.0
    freq = (k + shift) / (len(y) * dt[0])
    amplitude = 2.0 * mags[k] / hann.sum()
    f_inferred = f_offset = None
    if delta is not None and delta > 0:
        ratio = 2 * np.pi * freq / delta
        f_inferred = int(round(ratio))
        f_offset = float(abs(ratio - f_inferred))
    return OscillationReport(
        window=(lo, hi),
        found=True,
        frequency=float(freq),
        period=float(1.0 / freq),
        amplitude=float(amplitude),
        f_inferred=f_inferred,
        f_offset=f_offset,
    )


# --- emitters ---------------------------------------------------------------


def trajectory_to_csv(traj: Trajectory) -> str:
    """Deterministic CSV: t plus one column per observable."""
    names = sorted(traj.series)
    lines = ["t," + ",".join(names)]
    for k, t in enumerate(traj.times):
        row = [repr(float(t))] + [repr(float(traj.series[n][k])) for n in names]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def trajectory_meta_json(traj: Trajectory) -> str:
    """Sidecar metadata: invariant deviations, route, observable names."""
    payload = {
        "observables": sorted(traj.series),
        "n_times": int(len(traj.times)),
        "t_first": float(traj.times[0]),
        "t_last": float(traj.times[-1]),
        "trace_dev": traj.trace_dev,
        "herm_dev": traj.herm_dev,
        "min_eig": traj.min_eig,
        "meta": {k: str(v) for k, v in traj.meta.items()},
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def plot_script(traj: Trajectory, csv_path: str, logx: bool = True) -> str:
    """Plain-text gnuplot commands for the trajectory CSV."""
    names = sorted(traj.series)
    lines = [
        "set datafile separator ','",
        "set key autotitle columnhead",
        "set xlabel 't (1/gamma)'",
    ]
    if logx:
        lines.append("set logscale x")
    plots = ", ".join(
        f"'{csv_path}' using 1:{k + 2} with lines" for k in range(len(names))
    )
    lines.append(f"plot {plots}")
    return "\n".join(lines) + "\n"
