"""Dark states of the collective hop, exactly, with localization analytics.

A dark state is a kernel vector of K restricted to one tilt level
B = n + N(N+1)/2.  In the excitation-label basis K acts as the boxed
restriction map of Young diagrams with all matrix elements 1, so kernels
are computed exactly over rationals, level by level.  Canonical
representatives are the reduced row echelon basis of each kernel with
labels ordered lexicographically: each representative has amplitude +1
on its lexicographically smallest label and zeros there in all others.

Localization indices follow the rightmost-intact-sea / leftmost-empty
definitions: lN = max{j : <n_j> = 1}, lL = min{j : <n_(L-j)> > 0},
l = min(lN, lL), all evaluated in exact arithmetic.  A pair of dark
states with charge f = B1 - B2 is predicted to open a gap at order
p = 2 min(l_1, l_2) + 2 under the symmetry-breaking hop.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import fockspace as fs
from . import young
from .errors import ConfigError


def rref(rows: list[list[Fraction]]) -> tuple[list[list[Fraction]], list[int]]:
    """Reduced row echelon form over exact rationals; returns (rows, pivot cols)."""
    mat = [row[:] for row in rows]
    n_rows = len(mat)
    n_cols = len(mat[0]) if mat else 0
    pivots = []
    r = 0
    for c in range(n_cols):
        pivot_row = next((i for i in range(r, n_rows) if mat[i][c] != 0), None)
        if pivot_row is None:
            continue
        mat[r], mat[pivot_row] = mat[pivot_row], mat[r]
        inv = Fraction(1, 1) / mat[r][c]
        mat[r] = [x * inv for x in mat[r]]
        for i in range(n_rows):
            if i != r and mat[i][c] != 0:
                factor = mat[i][c]
                mat[i] = [x - factor * y for x, y in zip(mat[i], mat[r])]
        pivots.append(c)
        r += 1
        if r == n_rows:
            break
    return mat[:r], pivots


def nullspace(rows: list[list[Fraction]], n_cols: int) -> list[list[Fraction]]:
    """Exact kernel basis of the matrix given by `rows` (may be empty)."""
    red, pivots = rref(rows) if rows else ([], [])
    free = [c for c in range(n_cols) if c not in pivots]
    basis = []
    for fcol in free:
        v = [Fraction(0)] * n_cols
        v[fcol] = Fraction(1)
        for i, pcol in enumerate(pivots):
            v[pcol] = -red[i][fcol]
        basis.append(v)
    return basis


@dataclass(frozen=True, eq=False)
class DarkState:
    """Exact kernel vector of K with definite tilt eigenvalue B."""

    L: int
    N: int
    B: int
    components: tuple          # ((label, Fraction amplitude), ...), lex order
    vector: np.ndarray         # normalized, over the matching FockBasis
    lN: int
    lL: int
    l: int

    @property
    def level(self) -> int:
        return self.B - self.N * (self.N + 1) // 2

    @property
    def pivot_label(self):
        return self.components[0][0]

    def label(self) -> str:
        terms = []
        for lbl, amp in self.components:
            ket = "|" + "".join(str(k) for k in reversed(lbl)) + ">"
            if amp == 1:
                terms.append(("+ " if terms else "") + ket)
            elif amp == -1:
                terms.append("- " + ket)
            else:
                sign = "- " if amp < 0 else ("+ " if terms else "")
                terms.append(f"{sign}{abs(amp)}{ket}")
        return " ".join(terms) if terms else "|>"


def _occupations(spec: fs.LatticeSpec, label) -> tuple[int, ...]:
    return fs.occupied_sites(fs.mask_of_label(spec, label))


def _localization(spec: fs.LatticeSpec, comps) -> tuple[int, int, int]:
    """Exact (lN, lL, l) from label components."""
    L, N = spec.L, spec.N
    norm = sum(a * a for _, a in comps)
    site_weight = [Fraction(0)] * (L + 1)
    for lbl, a in comps:
        for s in _occupations(spec, lbl):
            site_weight[s] += a * a
    lN = 0
    for j in range(1, L + 1):
        if site_weight[j] == norm:
            lN = j
    rightmost = max((j for j in range(1, L + 1) if site_weight[j] > 0), default=0)
    lL = L - rightmost if rightmost else L
    return lN, lL, min(lN, lL)


def enumerate_dark_states(basis: fs.FockBasis) -> list[DarkState]:
    """Canonical dark states, ordered by B then by pivot label."""
    spec = basis.spec
    L, N = spec.L, spec.N
    out = []
    for n in range(N * (L - N) + 1):
        labels = sorted(young.lattice_level(n, N, L - N))
        below = sorted(young.lattice_level(n - 1, N, L - N)) if n else []
        row_of = {lbl: i for i, lbl in enumerate(below)}
        rows = [[Fraction(0)] * len(labels) for _ in below]
        for c, lbl in enumerate(labels):
            for tgt in young.restrict(lbl):
                rows[row_of[tgt]][c] = Fraction(1)
        kernel = nullspace(rows, len(labels))
        if not kernel:
            continue
        canonical, _ = rref(kernel)
        B = n + N * (N + 1) // 2
        for coeffs in canonical:
            comps = tuple(
                (labels[i], coeffs[i]) for i in range(len(labels)) if coeffs[i] != 0
            )
            vec = np.zeros(basis.dim, dtype=complex)
            for lbl, amp in comps:
                vec[basis.index[fs.mask_of_label(spec, lbl)]] = float(amp)
            vec /= np.linalg.norm(vec)
            lN, lL, l = _localization(spec, comps)
            out.append(DarkState(L, N, B, comps, vec, lN, lL, l))
    return out


def localization_indices(state: DarkState) -> tuple[int, int, int]:
    """(lN, lL, l) of a dark state (recomputed exactly)."""
    spec = fs.LatticeSpec(state.L, state.N)
    return _localization(spec, state.components)


def _kernel_matrix(states) -> tuple[list, list[list[Fraction]]]:
    """Stack same-level dark states over the union of their labels."""
    labels = sorted({lbl for st in states for lbl, _ in st.components})
    col = {lbl: i for i, lbl in enumerate(labels)}
    rows = []
    for st in states:
        row = [Fraction(0)] * len(labels)
        for lbl, amp in st.components:
            row[col[lbl]] = amp
        rows.append(row)
    return labels, rows


def best_localized(states) -> list[DarkState]:
    """Kernel representatives maximizing l = min(lN, lL) within one level.

    Localization indices depend only on the support labels, so the best
    achievable l is found by intersecting the kernel with coordinate
    subspaces: keep only labels that fit left of site L-t (k1 <= L-N-t)
    and that all contain some witness site j >= t.  The search runs t
    downward and returns the canonical (reduced echelon) basis of the
    first nonempty intersection.
    """
    if not states:
        return []
    first = states[0]
    spec = fs.LatticeSpec(first.L, first.N)
    L, N = spec.L, spec.N
    if len(states) == 1:
        return list(states)
    labels, rows = _kernel_matrix(states)
    occ = {lbl: set(_occupations(spec, lbl)) for lbl in labels}
    basis = fs.build_basis(spec)
    for t in range(min(N, L - N), 0, -1):
        for j in range(t, L + 1):
            allowed = {
                lbl for lbl in labels
                if (not lbl or lbl[0] <= L - N - t) and j in occ[lbl]
            }
            excluded_cols = [i for i, lbl in enumerate(labels) if lbl not in allowed]
            # combinations c of kernel rows vanishing on every excluded label
            constraint = [[rows[i][c] for i in range(len(rows))] for c in excluded_cols]
            combos = nullspace(constraint, len(rows))
            if not combos:
                continue
            mixed = []
            for c in combos:
                vec = [
                    sum(c[i] * rows[i][k] for i in range(len(rows)))
                    for k in range(len(labels))
                ]
                mixed.append(vec)
            canonical, _ = rref(mixed)
            out = []
            for coeffs in canonical:
                comps = tuple(
                    (labels[k], coeffs[k]) for k in range(len(labels)) if coeffs[k]
                )
                if not comps:
                    continue
                vec = np.zeros(basis.dim, dtype=complex)
                for lbl, amp in comps:
                    vec[basis.index[fs.mask_of_label(spec, lbl)]] = float(amp)
                vec /= np.linalg.norm(vec)
                lN, lL, l = _localization(spec, comps)
                if l >= t:
                    out.append(DarkState(L, N, first.B, comps, vec, lN, lL, l))
            if out:
                return out
    return list(states)


@dataclass(frozen=True)
class ModePrediction:
    """Perturbative-order prediction for a dark-state pair coherence."""

    d1: DarkState
    d2: DarkState
    f: int
    l: int
    p: int


def predict_exponent(d1: DarkState, d2: DarkState) -> ModePrediction:
    """Gap exponent p = 2 min(l1, l2) + 2 for the pair |D1><D2|."""
    if (d1.L, d1.N) != (d2.L, d2.N):
        raise ConfigError("dark states live on different lattices")
    l = min(d1.l, d2.l)
    return ModePrediction(d1, d2, d1.B - d2.B, l, 2 * l + 2)


@dataclass(frozen=True)
class ExponentTableRow:
    """Maximal exponent p_m for one (|f|, N) cell, with maximizing pairs."""

    f_abs: int
    N: int
    p_m: int
    pairs: tuple               # ModePrediction entries achieving p_m, f > 0


def max_exponent_table(L: int, f_max: int, n_values=None) -> list[ExponentTableRow]:
    """Maximal gap exponents over canonical dark-state pairs.

    For each charge magnitude |f| <= f_max and particle number N (default
    2..L//2), lists p_m = max over ordered dark-state pairs with
    B1 - B2 = |f|, together with every maximizing pair.  Within a
    degenerate level the exponent is maximized over the whole kernel, so
    pairs are formed from best-localized representatives rather than raw
    echelon vectors.
    """
    if f_max < 1:
        raise ConfigError(f"need f_max >= 1, got {f_max}")
    rows = []
    for N in n_values if n_values is not None else range(2, L // 2 + 1):
        basis = fs.build_basis(fs.LatticeSpec(L, N))
        states = enumerate_dark_states(basis)
        by_level = {}
        for st in states:
            by_level.setdefault(st.B, []).append(st)
        by_level = {B: best_localized(sts) for B, sts in by_level.items()}
        for f in range(1, f_max + 1):
            preds = [
                predict_exponent(d1, d2)
                for B1 in by_level
                if B1 - f in by_level
                for d1 in by_level[B1]
                for d2 in by_level[B1 - f]
            ]
            if not preds:
                continue
            p_m = max(pr.p for pr in preds)
            best = tuple(pr for pr in preds if pr.p == p_m)
            rows.append(ExponentTableRow(f, N, p_m, best))
    rows.sort(key=lambda r: (r.f_abs, r.N))
    return rows


def format_exponent_table(rows, style="markdown") -> str:
    """Emit the exponent table as markdown or CSV."""
    if style == "markdown":
        lines = [
            "| D1, D2 | |f| | N | (lN, lL) of D1 | p_m |",
            "| --- | --- | --- | --- | --- |",
        ]
        for r in rows:
            pr = r.pairs[0]
            pair = f"{pr.d1.label()} , {pr.d2.label()}"
            lines.append(
                f"| {pair} | {r.f_abs} | {r.N} | ({pr.d1.lN}, {pr.d1.lL}) | {r.p_m} |"
            )
        return "\n".join(lines) + "\n"
    if style == "csv":
        lines = ["f_abs,N,p_m,lN_1,lL_1,d1,d2"]
        for r in rows:
            pr = r.pairs[0]
            lines.append(
                f'{r.f_abs},{r.N},{r.p_m},{pr.d1.lN},{pr.d1.lL},'
                f'"{pr.d1.label()}","{pr.d2.label()}"'
            )
        return "\n".join(lines) + "\n"
    raise ConfigError(f"unknown table style {style!r}")


def ladder_residuals(basis: fs.FockBasis, state: DarkState, n_max: int) -> list[float]:
    """Residuals of K (K^dag)^n |D> = n (K^dag)^(n-1) |D> for n = 1..n_max."""
    residuals = []
    tower = state.vector.copy()
    prev = None
    for n in range(1, n_max + 1):
        prev = tower
        tower = fs.apply_Kdag(basis, tower)
        lhs = fs.apply_K(basis, tower)
        residuals.append(float(np.linalg.norm(lhs - n * prev)))
    return residuals


def tower_coefficients(basis: fs.FockBasis, n: int) -> dict:
    """Expansion of (K^dag)^n |[]> over excitation labels."""
    vec = fs.basis_vector(basis, ())
    for _ in range(n):
        vec = fs.apply_Kdag(basis, vec)
    out = {}
    for pos, amp in enumerate(vec):
        if abs(amp) > 1e-12:
            lbl, _ = fs.excitation_of(basis, int(basis.states[pos]))
            out[lbl] = amp.real
    return out
