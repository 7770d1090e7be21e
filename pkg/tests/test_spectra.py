"""Sector-wise and full spectra, the imaginary ladder, and steady states."""

import json

import numpy as np
import pytest

from liouvsim import darkmodes as dm
from liouvsim import fockspace as fs
from liouvsim import liouville as lv
from liouvsim import spectra
from liouvsim.errors import ConfigError, DimensionCapError, NumericalError


def fermion_problem(L, N, gamma=1.0, delta=0.2, s=0.0, boundary=fs.OPEN):
    spec = fs.LatticeSpec(L, N, boundary)
    params = lv.FermionModelParams(spec, gamma=gamma, delta=delta, s=s)
    return lv.build_fermion_liouvillian(params)


def same_multiset(a, b, tol):
    """Set equality of eigenvalue clouds up to tol, both directions."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        return False
    gap_ab = np.abs(a[:, None] - b[None, :]).min(axis=1).max()
    gap_ba = np.abs(a[:, None] - b[None, :]).min(axis=0).max()
    return max(gap_ab, gap_ba) <= tol


def test_two_level_damping_spectrum():
    superop, decomp = fermion_problem(2, 1, delta=0.0)
    result = spectra.eig_sectorwise(decomp)
    got = sorted(result.values, key=lambda z: (z.real, z.imag))
    expected = sorted([0, -2, -1 + 1j, -1 - 1j], key=lambda z: (z.real, z.imag))
    assert np.allclose(got, expected, atol=1e-12)
    states = spectra.steady_states(decomp)
    assert len(states) == 1
    assert np.allclose(states[0], np.diag([1.0, 0.0]), atol=1e-12)


def test_sector_tags_and_conjugate_symmetry():
    _, decomp = fermion_problem(4, 2)
    result = spectra.eig_sectorwise(decomp)
    assert len(result) == decomp.d**2
    for f in decomp.charges:
        if -f not in decomp.charges:
            continue
        plus = result.in_sector(int(f)).values
        minus = np.conj(result.in_sector(int(-f)).values)
        assert same_multiset(plus, minus, 1e-9)


def test_conjugate_covariance_at_matrix_level():
    # Exact statement behind the spectral pairing: the -f block is the
    # +f block conjugated under the (i, j) -> (j, i) index swap.  This
    # holds to machine precision even where degenerate damped clusters
    # make eigenvalue comparisons ill-conditioned.
    _, decomp = fermion_problem(8, 3)
    d = decomp.d
    for f in decomp.charges:
        f = int(f)
        if -f not in [int(c) for c in decomp.charges]:
            continue
        idx_p = decomp.block_indices(f)
        idx_m = decomp.block_indices(-f)
        swapped = (idx_p % d) * d + idx_p // d
        rank_m = {int(pos): r for r, pos in enumerate(idx_m)}
        perm = np.array([rank_m[int(pos)] for pos in swapped])
        block_p = decomp.matrix[idx_p][:, idx_p].toarray()
        block_m = decomp.matrix[idx_m][:, idx_m].toarray()
        assert np.allclose(block_m[np.ix_(perm, perm)], block_p.conj(), atol=1e-14)


def test_full_spectrum_matches_sector_union_at_s0():
    superop, decomp = fermion_problem(4, 2)
    full = spectra.eig_full(superop)
    union = spectra.eig_sectorwise(decomp)
    assert same_multiset(full.values, union.values, 1e-8)


def test_rung_for_every_dark_pair_charge():
    _, decomp = fermion_problem(8, 3, delta=0.2)
    result = spectra.eig_sectorwise(decomp)
    ladder = spectra.imaginary_ladder(result, delta=0.2, f_max=6)
    basis = fs.build_basis(fs.LatticeSpec(8, 3))
    levels = sorted({st.B for st in dm.enumerate_dark_states(basis)})
    pair_charges = {b1 - b2 for b1 in levels for b2 in levels}
    for f in range(-6, 7):
        assert f in pair_charges
        entry = ladder.entry(f)
        assert entry.gap <= 1e-9
        assert abs(entry.shift) <= 1e-9
    assert ladder.missing == ()


def test_ladder_flags_absent_sectors():
    _, decomp = fermion_problem(4, 2)
    result = spectra.eig_sectorwise(decomp)
    ladder = spectra.imaginary_ladder(result, delta=0.2, f_max=8)
    assert set(ladder.missing) == {-8, -7, -6, -5, 5, 6, 7, 8}


def test_full_spectrum_dissipative_with_breaking_on():
    superop, _ = fermion_problem(4, 2, s=0.3)
    result = spectra.eig_full(superop)
    assert np.all(result.values.real <= 1e-9)
    assert np.min(np.abs(result.values)) <= 1e-9


def test_shift_invert_matches_dense():
    superop, _ = fermion_problem(6, 2, s=0.1)
    sigma = -0.2j
    dense = spectra.eig_full(superop).values
    targeted = spectra.shift_invert_modes(superop, sigma, k=6)
    for val in targeted.values:
        assert np.min(np.abs(dense - val)) <= 1e-9
    worst = spectra.verify_residuals(superop, targeted)
    assert worst <= 1e-9


def test_shift_invert_is_deterministic():
    superop, _ = fermion_problem(6, 2, s=0.1)
    a = spectra.shift_invert_modes(superop, -0.4j, k=4).values
    b = spectra.shift_invert_modes(superop, -0.4j, k=4).values
    assert np.array_equal(a, b)


def test_shift_invert_rejects_oversized_k():
    superop, _ = fermion_problem(4, 2)
    with pytest.raises(ConfigError):
        spectra.shift_invert_modes(superop, -0.2j, k=1000)


def test_residual_gate_trips_on_absurd_tolerance():
    superop, _ = fermion_problem(6, 2, s=0.1)
    with pytest.raises(NumericalError):
        spectra.shift_invert_modes(superop, -0.2j, k=4, residual_tol=1e-18)


def test_dimension_caps():
    superop, decomp = fermion_problem(6, 3)
    with pytest.raises(DimensionCapError):
        spectra.eig_sectorwise(decomp, block_cap=8)
    with pytest.raises(DimensionCapError):
        spectra.eig_full(superop, cap=10)


def test_steady_state_degeneracy_drops_with_delta():
    # All dark pairings are stationary at delta = 0; a detuning leaves
    # only the equal-level pairings, squaring per-level counts instead
    # of the total.
    basis = fs.build_basis(fs.LatticeSpec(6, 3))
    per_level = {}
    for st in dm.enumerate_dark_states(basis):
        per_level[st.B] = per_level.get(st.B, 0) + 1
    total = sum(per_level.values())
    _, decomp0 = fermion_problem(6, 3, delta=0.0)
    _, decomp = fermion_problem(6, 3, delta=0.2)
    states_resonant = spectra.steady_states(decomp0)
    states_detuned = spectra.steady_states(decomp)
    assert len(states_resonant) == total**2
    assert len(states_detuned) == sum(v**2 for v in per_level.values())
    assert len(states_detuned) < len(states_resonant)


def test_steady_states_are_hermitian_unit_trace():
    _, decomp = fermion_problem(6, 2, delta=0.2)
    for rho in spectra.steady_states(decomp):
        assert np.allclose(rho, rho.conj().T, atol=1e-12)
        tr = np.trace(rho).real
        assert abs(tr - 1.0) <= 1e-9 or abs(tr) <= 1e-9


def test_csv_is_deterministic_and_tagged():
    _, decomp = fermion_problem(4, 2)
    result = spectra.eig_sectorwise(decomp)
    text = spectra.spectrum_to_csv(result)
    assert text == spectra.spectrum_to_csv(result)
    header, *rows = text.strip().splitlines()
    assert header == "re,im,f"
    assert len(rows) == len(result)
    assert all(r.count(",") == 2 for r in rows)


def test_json_mirror_carries_metadata():
    superop, _ = fermion_problem(4, 2)
    result = spectra.eig_full(superop)
    payload = json.loads(
        spectra.spectrum_to_json(result, metadata={"L": 4, "N": 2, "s": 0.0})
    )
    assert payload["metadata"] == {"L": 4, "N": 2, "s": 0.0}
    assert len(payload["eigenvalues"]) == len(result)
    assert payload["eigenvalues"][0]["f"] is None


def test_ladder_csv_round_trip():
    _, decomp = fermion_problem(4, 2, delta=0.2)
    ladder = spectra.imaginary_ladder(spectra.eig_sectorwise(decomp), 0.2, 2)
    text = spectra.ladder_to_csv(ladder)
    header, *rows = text.strip().splitlines()
    assert header == "f,re,im,gap,shift"
    assert len(rows) == len(ladder.entries)
