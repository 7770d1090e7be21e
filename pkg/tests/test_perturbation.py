"""Series coefficients, continued-series gap estimates, and power-law fits."""

from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from liouvsim import perturbation as pt
from liouvsim.errors import ConfigError
from liouvsim.fockspace import LatticeSpec
from liouvsim.liouville import FermionModelParams

GAMMA, DELTA = 1.0, 0.2


def make_params(L, N, s=0.0):
    return FermionModelParams(
        spec=LatticeSpec(L=L, N=N), gamma=GAMMA, delta=DELTA, s=s
    )


@pytest.fixture(scope="module")
def ws83():
    return pt.ModeWorkspace(make_params(8, 3))


@pytest.fixture(scope="module")
def ws84():
    return pt.ModeWorkspace(make_params(8, 4))


def deep_pair(ws, f):
    """The rung-f pair with the largest localization cutoff."""
    return max(ws.rung_pairs(f), key=lambda p: min(p[0].l, p[1].l))


# --- closed-form coefficients -------------------------------------------


def test_alpha_seed_is_unity():
    assert pt.alpha_coefficient(0, 0, GAMMA, DELTA, 0.3) == 1


def test_alpha_first_order_closed_form():
    s = 0.2
    a = (1 - 1j) * GAMMA - 1j * DELTA
    b = (1 + 1j) * GAMMA + 1j * DELTA
    assert pt.alpha_coefficient(1, 0, GAMMA, DELTA, s) == pytest.approx(1j * s / a)
    assert pt.alpha_coefficient(1, 1, GAMMA, DELTA, s) == pytest.approx(-1j * s / b)
    assert pt.alpha_coefficient(2, 1, GAMMA, DELTA, s) == pytest.approx(
        s**2 / (a * b)
    )


def test_alpha_rejects_bad_orders():
    with pytest.raises(ConfigError):
        pt.alpha_coefficient(2, 3, GAMMA, DELTA, 0.1)
    with pytest.raises(ConfigError):
        pt.alpha_coefficient(1, -1, GAMMA, DELTA, 0.1)


# --- order-by-order recurrence ------------------------------------------


def test_recurrence_holds_up_to_cutoff(ws83):
    d1, d2 = deep_pair(ws83, 2)  # cutoff l = 1
    mode = pt.build_mode(d1, d2, make_params(8, 3, s=0.05))
    residuals = pt.recurrence_residuals(mode, workspace=ws83)
    assert len(residuals) == mode.l
    assert max(residuals) <= 1e-10


def test_series_stops_at_cutoff(ws83):
    d1, d2 = deep_pair(ws83, 2)
    base = pt.build_mode(d1, d2, make_params(8, 3, s=0.05))
    with pytest.raises(ConfigError):
        pt.build_mode(d1, d2, make_params(8, 3, s=0.05), l=base.l + 1)


def test_expansion_identities_termwise(ws83):
    d1, d2 = deep_pair(ws83, 2)
    mode = pt.build_mode(d1, d2, make_params(8, 3, s=0.05))
    for n in range(1, mode.l + 1):
        assert max(pt.expansion_identity_residuals(mode, n, workspace=ws83)) <= 1e-10


def test_distinct_pair_towers_trace_orthogonal(ws83):
    pairs = ws83.rung_pairs(2)
    run = make_params(8, 3, s=0.05)
    m1 = pt.build_mode(*pairs[0], run)
    m2 = pt.build_mode(*pairs[1], run)
    for n in range(m1.l + 1):
        for m in range(m2.l + 1):
            val = pt.trace_pairing(m1.order_matrix(n), m2.order_matrix(m))
            assert abs(val) <= 1e-13


# --- dual left kernel and continued series -------------------------------


def test_left_rung_basis_biorthonormal(ws84):
    # nine pairs at this rung, including multi-pair level groups
    dual = ws84.left_rung_basis(2)
    outers = ws84._rung_outers(2)
    gram = dual.conj().T @ outers
    assert np.max(np.abs(gram - np.eye(gram.shape[0]))) <= 1e-10


def test_series_defects_vanish_below_splitting_order(ws83):
    d1, d2 = deep_pair(ws83, 2)
    mode = pt.build_mode(d1, d2, make_params(8, 3, s=0.05))
    defects = pt.series_defects(mode, ws83)
    assert len(defects) == 2 * mode.l + 2
    assert np.max(np.abs(defects[:-1])) <= 1e-14
    assert 5e-9 <= -defects[-1].real <= 5e-8


def test_series_matches_exact_cluster(ws83):
    pert = pt.rung_eigenvalues(ws83, 2, 0.05, method="perturbative")
    exact = pt.rung_eigenvalues(ws83, 2, 0.05, method="exact")
    sg = np.sort(-pert.real)
    eg = np.sort(-exact.real)
    assert len(sg) == len(eg) == 4
    assert np.max(np.abs(sg - eg) / eg) <= 0.10


def test_degenerate_class_matches_exact_cluster(ws84):
    # all six pairs at this rung share a cutoff and split together, so
    # their gaps come from one secular matrix
    pert = pt.rung_eigenvalues(ws84, 4, 0.04, method="perturbative")
    exact = pt.rung_eigenvalues(ws84, 4, 0.04, method="exact")
    sg = np.sort(-pert.real)
    eg = np.sort(-exact.real)
    assert len(sg) == len(eg) == 6
    assert np.max(np.abs(sg - eg) / eg) <= 0.10


def test_class_eigenvalues_cached(ws83):
    first = pt.class_eigenvalues(ws83, 2, 0.05, 1)
    again = pt.class_eigenvalues(ws83, 2, 0.05, 1)
    assert first is again


def test_series_recovers_unperturbed_limit(ws83):
    d1, d2 = deep_pair(ws83, 2)
    mode = pt.build_mode(d1, d2, make_params(8, 3, s=1e-4))
    lam = pt.approx_eigenvalue(mode, workspace=ws83)
    assert abs(lam + 1j * DELTA * 2) <= 1e-6


def test_reference_estimators_keep_documented_failures(ws83):
    d1, d2 = deep_pair(ws83, 2)
    mode = pt.build_mode(d1, d2, make_params(8, 3, s=0.05))
    series_gap = -pt.approx_eigenvalue(mode, workspace=ws83).real
    # bilinear trace pairing: every contributing trace vanishes for f > l
    trace = pt.approx_eigenvalue(mode, method="trace", workspace=ws83)
    assert abs(trace + 1j * DELTA * 2) <= 1e-12
    # sesquilinear quotient saturates at s^(2l), overshooting the gap
    rayleigh_gap = -pt.approx_eigenvalue(mode, method="rayleigh", workspace=ws83).real
    assert rayleigh_gap > 1e3 * series_gap


def test_unknown_estimator_rejected(ws83):
    d1, d2 = deep_pair(ws83, 2)
    mode = pt.build_mode(d1, d2, make_params(8, 3, s=0.05))
    with pytest.raises(ConfigError):
        pt.approx_eigenvalue(mode, method="secret", workspace=ws83)


def test_rung_requires_pairs():
    ws = pt.ModeWorkspace(make_params(8, 2))
    with pytest.raises(ConfigError):
        pt.rung_eigenvalues(ws, 1, 0.05)
    with pytest.raises(ConfigError):
        pt.rung_eigenvalues(ws, 2, 0.05, method="dense")


# --- power-law fits -------------------------------------------------------


def test_fit_exponent_recovers_exact_power():
    grid = np.logspace(-2, -0.8, 12)
    samples = [(s, 3.7e-4 * s**6) for s in grid]
    fit = pt.fit_exponent(samples, (grid[0], grid[-1]))
    assert fit.p_hat == pytest.approx(6.0, abs=1e-10)
    assert fit.n_used == 12
    assert fit.rms_residual <= 1e-12


def test_fit_exponent_tolerates_small_noise():
    rng = np.random.default_rng(7)
    grid = np.logspace(-2, -0.8, 12)
    samples = [
        (s, 2e-3 * s**2 * float(np.exp(rng.normal(0, 0.01)))) for s in grid
    ]
    fit = pt.fit_exponent(samples, (grid[0], grid[-1]))
    assert 1.9 <= fit.p_hat <= 2.1
    assert fit.stderr < 0.05


def test_fit_exponent_needs_enough_points():
    samples = [(s, s**2) for s in (0.01, 0.02, 0.04, 0.08)]
    with pytest.raises(ConfigError):
        pt.fit_exponent(samples, (0.005, 0.1))
    many = [(s, s**2) for s in np.logspace(-2, -1, 8)]
    with pytest.raises(ConfigError):
        pt.fit_exponent(many, (0.5, 0.9))


@settings(max_examples=25, deadline=None)
@given(
    p=st.sampled_from([2, 4, 6, 8]),
    coeff=st.floats(min_value=1e-6, max_value=1e3),
)
def test_fit_exponent_power_law_property(p, coeff):
    grid = np.logspace(-2, -1, 8)
    samples = [(s, coeff * s**p) for s in grid]
    fit = pt.fit_exponent(samples, (grid[0], grid[-1]))
    assert fit.p_hat == pytest.approx(p, abs=1e-8)


def test_scaling_sweep_series_deep_branch(ws83):
    d1, d2 = deep_pair(ws83, 2)
    grid = [s for s in np.logspace(-2, -0.8, 12) if 0.02 <= s <= 0.08]
    fit = pt.scaling_sweep(
        d1, d2, make_params(8, 3), s_grid=grid, window=(0.02, 0.08)
    )
    assert abs(fit.fit.p_hat - 4.0) <= 0.1
    assert fit.method == "perturbative"
    assert not fit.excluded  # series gaps stay in at any size
    assert fit.f == 2


def test_scaling_sweep_exact_method():
    params = make_params(8, 2)
    ws = pt.ModeWorkspace(params)
    d1, d2 = ws.rung_pairs(2)[0]
    grid = [s for s in np.logspace(-2, -0.8, 12) if s <= 0.0316]
    fit = pt.scaling_sweep(
        d1, d2, params, s_grid=grid, method="exact", window=(0.01, 0.0316)
    )
    assert abs(fit.fit.p_hat - 2.0) <= 0.1


def test_scaling_sweep_input_guards(ws83):
    d1, d2 = deep_pair(ws83, 2)
    with pytest.raises(ConfigError):
        pt.scaling_sweep(d1, d2, make_params(8, 3), method="guess")
    with pytest.raises(ConfigError):
        pt.scaling_sweep(d1, d2, make_params(8, 3), s_grid=[0.0, 0.1])


def test_sweep_emitters_deterministic(ws83):
    d1, d2 = deep_pair(ws83, 2)
    grid = [s for s in np.logspace(-2, -0.8, 12) if 0.02 <= s <= 0.08]
    fit = pt.scaling_sweep(
        d1, d2, make_params(8, 3), s_grid=grid, window=(0.02, 0.08)
    )
    csv_text = pt.sweep_to_csv(fit)
    lines = csv_text.strip().splitlines()
    assert lines[0] == "s,f,gap,shift,method"
    assert len(lines) == len(fit.samples) + 1
    s0, f0, gap0, _, meth = lines[1].split(",")
    assert float(s0) == fit.samples[0][0]
    assert int(f0) == 2 and meth == "perturbative"
    assert float(gap0) == fit.samples[0][1]
    import json

    payload = json.loads(pt.fit_to_json(fit))
    assert payload["p_hat"] == fit.fit.p_hat
    assert payload["window"] == [0.02, 0.08]
    assert len(payload["samples"]) == len(fit.samples)
    assert pt.fit_to_json(fit) == pt.fit_to_json(fit)
