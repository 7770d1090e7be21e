"""Initial states, propagation routes, family weights, oscillation analysis."""

import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from liouvsim import dynamics as dyn
from liouvsim import fockspace as fs
from liouvsim import liouville as lv
from liouvsim.darkmodes import enumerate_dark_states
from liouvsim.errors import ConfigError, DimensionCapError, NumericalError


def fermion_setup(L, N, gamma=1.0, delta=0.2, s=0.0, boundary=fs.OPEN):
    params = lv.FermionModelParams(fs.LatticeSpec(L, N, boundary), gamma, delta, s)
    superop, _ = lv.build_fermion_liouvillian(params)
    return fs.build_basis(params.spec), superop


# --- initial states ---------------------------------------------------------


def test_uniform_superposition_is_pure_and_flat():
    basis, _ = fermion_setup(4, 2)
    state = dyn.prepare_initial("uniform_excitation_superposition", basis)
    rho = state.density
    assert abs(np.trace(rho) - 1.0) < 1e-14
    assert np.allclose(rho, rho.conj().T)
    assert np.allclose(rho, np.full((basis.dim, basis.dim), 1.0 / basis.dim))
    evals = np.linalg.eigvalsh(rho)
    assert abs(evals[-1] - 1.0) < 1e-12 and np.all(evals[:-1] < 1e-12)


def test_kind_alias_matches_canonical_name():
    basis, _ = fermion_setup(4, 2)
    a = dyn.prepare_initial("uniform", basis)
    b = dyn.prepare_initial("uniform_excitation_superposition", basis)
    assert np.array_equal(a.density, b.density)


def test_custom_state_is_validated():
    good = np.diag([0.25, 0.75]).astype(complex)
    state = dyn.prepare_initial("custom", density=2.0 * good)  # renormalized
    assert abs(np.trace(state.density) - 1.0) < 1e-14
    with pytest.raises(ConfigError):
        dyn.prepare_initial("custom", density=np.array([[0.5, 1.0], [0.0, 0.5]]))
    with pytest.raises(ConfigError):
        dyn.prepare_initial("custom", density=np.diag([1.5, -0.5]).astype(complex))
    with pytest.raises(ConfigError):
        dyn.prepare_initial("custom")
    with pytest.raises(ConfigError):
        dyn.prepare_initial("no_such_kind", density=good)


def test_default_dark_levels_cover_small_differences():
    # frozen from the level structure: L=8,N=3 carries dark states at
    # levels {0,2,3,4,5,6}; the smallest 4-subset with pairwise
    # differences exactly {1,2,3} is (2,3,4,5)
    basis, _ = fermion_setup(8, 3)
    assert dyn.default_dark_levels(basis) == (2, 3, 4, 5)
    for L, N in [(6, 3), (8, 4), (10, 5)]:
        b = fs.build_basis(fs.LatticeSpec(L, N))
        levels = dyn.default_dark_levels(b)
        have = {st.level for st in enumerate_dark_states(b)}
        assert set(levels) <= have
        diffs = {abs(a - c) for a in levels for c in levels if a != c}
        assert diffs == {1, 2, 3}


def test_default_dark_levels_unreachable_raises():
    # L=4,N=2 has dark states only at levels 0 and 2: no subset spans
    # differences {1,2,3}
    basis, _ = fermion_setup(4, 2)
    with pytest.raises(ConfigError):
        dyn.default_dark_levels(basis)


def test_dark_pair_mixture_is_convex_combination():
    basis, _ = fermion_setup(8, 3)
    pure_a = dyn.prepare_initial("darkpairs", basis, levels=(2, 3))
    pure_b = dyn.prepare_initial("darkpairs", basis, levels=(4, 6))
    mixed = dyn.prepare_initial(
        "darkpairs", basis, mixture=[((2, 3), 0.3), ((4, 6), 0.7)]
    )
    assert np.allclose(
        mixed.density, 0.3 * pure_a.density + 0.7 * pure_b.density, atol=1e-14
    )


def test_dark_pair_argument_conflicts():
    basis, _ = fermion_setup(8, 3)
    with pytest.raises(ConfigError):
        dyn.prepare_initial(
            "darkpairs", basis, levels=(2, 3), mixture=[((2, 3), 1.0)]
        )
    with pytest.raises(ConfigError):
        dyn.prepare_initial("darkpairs", basis, mixture=[((2, 3), 0.4)])
    with pytest.raises(ConfigError):
        dyn.prepare_initial("darkpairs")


# --- time grids --------------------------------------------------------------


def test_log_time_grid_density_and_endpoints():
    grid = dyn.log_time_grid(1.0, 1e3, per_decade=10)
    assert abs(grid[0] - 1.0) < 1e-12 and abs(grid[-1] - 1e3) < 1e-9
    assert len(grid) == 31
    assert np.all(np.diff(grid) > 0)
    with pytest.raises(ConfigError):
        dyn.log_time_grid(0.0, 1.0)
    with pytest.raises(ConfigError):
        dyn.log_time_grid(10.0, 1.0)


def test_oscillation_window_grid_is_uniform():
    grid = dyn.oscillation_window_grid(100.0, 2.5, n_periods=4, per_period=8)
    assert len(grid) == 33
    assert abs(grid[0] - 100.0) < 1e-12 and abs(grid[-1] - 110.0) < 1e-12
    assert np.allclose(np.diff(grid), 2.5 / 8)
    with pytest.raises(ConfigError):
        dyn.oscillation_window_grid(1.0, -2.0)


# --- propagation routes -------------------------------------------------------


def test_sectorwise_matches_stepping_including_late_times():
    # decay gap is 1.0 here, so damped content at t=150 is ~ e^-150:
    # the peripheral synthesis and full stepping must agree to rounding
    basis, superop = fermion_setup(4, 2, delta=0.3)
    state = dyn.prepare_initial("uniform", basis)
    times = [0.0, 0.8, 3.7, 15.0, 150.0]
    obs = {
        "bond": dyn.bond_correlator(basis, 2, 3),
        "drift": dyn.excitation_offset(basis),
    }
    spectral = dyn.propagate_spectral(superop, state.density, times, obs)
    stepped = dyn.propagate_stepping(superop, state.density, times, obs)
    assert spectral.meta["route"] == "spectral-sectorwise"
    assert stepped.meta["route"] == "stepping"
    for name in obs:
        assert np.max(np.abs(spectral.series[name] - stepped.series[name])) < 1e-9
    # t=0 reproduces the initial expectation exactly on both routes
    want = float(np.trace(obs["bond"].toarray() @ state.density).real)
    assert abs(spectral.series["bond"][0] - want) < 1e-12
    assert abs(stepped.series["bond"][0] - want) < 1e-12
    assert spectral.trace_dev < 1e-9 and spectral.min_eig > -1e-9


def test_full_dense_route_on_sector_coupling_operator():
    basis, superop = fermion_setup(4, 2, delta=0.3, s=0.3)
    state = dyn.prepare_initial("uniform", basis)
    times = [0.0, 0.7, 3.1, 12.5]
    obs = {"bond": dyn.bond_correlator(basis, 1, 2)}
    spectral = dyn.propagate_spectral(superop, state.density, times, obs)
    stepped = dyn.propagate_stepping(superop, state.density, times, obs)
    assert spectral.meta["route"] == "spectral-full"
    assert np.max(np.abs(spectral.series["bond"] - stepped.series["bond"])) < 1e-8


def test_sectorwise_request_rejected_when_sectors_couple():
    basis, superop = fermion_setup(4, 2, s=0.3)
    state = dyn.prepare_initial("uniform", basis)
    with pytest.raises(ConfigError):
        dyn.propagate_spectral(
            superop, state.density, [0.0, 1.0], {}, sectorwise=True
        )


def test_dark_coherence_is_exact_pure_phase_at_any_time():
    # N=3 spin ring: the all-up and one-flip states are both dark with
    # energy difference 2U, so from their coherent superposition
    # <sigma^x_1>(t) = cos(2 U t) exactly -- including t ~ 1e6
    params = lv.SpinModelParams(N=3, U=1.0, gamma=1.0)
    superop = lv.build_spin_liouvillian(params)
    phi = np.zeros(8, dtype=complex)
    phi[0b111] = phi[0b110] = 1.0 / np.sqrt(2.0)
    state = dyn.prepare_initial("custom", density=np.outer(phi, phi.conj()))
    times = [0.0, 0.3, 2.0, 97.0, 1e5 + 0.17, 1e6 + 2.71]
    traj = dyn.propagate_spectral(
        superop, state.density, times, {"sx1": dyn.spin_x_observable(3, 1)}
    )
    assert traj.meta["route"] == "spectral-sectorwise"
    want = np.cos(2.0 * np.asarray(times))
    assert np.max(np.abs(traj.series["sx1"] - want)) < 1e-6
    assert traj.trace_dev < 1e-12 and traj.herm_dev < 1e-9


def test_family_weight_oscillates_at_level_difference_frequency():
    delta = 0.4
    basis, superop = fermion_setup(6, 3, delta=delta)
    state = dyn.prepare_initial("darkpairs", basis, levels=(2, 3))
    weights = dyn.FamilyWeights(basis)
    period = 2 * np.pi / delta
    window = dyn.oscillation_window_grid(1e5, period, n_periods=4, per_period=64)
    times = np.concatenate(([0.0], window))
    traj = dyn.propagate_spectral(
        superop, state.density, times, weights.observables()
    )
    rep = dyn.oscillation_report(
        traj.times, traj.series["P1"], (window[0], window[-1]), delta=delta
    )
    assert rep.found and rep.f_inferred == 1
    assert abs(rep.frequency - delta / (2 * np.pi)) < 0.005 * delta / (2 * np.pi)
    # normalized weights are conserved under the symmetric evolution
    q1 = traj.series["Q1"]
    assert np.max(np.abs(q1 - q1[0])) < 1e-9
    assert q1[0] > 0.1


@settings(deadline=None, max_examples=8)
@given(
    delta=st.floats(0.05, 0.5),
    w=st.floats(0.1, 0.9),
    t_final=st.floats(5.0, 40.0),
)
def test_normalized_weights_conserved_at_symmetric_point(delta, w, t_final):
    basis, superop = fermion_setup(6, 3, delta=delta)
    state = dyn.prepare_initial(
        "darkpairs", basis, mixture=[((0, 2), w), ((2, 3), 1.0 - w)]
    )
    weights = dyn.FamilyWeights(basis)
    traj = dyn.propagate_stepping(
        superop, state.density, [0.0, 0.4 * t_final, t_final],
        weights.observables(),
    )
    for f in weights.f_values:
        q = traj.series[f"Q{f}"]
        assert np.max(np.abs(q - q[0])) < 1e-9


def test_sector_block_cap_guard(monkeypatch):
    basis, superop = fermion_setup(4, 2)
    state = dyn.prepare_initial("uniform", basis)
    monkeypatch.setattr(dyn, "BLOCK_CAP", 4)
    with pytest.raises(DimensionCapError):
        dyn.propagate_spectral(superop, state.density, [1.0], {})


def test_full_dense_cap_guard(monkeypatch):
    basis, superop = fermion_setup(4, 2, s=0.2)
    state = dyn.prepare_initial("uniform", basis)
    monkeypatch.setattr(dyn, "FULL_CAP", 10)
    with pytest.raises(DimensionCapError):
        dyn.propagate_spectral(superop, state.density, [1.0], {})


def test_stepping_budget_guard():
    basis, superop = fermion_setup(4, 2)
    state = dyn.prepare_initial("uniform", basis)
    with pytest.raises(DimensionCapError):
        dyn.propagate_stepping(superop, state.density, [1e9], {})


def test_propagate_dispatch_and_fallback(monkeypatch):
    basis, superop = fermion_setup(4, 2)
    state = dyn.prepare_initial("uniform", basis)
    obs = {"n1": dyn.site_occupation(basis, 1)}
    forced = dyn.propagate(superop, state.density, [0.0, 2.0], obs,
                           method="stepping")
    assert forced.meta["route"] == "stepping"
    auto = dyn.propagate(superop, state.density, [0.0, 2.0], obs)
    assert auto.meta["route"] == "spectral-sectorwise"
    assert np.allclose(forced.series["n1"], auto.series["n1"], atol=1e-10)
    monkeypatch.setattr(dyn, "BLOCK_CAP", 4)  # spectral now refuses
    fallen = dyn.propagate(superop, state.density, [0.0, 2.0], obs)
    assert fallen.meta["route"] == "stepping"
    with pytest.raises(ConfigError):
        dyn.propagate(superop, state.density, [0.0], obs, method="bogus")


def test_negative_or_empty_times_rejected():
    basis, superop = fermion_setup(4, 2)
    state = dyn.prepare_initial("uniform", basis)
    for times in ([-1.0, 2.0], []):
        with pytest.raises(ConfigError):
            dyn.propagate_spectral(superop, state.density, times, {})
        with pytest.raises(ConfigError):
            dyn.propagate_stepping(superop, state.density, times, {})


# --- observables --------------------------------------------------------------


def test_bond_correlator_is_hermitian_hop_pair():
    basis, _ = fermion_setup(4, 2)
    bond = dyn.bond_correlator(basis, 2, 3).toarray()
    hop = fs.hop_matrix(basis, 2, 3).toarray()
    assert np.allclose(bond, hop + hop.conj().T)
    assert np.allclose(bond, bond.conj().T)


def test_ranged_hop_sums_all_bonds_of_that_range():
    basis, _ = fermion_setup(5, 2)
    total = dyn.ranged_hop_observable(basis, 2).toarray()
    manual = sum(
        dyn.bond_correlator(basis, j, j + 2).toarray() for j in range(1, 4)
    )
    assert np.allclose(total, manual)
    with pytest.raises(ConfigError):
        dyn.ranged_hop_observable(basis, 0)
    with pytest.raises(ConfigError):
        dyn.ranged_hop_observable(basis, 5)


def test_excitation_offset_vanishes_on_ground_level():
    basis, _ = fermion_setup(5, 2)
    offset = dyn.excitation_offset(basis).toarray()
    levels = np.array(
        [fs.excitation_of(basis, int(m))[1] for m in basis.states]
    ) - basis.spec.N * (basis.spec.N + 1) // 2
    assert np.allclose(offset, np.diag(levels.astype(complex)))
    assert levels.min() == 0


def test_spin_x_flips_least_significant_site():
    op = dyn.spin_x_observable(3, 1)
    assert op.shape == (8, 8)
    for m in range(8):
        partner = m ^ 1  # site 1 lives in bit 0
        assert op[m, partner] == 1.0
        assert np.count_nonzero(op[m]) == 1
    with pytest.raises(ConfigError):
        dyn.spin_x_observable(3, 4)


# --- family weights ------------------------------------------------------------


def test_family_weights_keys_and_truncation():
    basis, _ = fermion_setup(6, 3)
    weights = dyn.FamilyWeights(basis)
    assert weights.f_values == [1, 2, 3]  # dark levels are {0, 2, 3}
    truncated = dyn.FamilyWeights(basis, f_max=2)
    assert truncated.f_values == [1, 2]
    names = set(dyn.FamilyWeights(basis, f_max=1).observables())
    assert names == {"P1", "Q1"}


def test_family_weights_see_only_populated_differences():
    basis, _ = fermion_setup(8, 3)
    state = dyn.prepare_initial("darkpairs", basis, levels=(2, 5))
    weights = dyn.FamilyWeights(basis)
    q = weights.normalized(state.density)
    assert q[3] > 0.1
    assert q[1] < 1e-12 and q[2] < 1e-12
    p = weights.literal(state.density)
    assert abs(p[3]) > 0.1


# --- oscillation analysis -------------------------------------------------------


@settings(deadline=None, max_examples=20)
@given(
    freq=st.floats(0.25, 4.0),
    amp=st.floats(0.1, 8.0),
    phase=st.floats(0.0, 2 * np.pi),
)
def test_pure_tone_recovered(freq, amp, phase):
    period = 1.0 / freq
    times = np.linspace(50.0, 50.0 + 9 * period, 512)
    values = amp * np.cos(2 * np.pi * freq * times + phase) + 0.7
    rep = dyn.oscillation_report(
        times, values, (times[0], times[-1]), delta=2 * np.pi * freq / 3
    )
    assert rep.found
    assert abs(rep.frequency - freq) < 0.003 * freq
    assert abs(rep.amplitude - amp) < 0.02 * amp
    assert rep.f_inferred == 3 and rep.f_offset < 0.01


def test_dominant_tone_wins_in_mixture():
    times = np.linspace(0.0, 40.0, 1024)
    values = 1.0 * np.cos(2 * np.pi * 0.75 * times) + 0.25 * np.cos(
        2 * np.pi * 0.25 * times
    )
    rep = dyn.oscillation_report(
        times, values, (0.0, 40.0), delta=2 * np.pi * 0.25
    )
    assert rep.found and rep.f_inferred == 3


def test_flat_series_reports_no_oscillation():
    times = np.linspace(0.0, 10.0, 64)
    rep = dyn.oscillation_report(times, np.full(64, 3.7), (0.0, 10.0))
    assert not rep.found
    assert rep.frequency is None


def test_oscillation_window_guards():
    times = np.linspace(0.0, 10.0, 64)
    values = np.cos(times)
    with pytest.raises(ConfigError):
        dyn.oscillation_report(times, values, (0.0, 0.5))  # < 16 points
    logt = np.logspace(0, 2, 64)
    with pytest.raises(ConfigError):
        dyn.oscillation_report(logt, np.cos(logt), (1.0, 100.0))


# --- emitters --------------------------------------------------------------------


def test_csv_meta_and_plot_emitters():
    basis, superop = fermion_setup(4, 2)
    state = dyn.prepare_initial("uniform", basis)
    obs = {
        "n1": dyn.site_occupation(basis, 1),
        "bond": dyn.bond_correlator(basis, 2, 3),
    }
    traj = dyn.propagate_stepping(superop, state.density, [0.0, 1.0, 2.0], obs)
    csv_text = dyn.trajectory_to_csv(traj)
    lines = csv_text.strip().split("\n")
    assert lines[0] == "t,bond,n1"
    assert len(lines) == 4
    for k, line in enumerate(lines[1:]):
        t, bond, n1 = (float(x) for x in line.split(","))
        assert t == traj.times[k]
        assert bond == traj.series["bond"][k]  # repr round-trips exactly
        assert n1 == traj.series["n1"][k]
    meta = json.loads(dyn.trajectory_meta_json(traj))
    assert meta["observables"] == ["bond", "n1"]
    assert meta["n_times"] == 3
    assert meta["trace_dev"] < 1e-9
    script = dyn.plot_script(traj, "run.csv", logx=False)
    assert "plot" in script and "run.csv" in script and "using 1:2" in script
