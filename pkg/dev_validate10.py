"""Pair-resolved slow eigenvalues at the criterion-7 design point + stepping cost."""

import time

import numpy as np

from liouvsim import fockspace as fs
from liouvsim import dynamics as dyn
from liouvsim.darkmodes import enumerate_dark_states
from liouvsim.liouville import FermionModelParams, build_fermion_liouvillian
from liouvsim.perturbation import ModeWorkspace, build_mode, approx_eigenvalue

spec = fs.LatticeSpec(L=8, N=3)
basis = fs.build_basis(spec)
states = enumerate_dark_states(basis)
print("dark states (level, l, parts):")
for st in states:
    print(f"  level={st.level} l={st.l} B={st.B}")

params = FermionModelParams(spec=spec, gamma=1.0, delta=0.5, s=0.15)
ws = ModeWorkspace(params)

# series eigenvalue per pair of interest, with level labels
by_level = {}
for st in states:
    by_level.setdefault(st.level, []).append(st)

from liouvsim.darkmodes import best_localized

for la, lb in ((3, 2), (3, 0), (2, 0)):
    a = best_localized(by_level[la])[0]
    b = best_localized(by_level[lb])[0]
    mode = build_mode(a, b, params)
    lam = approx_eigenvalue(mode, "series", workspace=ws)
    f = la - lb
    print(
        f"pair ({la},{lb}) f={f} l={mode.l}: lam={lam.real:+.4e}{lam.imag:+.4f}i "
        f"gap={-lam.real:.3e} tau={1/(-2*lam.real):9.1f} "
        f"freq_off={abs(-lam.imag/(f*0.5)-1):.4%}"
    )

# stepping cost on this operator
superop, _ = build_fermion_liouvillian(params)
one_norm = float(np.abs(superop.matrix).sum(axis=0).max())
print(f"\n||L||_1 = {one_norm:.1f}, d2 = {superop.d**2}, nnz = {superop.matrix.nnz}")

init = dyn.prepare_initial(
    "darkpairs", basis, mixture=[((2, 3), 0.55), ((0, 3), 0.30), ((0, 2), 0.15)]
)
fams = dyn.FamilyWeights(basis, f_max=3)
print("initial Q:", fams.normalized(init.density))
print("initial P:", fams.literal(init.density))

obs = fams.observables()
t0 = time.time()
grid = np.linspace(0.0, 100.0, 81)
traj = dyn.propagate_stepping(superop, init.density, grid, obs)
dt_cost = time.time() - t0
print(
    f"stepping to t=100 (81 pts): {dt_cost:.1f}s -> est for t=2400: "
    f"{dt_cost * 24:.0f}s  trace_dev={traj.trace_dev:.2e}"
)
