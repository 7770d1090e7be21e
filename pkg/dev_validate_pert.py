"""Dev-only: validate perturbation estimators before freezing tests."""
import time

import numpy as np

from liouvsim import fockspace as fs
from liouvsim.darkmodes import enumerate_dark_states
from liouvsim.liouville import FermionModelParams
from liouvsim.perturbation import (
    ModeWorkspace,
    alpha_coefficient,
    approx_eigenvalue,
    build_mode,
    expansion_identity_residuals,
    recurrence_residuals,
    scaling_sweep,
    fit_exponent,
)
from liouvsim.spectra import eig_full
from liouvsim.liouville import build_fermion_liouvillian


def find(states, level, parts=None):
    offset = states[0].N * (states[0].N + 1) // 2
    cands = [d for d in states if d.B - offset == level]
    if parts is None:
        assert len(cands) == 1, [c.components for c in cands]
        return cands[0]
    for c in cands:
        if set(c.components) == set(parts):
            return c
    raise SystemExit(f"no state at level {level} with parts {parts}")


t0 = time.time()

# --- alpha example
a = alpha_coefficient(1, 0, 1.0, 0.2, 0.2)
print("alpha_1^(0) =", a, "expected", 0.2j / (1 - 1.2j))

# --- L=8 N=3 pair (level2, sea): l=1, f=2
spec = fs.LatticeSpec(8, 3)
basis = fs.build_basis(spec)
dark = enumerate_dark_states(basis)
d_sea = find(dark, 0)
d2lvl = find(dark, 2)
print("levels present:", sorted(d.B for d in dark))
print("d2 l =", d2lvl.l, " sea l =", d_sea.l)

params = FermionModelParams(spec, gamma=1.0, delta=0.2, s=0.05)
ws = ModeWorkspace(params)
mode = build_mode(d2lvl, d_sea, params)
print("mode l =", mode.l, "f =", mode.f)
print("recurrence residuals:", recurrence_residuals(mode, ws))
for n in range(1, mode.l + 1):
    print("identity residuals n=%d:" % n, expansion_identity_residuals(mode, n, ws))

# exact eigenvalue by dense eig (d^2 = 3136)
superop, decomp = build_fermion_liouvillian(params)
res = eig_full(superop, cap=6000)
f = mode.f
lam_all = res.values
# nearest to -i*delta*f with Re > -0.2
cand = [l for l in lam_all if abs(l.imag + params.delta * f) < 0.1 and l.real > -0.2]
cand.sort(key=lambda l: -l.real)
print("dense candidates near rung:", cand[:4])
exact = cand[0]
for meth in ("ritz", "rayleigh", "trace"):
    est = approx_eigenvalue(mode, method=meth, workspace=ws)
    print(f"  {meth:9s}: {est:.6e}  gap={-est.real:.6e} exact_gap={-exact.real:.6e} "
          f"rel={abs(est.real - exact.real)/abs(exact.real):.3f}")
print("t =", time.time() - t0)

# --- slopes: sweep s over [0.01, 0.1], compare methods
grid = np.logspace(-2, -1, 8)
for meth in ("ritz", "rayleigh", "trace"):
    samples = []
    for s in grid:
        run = FermionModelParams(spec, gamma=1.0, delta=0.2, s=float(s))
        m = build_mode(d2lvl, d_sea, run)
        lam = approx_eigenvalue(m, method=meth, workspace=ws)
        samples.append((float(s), -lam.real))
    good = [(s, g) for s, g in samples if g > 1e-14]
    if len(good) >= 5:
        fit = fit_exponent(good, (grid[0], grid[-1]))
        print(f"slope[{meth}] = {fit.p_hat:.3f} +- {fit.stderr:.3f} (expect 4)")
    else:
        print(f"slope[{meth}]: only {len(good)} usable points", samples[:3])
print("t =", time.time() - t0)
