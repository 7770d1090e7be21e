"""Dev-only: cluster-level cross-validation + slopes at L=8."""
import time

import numpy as np

from liouvsim import fockspace as fs
from liouvsim.liouville import FermionModelParams, build_fermion_liouvillian
from liouvsim.perturbation import ModeWorkspace, rung_eigenvalues, fit_exponent
from liouvsim.spectra import eig_full

t0 = time.time()

for N in (2, 3):
    spec = fs.LatticeSpec(8, N)
    params = FermionModelParams(spec, gamma=1.0, delta=0.2, s=0.05)
    ws = ModeWorkspace(params)
    superop, _ = build_fermion_liouvillian(params)
    res = eig_full(superop, cap=6000)
    lam = res.values
    fmax = max(d.B for d in ws.dark_states()) - min(d.B for d in ws.dark_states())
    print(f"== L=8 N={N}  dense t={time.time()-t0:.1f}s")
    for f in range(1, fmax + 1):
        if not ws.rung_pairs(f):
            continue
        dense = lam[(np.abs(lam.imag + 0.2 * f) < 0.1) & (lam.real > -0.5)]
        dense = dense[np.argsort(-dense.real)]
        ritz = rung_eigenvalues(ws, f, 0.05, "perturbative")
        ex = rung_eigenvalues(ws, f, 0.05, "exact")
        ok = len(dense) == len(ritz)
        rel_rd = np.max(np.abs(ritz.real - dense.real) / np.abs(dense.real)) if ok else None
        rel_xd = np.max(np.abs(ex.real - dense.real) / np.abs(dense.real))
        print(f" f={f}: npairs={len(ritz)} dense_slow={len(dense)} "
              f"max_rel(ritz,dense)={rel_rd} max_rel(arnoldi,dense)={rel_xd:.2e}")
        print(f"   gaps dense : {[f'{-v.real:.3e}' for v in dense]}")
        print(f"   gaps ritz  : {[f'{-v.real:.3e}' for v in ritz]}")
print("t =", time.time() - t0)

# slope checks at L=8 N=3: rung f=2 has two p=4 and two p=2 branches
spec = fs.LatticeSpec(8, 3)
ws = ModeWorkspace(FermionModelParams(spec, gamma=1.0, delta=0.2))
grid = np.logspace(-2, -1, 8)
gaps = {i: [] for i in range(4)}
for s in grid:
    vals = rung_eigenvalues(ws, 2, float(s), "perturbative")
    for i, v in enumerate(vals):
        gaps[i].append((float(s), -v.real))
for i, pts in gaps.items():
    good = [(s, g) for s, g in pts if g > 1e-14]
    if len(good) >= 5:
        fit = fit_exponent(good, (1e-2, 1e-1))
        print(f"branch {i}: p_hat={fit.p_hat:.3f} +- {fit.stderr:.3f}")
    else:
        print(f"branch {i}: unusable ({len(good)} pts)", pts[:2])
print("t =", time.time() - t0)
