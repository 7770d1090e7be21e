"""Measure decay gaps, peripheral multiplicities, and s!=0 conditioning."""

import time

import numpy as np

from liouvsim import fockspace as fs
from liouvsim.darkmodes import enumerate_dark_states
from liouvsim.liouville import FermionModelParams, build_fermion_liouvillian

# --- s=0, L=8, N=4: per-block peripheral count and decay gap ---------------
spec = fs.LatticeSpec(L=8, N=4)
basis = fs.build_basis(spec)
params = FermionModelParams(spec=spec, gamma=1.0, delta=0.2, s=0.0)
superop, decomp = build_fermion_liouvillian(params)

levels = [st.level for st in enumerate_dark_states(basis)]
lv = np.array(levels)
pair_count = {
    f: int((lv[:, None] - lv[None, :] == f).sum())
    for f in range(0, max(levels) - min(levels) + 1)
}

print("dark states:", len(levels), "levels:", sorted(set(levels)))
print(" f   n_block  n_periph(eig)  n_pairs(dark)  gap_dec")
gap_min = np.inf
for f in decomp.charges:
    if f < 0:
        continue
    idx = decomp.block_indices(f)
    sub = superop.matrix[idx][:, idx].toarray()
    lam = np.linalg.eigvals(sub)
    per = lam.real > -1e-8
    dec = lam[~per]
    gap = -dec.real.max() if dec.size else np.inf
    gap_min = min(gap_min, gap)
    expect = pair_count.get(abs(f), 0)
    print(
        f"{f:3d} {len(idx):8d} {int(per.sum()):10d} {expect:12d} {gap:12.4e}"
    )
print(f"global decay gap: {gap_min:.4e}  -> t_safe(97/gap) = {97/gap_min:.1f}")

# --- s!=0, L=8, N=3: full-route conditioning -------------------------------
spec3 = fs.LatticeSpec(L=8, N=3)
basis3 = fs.build_basis(spec3)
params3 = FermionModelParams(spec=spec3, gamma=1.0, delta=0.2, s=0.2)
superop3, _ = build_fermion_liouvillian(params3)
d = superop3.d
print(f"\ns=0.2 L=8 N=3: d={d} d2={d*d}")
t0 = time.time()
A = superop3.matrix.toarray()
lam, V = np.linalg.eig(A)
print(f"eig: {time.time()-t0:.1f}s  max Re lam = {lam.real.max():.3e}")
rho0 = np.full((d, d), 1.0 / d, dtype=complex)
v0 = rho0.reshape(d * d)
c = np.linalg.solve(V, v0)
err0 = np.max(np.abs(V @ (c * np.exp(lam * 0.0)) - v0))
err_mid = None
print(f"err0={err0:.2e}  max|c|={np.abs(c).max():.2e}")
