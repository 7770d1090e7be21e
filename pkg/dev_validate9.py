"""Pick criterion-7 parameters: exact slow eigenvalues per family vs (s, delta)."""

import numpy as np

from liouvsim import fockspace as fs
from liouvsim.darkmodes import enumerate_dark_states
from liouvsim.liouville import FermionModelParams, build_fermion_liouvillian
from liouvsim.perturbation import ModeWorkspace, rung_eigenvalues

spec = fs.LatticeSpec(L=8, N=3)
basis = fs.build_basis(spec)
states = enumerate_dark_states(basis)
print("dark levels:", sorted(st.level for st in states))

for delta in (0.2, 0.5):
    for s in (0.1, 0.15, 0.2):
        params = FermionModelParams(spec=spec, gamma=1.0, delta=delta, s=s)
        ws = ModeWorkspace(params)
        print(f"\n--- delta={delta} s={s}")
        for f in (1, 2, 3):
            try:
                lams = rung_eigenvalues(ws, f, s, method="exact")
            except Exception as e:  # noqa: BLE001
                print(f"  f={f}: {type(e).__name__}: {e}")
                continue
            for lam in lams:
                g = -lam.real
                shift = abs(-lam.imag / (f * delta) - 1.0)
                print(
                    f"  f={f}: Re={lam.real:+.4e} Im={lam.imag:+.6f} "
                    f"gap={g:.3e} tau={1/(2*g) if g>0 else np.inf:9.1f} "
                    f"freq off={shift:.4%}"
                )

superop, _ = build_fermion_liouvillian(
    FermionModelParams(spec=spec, gamma=1.0, delta=0.2, s=0.15)
)
one_norm = float(np.abs(superop.matrix).sum(axis=0).max())
print(f"\n||L||_1 at s=0.15: {one_norm:.1f}")
