"""Dev sweep: series vs exact across rungs at L=8, N in {2,3,4}."""
import time

import numpy as np

from liouvsim.fockspace import LatticeSpec
from liouvsim.liouville import FermionModelParams
from liouvsim.perturbation import ModeWorkspace, rung_eigenvalues

GAMMA, DELTA, S = 1.0, 0.2, 0.05


def level(d):
    return d.B - d.N * (d.N + 1) // 2


def main():
    worst = 0.0
    for N in (2, 3, 4):
        params = FermionModelParams(
            spec=LatticeSpec(L=8, N=N), gamma=GAMMA, delta=DELTA, s=0.0
        )
        ws = ModeWorkspace(params)
        fmax = max(d.B for d in ws.dark_states()) - min(
            d.B for d in ws.dark_states()
        )
        for f in range(1, min(fmax, 4) + 1):
            pairs = ws.rung_pairs(f)
            if not pairs:
                print(f"N={N} f={f}: no pairs")
                continue
            t0 = time.time()
            pert = rung_eigenvalues(ws, f, S, method="perturbative")
            t1 = time.time()
            exact = rung_eigenvalues(ws, f, S, method="exact")
            t2 = time.time()
            sg = np.sort(-pert.real)
            eg = np.sort(-exact.real)
            rel = np.abs(sg - eg) / eg
            ls = sorted(min(a.l, b.l) for a, b in pairs)
            worst = max(worst, rel.max())
            print(
                f"N={N} f={f}: {len(pairs)} pairs l={ls} "
                f"maxrel={rel.max():.3f} (pert {t1-t0:.1f}s exact {t2-t1:.1f}s)",
                flush=True,
            )
            if rel.max() > 0.10:
                for a, b in zip(sg, eg):
                    print(f"    series {a:.4e}  exact {b:.4e}")
    print(f"\nWORST rank-matched rel err: {worst:.3f}")


if __name__ == "__main__":
    main()
