"""Dev validation of the series (secular-defect) estimator."""
import resource
import time

import numpy as np

from liouvsim.fockspace import LatticeSpec
from liouvsim.liouville import FermionModelParams
from liouvsim.perturbation import (
    ModeWorkspace,
    class_eigenvalues,
    fit_exponent,
    rung_eigenvalues,
)
from dataclasses import replace

GAMMA, DELTA = 1.0, 0.2


def banner(msg):
    print(f"\n=== {msg} ===", flush=True)


def mem():
    return resource.getrusage(resource.RUSAGE_SELF).ru_maxrss / 1e6


def level(d):
    return d.B - d.N * (d.N + 1) // 2


def check_rung(L, N, f, s):
    params = FermionModelParams(spec=LatticeSpec(L=L, N=N), gamma=GAMMA, delta=DELTA, s=0.0)
    ws = ModeWorkspace(params)
    pairs = ws.rung_pairs(f)
    banner(f"L={L} N={N} f={f} s={s}: {len(pairs)} pairs")
    t0 = time.time()
    pert = rung_eigenvalues(ws, f, s, method="perturbative")
    dt = time.time() - t0
    for p, (da, db) in enumerate(pairs):
        ell = min(da.l, db.l)
        lam = class_eigenvalues(ws, f, s, ell)[p]
        print(
            f"  pair lv({level(da)},{level(db)}) l={ell}: gap={-lam.real:.6e} "
            f"shift={abs(lam.imag + DELTA * f):.2e}"
        )
    print(f"  perturbative rung in {dt:.1f}s")
    t0 = time.time()
    exact = rung_eigenvalues(ws, f, s, method="exact")
    print(f"  exact slow cluster ({time.time()-t0:.1f}s):")
    for v in exact:
        print(f"    {v:.6e}")
    eg = np.sort(-exact.real)
    sg = np.sort(-pert.real)
    rel = np.abs(sg - eg) / eg
    print(f"  sorted series gaps : {[f'{g:.4e}' for g in sg]}")
    print(f"  sorted exact gaps  : {[f'{g:.4e}' for g in eg]}")
    print(f"  rank-matched rel err: {[f'{r:.3f}' for r in rel]}  max={rel.max():.3f}")
    print(f"  mem={mem():.2f}GB")


def l10_branch():
    params = FermionModelParams(spec=LatticeSpec(L=10, N=5), gamma=GAMMA, delta=DELTA, s=0.0)
    ws = ModeWorkspace(params)
    pairs = ws.rung_pairs(2)
    tgt_p, tgt = max(enumerate(pairs), key=lambda ip: min(ip[1][0].l, ip[1][1].l))
    ell = min(tgt[0].l, tgt[1].l)
    banner(
        f"L=10 N=5 f=2 maximizing pair lv({level(tgt[0])},{level(tgt[1])}) l={ell}"
    )
    grid = np.logspace(np.log10(0.04), np.log10(0.2), 8)
    samples = []
    for s in grid:
        t0 = time.time()
        lam = class_eigenvalues(ws, 2, float(s), ell)[tgt_p]
        dt = time.time() - t0
        gap = -lam.real
        samples.append((float(s), gap))
        print(
            f"  s={s:.4f} gap={gap:.6e} shift={abs(lam.imag + DELTA * 2):.2e} "
            f"t={dt:.2f}s mem={mem():.2f}GB",
            flush=True,
        )
    fit = fit_exponent(samples, (grid[0], grid[-1]))
    print(f"  p_hat={fit.p_hat:.4f} stderr={fit.stderr:.4f} (expect 8)")


if __name__ == "__main__":
    check_rung(8, 3, 2, 0.05)
    check_rung(8, 4, 2, 0.05)
    l10_branch()
