"""Dev benchmark: dense nonsymmetric eig cost on this box (single core)."""
import time

import numpy as np

rng = np.random.default_rng(0)
for n, vec in [(784, True), (1000, False), (1000, True), (2000, True)]:
    a = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(n)
    t0 = time.perf_counter()
    if vec:
        np.linalg.eig(a)
    else:
        np.linalg.eigvals(a)
    dt = time.perf_counter() - t0
    print(f"n={n} vectors={vec}: {dt:.1f} s", flush=True)
    # cubic extrapolation targets
    for m in (3136, 4900):
        print(f"  -> est n={m}: {dt * (m / n) ** 3:.0f} s", flush=True)
