"""Dev rehearsal of acceptance criterion 7: prethermal stages at L=8, N=3."""

import time

import numpy as np

from liouvsim import dynamics as dyn
from liouvsim import fockspace as fs
from liouvsim.darkmodes import enumerate_dark_states, predict_exponent
from liouvsim.liouville import FermionModelParams, build_fermion_liouvillian

GAMMA, DELTA, S = 1.0, 0.5, 0.15
HORIZON = 2400.0

t0 = time.time()
spec = fs.LatticeSpec(L=8, N=3)
basis = fs.build_basis(spec)
params = FermionModelParams(spec=spec, gamma=GAMMA, delta=DELTA, s=S)
superop, _ = build_fermion_liouvillian(params)

init = dyn.prepare_initial("darkpairs", basis)
levels = init.meta["mixture"][0][0]
print(f"default levels: {levels}")

# populated p_m per family
by_level = {}
for st in enumerate_dark_states(basis):
    by_level.setdefault(st.level, []).append(st)
from liouvsim.darkmodes import best_localized

canon = {lv: best_localized(by_level[lv])[0] for lv in levels}
pm = {}
for i, la in enumerate(levels):
    for lb in levels[:i]:
        f = la - lb
        p = predict_exponent(canon[la], canon[lb]).p
        pm[f] = max(pm.get(f, 0), p)
print(f"populated p_m: {pm}")

fams = dyn.FamilyWeights(basis, f_max=3)
obs = fams.observables()

env_grid = dyn.log_time_grid(0.5, HORIZON)
t1 = time.time()
env = dyn.propagate_stepping(superop, init.density, env_grid, obs)
print(
    f"envelope pass: {len(env_grid)} pts {time.time()-t1:.1f}s "
    f"trace_dev={env.trace_dev:.2e} min_eig={env.min_eig:.2e}"
)

q0 = {f: env.series[f"Q{f}"][0] for f in (1, 2, 3)}
print("Q(t0):", {f: round(v, 4) for f, v in q0.items()})

# 1/e times
for f in (1, 2, 3):
    ratio = env.series[f"Q{f}"] / q0[f]
    below = np.flatnonzero(ratio < 1 / np.e)
    tau = env.times[below[0]] if below.size else np.inf
    print(f"  Q{f}: 1/e time = {tau:.1f}  end ratio = {ratio[-1]:.3f}")

# dominance stages on the envelope grid
qmat = np.vstack([env.series[f"Q{f}"] for f in (1, 2, 3)])
dom = np.argmax(qmat, axis=0) + 1
stages = []
start = 0
for k in range(1, len(dom) + 1):
    if k == len(dom) or dom[k] != dom[start]:
        f = int(dom[start])
        t_lo, t_hi = env.times[start], env.times[k - 1]
        if t_hi - t_lo >= 4 * 2 * np.pi / (f * DELTA):
            stages.append((f, t_lo, t_hi))
        start = k
print("stages (f, t_lo, t_hi):", [(f, round(a, 1), round(b, 1)) for f, a, b in stages])

for f, t_lo, t_hi in stages:
    period = 2 * np.pi / (f * DELTA)
    anchor = t_lo + 0.25 * (t_hi - t_lo)
    anchor = min(anchor, t_hi - 4.5 * period)
    anchor = max(anchor, t_lo)
    win = dyn.oscillation_window_grid(anchor, period, n_periods=4)
    t2 = time.time()
    traj = dyn.propagate_stepping(superop, init.density, win, {f"P{f}": obs[f"P{f}"]})
    rep = dyn.oscillation_report(
        traj.times, traj.series[f"P{f}"], (win[0], win[-1]), delta=DELTA
    )
    err = abs(rep.period - period) / period
    print(
        f"stage f={f}: window ({win[0]:.0f},{win[-1]:.0f}) "
        f"measured period {rep.period:.4f} vs {period:.4f} "
        f"rel err {err:.3%} f_inferred={rep.f_inferred} ({time.time()-t2:.1f}s)"
    )

print(f"total: {time.time()-t0:.1f}s (budget 1800s)")
