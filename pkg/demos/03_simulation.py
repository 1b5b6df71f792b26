"""Scheduled versus free-flow admission in a car-following simulation.

Run with ``python3 demos/03_simulation.py``.
"""
# %%
# Followers obey a Helly car-following law.  With scheduled admission a
# vehicle enters every ``gap`` seconds and tracks its checkpoint times.
# Without it, a vehicle enters as soon as the car-following law would let it
# accelerate.
import numpy as np

from etagap import Mode, load_bundled, run, solve_min_gap

sc = load_bundled("paper")
spec = sc.corridor

# %%
for d in (100, 300, 600, 900, 1200):
    gap = solve_min_gap(spec, d, **sc.solver.solve_kwargs()).gap_s
    eta = run(sc.sim_config(d, Mode.ETA), spec, gap)
    free = run(sc.sim_config(d, Mode.NO_ETA), spec)
    print(
        f"safe_d {d:5d} m | scheduled: {eta.safe_arrivals:2d} arrivals, "
        f"min sep {eta.min_pairwise_separation_m:6.1f} m | free: {free.safe_arrivals:2d} arrivals, "
        f"{free.collisions} collisions, min sep {free.min_pairwise_separation_m:6.1f} m"
    )

# %%
# How closely do scheduled vehicles keep their checkpoint times?
gap = solve_min_gap(spec, 300, **sc.solver.solve_kwargs()).gap_s
res = run(sc.sim_config(300, Mode.ETA), spec, gap)
err = np.array([
    np.array(v.cwp_times_actual) - np.array(v.schedule.cwp_times_s) for v in res.vehicles
])
print("checkpoint timing error per vehicle (s):")
print(np.round(err, 3))
