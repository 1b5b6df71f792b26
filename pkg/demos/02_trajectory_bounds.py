"""Envelopes of every admissible trajectory, and why a gap is safe.

Run with ``python3 demos/02_trajectory_bounds.py``.
"""
# %%
# A vehicle that meets its schedule at each checkpoint can still wander
# inside each section.  The slowest possible progress is v_min then v_max;
# the fastest is the reverse.
import numpy as np

from etagap import BoundKind, build_bound, load_bundled, schedule_for

spec = load_bundled("paper").corridor
sched = schedule_for(spec, 0.0)
lower = build_bound(spec, sched, BoundKind.LOWER)
upper = build_bound(spec, sched, BoundKind.UPPER)
print("checkpoint times:", np.round(sched.cwp_times_s, 2))
print("lower breakpoints:")
for t, x in lower.breakpoints:
    print(f"  t = {t:6.2f} s   x = {x:7.1f} m")

# %%
# The width of the envelope peaks mid-section and collapses at checkpoints.
ts = np.linspace(0, sched.exit_time_s, 9)
width = upper(ts) - lower(ts)
for t, w in zip(ts, width):
    print(f"t = {t:5.1f} s   upper - lower = {w:6.1f} m")

# %%
# Separation between a leader and a follower entering ``gap`` seconds later
# is worst when the leader dawdles and the follower hurries.  Both envelopes
# are piecewise affine, so the minimum occurs at one of their breakpoints.
from etagap import critical_time_set, min_separation  # noqa: E402
from etagap.solver import pair_bounds  # noqa: E402

lead, follow = pair_bounds(spec, 13.3)
ts = critical_time_set(lead, follow)
sep = lead(ts) - follow(ts)
print(f"{len(ts)} critical times; separation there (m):", np.round(sep, 1))
print("worst case:", min_separation(lead, follow))
