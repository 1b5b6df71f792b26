"""Minimum ETA gap between consecutive vehicles.

The leader's ``LOWER`` bound minus the follower's ``UPPER`` bound is a
continuous piecewise-affine lower bound on their spacing.  Its minimum over
the overlap window is attained at a slope change of one of the two bounds,
so checking a finite set of critical times suffices.  The smallest safe gap
is found by bisection, which is valid because the bound separation is
nondecreasing in the gap.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .bounds import DEDUP_TOL_S, BoundKind, TrajectoryBound, build_bound, eval_bound
from .corridor import CorridorError, CorridorSpec, schedule_for

DEFAULT_TOL_S = 1e-6
# strict comparisons need a floor above float noise in the separation
STRICT_SEP_TOL_M = 1e-9


@dataclass(frozen=True)
class PairWindow:
    """Interval on which leader and follower share the corridor."""

    leader_entry: float
    follower_entry: float
    leader_exit: float

    @property
    def gap(self) -> float:
        return self.follower_entry - self.leader_entry

    @property
    def window(self) -> tuple:
        return (self.follower_entry, self.leader_exit)

    @property
    def empty(self) -> bool:
        return self.follower_entry >= self.leader_exit


@dataclass(frozen=True)
class GapSolution:
    """Solved ETA gap together with its separation certificate.

    ``certificate`` lists ``(critical_time_s, separation_m)`` with the leader
    entering at time 0.  It is empty when the gap is at least the total
    corridor travel time, since the vehicles then never share the corridor.
    """

    gap_s: float
    certificate: tuple
    feasible_trivial: bool
    safe_d_m: float
    spec: CorridorSpec = field(repr=False, compare=False)

    @property
    def min_separation_m(self) -> float:
        if not self.certificate:
            return math.inf
        return min(s for _, s in self.certificate)

    @property
    def trivial_bound_s(self) -> float:
        return self.spec.total_time_s


def pair_bounds(spec: CorridorSpec, gap: float, leader_entry: float = 0.0):
    """``(leader LOWER, follower UPPER)`` for a follower ``gap`` seconds behind."""
    lead = build_bound(spec, schedule_for(spec, leader_entry), BoundKind.LOWER)
    follow = build_bound(
        spec, schedule_for(spec, leader_entry + gap), BoundKind.UPPER
    )
    return lead, follow


def critical_time_set(
    leader_lower: TrajectoryBound, follower_upper: TrajectoryBound
) -> np.ndarray:
    """Sorted slope-change times of either bound inside the overlap window.

    Both window endpoints are always included when the window is nonempty.
    """
    t0 = follower_upper.t_start
    t1 = leader_lower.t_end
    if t0 >= t1:
        return np.empty(0)
    ts = np.concatenate([leader_lower.times, follower_upper.times, [t0, t1]])
    ts = np.sort(ts[(ts >= t0) & (ts <= t1)])
    keep = np.concatenate([[True], np.diff(ts) > DEDUP_TOL_S])
    return ts[keep]


def min_separation(
    leader_lower: TrajectoryBound, follower_upper: TrajectoryBound
) -> tuple:
    """Minimum bound separation over the window and the time it occurs.

    Returns ``(inf, nan)`` for an empty window: the pair never shares the
    corridor and is trivially safe.
    """
    ts = critical_time_set(leader_lower, follower_upper)
    if ts.size == 0:
        return math.inf, math.nan
    sep = eval_bound(leader_lower, ts) - eval_bound(follower_upper, ts)
    k = int(np.argmin(sep))
    return float(sep[k]), float(ts[k])


def separation_at_gap(spec: CorridorSpec, gap: float) -> float:
    """Bound separation minimum for a follower entering ``gap`` s later."""
    return min_separation(*pair_bounds(spec, gap))[0]


def certificate(spec: CorridorSpec, gap: float) -> tuple:
    lead, follow = pair_bounds(spec, gap)
    ts = critical_time_set(lead, follow)
    if ts.size == 0:
        return ()
    sep = eval_bound(lead, ts) - eval_bound(follow, ts)
    return tuple(zip(ts.tolist(), sep.tolist()))


def _is_safe(spec: CorridorSpec, gap: float, safe_d: float, strict: bool) -> bool:
    sep = separation_at_gap(spec, gap)
    if strict:
        return sep > safe_d + STRICT_SEP_TOL_M
    return sep >= safe_d


def solve_min_gap(
    spec: CorridorSpec,
    safe_d: Optional[float] = None,
    tol: float = DEFAULT_TOL_S,
    grid_s: Optional[float] = None,
    strict: bool = False,
) -> GapSolution:
    """Smallest ETA gap whose bound separation stays at or above ``safe_d``.

    Parameters
    ----------
    spec : CorridorSpec
    safe_d : float, optional
        Required separation in meters; defaults to ``spec.safe_d_m``.
    tol : float
        Absolute bisection tolerance in seconds.  The returned gap is the
        feasible end of the final bracket.
    grid_s : float, optional
        Restrict gaps to multiples of ``grid_s`` (e.g. the simulation step)
        and return the smallest feasible one.
    strict : bool
        Require separation strictly above ``safe_d``.

    Returns
    -------
    GapSolution
        ``feasible_trivial`` is set when no gap below the total corridor
        travel time satisfies the constraint.
    """
    if safe_d is None:
        safe_d = spec.safe_d_m
    if not math.isfinite(safe_d) or safe_d < 0:
        raise CorridorError(f"safe_d must be a finite value >= 0, got {safe_d}")
    if tol <= 0:
        raise ValueError("tol must be positive")
    if grid_s is not None and grid_s <= 0:
        raise ValueError("grid_s must be positive")

    total = spec.total_time_s

    def safe(gap):
        return gap >= total or _is_safe(spec, gap, safe_d, strict)

    if safe(0.0):
        gap = 0.0
    else:
        lo, hi = 0.0, total
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if safe(mid):
                hi = mid
            else:
                lo = mid
        gap = hi

    if grid_s is not None:
        k = max(int(math.floor(gap / grid_s)) - 1, 0)
        while not safe(k * grid_s):
            k += 1
        # strip float drift from k * grid_s
        gap = round(k * grid_s, 9)

    trivial = gap >= total
    if trivial:
        gap = total
    return GapSolution(
        gap_s=gap,
        certificate=certificate(spec, gap),
        feasible_trivial=trivial,
        safe_d_m=float(safe_d),
        spec=spec,
    )


def apply_eta_error_buffer(solution: GapSolution, epsilon_s: float) -> GapSolution:
    """Widen a gap by ``2*epsilon_s`` to absorb a +/- epsilon entry-time error."""
    if not math.isfinite(epsilon_s) or epsilon_s < 0:
        raise ValueError(f"epsilon_s must be >= 0, got {epsilon_s}")
    gap = solution.gap_s + 2.0 * epsilon_s
    return replace(
        solution,
        gap_s=gap,
        certificate=certificate(solution.spec, gap),
        feasible_trivial=gap >= solution.spec.total_time_s,
    )


def extreme_position(spec: CorridorSpec, entry: float, kind: BoundKind, t):
    """Closed-form extreme trajectory evaluated section by section.

    Kept separate from the breakpoint interpolation in :mod:`etagap.bounds`
    so it can serve as an independent check.
    """
    t = np.asarray(t, dtype=float)
    x = np.full(t.shape, np.nan)
    cum_t = entry + np.asarray(spec.cum_times_s)
    for j, (sec, tau) in enumerate(zip(spec.sections, spec.travel_times_s)):
        if kind is BoundKind.LOWER:
            v1, v2 = sec.v_min, sec.v_max
        else:
            v1, v2 = sec.v_max, sec.v_min
        sw = 0.0 if v1 == v2 else (v2 * tau - sec.length_m) / (v2 - v1)
        s = t - cum_t[j]
        mask = (s >= -1e-9) & (s <= tau + 1e-9)
        s = np.clip(s, 0.0, tau)
        seg = np.where(s <= sw, v1 * s, v1 * sw + v2 * (s - sw))
        x[mask] = spec.cum_lengths_m[j] + seg[mask]
    return x


def dense_min_separation(
    spec: CorridorSpec, gap: float, n: int = 100_000
) -> tuple:
    """Minimum bound separation over ``n`` uniform samples of the window."""
    t0, t1 = gap, spec.total_time_s
    if t0 >= t1:
        return math.inf, math.nan
    ts = np.linspace(t0, t1, n)
    sep = extreme_position(spec, 0.0, BoundKind.LOWER, ts) - extreme_position(
        spec, gap, BoundKind.UPPER, ts
    )
    k = int(np.nanargmin(sep))
    return float(sep[k]), float(ts[k])


def gap_table(
    spec: CorridorSpec, safe_ds: Sequence[float], **solve_kw
) -> list:
    return [solve_min_gap(spec, d, **solve_kw) for d in safe_ds]


def write_gap_table_csv(solutions: Sequence[GapSolution], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["safe_d_m", "gap_s", "trivial_bound_s"])
        for sol in solutions:
            w.writerow(
                [repr(sol.safe_d_m), repr(sol.gap_s), repr(sol.trivial_bound_s)]
            )
