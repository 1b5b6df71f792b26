"""Extreme piecewise-affine trajectories enclosing every admissible motion.

Within each section a vehicle that holds the section's travel time and speed
limits can never be behind the profile that flies ``v_min`` first and then
``v_max`` (``LOWER``), nor ahead of the profile that flies ``v_max`` first and
then ``v_min`` (``UPPER``).  Both profiles pass through every scheduled CWP.
"""
from __future__ import annotations

import csv
import enum
from dataclasses import dataclass
from typing import Union

import numpy as np

from .corridor import CorridorSpec, Schedule, Section

# CWP-shared breakpoints closer than this are merged
DEDUP_TOL_S = 1e-12


class BoundKind(enum.Enum):
    LOWER = "lower"  # v_min then v_max
    UPPER = "upper"  # v_max then v_min


class DomainError(ValueError):
    """Evaluation time lies outside a bound's schedule."""


def _check_feasible(section: Section, tau: float) -> None:
    slack = 1e-12 * section.length_m
    if not (
        section.v_min * tau - slack <= section.length_m <= section.v_max * tau + slack
    ):
        raise ValueError(
            f"no switch time exists: length {section.length_m} outside "
            f"[{section.v_min * tau}, {section.v_max * tau}]"
        )


def switch_time_min_to_max(section: Section, tau: float) -> float:
    """Time spent at ``v_min`` before switching to ``v_max``.

    Solves ``v_min*t + v_max*(tau - t) = l``.  Returns 0 for a section with
    equal limits, where any switch time works.
    """
    _check_feasible(section, tau)
    dv = section.v_max - section.v_min
    if dv == 0:
        return 0.0
    t = (section.v_max * tau - section.length_m) / dv
    return min(max(t, 0.0), tau)


def switch_time_max_to_min(section: Section, tau: float) -> float:
    """Time spent at ``v_max`` before switching to ``v_min``."""
    _check_feasible(section, tau)
    dv = section.v_max - section.v_min
    if dv == 0:
        return 0.0
    t = (section.length_m - section.v_min * tau) / dv
    return min(max(t, 0.0), tau)


@dataclass(frozen=True)
class CriticalPointSet:
    """Slope-change points of one bound as ``(position_m, time_s)`` pairs."""

    points: tuple
    kind: BoundKind
    owner: int = 0

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    @property
    def times(self) -> np.ndarray:
        return np.array([t for _, t in self.points])


@dataclass(frozen=True, eq=False)
class TrajectoryBound:
    """Continuous piecewise-affine position-vs-time bound.

    ``times`` and ``positions`` hold the deduplicated breakpoints; the
    function is linear between consecutive breakpoints.
    """

    kind: BoundKind
    times: np.ndarray
    positions: np.ndarray
    schedule: Schedule

    @property
    def breakpoints(self) -> list:
        return list(zip(self.times.tolist(), self.positions.tolist()))

    @property
    def t_start(self) -> float:
        return float(self.times[0])

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    @property
    def slopes(self) -> np.ndarray:
        return np.diff(self.positions) / np.diff(self.times)

    def __call__(self, t):
        return eval_bound(self, t)


def build_bound(
    spec: CorridorSpec, schedule: Schedule, kind: Union[BoundKind, str]
) -> TrajectoryBound:
    """Breakpoints of the ``LOWER`` or ``UPPER`` extreme trajectory."""
    kind = BoundKind(kind) if not isinstance(kind, BoundKind) else kind
    cwp_t = schedule.cwp_times_s
    cwp_x = spec.cum_lengths_m
    times = [cwp_t[0]]
    positions = [cwp_x[0]]

    def push(t, x):
        if t - times[-1] > DEDUP_TOL_S:
            times.append(t)
            positions.append(x)
        else:
            # coincident with previous point; keep the later, exact CWP value
            times[-1] = max(times[-1], t)
            positions[-1] = max(positions[-1], x)

    for j, (sec, tau) in enumerate(zip(spec.sections, spec.travel_times_s)):
        if kind is BoundKind.LOWER:
            ts = switch_time_min_to_max(sec, tau)
            first = sec.v_min
        else:
            ts = switch_time_max_to_min(sec, tau)
            first = sec.v_max
        push(cwp_t[j] + ts, cwp_x[j] + first * ts)
        push(cwp_t[j + 1], cwp_x[j + 1])

    t_arr = np.array(times)
    x_arr = np.array(positions)
    t_arr.setflags(write=False)
    x_arr.setflags(write=False)
    return TrajectoryBound(kind, t_arr, x_arr, schedule)


def eval_bound(bound: TrajectoryBound, t):
    """Position of ``bound`` at time(s) ``t``.

    Raises
    ------
    DomainError
        If any ``t`` lies outside ``[T_0, T_m]`` of the bound's schedule.
    """
    t_arr = np.asarray(t, dtype=float)
    lo, hi = bound.times[0], bound.times[-1]
    if np.any(t_arr < lo) or np.any(t_arr > hi) or np.any(np.isnan(t_arr)):
        raise DomainError(f"t outside bound domain [{lo}, {hi}]")
    x = np.interp(t_arr, bound.times, bound.positions)
    return float(x) if x.ndim == 0 else x


def critical_points(bound: TrajectoryBound, owner: int = 0) -> CriticalPointSet:
    """Breakpoints of ``bound`` as ``(position, time)`` pairs."""
    pts = tuple(
        (float(x), float(t)) for t, x in zip(bound.times, bound.positions)
    )
    return CriticalPointSet(pts, bound.kind, owner)


def write_breakpoints_csv(bound: TrajectoryBound, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["time_s", "position_m"])
        for t, x in zip(bound.times, bound.positions):
            w.writerow([repr(float(t)), repr(float(x))])
