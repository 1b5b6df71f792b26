"""Corridor geometry, section travel times and CWP schedules.

A corridor is a linear chain of sections joined at constrained waypoints
(CWPs).  Section ``j`` runs from CWP ``j`` to CWP ``j+1`` and carries its own
speed limits.  Every vehicle is assigned the same travel time per section, so
an entry time at CWP 0 fixes the whole arrival schedule.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np


class CorridorError(ValueError):
    """Base class for corridor validation failures."""


class SectionError(CorridorError):
    """A single section has non-positive or inconsistent parameters."""

    def __init__(self, index: int, message: str):
        self.index = index
        super().__init__(f"section {index}: {message}")


class OverlapError(CorridorError):
    """Speed intervals of two consecutive sections do not intersect."""

    def __init__(self, index: int, message: str):
        self.index = index
        super().__init__(f"sections {index}/{index + 1}: {message}")


class FeasibilityError(CorridorError):
    """No admissible speed profile covers a section in its travel time."""

    def __init__(self, index: int, message: str):
        self.index = index
        super().__init__(f"section {index}: {message}")


@dataclass(frozen=True)
class Section:
    """One corridor section.

    Parameters
    ----------
    length_m : float
        Section length in meters.
    v_min, v_max : float
        Speed limits in m/s, ``0 < v_min <= v_max``.
    """

    length_m: float
    v_min: float
    v_max: float

    def validate(self, index: int = 0) -> None:
        for name in ("length_m", "v_min", "v_max"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise SectionError(index, f"{name} must be finite, got {value!r}")
        if self.length_m <= 0:
            raise SectionError(index, f"length_m must be > 0, got {self.length_m}")
        if self.v_min <= 0:
            raise SectionError(index, f"v_min must be > 0, got {self.v_min}")
        if self.v_min > self.v_max:
            raise SectionError(
                index, f"v_min <= v_max violated ({self.v_min} > {self.v_max})"
            )

    @property
    def v_avg(self) -> float:
        return 0.5 * (self.v_min + self.v_max)


@dataclass(frozen=True)
class Schedule:
    """Scheduled CWP passage times of one vehicle."""

    entry_time_s: float
    cwp_times_s: tuple

    @property
    def exit_time_s(self) -> float:
        return self.cwp_times_s[-1]

    def shifted(self, offset_s: float) -> "Schedule":
        return Schedule(
            self.entry_time_s + offset_s,
            tuple(t + offset_s for t in self.cwp_times_s),
        )


@dataclass(frozen=True)
class CorridorSpec:
    """Validated corridor: sections, travel times, CWP offsets and safeD.

    Build instances with :func:`build_corridor`; the constructor performs no
    checks of its own.
    """

    sections: tuple
    travel_times_s: tuple
    cum_lengths_m: tuple
    safe_d_m: float = 0.0
    _cum_times: tuple = field(default=(), repr=False, compare=False)

    @property
    def m(self) -> int:
        return len(self.sections)

    @property
    def total_length_m(self) -> float:
        return self.cum_lengths_m[-1]

    @property
    def total_time_s(self) -> float:
        """Sum of section travel times, i.e. the trivially safe ETA gap."""
        return self._cum_times[-1]

    @property
    def cum_times_s(self) -> tuple:
        return self._cum_times

    def section_at(self, position_m: float) -> int:
        """Index of the section containing ``position_m``.

        Membership is half-open ``[L_j, L_{j+1})``; positions at or past the
        corridor end map to ``m``.
        """
        return int(np.searchsorted(self.cum_lengths_m, position_m, side="right")) - 1

    def with_safe_d(self, safe_d_m: float) -> "CorridorSpec":
        return build_corridor(self.sections, safe_d_m, self.travel_times_s)


def derive_travel_times(sections: Sequence[Section]) -> list:
    """Common section travel times ``l_j / v_avg_j``."""
    taus = []
    for j, sec in enumerate(sections):
        sec.validate(j)
        taus.append(2.0 * sec.length_m / (sec.v_min + sec.v_max))
    return taus


def build_corridor(
    sections: Sequence[Section],
    safe_d: float = 0.0,
    travel_times: Optional[Sequence[float]] = None,
    travel_time_decimals: Optional[int] = None,
) -> CorridorSpec:
    """Assemble and validate a :class:`CorridorSpec`.

    Parameters
    ----------
    sections : sequence of Section
        Ordered sections, CWP 0 first.  Must be nonempty.
    safe_d : float
        Minimum longitudinal separation in meters.
    travel_times : sequence of float, optional
        Explicit per-section travel times.  Derived from the average speed
        when omitted.
    travel_time_decimals : int, optional
        Round derived travel times to this many decimals.  Ignored when
        ``travel_times`` is given.

    Raises
    ------
    SectionError, OverlapError, FeasibilityError
        On the first violated invariant, naming the section index.
    """
    sections = tuple(
        s if isinstance(s, Section) else Section(*s) for s in sections
    )
    if not sections:
        raise CorridorError("corridor needs at least one section")
    for j, sec in enumerate(sections):
        sec.validate(j)
    if not math.isfinite(safe_d) or safe_d < 0:
        raise CorridorError(f"safe_d must be a finite value >= 0, got {safe_d}")

    for j in range(len(sections) - 1):
        a, b = sections[j], sections[j + 1]
        if max(a.v_min, b.v_min) > min(a.v_max, b.v_max):
            raise OverlapError(
                j,
                f"speed intervals [{a.v_min}, {a.v_max}] and "
                f"[{b.v_min}, {b.v_max}] do not overlap",
            )

    if travel_times is None:
        taus = derive_travel_times(sections)
        if travel_time_decimals is not None:
            taus = [round(t, travel_time_decimals) for t in taus]
    else:
        taus = [float(t) for t in travel_times]
        if len(taus) != len(sections):
            raise CorridorError(
                f"{len(taus)} travel times given for {len(sections)} sections"
            )

    for j, (sec, tau) in enumerate(zip(sections, taus)):
        if not math.isfinite(tau) or tau <= 0:
            raise SectionError(j, f"travel time must be > 0, got {tau}")
        # relative slack so that l = v*tau written in decimal still passes
        slack = 1e-12 * sec.length_m
        if sec.v_min * tau > sec.length_m + slack:
            raise FeasibilityError(
                j,
                f"v_min*tau = {sec.v_min * tau:g} exceeds length {sec.length_m:g}",
            )
        if sec.v_max * tau < sec.length_m - slack:
            raise FeasibilityError(
                j,
                f"v_max*tau = {sec.v_max * tau:g} is below length {sec.length_m:g}",
            )

    cum_l = np.concatenate([[0.0], np.cumsum([s.length_m for s in sections])])
    cum_t = np.concatenate([[0.0], np.cumsum(taus)])
    return CorridorSpec(
        sections=sections,
        travel_times_s=tuple(taus),
        cum_lengths_m=tuple(float(x) for x in cum_l),
        safe_d_m=float(safe_d),
        _cum_times=tuple(float(x) for x in cum_t),
    )


def schedule_for(spec: CorridorSpec, entry_time: float) -> Schedule:
    """CWP schedule of a vehicle entering CWP 0 at ``entry_time``."""
    return Schedule(
        float(entry_time), tuple(entry_time + t for t in spec.cum_times_s)
    )


# Corridor of the reference scenario: a decreasing-speed chain of four sections.
PAPER_SECTIONS = (
    Section(920.0, 60.0, 85.0),
    Section(520.0, 40.0, 65.0),
    Section(340.0, 25.0, 45.0),
    Section(220.0, 15.0, 30.0),
)
