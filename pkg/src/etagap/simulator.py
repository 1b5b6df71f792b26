"""Discrete-time corridor simulation with Helly vehicle following.

Vehicles integrate ``x += dt*v; v += dt*a`` (forward Euler).  The first
vehicle steers toward each section's average speed; followers use the Helly
law ``a = lx*(dx - D(v)) + lv*dv`` with ``D(v) = d_min + t_des*v``.  Every
acceleration is clipped to the configured bounds and the resulting speed is
projected into the limits of the section the vehicle occupies.

Two admission policies are compared.  In ``ETA`` mode vehicle ``i`` enters at
``i * gap`` and additionally tracks its CWP schedule; in ``NO_ETA`` mode a
vehicle enters as soon as its Helly acceleration at CWP 0 would be positive.
"""
from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence

from .corridor import CorridorSpec, Schedule, schedule_for

# one admission per step; entry-time comparisons tolerate float drift
_TIME_EPS = 1e-9


# "override": track the schedule, Helly takes over (via min) once spacing < d_min
# "min": always min(Helly, tracking)
ETA_CONTROLLERS = ("override", "min")


class Mode(enum.Enum):
    ETA = "eta"
    NO_ETA = "no-eta"


@dataclass(frozen=True)
class SimConfig:
    dt_s: float = 0.1
    horizon_s: Optional[float] = None
    entry_window_s: float = 100.0
    entry_speed_mps: float = 82.5
    lambda_x: float = 0.7
    lambda_v: float = 0.5
    t_des_s: float = 1.2
    d_min_m: float = 300.0
    accel_bounds: tuple = (-3.0, 2.0)
    mode: Mode = Mode.ETA
    seed: int = 0
    count_by_s: Optional[float] = None
    eta_controller: str = "override"
    record_trajectories: bool = False

    def __post_init__(self):
        if not isinstance(self.mode, Mode):
            object.__setattr__(self, "mode", Mode(self.mode))
        object.__setattr__(self, "accel_bounds", tuple(self.accel_bounds))
        if not self.dt_s > 0:
            raise ValueError(f"dt_s must be > 0, got {self.dt_s}")
        lo, hi = self.accel_bounds
        if not lo < 0 < hi:
            raise ValueError(f"accel_bounds must straddle 0, got {self.accel_bounds}")
        if self.entry_window_s < 0:
            raise ValueError("entry_window_s must be >= 0")
        if self.eta_controller not in ETA_CONTROLLERS:
            raise ValueError(f"eta_controller must be one of {ETA_CONTROLLERS}")

    def resolved_horizon(self, spec: CorridorSpec) -> float:
        if self.horizon_s is not None:
            return self.horizon_s
        return self.entry_window_s + spec.total_time_s + 60.0


@dataclass
class VehicleState:
    vid: int
    position_m: float = 0.0
    speed_mps: float = 0.0
    accel_mps2: float = 0.0
    section_index: int = 0
    entered: bool = False
    exited: bool = False
    collided: bool = False
    entry_time_s: float = math.nan
    exit_time_s: float = math.nan
    cwp_times_actual: list = field(default_factory=list)
    schedule: Optional[Schedule] = None

    @property
    def active(self) -> bool:
        """In the corridor and still moving."""
        return self.entered and not self.exited and not self.collided

    @property
    def present(self) -> bool:
        """Occupies corridor airspace (wrecks included)."""
        return self.entered and not self.exited


@dataclass(frozen=True)
class Event:
    kind: str  # "collision", "separation_loss", "speed_clamp", "entry", "exit"
    time_s: float
    vehicles: tuple
    value: float = math.nan


@dataclass
class SimResult:
    mode: Mode
    gap_s: float
    safe_d_m: float
    entered: int
    exited: int
    safe_arrivals: int
    collision_events: list
    min_pairwise_separation_m: float
    arrival_rate_cwp0: float
    throughput_cwp_m: float
    horizon_reached: bool
    vehicles: list
    events: list
    trajectories: Optional[list] = None

    @property
    def collisions(self) -> int:
        return len(self.collision_events)


def desired_spacing(v: float, cfg: SimConfig) -> float:
    return cfg.d_min_m + cfg.t_des_s * v


def clip_accel(a: float, cfg: SimConfig) -> float:
    lo, hi = cfg.accel_bounds
    return min(max(a, lo), hi)


def helly_accel(leader: VehicleState, follower: VehicleState, cfg: SimConfig) -> float:
    """Raw Helly acceleration of ``follower`` behind ``leader`` (unclipped)."""
    dx = leader.position_m - follower.position_m
    dv = leader.speed_mps - follower.speed_mps
    return cfg.lambda_x * (dx - desired_spacing(follower.speed_mps, cfg)) + (
        cfg.lambda_v * dv
    )


def lead_vehicle_accel(
    state: VehicleState, spec: CorridorSpec, cfg: Optional[SimConfig] = None
) -> float:
    """Relax toward the section's average speed ``l_j / tau_j``.

    Clipped to the acceleration bounds when ``cfg`` is given.
    """
    j = min(state.section_index, spec.m - 1)
    a = spec.sections[j].length_m / spec.travel_times_s[j] - state.speed_mps
    return clip_accel(a, cfg) if cfg is not None else a


def schedule_tracking_accel(
    state: VehicleState,
    schedule: Schedule,
    spec: CorridorSpec,
    now: float,
    cfg: Optional[SimConfig] = None,
) -> float:
    """Steer toward the speed that reaches the next CWP on time.

    The target is ``(L_{j+1} - x) / (T_{j+1} - now)``.  Once less than one
    step remains (or the vehicle is late) the target falls back to the
    section's mid-range speed.
    """
    j = min(state.section_index, spec.m - 1)
    dt = cfg.dt_s if cfg is not None else 0.1
    sec = spec.sections[j]
    remaining = schedule.cwp_times_s[j + 1] - now
    if remaining <= dt:
        v_target = sec.v_avg
    else:
        v_target = (spec.cum_lengths_m[j + 1] - state.position_m) / remaining
    a = v_target - state.speed_mps
    return clip_accel(a, cfg) if cfg is not None else a


def _leader_of(states: Sequence[VehicleState], i: int) -> Optional[VehicleState]:
    for k in range(i - 1, -1, -1):
        if states[k].present:
            return states[k]
    return None


def _project_speed(v: float, spec: CorridorSpec, j: int) -> float:
    sec = spec.sections[min(j, spec.m - 1)]
    return min(max(v, sec.v_min), sec.v_max)


def _command(
    states: Sequence[VehicleState],
    i: int,
    cfg: SimConfig,
    spec: CorridorSpec,
    now: float,
) -> float:
    st = states[i]
    leader = _leader_of(states, i)
    if leader is None:
        base = lead_vehicle_accel(st, spec)
    else:
        base = helly_accel(leader, st, cfg)
    if cfg.mode is Mode.ETA and st.schedule is not None:
        track = schedule_tracking_accel(st, st.schedule, spec, now, cfg)
        if leader is None:
            base = track
        elif cfg.eta_controller == "min":
            base = min(base, track)
        elif leader.position_m - st.position_m < cfg.d_min_m:
            base = min(base, track)
        else:
            base = track
    return clip_accel(base, cfg)


def step(
    states: Sequence[VehicleState],
    cfg: SimConfig,
    spec: CorridorSpec,
    now: float,
) -> tuple:
    """Advance all vehicles by one step.

    Returns ``(next_states, events)``; the input states are not modified.
    Wrecked vehicles stay where they are and remain obstacles.
    """
    dt = cfg.dt_s
    t_next = now + dt
    accels = [
        _command(states, i, cfg, spec, now) if st.active else 0.0
        for i, st in enumerate(states)
    ]
    nxt: List[VehicleState] = []
    events: list = []
    L = spec.cum_lengths_m
    for st, a in zip(states, accels):
        if not st.active:
            nxt.append(replace(st, cwp_times_actual=list(st.cwp_times_actual)))
            continue
        x_new = st.position_m + dt * st.speed_mps
        v_raw = st.speed_mps + dt * a
        j_new = spec.section_at(x_new)
        ns = replace(st, cwp_times_actual=list(st.cwp_times_actual))
        # interpolated CWP crossing times
        for j in range(st.section_index + 1, min(j_new, spec.m) + 1):
            frac = (L[j] - st.position_m) / (x_new - st.position_m)
            ns.cwp_times_actual.append(now + frac * dt)
        ns.position_m = x_new
        if j_new >= spec.m:
            ns.exited = True
            ns.exit_time_s = ns.cwp_times_actual[-1]
            ns.section_index = spec.m
            ns.speed_mps = v_raw
            ns.accel_mps2 = a
            events.append(Event("exit", ns.exit_time_s, (st.vid,)))
        else:
            v_new = _project_speed(v_raw, spec, j_new)
            if v_new != v_raw:
                events.append(Event("speed_clamp", t_next, (st.vid,), v_raw))
            ns.section_index = j_new
            ns.speed_mps = v_new
            ns.accel_mps2 = (v_new - st.speed_mps) / dt
        if not (math.isfinite(ns.position_m) and math.isfinite(ns.speed_mps)):
            raise FloatingPointError(f"non-finite state for vehicle {st.vid}")
        nxt.append(ns)

    events.extend(_pair_events(nxt, cfg, t_next))
    return nxt, events


def _pair_events(states: List[VehicleState], cfg: SimConfig, now: float) -> list:
    events = []
    present = [s for s in states if s.present]
    for lead, fol in zip(present, present[1:]):
        gap = lead.position_m - fol.position_m
        if gap <= 0 and not (lead.collided and fol.collided):
            lead.collided = fol.collided = True
            lead.speed_mps = fol.speed_mps = 0.0
            lead.accel_mps2 = fol.accel_mps2 = 0.0
            events.append(Event("collision", now, (lead.vid, fol.vid), gap))
        elif gap < cfg.d_min_m:
            events.append(Event("separation_loss", now, (lead.vid, fol.vid), gap))
    return events


def _entry_ready(states: Sequence[VehicleState], cfg: SimConfig) -> bool:
    leader = None
    for st in reversed(states):
        if st.present:
            leader = st
            break
    if leader is None:
        return True
    probe = VehicleState(-1, 0.0, cfg.entry_speed_mps)
    return helly_accel(leader, probe, cfg) > 0


def admit_vehicles(
    mode: Mode,
    gap_s: float,
    cfg: SimConfig,
    now: float,
    states: List[VehicleState],
    spec: CorridorSpec,
) -> list:
    """Enter at most one new vehicle at time ``now``; returns the new states.

    The first vehicle always enters at time zero.  In ``ETA`` mode vehicle
    ``i`` is due at ``i * gap_s``; in ``NO_ETA`` mode the next vehicle waits at
    CWP 0 until its Helly acceleration against the nearest vehicle ahead is
    strictly positive.  No vehicle enters after ``cfg.entry_window_s``.
    """
    mode = Mode(mode)
    i = len(states)
    if now > cfg.entry_window_s + _TIME_EPS:
        return []
    if mode is Mode.ETA:
        due = i * gap_s
        if due > cfg.entry_window_s + _TIME_EPS or now + _TIME_EPS < due:
            return []
        schedule = schedule_for(spec, due)
    else:
        if i > 0 and not _entry_ready(states, cfg):
            return []
        schedule = None
    v0 = _project_speed(cfg.entry_speed_mps, spec, 0)
    st = VehicleState(
        vid=i,
        position_m=0.0,
        speed_mps=v0,
        section_index=0,
        entered=True,
        entry_time_s=now,
        cwp_times_actual=[now],
        schedule=schedule,
    )
    return [st]


def _event_rate(times: Sequence[float], fallback_span: float) -> float:
    """Mean rate of a stream of event times, in events per second.

    ``(n - 1) / (last - first)``, i.e. the inverse mean headway.  Streams with
    fewer than two events fall back to ``n / fallback_span``.
    """
    times = sorted(times)
    if len(times) >= 2 and times[-1] > times[0]:
        return (len(times) - 1) / (times[-1] - times[0])
    return len(times) / fallback_span if fallback_span > 0 else 0.0


def run(cfg: SimConfig, spec: CorridorSpec, gap_s: float = math.nan) -> SimResult:
    """Simulate until every admitted vehicle has left or the horizon ends.

    ``gap_s`` is required in ``ETA`` mode and ignored otherwise.
    """
    if cfg.mode is Mode.ETA and not (gap_s > 0):
        raise ValueError("ETA mode needs a positive gap")
    horizon = cfg.resolved_horizon(spec)
    n_steps = int(math.floor(horizon / cfg.dt_s + _TIME_EPS))
    states: List[VehicleState] = []
    events: list = []
    traj: Optional[list] = [] if cfg.record_trajectories else None
    min_sep = math.inf

    def log(now):
        nonlocal min_sep
        present = [s for s in states if s.present]
        for lead, fol in zip(present, present[1:]):
            min_sep = min(min_sep, lead.position_m - fol.position_m)
        if traj is not None:
            for s in present:
                traj.append(
                    (now, s.vid, s.position_m, s.speed_mps, s.accel_mps2, s.section_index)
                )

    k = 0
    while True:
        now = k * cfg.dt_s
        new = admit_vehicles(cfg.mode, gap_s, cfg, now, states, spec)
        for st in new:
            events.append(Event("entry", now, (st.vid,)))
        states.extend(new)
        log(now)
        admissions_over = now >= cfg.entry_window_s or (
            cfg.mode is Mode.ETA and len(states) * gap_s > cfg.entry_window_s + _TIME_EPS
        )
        done = admissions_over and not any(s.active for s in states)
        if done or k >= n_steps:
            break
        states, ev = step(states, cfg, spec, now)
        events.extend(ev)
        k += 1

    count_by = cfg.count_by_s if cfg.count_by_s is not None else math.inf
    safe = [
        s
        for s in states
        if s.exited and not s.collided and s.exit_time_s <= count_by + _TIME_EPS
    ]
    exited = [s for s in states if s.exited]
    arrival_rate = _event_rate([s.entry_time_s for s in states], cfg.entry_window_s)
    throughput = _event_rate([s.exit_time_s for s in safe], cfg.entry_window_s)
    return SimResult(
        mode=cfg.mode,
        gap_s=gap_s if cfg.mode is Mode.ETA else math.nan,
        safe_d_m=cfg.d_min_m,
        entered=len(states),
        exited=len(exited),
        safe_arrivals=len(safe),
        collision_events=[e for e in events if e.kind == "collision"],
        min_pairwise_separation_m=min_sep,
        arrival_rate_cwp0=arrival_rate,
        throughput_cwp_m=throughput,
        horizon_reached=any(s.active for s in states),
        vehicles=states,
        events=events,
        trajectories=traj,
    )


TRAJECTORY_COLUMNS = (
    "time_s", "vehicle_id", "position_m", "speed_mps", "accel_mps2", "section_index"
)
METRICS_COLUMNS = (
    "safe_d_m", "mode", "gap_s", "entered", "safe_arrivals", "collisions",
    "min_separation_m", "arrival_rate", "throughput",
)


def metrics_row(result: SimResult) -> dict:
    return {
        "safe_d_m": result.safe_d_m,
        "mode": result.mode.value,
        "gap_s": result.gap_s,
        "entered": result.entered,
        "safe_arrivals": result.safe_arrivals,
        "collisions": result.collisions,
        "min_separation_m": result.min_pairwise_separation_m,
        "arrival_rate": result.arrival_rate_cwp0,
        "throughput": result.throughput_cwp_m,
    }


def _fmt(v):
    return repr(float(v)) if isinstance(v, float) else v


def write_metrics_csv(results: Sequence[SimResult], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(METRICS_COLUMNS)
        for r in results:
            row = metrics_row(r)
            w.writerow([_fmt(row[c]) for c in METRICS_COLUMNS])


def write_trajectory_csv(result: SimResult, path) -> None:
    if result.trajectories is None:
        raise ValueError("run was not configured with record_trajectories=True")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRAJECTORY_COLUMNS)
        for row in result.trajectories:
            w.writerow([_fmt(v) for v in row])
