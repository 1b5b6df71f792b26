"""JSON scenario files.

Schema (unknown keys are rejected at every level)::

    {
      "corridor": {
        "sections": [{"length_m": 920, "v_min": 60, "v_max": 85}, ...],
        "travel_times_s": [...],          # optional, explicit per-section
        "travel_time_decimals": 1,        # optional, round derived times
        "safe_d_m": 300
      },
      "solver": {
        "safe_d_list": [100, 200, ...],
        "epsilon_s": 0.0,
        "tolerance_s": 1e-6,
        "gap_grid_s": 0.1,                # optional
        "strict": false
      },
      "sim": {"dt_s": 0.1, "entry_window_s": 100, ...},   # SimConfig fields
      "output": "out"
    }

Only ``corridor.sections`` is required.
"""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional, Union

from .corridor import CorridorSpec, Section, build_corridor
from .simulator import Mode, SimConfig


class ConfigError(ValueError):
    """Malformed scenario file."""


_CORRIDOR_KEYS = {"sections", "travel_times_s", "travel_time_decimals", "safe_d_m"}
_SECTION_KEYS = {"length_m", "v_min", "v_max"}
_SOLVER_KEYS = {"safe_d_list", "epsilon_s", "tolerance_s", "gap_grid_s", "strict"}
_SIM_KEYS = {
    f.name for f in dataclasses.fields(SimConfig)
} - {"mode", "d_min_m", "record_trajectories"}
_TOP_KEYS = {"corridor", "solver", "sim", "output"}


@dataclass(frozen=True)
class SolverSettings:
    safe_d_list: tuple = ()
    epsilon_s: float = 0.0
    tolerance_s: float = 1e-6
    gap_grid_s: Optional[float] = None
    strict: bool = False

    def solve_kwargs(self) -> dict:
        return {"tol": self.tolerance_s, "grid_s": self.gap_grid_s, "strict": self.strict}


@dataclass(frozen=True)
class Scenario:
    corridor: CorridorSpec
    solver: SolverSettings = field(default_factory=SolverSettings)
    sim: dict = field(default_factory=dict)
    output: str = "out"
    travel_time_decimals: Optional[int] = None
    source: Optional[str] = None

    def sim_config(self, safe_d: float, mode: Union[Mode, str], **overrides) -> SimConfig:
        kw = dict(self.sim)
        kw.update(overrides)
        return SimConfig(d_min_m=float(safe_d), mode=Mode(mode), **kw)

    def to_dict(self) -> dict:
        """Fully resolved scenario; travel times are written explicitly."""
        c = self.corridor
        return {
            "corridor": {
                "sections": [dataclasses.asdict(s) for s in c.sections],
                "travel_times_s": list(c.travel_times_s),
                "safe_d_m": c.safe_d_m,
            },
            "solver": {
                "safe_d_list": list(self.solver.safe_d_list),
                "epsilon_s": self.solver.epsilon_s,
                "tolerance_s": self.solver.tolerance_s,
                "gap_grid_s": self.solver.gap_grid_s,
                "strict": self.solver.strict,
            },
            "sim": {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.sim.items()},
            "output": self.output,
        }


def _check_keys(obj, allowed, where):
    if not isinstance(obj, dict):
        raise ConfigError(f"{where}: expected an object, got {type(obj).__name__}")
    unknown = set(obj) - allowed
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")


def _number(value, where):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {value!r}")
    return float(value)


def parse_scenario(data: dict, source: Optional[str] = None) -> Scenario:
    """Build a :class:`Scenario` from decoded JSON.

    Raises
    ------
    ConfigError
        Structural problems (unknown keys, wrong types, missing sections).
    etagap.corridor.CorridorError
        The corridor itself violates a validation rule.
    """
    _check_keys(data, _TOP_KEYS, "scenario")
    if "corridor" not in data:
        raise ConfigError("scenario: missing 'corridor'")
    cor = data["corridor"]
    _check_keys(cor, _CORRIDOR_KEYS, "corridor")
    raw_sections = cor.get("sections")
    if not isinstance(raw_sections, list) or not raw_sections:
        raise ConfigError("corridor.sections: expected a nonempty list")
    sections = []
    for j, s in enumerate(raw_sections):
        where = f"corridor.sections[{j}]"
        _check_keys(s, _SECTION_KEYS, where)
        missing = _SECTION_KEYS - set(s)
        if missing:
            raise ConfigError(f"{where}: missing keys {sorted(missing)}")
        sections.append(Section(*(_number(s[k], f"{where}.{k}") for k in ("length_m", "v_min", "v_max"))))

    taus = cor.get("travel_times_s")
    if taus is not None:
        if not isinstance(taus, list):
            raise ConfigError("corridor.travel_times_s: expected a list")
        taus = [_number(t, "corridor.travel_times_s") for t in taus]
    decimals = cor.get("travel_time_decimals")
    if decimals is not None and (isinstance(decimals, bool) or not isinstance(decimals, int)):
        raise ConfigError("corridor.travel_time_decimals: expected an integer")
    safe_d = _number(cor.get("safe_d_m", 0.0), "corridor.safe_d_m")
    spec = build_corridor(sections, safe_d, taus, travel_time_decimals=decimals)

    sol = data.get("solver", {})
    _check_keys(sol, _SOLVER_KEYS, "solver")
    safe_ds = sol.get("safe_d_list", [])
    if not isinstance(safe_ds, list):
        raise ConfigError("solver.safe_d_list: expected a list")
    grid = sol.get("gap_grid_s")
    strict = sol.get("strict", False)
    if not isinstance(strict, bool):
        raise ConfigError("solver.strict: expected true/false")
    solver = SolverSettings(
        safe_d_list=tuple(_number(d, "solver.safe_d_list") for d in safe_ds),
        epsilon_s=_number(sol.get("epsilon_s", 0.0), "solver.epsilon_s"),
        tolerance_s=_number(sol.get("tolerance_s", 1e-6), "solver.tolerance_s"),
        gap_grid_s=None if grid is None else _number(grid, "solver.gap_grid_s"),
        strict=strict,
    )

    sim = data.get("sim", {})
    _check_keys(sim, _SIM_KEYS, "sim")
    sim = dict(sim)
    if "accel_bounds" in sim:
        sim["accel_bounds"] = tuple(sim["accel_bounds"])
    try:
        SimConfig(**sim)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"sim: {exc}") from exc

    output = data.get("output", "out")
    if not isinstance(output, str):
        raise ConfigError("output: expected a path string")
    return Scenario(spec, solver, sim, output, decimals, source)


def load_scenario(path: Union[str, Path]) -> Scenario:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except FileNotFoundError as exc:
        raise ConfigError(f"scenario file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return parse_scenario(data, str(path))


def bundled_scenario_path(name: str = "paper") -> Path:
    return Path(str(resources.files("etagap") / "scenarios" / f"{name}.json"))


def load_bundled(name: str = "paper") -> Scenario:
    """Load one of the scenarios shipped with the package (``paper``, ``paper_500m``)."""
    return load_scenario(bundled_scenario_path(name))
