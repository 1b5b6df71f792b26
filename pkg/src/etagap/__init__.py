"""Guaranteed-safe ETA gaps for vehicles in sequential speed-limited corridors."""
from .bounds import (
    BoundKind,
    CriticalPointSet,
    DomainError,
    TrajectoryBound,
    build_bound,
    critical_points,
    eval_bound,
    switch_time_max_to_min,
    switch_time_min_to_max,
)
from .corridor import (
    PAPER_SECTIONS,
    CorridorError,
    CorridorSpec,
    FeasibilityError,
    OverlapError,
    Schedule,
    Section,
    SectionError,
    build_corridor,
    derive_travel_times,
    schedule_for,
)
from .scenario import Scenario, load_bundled, load_scenario
from .simulator import Mode, SimConfig, SimResult, VehicleState, run
from .solver import (
    GapSolution,
    apply_eta_error_buffer,
    critical_time_set,
    min_separation,
    solve_min_gap,
)

__version__ = "0.1.0"
