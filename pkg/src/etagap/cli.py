"""Command-line front end.

Subcommands::

    etagap validate --scenario S
    etagap gap      --scenario S [--safe-d 100,200] [--epsilon E] [--out DIR] [--dump-config]
    etagap simulate --scenario S [--safe-d 300] [--mode eta|no-eta|both] [--out DIR]
    etagap sweep    --scenario S [--safe-d ...] [--out DIR] [--jobs N]

``--scenario`` defaults to the bundled reference scenario.

Files written (fixed column order, full float precision):

    gap_table.csv          safe_d_m,gap_s,trivial_bound_s
    metrics.csv            safe_d_m,mode,gap_s,entered,safe_arrivals,collisions,
                           min_separation_m,arrival_rate,throughput
    traj_<mode>_<d>.csv    time_s,vehicle_id,position_m,speed_mps,accel_mps2,section_index

Exit codes: 0 success, 2 config error, 3 infeasible corridor, 4 internal
assertion failure.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Optional, Sequence

from .corridor import CorridorError, FeasibilityError, OverlapError
from .scenario import ConfigError, Scenario, bundled_scenario_path, load_scenario
from .simulator import (
    Mode,
    SimResult,
    run,
    write_metrics_csv,
    write_trajectory_csv,
)
from .solver import GapSolution, apply_eta_error_buffer, solve_min_gap, write_gap_table_csv

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_INTERNAL = 4

# separation slack allowed when re-checking a certificate
_CERT_TOL_M = 1e-6


class UsageError(ConfigError):
    pass


def _parse_list(text: str) -> tuple:
    try:
        vals = tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError as exc:
        raise UsageError(f"--safe-d: not a number list: {text!r}") from exc
    if not vals:
        raise UsageError("--safe-d: empty list")
    return vals


def _safe_d_list(args, scenario: Scenario) -> tuple:
    if args.safe_d is not None:
        return _parse_list(args.safe_d)
    if scenario.solver.safe_d_list:
        return scenario.solver.safe_d_list
    raise UsageError("no safe_d values: pass --safe-d or set solver.safe_d_list")


def _epsilon(args, scenario: Scenario) -> float:
    eps = args.epsilon if args.epsilon is not None else scenario.solver.epsilon_s
    if eps < 0:
        raise UsageError(f"--epsilon must be >= 0, got {eps}")
    return eps


def _out_dir(args, scenario: Scenario) -> Path:
    out = Path(args.out if args.out is not None else scenario.output)
    out.mkdir(parents=True, exist_ok=True)
    return out


def solve_for(scenario: Scenario, safe_d: float, epsilon: float = 0.0) -> GapSolution:
    """Scenario gap for ``safe_d`` with the buffer applied and re-certified."""
    sol = solve_min_gap(scenario.corridor, safe_d, **scenario.solver.solve_kwargs())
    if epsilon:
        sol = apply_eta_error_buffer(sol, epsilon)
    for t, sep in sol.certificate:
        if sep < safe_d - _CERT_TOL_M:
            raise AssertionError(
                f"certificate violated at t={t}: separation {sep} < {safe_d}"
            )
    return sol


def cmd_validate(args) -> int:
    sc = load_scenario(args.scenario)
    c = sc.corridor
    print(f"{sc.source}: OK, {c.m} sections, length {c.total_length_m:.0f} m")
    for j, (s, tau) in enumerate(zip(c.sections, c.travel_times_s)):
        print(
            f"  section {j}: l={s.length_m:g} m  v=[{s.v_min:g}, {s.v_max:g}] m/s"
            f"  tau={tau:.1f} s"
        )
    print(f"  trivial gap (sum of tau): {c.total_time_s:.1f} s")
    return EXIT_OK


def cmd_gap(args) -> int:
    sc = load_scenario(args.scenario)
    safe_ds = _safe_d_list(args, sc)
    eps = _epsilon(args, sc)
    out = _out_dir(args, sc)
    if args.dump_config:
        (out / "scenario.json").write_text(json.dumps(sc.to_dict(), indent=2))
    sols = []
    print(f"{'safe_d [m]':>10}  {'gap [s]':>8}  {'trivial [s]':>11}  {'solve [ms]':>10}")
    for d in safe_ds:
        t0 = time.perf_counter()
        sol = solve_for(sc, d, eps)
        ms = 1e3 * (time.perf_counter() - t0)
        sols.append(sol)
        flag = "  (trivial)" if sol.feasible_trivial else ""
        print(f"{d:10.0f}  {sol.gap_s:8.1f}  {sol.trivial_bound_s:11.1f}  {ms:10.2f}{flag}")
    write_gap_table_csv(sols, out / "gap_table.csv")
    return EXIT_OK


def _modes(text: str) -> tuple:
    if text == "both":
        return (Mode.ETA, Mode.NO_ETA)
    return (Mode(text),)


def _run_one(scenario: Scenario, safe_d: float, mode: Mode, eps: float, record: bool,
             count_by: Optional[float]) -> SimResult:
    gap = solve_for(scenario, safe_d, eps).gap_s
    overrides = {"record_trajectories": record}
    if count_by is not None:
        overrides["count_by_s"] = count_by
    cfg = scenario.sim_config(safe_d, mode, **overrides)
    return run(cfg, scenario.corridor, gap)


def _summary(r: SimResult) -> str:
    gap = f"{r.gap_s:.1f}" if r.mode is Mode.ETA else "-"
    return (
        f"safe_d={r.safe_d_m:.0f} mode={r.mode.value:<6} gap={gap:>5} entered={r.entered:3d} "
        f"safe_arrivals={r.safe_arrivals:3d} collisions={r.collisions:2d} "
        f"min_sep={r.min_pairwise_separation_m:.1f}"
    )


def cmd_simulate(args) -> int:
    sc = load_scenario(args.scenario)
    safe_ds = _safe_d_list(args, sc)
    eps = _epsilon(args, sc)
    out = _out_dir(args, sc)
    results = []
    for d in safe_ds:
        for mode in _modes(args.mode):
            r = _run_one(sc, d, mode, eps, True, args.count_by)
            write_trajectory_csv(r, out / f"traj_{mode.value}_{d:g}.csv")
            results.append(r)
            print(_summary(r))
    write_metrics_csv(results, out / "metrics.csv")
    return EXIT_OK


def cmd_sweep(args) -> int:
    sc = load_scenario(args.scenario)
    safe_ds = _safe_d_list(args, sc)
    eps = _epsilon(args, sc)
    out = _out_dir(args, sc)
    sols = [solve_for(sc, d, eps) for d in safe_ds]
    write_gap_table_csv(sols, out / "gap_table.csv")
    jobs = [(d, m) for d in safe_ds for m in (Mode.ETA, Mode.NO_ETA)]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            futs = [
                pool.submit(_run_one, sc, d, m, eps, False, args.count_by) for d, m in jobs
            ]
            results = [f.result() for f in futs]
    else:
        results = [_run_one(sc, d, m, eps, False, args.count_by) for d, m in jobs]
    for r in results:
        print(_summary(r))
    write_metrics_csv(results, out / "metrics.csv")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="etagap",
        description="Safe ETA gaps for sequential speed-limited corridor sections.",
        epilog="Files written" + __doc__.split("Files written", 1)[1],
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--scenario", default=str(bundled_scenario_path("paper")),
                        help="scenario JSON (default: bundled reference scenario)")
        sp.add_argument("--out", default=None, help="output directory")

    sp = sub.add_parser("validate", help="check a scenario file")
    common(sp)
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("gap", help="solve minimum ETA gaps, write gap_table.csv")
    common(sp)
    sp.add_argument("--safe-d", default=None, help="comma-separated safeD list [m]")
    sp.add_argument("--epsilon", type=float, default=None, help="ETA error buffer [s]")
    sp.add_argument("--dump-config", action="store_true",
                    help="also write the resolved scenario as scenario.json")
    sp.set_defaults(func=cmd_gap)

    for name, func, hlp in (
        ("simulate", cmd_simulate, "simulate and write metrics + trajectory CSVs"),
        ("sweep", cmd_sweep, "gap table and metrics for every safeD, both modes"),
    ):
        sp = sub.add_parser(name, help=hlp)
        common(sp)
        sp.add_argument("--safe-d", default=None, help="comma-separated safeD list [m]")
        sp.add_argument("--epsilon", type=float, default=None, help="ETA error buffer [s]")
        sp.add_argument("--count-by", type=float, default=None,
                        help="count safe arrivals only up to this time [s]")
        if name == "simulate":
            sp.add_argument("--mode", choices=("eta", "no-eta", "both"), default="both")
        else:
            sp.add_argument("--jobs", type=int, default=1, help="worker processes")
        sp.set_defaults(func=func)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (OverlapError, FeasibilityError) as exc:
        print(f"infeasible corridor: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ConfigError, CorridorError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except AssertionError as exc:
        print(f"internal assertion failed: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
