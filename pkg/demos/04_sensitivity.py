"""How corridor design and timing error change the required gap.

Run with ``python3 demos/04_sensitivity.py``.
"""
# %%
# Longer sections give the envelopes more room to spread, so the gap grows.
from etagap import Section, apply_eta_error_buffer, build_corridor, load_bundled, solve_min_gap

sc = load_bundled("paper")
kw = sc.solver.solve_kwargs()
base = sc.corridor
print(f"reference corridor, safe_d 300 m: {solve_min_gap(base, 300, **kw).gap_s:.1f} s")
for length in (300, 500, 700):
    spec = build_corridor(
        [Section(length, s.v_min, s.v_max) for s in base.sections], travel_time_decimals=1
    )
    print(f"all sections {length} m: {solve_min_gap(spec, 300, **kw).gap_s:.1f} s")

# %%
# Widening every speed window by 5 m/s on each side.
wide = build_corridor(
    [Section(s.length_m, s.v_min - 5, s.v_max + 5) for s in base.sections],
    travel_time_decimals=1,
)
print(f"wider speed windows: {solve_min_gap(wide, 300, **kw).gap_s:.1f} s")

# %%
# If each vehicle may miss its entry time by up to eps seconds, adding
# 2 * eps to the gap keeps the guarantee.
sol = solve_min_gap(base, 300, **kw)
for eps in (0.0, 0.5, 1.0, 2.0):
    buf = apply_eta_error_buffer(sol, eps)
    print(f"eps {eps:3.1f} s -> gap {buf.gap_s:4.1f} s, worst separation {buf.min_separation_m:6.1f} m")
