"""The whole pipeline on one random instance, stage by stage.

``solve_instance`` classifies requests by distance, runs the matching band
solvers (an exact search for short hops, fractional flow + rounding +
congestion filter + tile routing for the rest), keeps the best band, and
returns the packing together with a report of what every stage kept.  The
same flow is available from the command line:

    linesched gen --n 64 --M 150 --seed 5 --out inst.json
    linesched solve inst.json --seed 5 --out sched.json
    linesched verify inst.json sched.json
"""

from linesched import gen_random_instance, solve_instance, validate_schedule
from linesched.grid import packing_to_schedule

inst = gen_random_instance(n=64, B=1, c=1, M=150, seed=5)
packing, report = solve_instance(inst, seed=5)

print(f"n={inst.n}, {len(inst.requests)} requests, "
      f"category mix -> ran bands {sorted(report.band_results)}")
print(f"band sizes {report.band_sizes}")
for band, trace in sorted(report.traces.items()):
    kept = trace.counts()
    stages = (f"rounded {kept['R_rnd']:3d} -> filtered {kept['R_fltr']:3d} "
              f"-> routed {kept['R_quad']:3d} -> final {kept['R_final']:3d}")
    if trace.chosen_class >= 0:
        stages += (f"   (distance class {trace.chosen_class}, fractional "
                   f"value {trace.fractional_value:.1f})")
    print(f"  {band:7s} {stages}")

print(f"\nper-band deliveries {report.band_results}; "
      f"winner '{report.category}' delivers {report.throughput} "
      f"(fractional upper bound {report.frac_bound:.1f}, "
      f"ratio {report.throughput / report.frac_bound:.3f})")

verdict = validate_schedule(inst, packing_to_schedule(inst, packing))
print(f"validator: ok={verdict.ok}, {verdict.accepted} delivered, "
      f"{len(verdict.violations)} violations")
