"""A parabolic map against a Misiurewicz map.

z^2 + 1/4 has a parabolic fixed point at 1/2: it is not semi-hyperbolic,
small balls at the cusp barely shrink under pullback, and the John
constant of the basin of infinity keeps falling as the grid resolves the
cusp better.  z^2 + i is semi-hyperbolic (its critical orbit lands on a
repelling 2-cycle), and neither effect appears.

    python3 demos/parabolic_cusp.py
"""

from juliageom.grid import GridSpec, classify_and_label, distance_field, julia_sample
from juliageom.orbits import detect_cycles, semi_hyperbolicity_verdict
from juliageom.pullback import julia_points_near, shrink_experiment
from juliageom.ratmap import RationalMap
from juliageom.regularity import john_estimate
from juliageom.sphere import INF
from juliageom.summability import summability_report

cauliflower = RationalMap.quadratic(0.25)
dendrite = RationalMap.quadratic(1j)

for name, f in (("z^2 + 1/4", cauliflower), ("z^2 + i", dendrite)):
    v = semi_hyperbolicity_verdict(f)
    print(f"{name}: {v.verdict} (parabolic cycle found: {v.parabolic_found})")
    for e in v.julia_critical:
        print(f"  critical point {e.point} in J, recurrence distance {e.recurrence_distance:.6f}")

# Pullbacks at the cusp: bases within 0.05 of the parabolic point.
sample = julia_sample(cauliflower, 2000, seed=0)
bases = list(dict.fromkeys(julia_points_near(cauliflower, sample, 0.5, 0.05, 4)))
rep = shrink_experiment(cauliflower, sample, 0.02, 20, bases=bases, seed=0)
print(f"\nz^2 + 1/4 near 1/2: lambda-hat {rep.fitted_lambda:.3f}, {rep.verdict}")
rep = shrink_experiment(dendrite, julia_sample(dendrite, 2000, seed=0), 0.02, 12, per_depth_samples=4, seed=0)
print(f"z^2 + i: lambda-hat {rep.fitted_lambda:.3f}, {rep.verdict}")

s = summability_report(dendrite, semi_hyperbolicity_verdict(dendrite), 16)
print(f"z^2 + i: Collet-Eckmann slope {s.ce_slope:.3f}, summability {s.trend}")

print("\nJohn constant of the basin of infinity by resolution:")
for name, f, hw in (("z^2 + 1/4", cauliflower, 2.5), ("z^2 + i", dendrite, 1.5)):
    row = []
    for N in (256, 512):
        field = classify_and_label(f, GridSpec("inverted", 0j, hw, N), detect_cycles(f))
        distance_field(field, julia_sample(f, 40000, 1, method="mixed", field=field))
        row.append(john_estimate(f, field, field.component_at(INF), samples=600, seed=0).epsilon_hat)
    print(f"  {name}: " + "  ".join(f"N={N}: {e:.3f}" for N, e in zip((256, 512), row)))
