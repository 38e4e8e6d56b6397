"""The squaring map as a sanity check.

J(z^2) is the unit circle and the Fatou components are round disks, so
every quantity measured below has a closed form to compare against:
preimages of small balls shrink by a factor 2 per step, the disk is John
with a constant near 1, and quasi-hyperbolic distance to 0 grows like
-log of the distance to the circle.

    python3 demos/squaring_map.py
"""

import numpy as np

from juliageom.grid import GridSpec, classify_and_label, distance_field, julia_sample
from juliageom.orbits import detect_cycles
from juliageom.pullback import shrink_experiment
from juliageom.ratmap import RationalMap
from juliageom.regularity import crosscut_continuum, holder_check, john_estimate

f = RationalMap.quadratic(0)

# Pullbacks of a ball of chordal radius 0.2 centered on the circle.
sample = julia_sample(f, 2000, seed=0)
shrink = shrink_experiment(f, sample, 0.2, 10, per_depth_samples=4, seed=0)
print("max pullback diameter by depth:")
for n, d in zip(shrink.depths, shrink.max_diameter):
    print(f"  n = {n:2d}   {d:.3e}")
print(f"fitted lambda {shrink.fitted_lambda:.3f} (exact: 2), verdict {shrink.verdict}")

# Grid field on [-1.25, 1.25]^2 and the unit disk component.
field = classify_and_label(f, GridSpec("standard", 0j, 1.25, 512), detect_cycles(f))
distance_field(field, julia_sample(f, 40000, 1, method="mixed", field=field))
disk = field.component_at(0j)

john = john_estimate(f, field, disk, samples=400, seed=0)
z1, z, ratio = john.worst_witness
print(f"\nJohn constant of the disk: eps-hat = {john.epsilon_hat:.3f}")
print(f"  worst path starts at {z1:.4f}, tight at {z:.4f}")
print(f"  builders used: {john.builder_counts}")

holder = holder_check(f, field, disk, samples=400, seed=0)
print(f"\nqh distance vs -log delta: slope {holder.slope:.3f} (continuum: 1), verdict {holder.verdict}")

# A chord of the circle cut out of the disk and replaced by the short arc.
a, b = 1 + 0j, np.exp(1j)
sample_ab = julia_sample(f, 40000, 1, method="mixed", field=field)
sample_ab.points = np.concatenate([sample_ab.points, [a, b]])
distance_field(field, sample_ab)
cont = crosscut_continuum(f, field, sample_ab, a, b)
print(f"\ncrosscut from 1 to e^i: diam C / d(a, b) = {cont.ratio:.3f} over {cont.crossings} crossing(s)")
