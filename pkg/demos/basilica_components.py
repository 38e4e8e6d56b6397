"""One John constant for all Fatou components of the basilica.

The bounded Fatou components of z^2 - 1 are preimages of the two around
0 and -1.  Since the map is semi-hyperbolic, a single epsilon works for
all of them at once, even though they shrink to tiny sizes.  This script
measures eps-hat on the largest bounded components, checks that crosscut
continua of random Julia pairs stay within the bound it implies, and
writes the labelled field as a PPM image.

    python3 demos/basilica_components.py [out.ppm]
"""

import sys

from juliageom.errors import ComponentUnresolved
from juliageom.grid import GridSpec, classify_and_label, distance_field, export_field, julia_sample
from juliageom.orbits import detect_cycles
from juliageom.ratmap import RationalMap
from juliageom.regularity import crosscut_continuum, john_estimate, random_julia_pairs

f = RationalMap.quadratic(-1)
field = classify_and_label(f, GridSpec("standard", 0j, 1.7, 512), detect_cycles(f))
sample = julia_sample(f, 40000, 1, method="mixed", field=field)
distance_field(field, sample)

bounded = field.basin_id[field.spec.cell_of(0j)]
sizes = field.component_sizes()
print(f"{field.n_components} labelled components")
eps = []
for k in field.largest_components(8, basin=bounded):
    rep = john_estimate(f, field, k, samples=150, seed=k, keep_paths=False)
    eps.append(rep.epsilon_hat)
    print(f"  component {k:4d}: {sizes[k]:6d} cells, eps-hat {rep.epsilon_hat:.3f}")
print(f"max / min = {max(eps) / min(eps):.2f}")

bound = 1.2 / min(eps)
ratios, unresolved = [], 0
for a, b in random_julia_pairs(field, sample, 40, seed=0):
    try:
        ratios.append(crosscut_continuum(f, field, sample, a, b).ratio)
    except ComponentUnresolved:
        unresolved += 1
print(f"\ncrosscut continua: max diam C / d(a, b) = {max(ratios):.3f} (bound {bound:.2f}), {unresolved} unresolved")

out = sys.argv[1] if len(sys.argv) > 1 else "basilica.ppm"
export_field(field, out)
print(f"field written to {out}")
