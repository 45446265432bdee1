"""
Measuring how evenly points fill the cube
=========================================

Star discrepancy compares the fraction of points in every origin-anchored
box with the box's volume. The grid approximation is a lower bound of the
exact value and becomes exact once the point coordinates join the grid.
"""

import numpy as np
from scipy.stats import qmc

from forgefuzz import DiscrepancyConfig, star_discrepancy_approx, star_discrepancy_exact

rng = np.random.default_rng(0)
random_pts = rng.random((32, 2))

# a Halton sequence is built to fill the square evenly; a centred product
# lattice looks regular but leaves whole strips of boxes badly covered
halton = qmc.Halton(d=2, scramble=False).random(33)[1:]
g = (np.arange(4) + 0.5) / 4
lattice = np.array([(x, y) for x in g for y in g])

for name, pts in [("random", random_pts), ("halton", halton), ("lattice", lattice)]:
    approx = star_discrepancy_approx(pts)
    exact = star_discrepancy_exact(pts)
    print(f"{name:>8}: grid G=16 {approx:.4f}  exact {exact:.4f}")

# the number of grid divisions trades accuracy for speed
for G in (2, 4, 8, 16, 32):
    print(G, round(star_discrepancy_approx(random_pts, DiscrepancyConfig(G)), 4))
print("with point coordinates:", star_discrepancy_approx(random_pts, DiscrepancyConfig(16, True)))
