"""
Randomly shifted grids
======================

Points are snapped to nested power-of-two grids under one random shift.
The snapped sets shrink as the grid coarsens, and the summed snapping
cost stays within a constant of the MST for most shifts.
"""

import numpy as np

from mststream.generators import generate_clustered
from mststream.oracle import mst_oracle
from mststream.quadtree import Quadtree, QuadtreeConfig, build_levels, check_nesting, quadtree_cost

P = generate_clustered(200, 2, 1024, seed=4, clusters=5)
cfg = QuadtreeConfig.for_points(P, epsilon=0.25, seed=7)
qt = Quadtree(cfg, P)

# one vertex set per block anchor
for T, V in qt.vertex_sets.items():
    print(f"anchor {T:8.1f}: cell side 2^{V.k}, {V.size} vertices")

# grids are nested, so anything merged early stays merged
anchors = qt.structure.anchors
print("nested:", all(check_nesting(cfg, P, a, b) for a, b in zip(anchors, anchors[1:])))

# cost over shifts, in units of (d/eps) * MST
mst = mst_oracle(P)[0]
ratios = []
for s in range(30):
    c = QuadtreeConfig.for_points(P, epsilon=0.25, seed=s)
    ratios.append(quadtree_cost(c, build_levels(c), P) / ((P.d / 0.25) * mst))
print(f"cost / ((d/eps) MST): median {np.median(ratios):.2e}, max {max(ratios):.2e}")
