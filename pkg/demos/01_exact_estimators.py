"""
Counting components to price a spanning tree
============================================

The MST cost of a point set can be read off from how many connected
components its threshold graphs have. This script checks that identity
on a small instance, then runs the grid-snapped estimators built on it.
"""

import numpy as np

from mststream.components import EstimatorParams, cs_sandwich_value, estimator_Z, ideal_estimator
from mststream.generators import generate_cantor, generate_uniform
from mststream.oracle import mst_oracle
from mststream.quadtree import Quadtree, QuadtreeConfig

# a few dozen random points in a 256 x 256 box
P = generate_uniform(40, 2, 256, seed=1)
mst, edges = mst_oracle(P)
print("exact MST cost:", mst, "with", len(edges), "edges")

# n - Delta + eps * sum_i (1+eps)^i * c_(1+eps)^i, computed with fractions
value, Delta, h = cs_sandwich_value(P, 0.5)
print(f"component-count value {float(value):.1f}  (must lie in [{mst}, {1.5 * mst:.1f}])")

# the same idea on snapped points, one level per power of (1 + delta)
qt = Quadtree(QuadtreeConfig.for_points(P, epsilon=0.5, seed=3), P)
print(f"{len(qt.levels)} levels, delta = {qt.cfg.delta}, beta = {qt.cfg.beta}")
print(f"ideal estimator / MST = {ideal_estimator(qt) / mst:.4f}")

# Z replaces 1/|CC| by min(y, z), two locally computable stand-ins;
# with a threshold far above n nothing is cut off and Z equals the ideal value
params = EstimatorParams.natural(qt.cfg, qt.structure)
print(f"Z / MST at the natural threshold = {estimator_Z(qt, params) / mst:.4f}")

# a small threshold zeroes out big neighbourhoods, and more BFS rounds
# catch more of them, so Z can only go down as alpha grows
C = generate_cantor(64)
m = mst_oracle(C)[0]
qt = Quadtree(QuadtreeConfig.for_points(C, epsilon=0.5, seed=0), C)
for alpha in (1, 2, 4, 8):
    params = EstimatorParams.for_structure(qt.structure, size_threshold=16, bfs_rounds=alpha)
    print(f"cantor, threshold 16, alpha={alpha}: Z / MST = {estimator_Z(qt, params) / m:.3f}")
