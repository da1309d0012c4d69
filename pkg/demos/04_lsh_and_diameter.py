"""
Ball-carving hashes and the diameter sketch
===========================================

A hash at scale t puts points into buckets of l1 diameter at most 2t/eps.
A point passes the tester when its bucket centre is well inside reach,
which happens with probability (1 - eps)^d. Hash bucket counts at growing
scales give a cheap bound on the diameter.
"""

import numpy as np

from mststream.generators import generate_clustered
from mststream.lsh import LshFunction, diameter_sketch
from mststream.oracle import diameter_oracle

rng = np.random.default_rng(0)
X = rng.integers(1, 65, size=(500, 2)).astype(float)
h = LshFunction(4.0, 0.25, 64, 2, seed=1)
b = h.hash(X)
widest = max(np.abs(X[b == v][:, None] - X[b == v][None]).sum(-1).max() for v in np.unique(b))
print(f"{len(np.unique(b))} buckets, widest spans {widest:.0f} <= 2t/eps = {2 * h.r:.0f}")

# survival rate of the tester over fresh hash functions
x = np.array([30.0, 30.0])
n = 3000
hits = sum(bool(LshFunction(4.0, 0.25, 64, 2, seed=s).tester(x)[0]) for s in range(n))
print(f"tester survival {hits / n:.3f} vs (1 - eps)^d = {0.75 ** 2:.3f}")

# the plain tester looks at x alone; the strict one also keeps B(x, t) together
print("strict survival:", np.mean(h.strict_tester(X)).round(3), "plain:", np.mean(h.tester(X)).round(3))

# diameter sketch: diam <= Delta <= (4/eps) diam
P = generate_clustered(60, 2, 256, seed=5)
diam = diameter_oracle(P)
est = [diameter_sketch(P, 0.5, 256, 2, seed=s) for s in range(20)]
print(f"diameter {diam}, sketch answers {sorted(set(est))}")
