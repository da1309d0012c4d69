"""
Hierarchical sampling from one sketch
=====================================

A vector indexed by (i1, i2, i3) is sampled level by level: first a block
i1 with probability proportional to its l_p^p mass, then i2 inside it,
then i3. Exponential scaling turns each choice into an argmax that a
count sketch can find.
"""

import numpy as np

from mststream.recursive_sampler import HierIndexSpace, RecSamplerSketch, _batch_from_copy, exact_law
from mststream.sketches import FAIL

x = np.zeros((3, 3, 3))
x[0, 0, 0], x[0, 1, 2], x[2, 2, 1], x[1, 0, 0] = 9, 3, -4, 1
law = exact_law(x, 1.0)

counts = np.zeros_like(law)
for seed in range(40):
    sk = RecSamplerSketch(HierIndexSpace(3, 3, 3), p=1.0, rows=3, buckets=32, reps=33, copies=50, seed=seed)
    sk.update_dense(x)
    for c in range(sk.copies):
        b = _batch_from_copy(sk, c)
        if b is not FAIL:
            counts[b.i1, b.i2[0], b.i3[0, 0]] += 1

emp = counts / counts.sum()
for idx in zip(*np.nonzero(law)):
    print(f"{tuple(int(i) for i in idx)}: exact {law[idx]:.3f}, sampled {emp[idx]:.3f}")
print(f"total variation {0.5 * np.abs(emp - law).sum():.3f} over {int(counts.sum())} draws")
