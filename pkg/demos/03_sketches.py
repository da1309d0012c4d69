"""
Linear sketches
===============

Three turnstile sketches: exact recovery of sparse vectors, uniform
sampling from the support, and l_p norm estimation. All of them accept
insertions and deletions, and two sketches with the same seed merge.
"""

import numpy as np

from mststream.sketches import FAIL, KSparseSketch, L0Sampler, PStableSketch

# k-sparse recovery: exact when at most k keys survive, FAIL otherwise
sk = KSparseSketch(4, seed=1)
sk.update_batch([10, 20, 30, 40, 50], [3, -1, 2, 5, 7])
print("5 keys in a 4-sparse sketch:", sk.decode())
sk.update(50, -7)
print("after deleting one:", sk.decode())

# l0 sampling: every surviving key equally likely, whatever its value
keys = np.array([3, 17, 99, 512])
vals = np.array([1, 1000, -5, 2])
counts = {int(k): 0 for k in keys}
for s in range(2000):
    l0 = L0Sampler(seed=s)
    l0.update_batch(keys, vals)
    got = l0.sample()
    if got is not FAIL:
        counts[int(got)] += 1
print("l0 sample counts:", counts)

# merging: halves of a stream sketched separately give the same answer
a, b = L0Sampler(seed=9), L0Sampler(seed=9)
a.update_batch(keys[:2], vals[:2])
b.update_batch(keys[2:], vals[2:])
print("merged sample:", a.merge(b).sample())

# p-stable norm estimation for a few p
x = np.array([4, -1, 0, 9, 2])
for p in (1.0, 0.5):
    ps = PStableSketch(p, eps0=0.1, seed=2)
    ps.update_batch(np.arange(len(x)), x)
    exact = np.sum(np.abs(x) ** p) ** (1 / p)
    print(f"p={p}: estimate {ps.estimate():.2f}, exact {exact:.2f}")
