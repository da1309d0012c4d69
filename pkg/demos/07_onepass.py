"""
A single pass
=============

The one-pass estimator samples a vertex per trial and guesses the scale
of its neighbourhood; hash buckets at that scale must hold the point's
component for the trial to count. The estimate R is an upper bound on
the MST cost, loose by a constant factor.
"""

from mststream.generators import generate_cantor, generate_uniform
from mststream.onepass import OnePassConfig, run_onepass
from mststream.oracle import mst_oracle

for name, P in (("uniform", generate_uniform(30, 2, 256, seed=2)), ("cantor", generate_cantor(32))):
    mst = mst_oracle(P)[0]
    rep = run_onepass(P, OnePassConfig(epsilon=0.25, size_threshold=16, samples=10), seed=1, classes=True)
    lv = rep.levels[len(rep.levels) // 2]
    print(f"{name}: R = {rep.estimate:.0f}, MST = {mst}, R / MST = {rep.estimate / mst:.1f}")
    print(f"   level t={lv['t']:g}: success rate {lv['success_rate']:.3f}, classes {lv['classes']}")

# the strict tester keeps whole balls inside buckets, at a lower success rate
P = generate_uniform(30, 2, 256, seed=2)
for tester in ("plain", "strict"):
    rep = run_onepass(P, OnePassConfig(epsilon=0.25, size_threshold=16, samples=10, tester=tester), seed=1)
    rate = sum(l["success_rate"] for l in rep.levels) / len(rep.levels)
    print(f"{tester} tester: mean success rate {rate:.3f}, R = {rep.estimate:.0f}")
