"""
The multi-pass estimator
========================

With alpha + 1 passes over the stream, each sampled vertex gets its ball
sizes and an alpha-round BFS recovered from sketches. The recovered
min(y, z) agrees with direct computation unless a sketch reports failure.
"""

from mststream.components import EstimatorParams
from mststream.generators import generate_uniform
from mststream.multipass import run_alpha_pass
from mststream.oracle import mst_oracle
from mststream.quadtree import QuadtreeConfig, build_levels

P = generate_uniform(12, 2, 32, seed=3)
cfg = QuadtreeConfig.for_points(P, epsilon=0.5, delta=0.25, seed=1)
params = EstimatorParams(size_threshold=6, bfs_rounds=2)

# compare sketch recovery against direct evaluation on every fourth level
L = len(build_levels(cfg).levels)
rep = run_alpha_pass(P, cfg, params, 3, seed=2, n_hat="exact", compare=True, level_indices=range(0, L, 4))
recs = [r for r in rep.extra["records"] if "direct" in r]
print(f"{sum(r['match'] for r in recs)}/{len(recs)} sampled vertices match direct min(y, z)")

# a full estimate, with the vertex counts themselves sketched; the
# threshold is also the sketch sparsity, and n + 1 keeps every neighbourhood
params = EstimatorParams(size_threshold=P.n_distinct + 1, bfs_rounds=2)
rep = run_alpha_pass(P, cfg, params, 6, seed=4)
print(f"estimate {rep.estimate:.1f} vs MST {mst_oracle(P)[0]}; "
      f"{rep.parameters['rounds']} passes, {rep.parameters['stream_replays']} stream replays")
