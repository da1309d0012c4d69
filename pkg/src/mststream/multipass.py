"""Multi-round linear-sketch evaluation of the sampled estimator.

Per level t and per sample the protocol runs in rounds over the stream:

  round 1   an l0 sampler over the snapped vertex vector picks p ~ V_t,
            and a distinct-count sketch per anchor estimates |V_t|;
  round 2   one k-sparse sketch per ball B(p, 2^j t) recovers the balls
            that hold at most `size_threshold` vertices (y_t(p)), and the
            first BFS frontier is recovered the same way;
  later     each further round recovers the next BFS frontier with a
            k-sparse sketch sized by the remaining budget (z_t(p)).

Sketches of a round depend only on outputs of earlier rounds; restricting
a sketch to a ball around p is legitimate because p was fixed earlier.
"""
from dataclasses import dataclass, field
import math
import time

import numpy as np
from numba import njit

from . import _kernels as K
from ._random import derive_seed, mix64
from .components import EstimatorParams, LevelTable
from .errors import ConfigError
from .quadtree import Quadtree, build_levels, cell_index, side_exponent
from .report import EstimateReport
from .sketches import FAIL, KSparseSketch, L0Estimator, L0Sampler
from .sketches.hashing import PRIME
from .stream import as_source


@njit(cache=True)
def row_keys(idx):
    """Hash integer rows to field keys (collisions have probability ~ m^2/2^61)."""
    out = np.empty(idx.shape[0], dtype=np.uint64)
    for i in range(idx.shape[0]):
        h = np.uint64(0x243F6A8885A308D3)
        for j in range(idx.shape[1]):
            h = mix64(h ^ np.uint64(idx[i, j]))
        out[i] = h % np.uint64(PRIME)
    return out


@dataclass
class PassPlan:
    """Round-by-round manifest of the sketches instantiated."""
    alpha: int
    rounds: list = field(default_factory=list)

    def open_round(self, i, sketches, inputs):
        if any(r >= i for r in inputs):
            raise RuntimeError("a round may only depend on earlier rounds")
        while len(self.rounds) <= i:
            self.rounds.append([])
        self.rounds[i].append(sketches)


@dataclass
class BfsFrontierState:
    explored: list
    round: int = 0


def _snapped(source, cfg, k):
    for signs, pts in source.replay():
        cells = cell_index(cfg, k, pts)
        yield signs, cells, row_keys(cells)


def sample_vertex_pass(source, cfg, k, seeds):
    """Round 1: one l0 sample of V_t per seed; FAIL entries on failure."""
    d = cfg.d
    samplers = [L0Sampler(seed=s, payload_dim=d) for s in seeds]
    for signs, cells, keys in _snapped(source, cfg, k):
        for s in samplers:
            s.update_batch(keys, signs, cells)
    out = []
    for s in samplers:
        got = s.sample(with_value=True)
        out.append(FAIL if got is FAIL else np.array(got[2], dtype=np.int64))
    return out


def estimate_size_pass(source, cfg, k, seed, eps0=0.1):
    est = L0Estimator(eps0=eps0, seed=seed)
    for signs, cells, keys in _snapped(source, cfg, k):
        est.update_batch(keys, signs)
    val = est.estimate()
    return 1.0 if val < 1.5 else val


def _decoded_rows(dec, d):
    return np.array([e[2] for e in dec], dtype=np.int64).reshape(len(dec), d)


def recover_y_pass(source, cfg, k, p, r_t, radii, thr, seed):
    """Round 2: y_t(p) from ball-restricted k-sparse sketches.

    Returns (y, info) with info['n'] the recovered ball sizes (None for a
    FAIL, which certifies more than `thr` vertices).
    """
    thr = _finite_threshold(thr)
    sk = [KSparseSketch(thr, seed=derive_seed(seed, "ball", j), payload_dim=cfg.d)
          for j in range(len(radii))]
    for signs, cells, keys in _snapped(source, cfg, k):
        dist = np.abs(cells - p).sum(axis=1)
        for j, sketch in enumerate(sk):
            m = dist <= radii[j]
            if m.any():
                sketch.update_batch(keys[m], signs[m], cells[m])
    balls = []
    for sketch in sk:
        dec = sketch.decode()
        balls.append(None if dec is FAIL else _decoded_rows(dec, cfg.d))
    n = [None if b is None else len(b) for b in balls]
    info = {"n": n, "balls": balls}
    if n[0] is None or n[0] >= thr:
        return 0.0, info
    jstar = max(j for j in range(len(n)) if n[j] is not None and n[j] < thr)
    info["jstar"] = jstar
    ball = balls[jstar]
    start = int(np.flatnonzero((ball == p).all(axis=1))[0])
    size = K.induced_cc_size(ball, np.arange(len(ball)), start, r_t)
    return 1.0 / size, info


def recover_z_pass(source, cfg, k, p, r_t, alpha, thr, seed):
    """Rounds 2..alpha+1: hop-limited BFS by frontier recovery."""
    thr = _finite_threshold(thr)
    state = BfsFrontierState(explored=[tuple(p)])
    info = {"frontiers": [], "failed_round": None, "steps": []}
    for rnd in range(alpha):
        budget = thr - len(state.explored) - 1
        if budget < 0:
            return 0.0, info
        E = np.array(state.explored, dtype=np.int64)
        seen = set(state.explored)
        sketch = KSparseSketch(budget, seed=derive_seed(seed, "bfs", rnd), payload_dim=cfg.d)
        for signs, cells, keys in _snapped(source, cfg, k):
            near = np.zeros(len(cells), dtype=bool)
            for e in E:
                near |= np.abs(cells - e).sum(axis=1) <= r_t
            fresh = np.array([tuple(c) not in seen for c in cells.tolist()], dtype=bool)
            m = near & fresh
            if m.any():
                sketch.update_batch(keys[m], signs[m], cells[m])
        dec = sketch.decode()
        info["steps"].append((list(state.explored), None if dec is FAIL else _decoded_rows(dec, cfg.d), budget))
        if dec is FAIL:
            info["failed_round"] = rnd
            return 0.0, info
        rows = [tuple(int(v) for v in e[2]) for e in dec]
        info["frontiers"].append(len(rows))
        state.explored.extend(rows)
        state.round = rnd + 1
        if not rows:
            break
    info["explored"] = len(state.explored)
    return 1.0 / len(state.explored), info


def _finite_threshold(thr):
    if thr is None or not math.isfinite(thr):
        raise ConfigError("sketch mode needs a finite size_threshold")
    return int(math.ceil(thr)) if thr != int(thr) else int(thr)


def run_alpha_pass(stream, cfg, params, k_samples, seed=0, n_hat="sketch", compare=False,
                   level_indices=None, eps0=0.1):
    """Sketch-based estimate of Z.

    n_hat='exact' uses true |V_t| (needs the multiset); compare=True also
    evaluates min(y, z) directly for every sampled vertex and records both.
    """
    t0 = time.time()
    source = as_source(stream)
    structure = build_levels(cfg)
    if params.logL is None:
        params = EstimatorParams.for_structure(structure, size_threshold=params.size_threshold,
                                               bfs_rounds=params.bfs_rounds)
    alpha = int(params.bfs_rounds)
    thr = params.size_threshold
    plan = PassPlan(alpha)
    need_truth = compare or n_hat == "exact"
    table = qt = None
    if need_truth:
        P = source.multiset()
        qt = Quadtree(cfg, P, structure)
        table = LevelTable(qt, params)
    side_k = {T: side_exponent(cfg, T) for T in structure.anchors}
    nhat_anchor = {}
    for T in structure.anchors:
        if n_hat == "exact":
            nhat_anchor[T] = float(qt.vertex_sets[T].size)
        else:
            plan.open_round(0, ("l0-estimator", T), [])
            nhat_anchor[T] = estimate_size_pass(source, cfg, side_k[T], derive_seed(seed, "nhat", T), eps0)
    indices = range(len(structure.levels)) if level_indices is None else level_indices
    records, terms, per_level = [], [], []
    for li in indices:
        t = float(structure.levels[li])
        T = structure.anchor_for(t)
        k = side_k[T]
        side = 2.0 ** k
        r_t = math.floor(t / side)
        radii = np.array([math.floor((2 ** j) * t / side) for j in range(params.logL + 1)], dtype=np.int64)
        seeds = [derive_seed(seed, "sample", li, s) for s in range(k_samples)]
        plan.open_round(0, ("l0-sampler", li, k_samples), [])
        picks = sample_vertex_pass(source, cfg, k, seeds)
        vals = []
        for s, p in enumerate(picks):
            if p is FAIL:
                records.append({"level": li, "sample": s, "fail": "sample"})
                continue
            plan.open_round(1, ("ball-sketches", li, s), [0])
            y, yinfo = recover_y_pass(source, cfg, k, p, r_t, radii, thr, derive_seed(seed, "y", li, s))
            for rnd in range(alpha):
                plan.open_round(1 + rnd, ("bfs-frontier", li, s, rnd), list(range(1 + rnd)))
            z, zinfo = recover_z_pass(source, cfg, k, p, r_t, alpha, thr, derive_seed(seed, "z", li, s))
            v = min(y, z)
            vals.append(v)
            rec = {"level": li, "sample": s, "vertex": p.tolist(), "sketch": v, "y": y, "z": z,
                   "ball_sizes": yinfo["n"]}
            if compare:
                rec.update(_compare(table, qt, t, p, yinfo, zinfo, r_t, radii, thr, alpha, params, v))
            records.append(rec)
        nt = nhat_anchor[T]
        mean = float(np.mean(vals)) if vals else 0.0
        terms.append(t * (nt * mean - 1.0))
        per_level.append({"t": t, "n_hat": nt, "mean": mean, "samples": len(vals)})
    n0 = nhat_anchor[structure.anchor_for(float(structure.levels[0]))]
    if level_indices is None:
        est = (n0 - 1) + structure.delta * math.fsum(terms)
    else:
        est = float("nan")
    rep = EstimateReport(
        mode="alpha",
        parameters={"alpha": alpha, "samples": k_samples, "size_threshold": thr,
                    "epsilon": cfg.epsilon, "beta": cfg.beta, "delta": cfg.delta,
                    "Delta": cfg.Delta, "n_hat": n_hat, "rounds": alpha + 1,
                    "stream_replays": source.replays},
        estimate=max(est, 0.0) if est == est else est,
        seed=seed, levels=per_level, wall_time=time.time() - t0, warnings=list(cfg.warnings))
    rep.extra["records"] = records
    rep.extra["raw_estimate"] = est
    return rep


def _compare(table, qt, t, p, yinfo, zinfo, r_t, radii, thr, alpha, params, v):
    """Direct min(y, z) for p and whether any sketch misbehaved."""
    V = qt.level_vertices(t)
    row = int(np.flatnonzero((V.idx == p).all(axis=1))[0])
    direct = float(table.values(t)[0][row])
    dist = V.dist_row(row)
    sketch_fault = False
    for j, b in enumerate(yinfo["balls"]):
        true_n = int(np.count_nonzero(dist <= radii[j]))
        if b is None:
            sketch_fault |= true_n <= thr
        else:
            truth = {tuple(x) for x in V.idx[dist <= radii[j]].tolist()}
            sketch_fault |= truth != {tuple(x) for x in b.tolist()}
    for explored, rows, budget in zinfo["steps"]:
        E = np.array(explored, dtype=np.int64)
        near = np.zeros(V.size, dtype=bool)
        for e in E:
            near |= np.abs(V.idx - e).sum(axis=1) <= r_t
        inE = {tuple(x) for x in explored}
        truth = {tuple(x) for x in V.idx[near].tolist()} - inE
        if rows is None:
            sketch_fault |= len(truth) <= budget
        else:
            sketch_fault |= truth != {tuple(x) for x in rows.tolist()}
    return {"direct": direct, "match": direct == v, "sketch_fault": bool(sketch_fault)}
