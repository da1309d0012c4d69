"""The one-pass-friendly level estimator and the aggregate estimate R.

At level t each trial picks j uniformly from -1..tau, draws two LSH
functions h1, h2 at scales that grow like t/eps^j, and looks at the h2
bucket b and h1 bucket c of a sampled vertex p. Size gates on |h2^-1(b)|
and |h2^-1(b) & h1^-1(c)| decide whether j was the right scale; when it
was and p's balls fit inside both buckets (the testers), the trial returns
(z, p) with z the inverse size of p's component inside the recovered
bucket, or z = 0 for dense neighbourhoods.

Sampling b proportionally to |h2^-1(b)|, then c proportionally to the
intersection, then p uniformly inside it, is the same as drawing p
uniformly from V_t and reading off b = h2(p), c = h1(p); the reference
mode uses that form. The sketch mode obtains the same triple from the
recursive sampler with small p, feeding it (h2 bucket, h1 bucket, cell).
"""
from dataclasses import dataclass, field
import math
import time

import numpy as np
from numba import njit

from . import _kernels as K

from ._random import derive_seed, uniform_array
from .errors import CapExhausted, ConfigError
from .geometry import PointMultiset, next_pow2
from .lsh import DEFAULT_CAP, LshFunction, diameter_sketch, first_layer, layer_dist, same_centre
from .quadtree import QuadtreeConfig, build_levels, cell_index, onepass_levels, side_exponent, vertex_set
from .recursive_sampler import HierIndexSpace, RecSamplerSketch, l0_p, rs_sample_batch
from .report import EstimateReport
from .sketches import FAIL
from .stream import as_source

VERY_DEAD, TYPE, NEARLY_COMPLETE = "very_dead", "type", "nearly_complete"


@dataclass
class OnePassConfig:
    epsilon: float = 0.25
    size_threshold: int = 16
    samples: int = 200
    Delta: int = None
    scale: int = None
    retry_budget: int = None
    seed: int = 0
    lsh_cap: int = DEFAULT_CAP
    # sketch mode
    bucket_universe: int = 4096
    sampler_S: int = None
    sampler_rows: int = 3
    sampler_buckets: int = 64
    sampler_reps: int = 33
    sampler_copies: int = 2
    # 'plain' checks x's own centre; 'strict' also guarantees ball containment
    tester: str = "plain"

    def __post_init__(self):
        inv = 1.0 / self.epsilon
        if self.epsilon > 0.25 or abs(inv - round(inv)) > 1e-9 or int(round(inv)) & (int(round(inv)) - 1):
            raise ConfigError("one-pass epsilon must be 1/2^k with eps <= 1/4")
        if self.size_threshold < 1 or self.samples < 1:
            raise ConfigError("size_threshold and samples must be positive")
        if self.tester not in ("plain", "strict"):
            raise ConfigError("tester must be 'plain' or 'strict'")
        if self.scale is None:
            self.scale = math.ceil(1.0 / self.epsilon ** 2)
        if self.sampler_S is None:
            m = self.size_threshold + 1
            self.sampler_S = max(4, math.ceil(2 * m * math.log(m)))

    def tau(self, Delta=None):
        Delta = Delta or self.Delta
        lg = max(math.log2(max(Delta, 2)), 1.0)
        return int(math.ceil(math.log(lg) / math.log(1.0 / self.epsilon) - 1e-12)) + 3

    def budget(self, d, tau):
        if self.retry_budget is not None:
            return int(self.retry_budget)
        return int(math.ceil(10 * (1 - 2 * self.epsilon) ** (-2 * d) * (tau + 2)))


@dataclass
class PointClass:
    kind: str
    ell: int = None
    dead: bool = False
    very_dead: bool = False
    nearly_complete: bool = False
    complete: int = None


@dataclass
class LevelSample:
    z: float
    p: tuple
    j: int
    iterations: int = 1


@dataclass
class LevelContext:
    """Everything a trial at level t needs: V_t in cell units and the scales."""
    t: float
    V: object
    X: np.ndarray
    Lambda_units: int
    t_units: float
    r_t: int
    epsilon: float
    tau: int
    threshold: int
    cap: int = DEFAULT_CAP
    box_lo: np.ndarray = None
    cfg: object = None
    k: int = 0
    strict: bool = False
    _rows: dict = field(default_factory=dict)

    @property
    def d(self):
        return self.X.shape[1]

    def row_of(self, cell):
        if not self._rows:
            self._rows.update({tuple(c): i for i, c in enumerate(self.V.idx.tolist())})
        return self._rows.get(tuple(int(v) for v in cell))

    def scales(self, j):
        e = self.epsilon
        if j == -1:
            return self.t_units / e, self.t_units / e ** 3
        return self.t_units / e ** j, self.t_units / e ** (j + 2)

    def ball(self, row, radius):
        return K.ball_count(self.V.idx, row, self.V.radius_units(radius))


def level_context(cfg, qcfg, structure, P, t, tau, Lambda):
    """V_t for the anchor of t, re-expressed in positive integer cell units."""
    T = structure.anchor_for(t)
    V = vertex_set(qcfg, T, P)
    k = side_exponent(qcfg, T)
    lo = cell_index(qcfg, k, np.ones((1, qcfg.d), dtype=np.int64))[0]
    hi = cell_index(qcfg, k, np.full((1, qcfg.d), Lambda, dtype=np.int64))[0]
    X = (V.idx - lo + 1).astype(np.float64)
    side = V.side_float
    return LevelContext(t=float(t), V=V, X=X, Lambda_units=int((hi - lo).max()) + 1,
                        t_units=t / side, r_t=V.radius_units(t), epsilon=cfg.epsilon, tau=tau,
                        threshold=cfg.size_threshold, cap=cfg.lsh_cap, box_lo=lo, cfg=qcfg, k=k,
                        strict=cfg.tester == "strict")


# ---------------------------------------------------------------- classes

def classify(ctx, row):
    """Size-threshold class of vertex `row` of V_t."""
    thr, e, t = ctx.threshold, ctx.epsilon, ctx.t
    very_dead = ctx.ball(row, t) > thr
    dead = ctx.ball(row, t / e) > thr
    nearly = ctx.ball(row, t / e ** (ctx.tau + 1)) <= thr
    ell = None
    for l in range(ctx.tau + 1):
        if ctx.ball(row, t / e ** (l + 1)) > thr and ctx.ball(row, t / e ** l) <= thr:
            ell = l
            break
    complete = None
    if ell is not None and ell >= 3:
        cc = K.induced_cc_size(ctx.V.idx, np.arange(ctx.V.size), row, ctx.r_t)
        l = ell - 3
        # CC inside the ball iff p's component in the ball-induced graph has full size
        members = np.flatnonzero(ctx.V.dist_row(row) <= ctx.V.radius_units(t / e ** l))
        if l < ctx.tau and K.induced_cc_size(ctx.V.idx, members, row, ctx.r_t) == cc:
            complete = l
    if very_dead:
        kind = VERY_DEAD
    elif ell is not None:
        kind = TYPE
    else:
        kind = NEARLY_COMPLETE
    return PointClass(kind, ell, dead, very_dead, nearly, complete)


# ---------------------------------------------------------------- procedures

def _pick(seed, label, n):
    """Uniform integer in [0, n) from a counter-mode draw."""
    u = uniform_array(derive_seed(seed, label), np.zeros(1, dtype=np.uint64))[0]
    return min(int(u * n), n - 1)


def _hash_seeds(seed):
    return (derive_seed("lsh", derive_seed(seed, "h1")), derive_seed("lsh", derive_seed(seed, "h2")))


def _hashes(ctx, j, seed):
    s1, s2 = ctx.scales(j)
    hs1, hs2 = _hash_seeds(seed)
    h1 = LshFunction(s1, 2 * ctx.epsilon, ctx.Lambda_units, ctx.d, cap=ctx.cap, raw_seed=hs1)
    h2 = LshFunction(s2, 2 * ctx.epsilon, ctx.Lambda_units, ctx.d, cap=ctx.cap, raw_seed=hs2)
    return h1, h2


def bucket_members(h, X, b):
    """Rows of X hashed to bucket b."""
    return np.flatnonzero(h.hash(X) == b)


def _survives(h, x, strict=False):
    test = h.strict_tester if strict else h.tester
    return bool(test(x[None, :])[0])


def _component_value(ctx, members, p):
    return 1.0 / K.induced_cc_size(ctx.V.idx, np.asarray(members, dtype=np.int64), p, ctx.r_t)


@njit(cache=True)
def _passes(seed, u, x, r, s, w, grid, cap, strict):
    if strict:
        # the first centre within r + s must already be within r - s
        u = first_layer(seed, x, r + s, w, grid, cap)
        if u < 0:
            return False
    return layer_dist(seed, u, x, w, grid) <= r - s


@njit(cache=True)
def _iteration_kernel(X, idx, r_t, j, tau, thr, s1, s2, eps2, hs1, hs2, p, grid, cap, strict):
    """Compiled twin of _run_procedure_py.

    Returns (status, z): 0 success, 1 size gate, 2 tester, 3 scan cap.
    """
    r1 = s1 / eps2
    r2 = s2 / eps2
    w1 = 2 * (r1 + s1) + 1
    w2 = 2 * (r2 + s2) + 1
    x = X[p]
    u2 = first_layer(hs2, x, r2, w2, grid, cap)
    u1 = first_layer(hs1, x, r1, w1, grid, cap)
    if u1 < 0 or u2 < 0:
        return 3, 0.0
    m = X.shape[0]
    inter = np.empty(m, dtype=np.int64)
    n_b = 0
    n_i = 0
    for q in range(m):
        # q is in p's bucket iff it shares p's centre in layer u and no earlier layer covers it
        if not same_centre(hs2, u2, x, X[q], w2, grid) or layer_dist(hs2, u2, X[q], w2, grid) > r2:
            continue
        if first_layer(hs2, X[q], r2, w2, grid, u2) >= 0:
            continue
        n_b += 1
        if not same_centre(hs1, u1, x, X[q], w1, grid) or layer_dist(hs1, u1, X[q], w1, grid) > r1:
            continue
        if first_layer(hs1, X[q], r1, w1, grid, u1) >= 0:
            continue
        inter[n_i] = q
        n_i += 1
    ok = (_passes(hs2, u2, x, r2, s2, w2, grid, cap, strict)
          and _passes(hs1, u1, x, r1, s1, w1, grid, cap, strict))
    if j == -1:
        if n_i <= thr:
            return 1, 0.0
        return (0, 0.0) if ok else (2, 0.0)
    if j < tau and n_b <= thr:
        return 1, 0.0
    if n_i > thr:
        return 1, 0.0
    if not ok:
        return 2, 0.0
    return 0, 1.0 / K.induced_cc_size(idx, inter[:n_i], p, r_t)


_REASONS = {1: "gate", 2: "tester"}


def _run_procedure(ctx, j, seed, info=None):
    """One while-iteration with index j; returns LevelSample or FAIL."""
    p = _pick(seed, "pick", ctx.V.size)
    hs1, hs2 = _hash_seeds(seed)
    s1, s2 = ctx.scales(j)
    status, z = _iteration_kernel(ctx.X, ctx.V.idx, ctx.r_t, j, ctx.tau, ctx.threshold, s1, s2,
                                  2 * ctx.epsilon, np.uint64(hs1), np.uint64(hs2), p,
                                  float(2 ** 24), ctx.cap, ctx.strict)
    if status == 3:
        raise CapExhausted(f"no centre within reach after {ctx.cap} layers at level {ctx.t:g}")
    if status:
        if info is not None:
            info["reason"] = _REASONS[status]
        return FAIL
    return LevelSample(z, tuple(int(v) for v in ctx.V.idx[p]), j)


def _run_procedure_py(ctx, j, seed, info=None):
    """One while-iteration with index j, written out with LshFunction objects."""
    info = {} if info is None else info
    p = _pick(seed, "pick", ctx.V.size)
    h1, h2 = _hashes(ctx, j, seed)
    x = ctx.X[p]
    b = int(h2.hash(x[None, :])[0])
    c = int(h1.hash(x[None, :])[0])
    in_b = bucket_members(h2, ctx.X, b)
    inter = np.intersect1d(in_b, bucket_members(h1, ctx.X, c))
    thr = ctx.threshold
    cell = tuple(int(v) for v in ctx.V.idx[p])
    if j == -1:
        if len(inter) <= thr:
            info["reason"] = "gate"
            return FAIL
        if _survives(h2, x, ctx.strict) and _survives(h1, x, ctx.strict):
            return LevelSample(0.0, cell, j)
        info["reason"] = "tester"
        return FAIL
    if j < ctx.tau and len(in_b) <= thr:
        info["reason"] = "gate"
        return FAIL
    if len(inter) > thr:
        info["reason"] = "gate"
        return FAIL
    if _survives(h2, x, ctx.strict) and _survives(h1, x, ctx.strict):
        return LevelSample(_component_value(ctx, inter, p), cell, j)
    info["reason"] = "tester"
    return FAIL


def procedure_dead(ctx, seed):
    return _run_procedure(ctx, -1, seed)


def procedure_bad(ctx, j, seed):
    if not 0 <= j < ctx.tau:
        raise ConfigError("procedure_bad needs 0 <= j < tau")
    return _run_procedure(ctx, j, seed)


def procedure_complete(ctx, seed):
    return _run_procedure(ctx, ctx.tau, seed)


# ---------------------------------------------------------------- sketch mode

def _sketch_procedure(ctx, j, seed, source, cfg, info=None):
    """The same iteration, with (b, c, p) and the bucket samples drawn from
    a recursive-sampler sketch of the stream."""
    info = {} if info is None else info
    h1, h2 = _hashes(ctx, j, seed)
    U = cfg.bucket_universe
    span = ctx.Lambda_units
    n3 = span ** ctx.d
    if n3 > 1 << 18:
        raise ConfigError(f"cell universe {n3} too large for sketch mode")
    S = cfg.sampler_S
    nmax = max(int(ctx.V.mult.max()) if ctx.V.size else 1, 2)
    sk = RecSamplerSketch(HierIndexSpace(U, U, n3), p=l0_p(nmax), S=S, rows=cfg.sampler_rows,
                          buckets=cfg.sampler_buckets, reps=cfg.sampler_reps,
                          seed=derive_seed(seed, "rs"), copies=cfg.sampler_copies, pairs="cross")
    weights = np.array([span ** i for i in range(ctx.d)][::-1], dtype=np.int64)
    for signs, pts in source.replay():
        cells = cell_index(ctx.cfg, ctx.k, pts)
        Xc = (cells - ctx.box_lo + 1).astype(np.float64)
        b2 = h2.hash(Xc)
        b1 = h1.hash(Xc)
        if b2.max() >= U or b1.max() >= U:
            raise CapExhausted(f"bucket id beyond universe {U}; raise bucket_universe")
        flat = ((Xc - 1).astype(np.int64) * weights).sum(axis=1)
        sk.update_batch(b2, b1, flat, signs)
    batch = rs_sample_batch(sk)
    if batch is FAIL:
        info["reason"] = "sampler"
        return FAIL

    def coords(f):
        out = []
        for w in weights:
            out.append(f // w)
            f %= w
        return np.array(out, dtype=np.float64) + 1

    b, c = batch.i1, int(batch.i2[0])
    from_b = {int(v) for v in batch.i3[:, 0]}
    from_inter = {int(v) for v in batch.i3[0, :]}
    pf = int(batch.i3[0, 0])
    x = coords(pf)
    thr = ctx.threshold
    cell = tuple(int(v) for v in (x - 1).astype(np.int64) + ctx.box_lo)
    if j == -1:
        if len(from_inter) <= thr:
            info["reason"] = "gate"
            return FAIL
        if _survives(h2, x, ctx.strict) and _survives(h1, x, ctx.strict):
            return LevelSample(0.0, cell, j)
        info["reason"] = "tester"
        return FAIL
    if j < ctx.tau and len(from_b) <= thr:
        info["reason"] = "gate"
        return FAIL
    if len(from_inter) > thr:
        info["reason"] = "gate"
        return FAIL
    if not (_survives(h2, x, ctx.strict) and _survives(h1, x, ctx.strict)):
        info["reason"] = "tester"
        return FAIL
    B = np.array([coords(f) for f in sorted(from_inter)]).astype(np.int64)
    start = int(np.flatnonzero((B == x.astype(np.int64)).all(axis=1))[0])
    size = K.induced_cc_size(B, np.arange(len(B)), start, ctx.r_t)
    return LevelSample(1.0 / size, cell, j)


# ---------------------------------------------------------------- trials

def level_iteration(ctx, seed, mode="reference", source=None, cfg=None, j=None, info=None):
    """One while-iteration: pick j (unless given) and run its procedure."""
    if j is None:
        j = _pick(seed, "j", ctx.tau + 2) - 1
    if info is not None:
        info["j"] = j
    if mode == "reference":
        return _run_procedure(ctx, j, seed, info)
    if mode == "sketch":
        return _sketch_procedure(ctx, j, seed, source, cfg, info)
    raise ConfigError(f"unknown mode {mode}")


def level_trial(ctx, seed, budget, mode="reference", source=None, cfg=None):
    """Repeat iterations until one succeeds; FAIL once the budget is spent.

    Returns (LevelSample or FAIL, iterations used).
    """
    for it in range(budget):
        got = level_iteration(ctx, derive_seed(seed, it), mode, source, cfg)
        if got is not FAIL:
            got.iterations = it + 1
            return got, it + 1
    return FAIL, budget


def estimator_R(epsilon, levels, V_hat, Z):
    """(4/eps) * sum_t V_hat_t * t * Z_t."""
    return 4.0 / epsilon * math.fsum(float(v) * float(t) * float(z)
                                     for t, v, z in zip(levels, V_hat, Z))


def x_mass(ctxs):
    """sum_t t * sum_p x_t(p), the quantity R targets (exact, from V_t)."""
    total = 0.0
    for ctx in ctxs:
        labels = K.uf_labels(ctx.V.idx, ctx.r_t)
        total += ctx.t * len(np.unique(labels))
    return total


# ---------------------------------------------------------------- driver

def prepare(P, cfg, Delta_mode="exact", seed=0):
    """Scaled multiset, quadtree config, level list and per-level contexts."""
    s = cfg.scale
    X = P.distinct() * s
    Ps = PointMultiset(P.d, (P.Lambda or int(P.distinct().max())) * s)
    for row, m in zip(X.tolist(), P.multiplicities().tolist()):
        Ps.add(tuple(row), m)
    if cfg.Delta is not None:
        Delta = next_pow2(cfg.Delta)
    elif Delta_mode == "sketch":
        Delta = next_pow2(s * diameter_sketch(P, 0.5, P.Lambda or int(P.distinct().max()), P.d,
                                              seed=derive_seed(seed, "diam")))
    else:
        Delta = next_pow2(max(Ps.diameter(), 1))
    d = P.d
    qcfg = QuadtreeConfig(d=d, Delta=Delta, epsilon=cfg.epsilon, delta=1.0, beta=10.0 * d,
                          Lambda=Ps.Lambda, seed=derive_seed(seed, "shift"))
    structure = build_levels(qcfg)
    tau = cfg.tau(Delta)
    levels = onepass_levels(Delta)
    ctxs = [level_context(cfg, qcfg, structure, Ps, t, tau, Ps.Lambda) for t in levels]
    return Ps, qcfg, levels, ctxs, tau


def run_onepass(stream, cfg=None, mode="reference", n_hat="exact", seed=0, Delta_mode="exact",
                classes=False):
    """Estimate the MST cost with R; reported in the input's units."""
    t0 = time.time()
    cfg = cfg or OnePassConfig()
    source = as_source(stream)
    P = source.multiset()
    if P.n_distinct == 0:
        raise ConfigError("empty input")
    Ps, qcfg, levels, ctxs, tau = prepare(P, cfg, Delta_mode, seed)
    scaled_source = as_source(Ps) if mode == "sketch" else None
    budget = cfg.budget(P.d, tau)
    bound = (1 - 2 * cfg.epsilon) ** (2 * P.d)
    per_level, V_hat, Z = [], [], []
    for li, ctx in enumerate(ctxs):
        if n_hat == "exact":
            vh = float(ctx.V.size)
        else:
            from .multipass import estimate_size_pass
            vh = estimate_size_pass(as_source(Ps), qcfg, ctx.k, derive_seed(seed, "vhat", li))
        vals, iters, dropped = [], 0, 0
        for s in range(cfg.samples):
            got, used = level_trial(ctx, derive_seed(seed, "trial", li, s), budget, mode,
                                    scaled_source, cfg)
            iters += used
            if got is FAIL:
                dropped += 1
            else:
                vals.append(got.z)
        z = float(np.mean(vals)) if vals else 0.0
        V_hat.append(vh)
        Z.append(z)
        diag = {"t": float(ctx.t) / cfg.scale, "n_hat": vh, "Z": z, "samples": len(vals),
                "dropped": dropped, "iterations": iters,
                "success_rate": (len(vals) / iters) if iters else 0.0, "success_bound": bound}
        if classes:
            hist = {}
            for row in range(ctx.V.size):
                c = classify(ctx, row)
                key = c.kind if c.kind != TYPE else f"type{c.ell}"
                hist[key] = hist.get(key, 0) + 1
            diag["classes"] = hist
        per_level.append(diag)
    R = estimator_R(cfg.epsilon, levels, V_hat, Z)
    warnings = list(qcfg.warnings)
    if R == 0:
        warnings.append("all level means are zero; R is degenerate")
    rep = EstimateReport(
        mode="onepass",
        parameters={"epsilon": cfg.epsilon, "size_threshold": cfg.size_threshold,
                    "samples": cfg.samples, "scale": cfg.scale, "Delta": qcfg.Delta, "tau": tau,
                    "retry_budget": budget, "sketch": mode, "n_hat": n_hat},
        estimate=R / cfg.scale, seed=seed, levels=per_level, wall_time=time.time() - t0,
        warnings=warnings)
    rep.extra["R_scaled"] = R
    return rep
