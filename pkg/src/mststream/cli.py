"""Command line front end: estimate, oracle, selftest, calibrate.

Exit codes: 0 success, 2 configuration error (including unknown flags),
3 runtime failure. MSTSTREAM_SEED overrides the default seed.
"""
import argparse
import json
import os
import sys
import time

from .errors import CapExhausted, ConfigError, StreamError
from .report import EstimateReport

MODE_ALIASES = {"exact-Z": "Z", "exact_z": "Z", "z": "Z", "one-pass": "onepass"}


def _default_seed():
    raw = os.environ.get("MSTSTREAM_SEED")
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"MSTSTREAM_SEED must be an integer, got {raw!r}")


def _load(args):
    from .generators import parse_spec
    from .geometry import apply_stream, read_stream

    if args.input and args.gen:
        raise ConfigError("give only one of --input and --gen")
    if args.input:
        Lambda, d, updates = read_stream(args.input)
        return apply_stream(updates, d=d, Lambda=Lambda), {"generator": "file", "path": args.input}
    if args.gen:
        spec = parse_spec(args.gen, seed=args.seed)
        return spec.build(), spec.describe()
    raise ConfigError("need --input FILE or --gen SPEC")


def _alpha_of(args):
    if args.passes is not None:
        if args.passes < 2:
            raise ConfigError("--passes must be at least 2")
        if args.alpha is not None and args.alpha != args.passes - 1:
            raise ConfigError("--alpha and --passes disagree (passes = alpha + 1)")
        return args.passes - 1
    return 1 if args.alpha is None else args.alpha


def _quadtree(P, args, alpha):
    from .quadtree import Quadtree, QuadtreeConfig

    kw = {"epsilon": args.epsilon or 0.5, "alpha": alpha, "seed": args.seed}
    if args.delta is not None:
        kw["delta"] = args.delta
    cfg = QuadtreeConfig.for_points(P, **kw)
    return cfg, Quadtree(cfg, P)


def _params(qt, args, alpha):
    from .components import EstimatorParams

    return EstimatorParams.for_structure(qt.structure, size_threshold=args.threshold or 64,
                                         bfs_rounds=alpha)


def run_estimate(args):
    from .components import cs_sandwich_value, estimator_Z, ideal_estimator
    from .multipass import run_alpha_pass
    from .onepass import OnePassConfig, run_onepass
    from .oracle import mst_oracle

    mode = MODE_ALIASES.get(args.mode, args.mode)
    P, instance = _load(args)
    if P.n_distinct == 0:
        raise ConfigError("empty input")
    alpha = _alpha_of(args)
    t0 = time.time()
    if mode == "exact":
        eps = args.epsilon or 0.5
        value, Delta, h = cs_sandwich_value(P, eps)
        rep = EstimateReport("exact", {"epsilon": eps, "Delta": float(Delta), "levels": h},
                             float(value), seed=args.seed)
    elif mode in ("ideal", "Z"):
        cfg, qt = _quadtree(P, args, alpha)
        params = _params(qt, args, alpha)
        diag = {}
        if mode == "Z":
            est = estimator_Z(qt, params, diagnostics=diag)
        else:
            est = ideal_estimator(qt, params)
        levels = [{"t": float(t), "sum": s} for t, s in zip(qt.levels, diag.get("level_sums", []))]
        rep = EstimateReport(mode, {"epsilon": cfg.epsilon, "alpha": alpha, "delta": cfg.delta,
                                    "beta": cfg.beta, "Delta": cfg.Delta,
                                    "size_threshold": params.size_threshold},
                             max(est, 0.0), seed=args.seed, levels=levels,
                             warnings=list(cfg.warnings))
    elif mode == "alpha":
        cfg, qt = _quadtree(P, args, alpha)
        params = _params(qt, args, alpha)
        rep = run_alpha_pass(P, cfg, params, args.samples or 8, seed=args.seed)
        rep.extra.pop("records", None)
    elif mode == "onepass":
        kw = {"epsilon": args.epsilon or 0.25, "samples": args.samples or 30, "seed": args.seed}
        if args.threshold is not None:
            kw["size_threshold"] = args.threshold
        rep = run_onepass(P, OnePassConfig(**kw), seed=args.seed, classes=True)
    else:
        raise ConfigError(f"unknown mode {args.mode!r}")
    rep.parameters["instance"] = instance
    rep.wall_time = 0.0 if args.deterministic else time.time() - t0
    if args.oracle:
        rep.attach_oracle(float(mst_oracle(P)[0]))
    return rep


def _emit(text, path):
    if path:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def cmd_estimate(args):
    rep = run_estimate(args)
    _emit(rep.to_json(indent=2), args.report)
    return 0


def cmd_oracle(args):
    from .oracle import mst_oracle

    P, instance = _load(args)
    cost, edges = mst_oracle(P)
    out = {"mst": int(cost) if float(cost).is_integer() else float(cost), "edges": len(edges),
           "instance": instance}
    _emit(json.dumps(out, sort_keys=True), args.report)
    return 0


def selftest_suites():
    """Quick invariant checks; each entry is (name, callable returning bool)."""
    import numpy as np

    from .components import cs_sandwich_check
    from .generators import generate_cantor, generate_uniform
    from .oracle import mst_kruskal, mst_oracle
    from .sketches import FAIL
    from .sketches.ksparse import KSparseSketch
    from .sketches.l0 import L0Sampler

    def oracle_agree():
        for s in range(20):
            P = generate_uniform(30, 3, 64, s)
            if mst_oracle(P)[0] != mst_kruskal(P)[0]:
                return False
        return mst_oracle(generate_cantor(8))[0] == 12

    def sandwich():
        return all(all(cs_sandwich_check(generate_uniform(20, 2, 64, s), 0.5)) for s in range(10))

    def ksparse():
        sk = KSparseSketch(4, seed=1)
        sk.update_batch(np.arange(4) * 7 + 1, np.array([1, 2, -1, 3]))
        got = sk.decode()
        if got is FAIL or [k for k, _ in got] != [1, 8, 15, 22]:
            return False
        sk.update(99, 1)
        return sk.decode() is FAIL

    def l0():
        sk = L0Sampler(seed=3)
        sk.update_batch(np.array([5, 9, 11]), np.array([1, 1, 1]))
        sk.update(9, -1)
        got = sk.sample()
        return got is not FAIL and int(got) in (5, 11)

    def report_roundtrip():
        rep = EstimateReport("Z", {"a": 1}, 3.5, seed=2, levels=[{"t": 1.0}])
        return EstimateReport.from_json(rep.to_json()) == rep

    return [("oracle", oracle_agree), ("sandwich", sandwich), ("ksparse", ksparse),
            ("l0-sampler", l0), ("report", report_roundtrip)]


def cmd_selftest(args):
    ok = True
    for name, fn in selftest_suites():
        try:
            good = bool(fn())
        except Exception as exc:  # a crashing suite counts as a failure
            good = False
            print(f"{name}: error {exc!r}")
        print(f"{name}: {'pass' if good else 'FAIL'}")
        ok &= good
    return 0 if ok else 1


def cmd_calibrate(args):
    from .sketches.pstable import pstable_median, pstable_median_mc

    rows = []
    for p in args.p:
        row = {"p": p, "median": pstable_median(p)}
        if args.draws:
            row["median_mc"] = pstable_median_mc(p, draws=args.draws, seed=args.seed)
        rows.append(row)
    _emit(json.dumps(rows, indent=2), args.report)
    return 0


def build_parser():
    ap = argparse.ArgumentParser(prog="mststream", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def source_flags(p):
        p.add_argument("--input", help="stream file (header 'LAMBDA D', then '+/- coords')")
        p.add_argument("--gen", help="generator spec, e.g. cantor:n=8 or uniform:n=50,d=2,Lambda=256")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--report", help="write JSON here instead of stdout")

    est = sub.add_parser("estimate", help="run an estimator and emit a JSON report")
    source_flags(est)
    est.add_argument("--mode", default="Z",
                     help="exact, ideal, Z (alias exact-Z), alpha or onepass")
    est.add_argument("--epsilon", type=float)
    est.add_argument("--alpha", type=int)
    est.add_argument("--passes", type=int)
    est.add_argument("--samples", type=int)
    est.add_argument("--delta", type=float, help="level spacing override")
    est.add_argument("--threshold", type=float, help="size threshold override")
    est.add_argument("--oracle", action="store_true", help="also compute the exact MST and ratio")
    est.add_argument("--deterministic", action="store_true", help="report wall_time as 0")
    est.set_defaults(func=cmd_estimate)

    orc = sub.add_parser("oracle", help="exact MST cost")
    source_flags(orc)
    orc.set_defaults(func=cmd_oracle)

    st = sub.add_parser("selftest", help="run the quick invariant suites")
    st.set_defaults(func=cmd_selftest, seed=None)

    cal = sub.add_parser("calibrate", help="p-stable median constants")
    cal.add_argument("--p", type=float, nargs="+", default=[1.0, 0.5, 0.05])
    cal.add_argument("--draws", type=int, default=0, help="also estimate by Monte Carlo")
    cal.add_argument("--seed", type=int, default=None)
    cal.add_argument("--report")
    cal.set_defaults(func=cmd_calibrate)
    return ap


def main(argv=None):
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if getattr(args, "seed", None) is None:
            args.seed = _default_seed()
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (CapExhausted, StreamError, RuntimeError, ArithmeticError, OSError) as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 3


cli_main = main

if __name__ == "__main__":
    sys.exit(main())
