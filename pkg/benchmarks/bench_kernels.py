"""Compiled vs pure-Python kernel timings.

Per-kernel rows call both backends directly in this process. End-to-end rows
(MVIE and lowest-ellipsoid solves, one fractional Helly run) run in a child
process per backend, since the backend is chosen at import.

    python benchmarks/bench_kernels.py [--repeat 5] [--json out.json]
"""
from __future__ import annotations

import argparse
import itertools
import json
import math
import os
import subprocess
import sys
import timeit

import numpy as np

from helly_quant import kernels
from helly_quant.ellipsoids import _pack_factor


def _polygon(m, rng):
    t = 2 * np.pi * (np.arange(m) + rng.uniform(0, 0.8, m)) / m
    A = np.c_[np.cos(t), np.sin(t)]
    return A, np.ones(m)


def kernel_cases(rng):
    A, b = _polygon(64, rng)
    x = np.concatenate([_pack_factor(0.3 * np.eye(2)), [0.05, -0.02]])
    _, g, H = kernels.get_backend("python").barrier(x, A, b, 10.0, 0, 0.0, 2, True)
    U = np.c_[np.cos(np.linspace(0, 2 * np.pi, 1024)), np.sin(np.linspace(0, 2 * np.pi, 1024))]
    C = rng.normal(size=(40, 2))
    Bs = np.array([np.diag(rng.uniform(0.5, 1.5, 2)) for _ in range(40)])
    n, k, s = 12, 7, 4
    tuples = np.array(list(itertools.combinations(range(n), k))[:400], dtype=np.int64)
    binom = kernels.binomial_table(n, s)
    scores = rng.random(math.comb(n, s))
    return {
        "barrier+derivs (64 halfspaces)": lambda K: K.barrier(x, A, b, 10.0, 0, 0.0, 2, True),
        "barrier value (64 halfspaces)": lambda K: K.barrier(x, A, b, 10.0, 0, 0.0, 2, False),
        "newton_direction (5x5)": lambda K: K.newton_direction(H, g),
        "hull_support (1024 dirs, 40 ellipses)": lambda K: K.hull_support(U, C, Bs),
        "first_min_seeds (400 tuples)": lambda K: K.first_min_seeds(tuples, s, scores, binom, 1e-7),
    }


def time_call(fn, repeat):
    number = 1
    while timeit.timeit(fn, number=number) < 0.05 and number < 10 ** 6:
        number *= 4
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def end_to_end(repeat):
    """Timings under the active backend (run inside a child process)."""
    from helly_quant.ellipsoids import lowest_ellipsoid, solve_max_inscribed
    from helly_quant.geometry import HPolytope
    from helly_quant.harness import GenConfig, gen_family
    from helly_quant.helly import qfh_large

    rng = np.random.default_rng(0)
    polys = [HPolytope(*_polygon(48, rng)) for _ in range(10)]

    def mvie():
        for P in polys:
            P.__dict__.pop("_mvie_cache", None)
            solve_max_inscribed(P)

    def lowest():
        for P in polys:
            P.__dict__.pop("_mvie_cache", None)
            P.__dict__.pop("_lowest_cache", None)
            lowest_ellipsoid(P, 1.0)

    fam_cfg = GenConfig("common_core", 8, 2, 1)

    def pipeline():
        qfh_large(gen_family(fam_cfg), 1.0)

    return {"backend": kernels.BACKEND,
            "MVIE x10 (48 halfspaces)": time_call(mvie, repeat),
            "lowest ellipsoid x10": time_call(lowest, repeat),
            "qfh_large common_core n=8": min(timeit.repeat(pipeline, number=1, repeat=max(1, repeat // 2)))}


def _child(pure, repeat):
    env = dict(os.environ)
    if pure:
        env["HELLY_QUANT_PURE"] = "1"
    else:
        env.pop("HELLY_QUANT_PURE", None)
    out = subprocess.run([sys.executable, __file__, "--child", "--repeat", str(repeat)],
                         env=env, capture_output=True, text=True, check=True).stdout
    return json.loads(out)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json", help="also write results to this path")
    ap.add_argument("--child", action="store_true", help=argparse.SUPPRESS)
    a = ap.parse_args(argv)
    if a.child:
        print(json.dumps(end_to_end(a.repeat)))
        return 0

    rows = []
    have_c = kernels.compiled_available()
    py = kernels.get_backend("python")
    cy = kernels.get_backend("cython") if have_c else None
    for name, fn in kernel_cases(np.random.default_rng(1)).items():
        tp = time_call(lambda: fn(py), a.repeat)
        tc = time_call(lambda: fn(cy), a.repeat) if cy else math.nan
        rows.append((name, tc, tp))
    e_py = _child(True, a.repeat)
    e_cy = _child(False, a.repeat) if have_c else None
    for key in e_py:
        if key != "backend":
            rows.append((key, e_cy[key] if e_cy else math.nan, e_py[key]))

    width = max(len(r[0]) for r in rows)
    print(f"{'case':<{width}}  {'cython (s)':>12}  {'python (s)':>12}  {'speedup':>8}")
    for name, tc, tp in rows:
        print(f"{name:<{width}}  {tc:12.3e}  {tp:12.3e}  {tp / tc:8.1f}x")
    if not have_c:
        print("compiled kernels unavailable; only the fallback was timed")
    if a.json:
        with open(a.json, "w") as fh:
            json.dump([{"case": n, "cython_s": c, "python_s": p} for n, c, p in rows], fh, indent=1)
    return 0


if __name__ == "__main__":
    sys.exit(main())
