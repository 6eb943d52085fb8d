"""``helly-quant`` command line.

Exit codes: 0 success, 1 other library error, 2 certificate failure,
3 enumeration or search budget exceeded.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .ellipsoids import SolverConfig
from .errors import BudgetExceeded, CertificateFailure, CertificationInconclusive, HellyQuantError
from .geometry import Tolerances
from .harness import KINDS, GenConfig, dumps, gen_instance, load_sweep_config, run_sweep
from .helly import ConvexFamily, qfh_large, qfh_small, quantitative_helly_audit
from .transversal import (PQParams, build_ellipsoid_hypergraph, fractional_transversal_duality,
                          pq_piercing)
from .tverberg import (EllipsoidMultiset, WeightedFamily, greedy_weak_epsilon_net,
                       selection_lemma, tverberg_partition)

EXIT_OK, EXIT_ERROR, EXIT_CERT, EXIT_BUDGET = 0, 1, 2, 3


def _read(path):
    text = sys.stdin.read() if path in (None, "-") else Path(path).read_text()
    return json.loads(text)


def _write(obj, path) -> None:
    text = dumps(obj)
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _settings(a):
    tol = Tolerances(a.tol_feas, a.tol_vol_rel, a.tol_grid)
    cfg = SolverConfig(max_iters=a.max_iters, primal_tol=a.primal_tol)
    return cfg, tol


def _envelope(a, result: dict, verified: bool) -> dict:
    cfg, tol = _settings(a)
    return {"command": a.command, "verified": verified, "tolerances": tol.as_dict(),
            "solver": cfg.as_dict(), "result": result}


def cmd_gen(a):
    g = GenConfig(a.kind, a.n, a.d, a.seed, a.spread, a.ratio)
    _write(gen_instance(g).to_json(), a.output)
    return EXIT_OK


def cmd_audit(a):
    cfg, tol = _settings(a)
    fam = ConvexFamily.from_json(_read(a.input))
    res = quantitative_helly_audit(fam, a.v, cfg, tol)
    _write(_envelope(a, res.to_json(), True), a.output)
    return EXIT_OK


def cmd_qfh(a):
    cfg, tol = _settings(a)
    fam = ConvexFamily.from_json(_read(a.input))
    fn = qfh_small if a.command == "qfh-small" else qfh_large
    res = fn(fam, a.v, cfg, tol)
    ok = res.verify(fam, tol)
    _write(_envelope(a, res.to_json(), ok), a.output)
    return EXIT_OK if ok else EXIT_CERT


def cmd_tverberg(a):
    cfg, tol = _settings(a)
    ms = EllipsoidMultiset.from_json(_read(a.input))
    res = tverberg_partition(ms, a.r, cfg, tol, a.seed)
    ok = res.verify(ms, tol)
    _write(_envelope(a, res.to_json(), ok), a.output)
    return EXIT_OK if ok else EXIT_CERT


def cmd_select(a):
    cfg, tol = _settings(a)
    ms = EllipsoidMultiset.from_json(_read(a.input))
    res = selection_lemma(ms, cfg, tol, a.seed)
    _write(_envelope(a, res.to_json(), True), a.output)
    return EXIT_OK


def cmd_eps_net(a):
    cfg, tol = _settings(a)
    wf = WeightedFamily.from_json(_read(a.input))
    res = greedy_weak_epsilon_net(wf, a.eps, cfg, tol, a.strategy)
    ok = res.verify(wf.family, tol)
    _write(_envelope(a, res.to_json(), ok), a.output)
    return EXIT_OK if ok else EXIT_CERT


def cmd_build_hg(a):
    cfg, tol = _settings(a)
    fam = ConvexFamily.from_json(_read(a.input))
    hg = build_ellipsoid_hypergraph(fam, a.v, cfg, tol)
    out = hg.to_json()
    if all(hg.edges):
        ft, fm = fractional_transversal_duality(hg)
        out.update(nu_star=ft.value, phi=ft.phi.tolist(), matching=fm.m.tolist())
    _write(_envelope(a, out, True), a.output)
    return EXIT_OK


def cmd_pq(a):
    cfg, tol = _settings(a)
    fam = ConvexFamily.from_json(_read(a.input))
    params = PQParams.for_variant(a.variant, a.p, fam.dim, a.v)
    res = pq_piercing(fam, params, a.variant, cfg, tol, a.strategy)
    ok = res.verify(fam, tol)
    _write(_envelope(a, res.to_json(), ok), a.output)
    return EXIT_OK if ok else EXIT_CERT


def cmd_sweep(a):
    cfg, tol = _settings(a)
    pipeline, entries = load_sweep_config(a.input)
    out = None if a.output in (None, "-") else a.output
    rep = run_sweep(entries, a.pipeline or pipeline, cfg, tol, a.seed, a.workers, out)
    if out is None:
        sys.stdout.write(rep.csv_text())
    return EXIT_CERT if rep.any_certificate_failure else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    common.add_argument("--input", "-i", help="input JSON path (default: stdin)")
    common.add_argument("--output", "-o", help="output path (default: stdout)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tol-feas", type=float, default=1e-8)
    common.add_argument("--tol-vol-rel", type=float, default=1e-6)
    common.add_argument("--tol-grid", type=float, default=1e-3, help="angular grid spacing")
    common.add_argument("--max-iters", type=int, default=500)
    common.add_argument("--primal-tol", type=float, default=1e-9)
    common.add_argument("--verbose", "-V", action="store_true")

    ap = argparse.ArgumentParser(prog="helly-quant", description=__doc__.splitlines()[0],
                                 allow_abbrev=False)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", parents=[common], allow_abbrev=False, help="generate an instance")
    p.add_argument("--kind", choices=KINDS, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--spread", type=float, default=1.0)
    p.add_argument("--ratio", type=float, default=0.5)
    p.set_defaults(func=cmd_gen)

    for name, func, hlp in (("audit-helly", cmd_audit, "quantitative Helly audit"),
                            ("qfh-small", cmd_qfh, "fractional Helly, small-tuple variant"),
                            ("qfh-large", cmd_qfh, "fractional Helly, lowest-ellipsoid variant"),
                            ("build-hg", cmd_build_hg, "ellipsoid hypergraph and fractional transversal")):
        p = sub.add_parser(name, parents=[common], allow_abbrev=False, help=hlp)
        p.add_argument("--v", type=float, required=True, help="target volume")
        p.set_defaults(func=func)

    p = sub.add_parser("pq-pierce", parents=[common], allow_abbrev=False, help="(p,q) piercing certificate")
    p.add_argument("--v", type=float, required=True)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--variant", choices=("small", "large"), default="small")
    p.add_argument("--strategy", choices=("densest", "max_weight"), default="densest")
    p.set_defaults(func=cmd_pq)

    p = sub.add_parser("tverberg", parents=[common], allow_abbrev=False, help="certified Tverberg partition")
    p.add_argument("--r", type=int, default=2, help="number of parts")
    p.set_defaults(func=cmd_tverberg)

    p = sub.add_parser("select", parents=[common], allow_abbrev=False, help="selection witness")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("eps-net", parents=[common], allow_abbrev=False, help="greedy weak epsilon-net")
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--strategy", choices=("densest", "max_weight"), default="densest")
    p.set_defaults(func=cmd_eps_net)

    p = sub.add_parser("sweep", parents=[common], allow_abbrev=False, help="run a sweep config; --output is a directory")
    p.add_argument("--pipeline", help="override the config's pipeline")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_sweep)
    return ap


def main(argv=None) -> int:
    a = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return a.func(a)
    except (CertificateFailure, CertificationInconclusive) as exc:
        print(f"certificate failure: {exc}", file=sys.stderr)
        return EXIT_CERT
    except BudgetExceeded as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (HellyQuantError, ValueError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
