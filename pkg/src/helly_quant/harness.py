"""Instance generators, sweeps and serialization.

Generator kinds (``core`` is the cube ``[-1,1]^d``, which holds the unit ball):

* ``common_core``: boxes ``[-1 - s u, 1 + s u']`` with ``u, u'`` uniform in
  ``[0,1]^d``; every tuple is good at the unit-ball volume.
* ``clusters``: two groups of such boxes around cores ``8 (1 + s)`` apart along
  the first axis; the first group holds ``round(ratio n)`` members. A tuple is
  good at the unit-ball volume iff it lies in one group, and the piercing number
  is 2 when both groups are nonempty.
* ``random_boxes``: centers uniform in ``[-s, s]^d``, half-widths in ``[0.5, 1.5]``.
* ``random_rotated_slabs``: ``d`` slabs with random unit normals through a
  center uniform in ``[-s, s]^d``, half-widths in ``[0.75, 1.5]``.
* ``tverberg_hexagon``: an ellipsoid multiset of unit discs, ``n - 1`` centered
  on a circle of radius ``2 s`` plus one at the origin (``d = 2`` only).
"""
from __future__ import annotations

import csv
import io
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .ellipsoids import DEFAULT_CFG, SolverConfig
from .errors import BudgetExceeded, CertificateFailure, HellyQuantError, InvalidConfig
from .geometry import DEFAULT_TOL, Ellipsoid, HPolytope, Tolerances, unit_ball_volume
from .helly import MAX_MEMBERS, ConvexFamily, qfh_large, qfh_small
from .transversal import PQParams, pq_piercing
from .tverberg import EllipsoidMultiset, tverberg_partition

log = logging.getLogger(__name__)

FORMAT_VERSION = 1
KINDS = ("common_core", "clusters", "random_boxes", "random_rotated_slabs", "tverberg_hexagon")
PIPELINES = ("qfh-small", "qfh-large", "pq-small", "pq-large", "tverberg")
CSV_COLUMNS = ("label", "kind", "n", "d", "rng_seed", "pipeline", "status", "v", "alpha",
               "beta_achieved", "witness_volume", "nu_star", "H_achieved", "verified")


@dataclass(frozen=True)
class GenConfig:
    kind: str
    n: int
    d: int = 2
    rng_seed: int = 0
    spread: float = 1.0
    ratio: float = 0.5

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidConfig(f"unknown kind {self.kind!r}; choose from {', '.join(KINDS)}")
        if not 1 <= self.n <= MAX_MEMBERS:
            raise InvalidConfig(f"n must lie in [1, {MAX_MEMBERS}]")
        if self.d not in (2, 3, 4):
            raise InvalidConfig("d must be 2, 3 or 4")
        if not 0 <= self.rng_seed < 2 ** 64:
            raise InvalidConfig("rng_seed must be a 64-bit unsigned integer")
        if self.spread < 0 or not 0 <= self.ratio <= 1:
            raise InvalidConfig("need spread >= 0 and ratio in [0, 1]")
        if self.kind == "tverberg_hexagon" and self.d != 2:
            raise InvalidConfig("tverberg_hexagon is planar")

    @property
    def label(self) -> str:
        tag = f"{self.kind}-n{self.n}-d{self.d}-s{self.rng_seed}"
        if self.spread != 1.0:
            tag += f"-w{self.spread:g}"
        if self.kind == "clusters" and self.ratio != 0.5:
            tag += f"-r{self.ratio:g}"
        return tag

    @property
    def core_volume(self) -> float:
        """Volume at which the generator's structural guarantees hold."""
        return unit_ball_volume(self.d)

    @classmethod
    def from_dict(cls, data: dict) -> "GenConfig":
        try:
            return cls(**data)
        except TypeError as exc:
            raise InvalidConfig(str(exc)) from exc


def _core_boxes(rng, k: int, d: int, s: float, shift: np.ndarray) -> list:
    lo = -1 - s * rng.random((k, d))
    hi = 1 + s * rng.random((k, d))
    return [HPolytope.box(shift + a, shift + b) for a, b in zip(lo, hi)]


def _slab_member(rng, d: int, s: float) -> HPolytope:
    c = rng.uniform(-s, s, d)
    while True:
        N = rng.normal(size=(d, d))
        N /= np.linalg.norm(N, axis=1)[:, None]
        if abs(np.linalg.det(N)) > 0.2:
            break
    h = rng.uniform(0.75, 1.5, d)
    return HPolytope(np.vstack([N, -N]), np.concatenate([N @ c + h, -(N @ c) + h]))


def gen_family(cfg: GenConfig) -> ConvexFamily:
    if cfg.kind == "tverberg_hexagon":
        raise InvalidConfig("tverberg_hexagon yields an ellipsoid multiset; use gen_multiset")
    rng = np.random.default_rng(cfg.rng_seed)
    d, n, s = cfg.d, cfg.n, cfg.spread
    if cfg.kind == "common_core":
        members = _core_boxes(rng, n, d, s, np.zeros(d))
    elif cfg.kind == "clusters":
        k1 = int(round(cfg.ratio * n))
        far = np.zeros(d)
        far[0] = 8 * (1 + s)
        members = _core_boxes(rng, k1, d, s, np.zeros(d)) + _core_boxes(rng, n - k1, d, s, far)
    elif cfg.kind == "random_boxes":
        c = rng.uniform(-s, s, (n, d))
        h = rng.uniform(0.5, 1.5, (n, d))
        members = [HPolytope.box(a - b, a + b) for a, b in zip(c, h)]
    else:
        members = [_slab_member(rng, d, s) for _ in range(n)]
    return ConvexFamily(tuple(members), d, cfg.label)


def gen_multiset(cfg: GenConfig) -> EllipsoidMultiset:
    if cfg.kind != "tverberg_hexagon":
        raise InvalidConfig(f"{cfg.kind} yields a convex family; use gen_family")
    R = 2 * cfg.spread
    ang = 2 * math.pi * np.arange(cfg.n - 1) / max(cfg.n - 1, 1)
    centers = [np.array([R * math.cos(t), R * math.sin(t)]) for t in ang] + [np.zeros(2)]
    return EllipsoidMultiset(tuple(Ellipsoid.ball(c, 1.0) for c in centers), math.pi)


def gen_instance(cfg: GenConfig):
    return gen_multiset(cfg) if cfg.kind == "tverberg_hexagon" else gen_family(cfg)


def dumps(obj) -> str:
    """Canonical JSON text: sorted keys, shortest round-trip floats."""
    return json.dumps(obj, sort_keys=True, indent=1) + "\n"


# ---------------------------------------------------------------- sweeps

@dataclass(frozen=True)
class SweepEntry:
    gen: GenConfig
    v: float | None = None
    p: int | None = None
    r: int = 2

    @classmethod
    def from_dict(cls, data: dict) -> "SweepEntry":
        data = dict(data)
        extra = {k: data.pop(k) for k in ("v", "p", "r") if k in data}
        return cls(GenConfig.from_dict(data), **extra)


@dataclass
class ExperimentReport:
    rows: list
    pipeline: str
    format_version: int = FORMAT_VERSION
    certificates: dict = field(default_factory=dict)
    runtimes: dict = field(default_factory=dict)

    @property
    def all_verified(self) -> bool:
        return all(r["verified"] for r in self.rows if r["status"] == "ok")

    @property
    def any_certificate_failure(self) -> bool:
        return any(r["status"] == "certificate_failure" or (r["status"] == "ok" and not r["verified"])
                   for r in self.rows)

    def csv_text(self) -> str:
        buf = io.StringIO()
        buf.write(f"# format_version={self.format_version}\n")
        w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
        w.writeheader()
        for r in self.rows:
            w.writerow({k: _fmt(r.get(k)) for k in CSV_COLUMNS})
        return buf.getvalue()

    def runtimes_text(self) -> str:
        lines = ["label,seconds"] + [f"{k},{v:.4f}" for k, v in self.runtimes.items()]
        return "\n".join(lines) + "\n"

    def write(self, out_dir) -> None:
        out = Path(out_dir)
        (out / "certificates").mkdir(parents=True, exist_ok=True)
        (out / "report.csv").write_text(self.csv_text())
        (out / "runtimes.csv").write_text(self.runtimes_text())
        for label, cert in self.certificates.items():
            (out / "certificates" / f"{label}.json").write_text(dumps(cert))


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _run_one(entry: SweepEntry, pipeline: str, cfg: SolverConfig, tol: Tolerances, seed: int):
    g = entry.gen
    row = {"label": g.label, "kind": g.kind, "n": g.n, "d": g.d, "rng_seed": g.rng_seed,
           "pipeline": pipeline, "status": "ok", "verified": False}
    cert = None
    t0 = time.perf_counter()
    try:
        inst = gen_instance(g)
        v = entry.v if entry.v is not None else 0.5 * g.core_volume
        row["v"] = v
        if pipeline in ("qfh-small", "qfh-large"):
            res = (qfh_small if pipeline == "qfh-small" else qfh_large)(inst, v, cfg, tol)
            row.update(alpha=res.alpha, beta_achieved=res.beta_achieved,
                       witness_volume=res.witness_volume, verified=res.verify(inst, tol))
            cert = res.to_json()
        elif pipeline in ("pq-small", "pq-large"):
            variant = pipeline[3:]
            q = PQParams.for_variant(variant, MAX_MEMBERS, g.d, v).q
            params = PQParams.for_variant(variant, entry.p or max(q, g.n), g.d, v)
            res = pq_piercing(inst, params, variant, cfg, tol)
            row.update(nu_star=res.nu_star, H_achieved=res.H_achieved,
                       witness_volume=res.v_out, verified=res.verify(inst, tol))
            if "beta_used" in res.extras:
                row["beta_achieved"] = res.extras["beta_used"]
            cert = res.to_json()
        elif pipeline == "tverberg":
            ms = inst if isinstance(inst, EllipsoidMultiset) else None
            if ms is None:
                raise InvalidConfig("the tverberg pipeline needs a multiset kind")
            row["v"] = ms.v
            res = tverberg_partition(ms, entry.r, cfg, tol, seed)
            row.update(witness_volume=res.witness.volume, verified=res.verify(ms, tol))
            cert = res.to_json()
        else:
            raise InvalidConfig(f"unknown pipeline {pipeline!r}")
    except BudgetExceeded as exc:
        row["status"] = "budget_exceeded"
        cert = {"error": type(exc).__name__, "message": str(exc)}
    except CertificateFailure as exc:
        row["status"] = "certificate_failure"
        cert = {"error": type(exc).__name__, "message": str(exc)}
    except HellyQuantError as exc:
        row["status"] = "error:" + type(exc).__name__
        cert = {"error": type(exc).__name__, "message": str(exc)}
    if cert is not None:
        cert = {"format_version": FORMAT_VERSION, "pipeline": pipeline,
                "config": asdict(g), "v": row.get("v"), "result": cert}
    return row, cert, time.perf_counter() - t0


def run_sweep(entries, pipeline: str, cfg: SolverConfig = DEFAULT_CFG,
              tol: Tolerances = DEFAULT_TOL, seed: int = 0, workers: int = 1,
              out_dir=None) -> ExperimentReport:
    """Run ``pipeline`` on every entry; rows keep the entry order.

    Per-instance errors become rows with a status instead of aborting the sweep.
    """
    if pipeline not in PIPELINES:
        raise InvalidConfig(f"unknown pipeline {pipeline!r}")
    entries = [e if isinstance(e, SweepEntry) else SweepEntry(e) if isinstance(e, GenConfig)
               else SweepEntry.from_dict(e) for e in entries]
    labels = [e.gen.label for e in entries]
    if len(set(labels)) != len(labels):
        raise InvalidConfig("sweep entries must have distinct labels")
    args = [(e, pipeline, cfg, tol, seed) for e in entries]
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            results = list(ex.map(_run_one, *zip(*args)))
    else:
        results = [_run_one(*a) for a in args]
    rep = ExperimentReport([r for r, _, _ in results], pipeline)
    for (row, cert, secs) in results:
        rep.certificates[row["label"]] = cert
        rep.runtimes[row["label"]] = secs
    if out_dir is not None:
        rep.write(out_dir)
    return rep


def load_sweep_config(path) -> tuple[str, list]:
    """Sweep file: ``{"pipeline": ..., "instances": [GenConfig fields + optional v, p, r]}``."""
    data = json.loads(Path(path).read_text())
    try:
        return data["pipeline"], [SweepEntry.from_dict(e) for e in data["instances"]]
    except KeyError as exc:
        raise InvalidConfig(f"sweep config lacks {exc}") from exc
