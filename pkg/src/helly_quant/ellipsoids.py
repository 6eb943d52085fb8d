"""Inscribed-ellipsoid solvers.

Both programs use the containment form ``|B a_i| + a_i.c <= b_i`` with the
shape written as a lower-triangular factor ``L`` (``B = sqrtm(L L^T)``), a
logarithmic barrier and damped Newton steps. The maximum-volume program
maximizes ``log det L``; the lowest-ellipsoid program minimizes the height
``c_d + |L^T e_d|`` subject to ``log det L >= log(v / omega_d)``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import (EmptyInterior, NotBounded, PreconditionError, SizeBoundViolated,
                     SolverStalled, VolumeInfeasible)
from .geometry import (DEFAULT_TOL, Ellipsoid, HPolytope, Tolerances, containment_slack,
                       intersect_polytopes, unit_ball_volume)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverConfig:
    max_iters: int = 500
    barrier_mu: float = 10.0
    primal_tol: float = 1e-9
    step_shrink: float = 0.5

    def __post_init__(self):
        if self.max_iters < 10:
            raise ValueError("max_iters must be at least 10")
        if min(self.barrier_mu, self.primal_tol, self.step_shrink) <= 0:
            raise ValueError("solver parameters must be positive")
        if self.barrier_mu <= 1 or self.step_shrink >= 1:
            raise ValueError("barrier_mu must exceed 1 and step_shrink lie in (0, 1)")

    def as_dict(self) -> dict:
        return {"max_iters": self.max_iters, "barrier_mu": self.barrier_mu,
                "primal_tol": self.primal_tol, "step_shrink": self.step_shrink}


DEFAULT_CFG = SolverConfig()


@dataclass(frozen=True)
class MVIEResult:
    ellipsoid: Ellipsoid
    duality_gap: float
    iterations: int
    active_halfspaces: list

    @property
    def volume(self) -> float:
        return self.ellipsoid.volume


@dataclass(frozen=True)
class LowestEllipsoidResult:
    ellipsoid: Ellipsoid
    height: float
    active_halfspaces: list
    duality_gap: float = 0.0
    iterations: int = 0


def n_ellipsoid_params(d: int) -> int:
    """Dimension of the space of ellipsoids, ``d(d+3)/2``."""
    return d * (d + 3) // 2


def _pack_factor(L: np.ndarray) -> np.ndarray:
    d = L.shape[0]
    return np.array([L[j, k] for j in range(d) for k in range(j + 1)])


def _unpack(x: np.ndarray, d: int) -> tuple[np.ndarray, np.ndarray]:
    nL = d * (d + 1) // 2
    L = np.zeros((d, d))
    p = 0
    for j in range(d):
        for k in range(j + 1):
            L[j, k] = x[p]
            p += 1
    return L, x[nL:].copy()


def _newton_direction(H, g):
    dx = kernels.newton_direction(H, g)
    if dx is None:
        return np.linalg.lstsq(H, -g, rcond=None)[0]
    return dx


def _barrier_method(A, b, x0, mode, logfloor, d, cfg, n_constraints):
    """Path-following barrier method; returns ``(x, gap, newton_iterations)``.

    The last centering runs at exactly ``t = n_constraints / primal_tol``.
    """
    x = np.array(x0, dtype=float)
    t_final = n_constraints / cfg.primal_tol
    t = min(1.0, t_final)
    iters = 0
    while True:
        quad_steps = 0
        while True:
            f, g, H = kernels.barrier(x, A, b, t, mode, logfloor, d, True)
            if not math.isfinite(f):
                raise SolverStalled("iterate left the barrier domain")
            dx = _newton_direction(H, g)
            lam2 = float(-g @ dx)
            if lam2 <= CENTERING_TOL:
                break
            if lam2 < 0.01 and math.isfinite(kernels.barrier(x + dx, A, b, t, mode, logfloor, d, False)):
                # quadratic region: full step; a stagnating decrement is the round-off floor
                quad_steps += 1
                if quad_steps > 12 and lam2 < 1e-6:
                    break
                x = x + dx
            else:
                step = 1.0
                slope = 0.25 * float(g @ dx)
                while step >= 1e-12:
                    fn = kernels.barrier(x + step * dx, A, b, t, mode, logfloor, d, False)
                    if fn <= f + step * slope:
                        break
                    step *= cfg.step_shrink
                if step < 1e-12:
                    if lam2 < 1e-6:
                        break
                    raise SolverStalled(f"line search failed (decrement {lam2:.2e})")
                x = x + step * dx
            iters += 1
            if iters >= cfg.max_iters:
                raise SolverStalled(f"no convergence within {cfg.max_iters} Newton steps")
        if t >= t_final:
            return x, n_constraints / t, iters
        t = min(t * cfg.barrier_mu, t_final)


CENTERING_TOL = 1e-10


def _active(E: Ellipsoid, P: HPolytope, tol: Tolerances) -> list:
    return [int(i) for i in np.flatnonzero(containment_slack(E, P) <= 10 * tol.feas)]


def solve_max_inscribed(P: HPolytope, cfg: SolverConfig = DEFAULT_CFG,
                        tol: Tolerances = DEFAULT_TOL) -> MVIEResult:
    """Maximum-volume inscribed ellipsoid with its barrier certificate (cached per polytope)."""
    cache = P.__dict__.setdefault("_mvie_cache", {})
    key = (cfg, tol.feas)
    if key in cache:
        return cache[key]
    if not P.bounded:
        raise NotBounded("maximum inscribed ellipsoid of an unbounded polytope")
    center, radius = P.chebyshev
    if radius <= tol.feas:
        raise EmptyInterior(f"Chebyshev radius {radius:.3e} does not exceed {tol.feas:.1e}")
    d = P.dim
    x0 = np.concatenate([_pack_factor(0.5 * radius * np.eye(d)), center])
    x, gap, iters = _barrier_method(P.A, P.b, x0, 0, 0.0, d, cfg, P.n_halfspaces)
    L, c = _unpack(x, d)
    E = Ellipsoid.from_factor(c, L)
    res = MVIEResult(E, gap, iters, _active(E, P, tol))
    cache[key] = res
    return res


def max_inscribed_ellipsoid(P: HPolytope, cfg: SolverConfig = DEFAULT_CFG) -> Ellipsoid:
    return solve_max_inscribed(P, cfg).ellipsoid


def lowest_ellipsoid(P: HPolytope, v: float, cfg: SolverConfig = DEFAULT_CFG,
                     tol: Tolerances = DEFAULT_TOL, start: Ellipsoid | None = None
                     ) -> LowestEllipsoidResult:
    """Unique volume-``v`` ellipsoid in ``P`` of least height.

    ``start`` is an optional strictly feasible ellipsoid of volume above ``v``;
    by default the maximum-volume ellipsoid shrunk halfway towards volume ``v``.
    """
    cache = P.__dict__.setdefault("_lowest_cache", {})
    key = (float(v), cfg, tol.feas, tol.vol_rel)
    if start is None and key in cache:
        return cache[key]
    if v <= 0:
        raise PreconditionError("target volume must be positive")
    d = P.dim
    omega = unit_ball_volume(d)
    mvie = solve_max_inscribed(P, cfg, tol)
    if mvie.volume < v * (1 - tol.vol_rel):
        raise VolumeInfeasible(f"largest inscribed volume {mvie.volume:.6g} < {v:.6g}")
    if mvie.volume <= v * (1 + 1e-7):
        # the feasible set is a single ellipsoid up to tolerance
        E = mvie.ellipsoid
        res = LowestEllipsoidResult(E, E.height, _active(E, P, tol), mvie.duality_gap, 0)
        if start is None:
            cache[key] = res
        return res
    if start is None:
        E0 = mvie.ellipsoid
        rho = 0.5 * ((v / mvie.volume) ** (1.0 / d) + 1.0)
    else:
        E0 = start
        if start.volume <= v or np.any(containment_slack(start, P) <= 0):
            raise PreconditionError("start must be strictly feasible with volume above v")
        rho = 1.0
    L0 = np.linalg.cholesky(E0.shape @ E0.shape) * rho
    x0 = np.concatenate([_pack_factor(L0), E0.center])
    x, gap, iters = _barrier_method(P.A, P.b, x0, 1, math.log(v / omega), d, cfg,
                                    P.n_halfspaces + 1)
    L, c = _unpack(x, d)
    E = Ellipsoid.from_factor(c, L)
    E = E.scaled((v / E.volume) ** (1.0 / d))
    res = LowestEllipsoidResult(E, E.height, _active(E, P, tol), gap, iters)
    if start is None:
        cache[key] = res
    return res


def contains_volume_v(P: HPolytope, v: float, cfg: SolverConfig = DEFAULT_CFG,
                      tol: Tolerances = DEFAULT_TOL) -> bool:
    """Whether ``P`` contains an ellipsoid of volume ``v`` (tolerance-inclusive)."""
    if not P.bounded:
        return False
    try:
        _, r = P.chebyshev
    except NotBounded:
        return False
    if r <= tol.feas:
        return False
    target = v * (1 - tol.vol_rel)
    if unit_ball_volume(P.dim) * r ** P.dim >= target:
        return True
    try:
        return solve_max_inscribed(P, cfg, tol).volume >= target
    except (SolverStalled, EmptyInterior) as exc:
        log.warning("inscribed-ellipsoid solve failed (%s); treating as not containing volume %g", exc, v)
        return False


def same_lowest(a: Ellipsoid, b: Ellipsoid, cfg: SolverConfig = DEFAULT_CFG) -> bool:
    """Componentwise agreement of two solver outputs at ``10 * primal_tol`` scaled by size."""
    scale = max(1.0, float(np.abs(a.center).max()), float(np.abs(a.shape).max()))
    return a.close_to(b, 10 * cfg.primal_tol * scale * MATCH_SLACK)


# Barrier solutions of two programs sharing an optimum differ by the influence of
# their inactive constraints, which is of the order of the duality gap times the
# conditioning; this factor absorbs that difference.
MATCH_SLACK = 100.0

INACTIVE_MARGIN = 1e-6


def determining_subset(parts, v: float, cfg: SolverConfig = DEFAULT_CFG,
                       tol: Tolerances = DEFAULT_TOL, intersect=None) -> list:
    """Greedy deletion to at most ``d(d+3)/2 - 1`` members with the same lowest ellipsoid.

    Members are tried for deletion from the highest index down, so the lowest
    indices survive among equivalent choices. ``intersect`` optionally maps a
    list of local indices to the intersection polytope (lets callers share
    cached solves between calls).
    """
    parts = list(parts)
    if not parts:
        raise PreconditionError("determining subset of an empty family")
    d = parts[0].dim
    bound = n_ellipsoid_params(d) - 1
    if intersect is None:
        def intersect(idx):
            return intersect_polytopes([parts[j] for j in idx])
    full = lowest_ellipsoid(intersect(list(range(len(parts)))), v, cfg, tol).ellipsoid
    keep = list(range(len(parts)))
    for i in reversed(range(len(parts))):
        if len(keep) == 1:
            break
        rest = [j for j in keep if j != i]
        if containment_slack(full, parts[i]).min() > INACTIVE_MARGIN:
            keep = rest
            continue
        try:
            other = lowest_ellipsoid(intersect(rest), v, cfg, tol).ellipsoid
        except (SolverStalled, EmptyInterior, VolumeInfeasible):
            continue
        if same_lowest(full, other, cfg):
            keep = rest
    if len(keep) > bound:
        raise SizeBoundViolated(f"greedy deletion kept {len(keep)} > {bound} members")
    return keep
