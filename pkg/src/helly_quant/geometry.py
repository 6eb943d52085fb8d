"""Geometric primitives: H-polytopes, ellipsoids, erosion and containment.

Everything here is a pure function of immutable values. Convex sets are
H-polytopes ``{x : A x <= b}`` with unit-norm rows; ellipsoids are
``{c + B u : |u| <= 1}`` with ``B`` symmetric positive definite.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import kernels
from .errors import DimensionMismatch, NotBounded, PreconditionError, UnsupportedDimension
from .lp import EQ, LE, LPProblem, LPStatus, solve_lp


@dataclass(frozen=True)
class Tolerances:
    feas: float = 1e-8
    vol_rel: float = 1e-6
    grid_angular: float = 1e-3

    def __post_init__(self):
        if min(self.feas, self.vol_rel, self.grid_angular) <= 0:
            raise ValueError("tolerances must be strictly positive")

    def as_dict(self) -> dict:
        return {"feas": self.feas, "vol_rel": self.vol_rel, "grid_angular": self.grid_angular}


DEFAULT_TOL = Tolerances()


def unit_ball_volume(d: int) -> float:
    return math.pi ** (d / 2) / math.gamma(d / 2 + 1)


@dataclass(frozen=True)
class Halfspace:
    """``{x : normal . x <= offset}``; the normal is rescaled to unit length."""

    normal: np.ndarray
    offset: float

    def __post_init__(self):
        a = np.asarray(self.normal, dtype=float)
        nrm = np.linalg.norm(a)
        if not np.isfinite(nrm) or nrm == 0:
            raise ValueError("halfspace normal must be finite and nonzero")
        object.__setattr__(self, "normal", a / nrm)
        object.__setattr__(self, "offset", float(self.offset) / nrm)


class HPolytope:
    """Intersection of finitely many halfspaces, verified bounded on construction.

    The constructor normalizes rows. ``_bounded`` lets internal callers skip the
    LP boundedness test when it follows from how the polytope was built
    (intersection with a bounded part, erosion of a bounded polytope).
    """

    __slots__ = ("A", "b", "dim", "bounded", "__dict__")

    def __init__(self, A, b, *, _bounded: bool | None = None, _normalized: bool = False):
        A = np.atleast_2d(np.asarray(A, dtype=float))
        b = np.asarray(b, dtype=float).reshape(-1)
        if A.shape[0] != b.shape[0]:
            raise DimensionMismatch("A and b disagree on the number of halfspaces")
        if not _normalized:
            norms = np.linalg.norm(A, axis=1)
            if np.any(norms == 0) or not np.all(np.isfinite(norms)):
                raise ValueError("every halfspace needs a finite nonzero normal")
            A = A / norms[:, None]
            b = b / norms
        A.setflags(write=False)
        b.setflags(write=False)
        self.A = A
        self.b = b
        self.dim = A.shape[1]
        self.bounded = _check_bounded(A) if _bounded is None else bool(_bounded)

    @classmethod
    def from_halfspaces(cls, halfspaces) -> "HPolytope":
        hs = list(halfspaces)
        return cls(np.array([h.normal for h in hs]), np.array([h.offset for h in hs]),
                   _normalized=True)

    @classmethod
    def box(cls, lower, upper) -> "HPolytope":
        lower = np.asarray(lower, dtype=float)
        upper = np.asarray(upper, dtype=float)
        d = lower.shape[0]
        eye = np.eye(d)
        A = np.vstack([eye, -eye])
        b = np.concatenate([upper, -lower])
        return cls(A, b, _bounded=True, _normalized=True)

    @property
    def halfspaces(self) -> list[Halfspace]:
        return [Halfspace(a, bi) for a, bi in zip(self.A, self.b)]

    @property
    def n_halfspaces(self) -> int:
        return self.A.shape[0]

    @cached_property
    def chebyshev(self) -> tuple[np.ndarray, float]:
        """Center and radius of the largest inscribed ball; negative radius means empty."""
        if not self.bounded:
            raise NotBounded("Chebyshev ball of an unbounded polytope")
        d = self.dim
        if self.n_halfspaces > DUAL_CHEBYSHEV_ROWS:
            return _chebyshev_dual(self.A, self.b)
        c = np.zeros(d + 1)
        c[-1] = 1.0
        rows = [(np.append(a, 1.0), LE, bi) for a, bi in zip(self.A, self.b)]
        sol = solve_lp(LPProblem(c, rows, [(-np.inf, np.inf)] * (d + 1)))
        if not sol.optimal:
            raise NotBounded(f"Chebyshev LP returned {sol.status.value}")
        return sol.x[:d].copy(), float(sol.x[d])

    def is_empty(self, tol: Tolerances = DEFAULT_TOL) -> bool:
        return self.chebyshev[1] < -tol.feas

    @property
    def nonempty(self) -> bool:
        return not self.is_empty()

    def contains_point(self, x, tol: Tolerances = DEFAULT_TOL) -> bool:
        return bool(np.all(self.A @ np.asarray(x, dtype=float) <= self.b + tol.feas))

    def translate(self, t) -> "HPolytope":
        t = np.asarray(t, dtype=float)
        return HPolytope(self.A, self.b + self.A @ t, _bounded=self.bounded, _normalized=True)

    def affine_image(self, M, t) -> "HPolytope":
        """Image under ``x -> M x + t`` for invertible ``M``."""
        Minv = np.linalg.inv(np.asarray(M, dtype=float))
        A = self.A @ Minv
        b = self.b + A @ np.asarray(t, dtype=float)
        return HPolytope(A, b, _bounded=self.bounded)

    def vertices(self) -> np.ndarray:
        """Vertex enumeration by brute force over d-subsets of facets (d <= 3)."""
        d = self.dim
        pts = []
        for idx in itertools.combinations(range(self.n_halfspaces), d):
            M = self.A[list(idx)]
            if abs(np.linalg.det(M)) < 1e-12:
                continue
            x = np.linalg.solve(M, self.b[list(idx)])
            if np.all(self.A @ x <= self.b + 1e-9):
                pts.append(x)
        if not pts:
            return np.zeros((0, d))
        pts = np.array(pts)
        keep = []
        for p in pts:
            if not any(np.allclose(p, q, atol=1e-9) for q in keep):
                keep.append(p)
        return np.array(keep)

    def halfspace_set(self, tol: float = DEFAULT_TOL.feas) -> frozenset:
        """Hashable canonical form used for equality up to ``tol``."""
        scale = 1.0 / tol
        return frozenset(tuple(np.round(np.append(a, bi) * scale).astype(np.int64))
                         for a, bi in zip(self.A, self.b))

    def to_json(self) -> dict:
        return {"halfspaces": [{"a": [float(v) for v in a], "b": float(bi)}
                               for a, bi in zip(self.A, self.b)]}

    @classmethod
    def from_json(cls, data: dict) -> "HPolytope":
        hs = data["halfspaces"]
        return cls(np.array([h["a"] for h in hs], dtype=float),
                   np.array([h["b"] for h in hs], dtype=float))

    def __repr__(self):
        return f"HPolytope(dim={self.dim}, halfspaces={self.n_halfspaces})"


DUAL_CHEBYSHEV_ROWS = 40


def _chebyshev_dual(A: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, float]:
    """Chebyshev ball from the dual ``min b.y : A^T y = 0, sum y = 1, y >= 0``.

    The dual has ``d + 1`` rows, so its tableau stays small for polytopes with
    many facets; center and radius are the negated row multipliers.
    """
    d = A.shape[1]
    rows = [(A[:, k], EQ, 0.0) for k in range(d)] + [(np.ones(A.shape[0]), EQ, 1.0)]
    sol = solve_lp(LPProblem(-b, rows))
    if not sol.optimal:
        raise NotBounded(f"Chebyshev dual LP returned {sol.status.value}")
    return -sol.duals[:d].copy(), float(-sol.duals[d])


def _check_bounded(A: np.ndarray) -> bool:
    """Recession cone ``{r : A r <= 0}`` is trivial iff max u.r = 0 on a positive basis."""
    d = A.shape[1]
    dirs = list(np.eye(d)) + [-np.ones(d)]
    rows = [(a, LE, 0.0) for a in A]
    for u in dirs:
        sol = solve_lp(LPProblem(u, rows, [(-1.0, 1.0)] * d))
        if sol.status is not LPStatus.OPTIMAL or sol.objective > 1e-9:
            return False
    return True


@dataclass(frozen=True)
class Ellipsoid:
    """``{center + shape @ u : |u| <= 1}`` with ``shape`` symmetric positive definite."""

    center: np.ndarray
    shape: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float).reshape(-1)
        B = np.atleast_2d(np.asarray(self.shape, dtype=float))
        d = c.shape[0]
        if B.shape != (d, d):
            raise DimensionMismatch(f"shape {B.shape} does not match center dimension {d}")
        if not (np.all(np.isfinite(c)) and np.all(np.isfinite(B))):
            raise ValueError("ellipsoid entries must be finite")
        if np.max(np.abs(B - B.T), initial=0.0) > 1e-10 * max(1.0, np.abs(B).max()):
            raise ValueError("ellipsoid shape must be symmetric")
        B = 0.5 * (B + B.T)
        if np.linalg.eigvalsh(B).min() <= 0:
            raise ValueError("ellipsoid shape must be positive definite")
        c.setflags(write=False)
        B.setflags(write=False)
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "shape", B)

    @classmethod
    def ball(cls, center, radius: float) -> "Ellipsoid":
        center = np.asarray(center, dtype=float)
        return cls(center, radius * np.eye(center.shape[0]))

    @classmethod
    def from_factor(cls, center, L) -> "Ellipsoid":
        """Ellipsoid ``{c + L u}`` for any invertible ``L``; stored via ``sqrtm(L L^T)``."""
        L = np.asarray(L, dtype=float)
        w, V = np.linalg.eigh(L @ L.T)
        B = (V * np.sqrt(np.maximum(w, 0.0))) @ V.T
        return cls(center, 0.5 * (B + B.T))

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    @property
    def volume(self) -> float:
        return unit_ball_volume(self.dim) * float(np.linalg.det(self.shape))

    @property
    def height(self) -> float:
        """Top of the projection onto the last coordinate axis."""
        return float(self.center[-1] + np.linalg.norm(self.shape[-1]))

    def support(self, u) -> np.ndarray:
        u = np.atleast_2d(np.asarray(u, dtype=float))
        return u @ self.center + np.linalg.norm(u @ self.shape, axis=1)

    def scaled(self, s: float) -> "Ellipsoid":
        """Concentric copy with shape multiplied by ``s``."""
        return Ellipsoid(self.center, s * self.shape)

    def translated(self, t) -> "Ellipsoid":
        return Ellipsoid(self.center + np.asarray(t, dtype=float), self.shape)

    def moved_to(self, c) -> "Ellipsoid":
        return Ellipsoid(np.asarray(c, dtype=float), self.shape)

    def affine_image(self, M, t) -> "Ellipsoid":
        M = np.asarray(M, dtype=float)
        return Ellipsoid.from_factor(M @ self.center + np.asarray(t, dtype=float), M @ self.shape)

    def boundary_points(self, k: int) -> np.ndarray:
        """``k`` points on the boundary (evenly spaced in d=2, Fibonacci sphere otherwise)."""
        return self.center + unit_directions_count(self.dim, k) @ self.shape.T

    def close_to(self, other: "Ellipsoid", tol: float) -> bool:
        return (np.max(np.abs(self.center - other.center)) <= tol
                and np.max(np.abs(self.shape - other.shape)) <= tol)

    def to_json(self) -> dict:
        return {"c": [float(v) for v in self.center],
                "B": [[float(v) for v in row] for row in self.shape]}

    @classmethod
    def from_json(cls, data: dict) -> "Ellipsoid":
        return cls(np.array(data["c"], dtype=float), np.array(data["B"], dtype=float))


# ---------------------------------------------------------------- support bodies

@dataclass(frozen=True)
class HullOfEllipsoids:
    items: tuple

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(self.items))
        if not self.items:
            raise ValueError("hull of an empty set of ellipsoids")

    @property
    def dim(self) -> int:
        return self.items[0].dim

    @cached_property
    def _arrays(self):
        C = np.array([e.center for e in self.items])
        Bs = np.array([e.shape for e in self.items])
        return C, Bs

    def support(self, U) -> np.ndarray:
        C, Bs = self._arrays
        return kernels.hull_support(np.atleast_2d(U), C, Bs)


@dataclass(frozen=True)
class Poly:
    polytope: HPolytope

    @property
    def dim(self) -> int:
        return self.polytope.dim

    @cached_property
    def _arrays(self):
        V = self.polytope.vertices()
        if V.shape[0] == 0:
            raise PreconditionError("support of an empty polytope")
        return V, np.zeros((V.shape[0], self.dim, self.dim))

    def support(self, U) -> np.ndarray:
        V, Z = self._arrays
        return kernels.hull_support(np.atleast_2d(U), V, Z)


@dataclass(frozen=True)
class Intersection:
    parts: tuple

    def __post_init__(self):
        object.__setattr__(self, "parts", tuple(self.parts))

    @property
    def dim(self) -> int:
        return self.parts[0].dim


SupportBody = HullOfEllipsoids | Poly | Intersection


# ---------------------------------------------------------------- direction grids

def unit_directions_count(d: int, k: int) -> np.ndarray:
    if d == 1:
        return np.array([[1.0], [-1.0]])
    if d == 2:
        th = 2 * np.pi * np.arange(k) / k
        return np.column_stack([np.cos(th), np.sin(th)])
    # Fibonacci lattice on S^{d-1}, lifted to d >= 3 by normalizing Gaussian-free spiral
    if d == 3:
        i = np.arange(k) + 0.5
        phi = np.arccos(1 - 2 * i / k)
        th = np.pi * (1 + 5 ** 0.5) * i
        return np.column_stack([np.cos(th) * np.sin(phi), np.sin(th) * np.sin(phi), np.cos(phi)])
    rng = np.random.default_rng(12345)
    U = rng.standard_normal((k, d))
    return U / np.linalg.norm(U, axis=1, keepdims=True)


def _angles_to_dirs(d: int, ang: np.ndarray) -> np.ndarray:
    ang = np.atleast_2d(ang)
    if d == 2:
        return np.column_stack([np.cos(ang[:, 0]), np.sin(ang[:, 0])])
    th, ph = ang[:, 0], ang[:, 1]
    return np.column_stack([np.cos(th) * np.sin(ph), np.sin(th) * np.sin(ph), np.cos(ph)])


def direction_grid(d: int, spacing: float) -> tuple[np.ndarray, np.ndarray]:
    """Directions with angular spacing ``spacing`` and their angle parameters."""
    if d == 2:
        k = max(8, int(math.ceil(2 * math.pi / spacing)))
        th = 2 * np.pi * np.arange(k) / k
        ang = th[:, None]
    elif d == 3:
        n_ph = max(4, int(math.ceil(math.pi / spacing)))
        ph = (np.arange(n_ph) + 0.5) * math.pi / n_ph
        angs = []
        for p in ph:
            n_th = max(4, int(math.ceil(2 * math.pi * math.sin(p) / spacing)))
            th = 2 * np.pi * np.arange(n_th) / n_th
            angs.append(np.column_stack([th, np.full(n_th, p)]))
        # poles
        angs.append(np.array([[0.0, 0.0], [0.0, math.pi]]))
        ang = np.vstack(angs)
    else:
        raise UnsupportedDimension(f"direction grids are implemented for d <= 3, got {d}")
    return _angles_to_dirs(d, ang), ang


def _golden_max(f, lo: float, hi: float, iters: int = 40) -> tuple[float, float]:
    g = (math.sqrt(5) - 1) / 2
    a, b = lo, hi
    x1, x2 = b - g * (b - a), a + g * (b - a)
    f1, f2 = f(x1), f(x2)
    for _ in range(iters):
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + g * (b - a)
            f2 = f(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - g * (b - a)
            f1 = f(x1)
    return (x1, f1) if f1 >= f2 else (x2, f2)


def support_gap(E: Ellipsoid, body, tol: Tolerances = DEFAULT_TOL) -> tuple[float, np.ndarray]:
    """Max over the refined grid of ``h_E(u) - h_body(u)`` and its maximizing direction."""
    d = E.dim
    U, ang = direction_grid(d, tol.grid_angular)
    C, Bs = body._arrays
    k, gap = kernels.support_gap_max(U, E.center, E.shape, C, Bs)
    best_ang = ang[k].copy()

    def gap_at(a):
        u = _angles_to_dirs(d, a)
        return float(E.support(u)[0] - body.support(u)[0])

    h = tol.grid_angular
    for axis in range(ang.shape[1]):
        def f(x, axis=axis):
            a = best_ang.copy()
            a[axis] = x
            return gap_at(a)
        x, val = _golden_max(f, best_ang[axis] - h, best_ang[axis] + h)
        if val > gap:
            gap = val
            best_ang[axis] = x
    return float(gap), _angles_to_dirs(d, best_ang)[0]


# ---------------------------------------------------------------- operations

def intersect_polytopes(parts) -> HPolytope:
    """Concatenate halfspaces, dropping duplicates within the feasibility tolerance."""
    parts = list(parts)
    if not parts:
        raise PreconditionError("intersection of an empty list")
    d = parts[0].dim
    if any(p.dim != d for p in parts):
        raise DimensionMismatch("all parts must share a dimension")
    A = np.vstack([p.A for p in parts])
    b = np.concatenate([p.b for p in parts])
    seen = set()
    keep = []
    scale = 1.0 / DEFAULT_TOL.feas
    for i in range(A.shape[0]):
        key = tuple(np.round(np.append(A[i], b[i]) * scale).astype(np.int64))
        if key not in seen:
            seen.add(key)
            keep.append(i)
    bounded = True if any(p.bounded for p in parts) else None
    return HPolytope(A[keep], b[keep], _bounded=bounded, _normalized=True)


def erode_by_ellipsoid(P: HPolytope, E0: Ellipsoid) -> HPolytope:
    """Minkowski difference ``P ~ E0`` with ``E0`` taken centered at the origin."""
    if P.dim != E0.dim:
        raise DimensionMismatch("polytope and ellipsoid dimensions differ")
    shrink = np.linalg.norm(P.A @ E0.shape, axis=1)
    return HPolytope(P.A, P.b - shrink, _bounded=P.bounded, _normalized=True)


def containment_slack(E: Ellipsoid, P: HPolytope) -> np.ndarray:
    """Per-halfspace slack ``b_i - a_i.c - |B a_i|`` (negative means violated)."""
    if E.dim != P.dim:
        raise DimensionMismatch("polytope and ellipsoid dimensions differ")
    return P.b - P.A @ E.center - np.linalg.norm(P.A @ E.shape, axis=1)


def ellipsoid_in_polytope(E: Ellipsoid, P: HPolytope, tol: Tolerances = DEFAULT_TOL) -> bool:
    return bool(np.all(containment_slack(E, P) >= -tol.feas))


def ball_translate_in_ellipsoid(E: Ellipsoid, r: float, tol: Tolerances = DEFAULT_TOL):
    """Center of ``E`` if ``r``-ball around it fits in ``E``, else ``None``."""
    if r <= 0:
        raise PreconditionError("radius must be positive")
    smin = float(np.linalg.eigvalsh(E.shape).min())
    return E.center.copy() if smin >= r - tol.feas else None


def ellipsoid_in_support_body(E: Ellipsoid, body, tol: Tolerances = DEFAULT_TOL) -> bool:
    """Direction-grid certificate of ``E`` inside ``body`` (d <= 3)."""
    if E.dim > 3:
        raise UnsupportedDimension("support-body certification is limited to d <= 3")
    if body.dim != E.dim:
        raise DimensionMismatch("body and ellipsoid dimensions differ")
    if isinstance(body, Intersection):
        return all(ellipsoid_in_support_body(E, part, tol) for part in body.parts)
    gap, _ = support_gap(E, body, tol)
    return gap <= tol.feas
