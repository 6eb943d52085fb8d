"""Quantitative Tverberg search, the selection lemma and greedy weak epsilon-nets.

Hull intersections are certified with a cutting-plane outer approximation:
polytope outer bounds of every hull are refined at violating directions until
the shrunken John ellipsoid of their intersection passes the direction-grid
containment test against the true hulls, or the outer bound itself proves
that no volume-``v`` ellipsoid fits.
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .ellipsoids import DEFAULT_CFG, SolverConfig, n_ellipsoid_params, solve_max_inscribed
from .errors import (CertificateFailure, CertificationInconclusive, EmptyInterior,
                     HellyQuantError, HypothesisViolated, PreconditionError,
                     SearchBudgetExceeded, SolverStalled, UnsupportedDimension)
from .geometry import (DEFAULT_TOL, Ellipsoid, HPolytope, HullOfEllipsoids, Tolerances,
                       ellipsoid_in_polytope, ellipsoid_in_support_body, support_gap,
                       unit_directions_count)
from .helly import ConvexFamily, qfh_large

log = logging.getLogger(__name__)

MAX_CUTS = 200
EXHAUSTIVE_LIMIT = 10 ** 5
PARTITION_LIMIT = 10 ** 6
RANDOM_TRIES = 2000
TYPE_LIMIT = 10
INNER_DIRS = 1024


def tverberg_number(d: int, r: int) -> int:
    """Smallest multiset size for which an ``r``-partition is guaranteed."""
    return (r - 1) * (n_ellipsoid_params(d) + 1) + 1


def equal_parts_sizes(d: int) -> tuple[int, int]:
    """``(a, b)``: ``b`` parts of ``a`` ellipsoids each."""
    k = n_ellipsoid_params(d)
    return (k - 1) * (k + 1) + 1, k


@dataclass(frozen=True)
class EllipsoidMultiset:
    items: tuple
    v: float

    def __post_init__(self):
        items = tuple(self.items)
        object.__setattr__(self, "items", items)
        if not items:
            raise PreconditionError("empty ellipsoid multiset")
        d = items[0].dim
        for E in items:
            if E.dim != d:
                raise PreconditionError("ellipsoids of mixed dimension")
            if abs(E.volume - self.v) > DEFAULT_TOL.vol_rel * self.v:
                raise PreconditionError(f"item volume {E.volume:.9g} differs from v = {self.v:.9g}")

    @property
    def dim(self) -> int:
        return self.items[0].dim

    @property
    def m(self) -> int:
        return len(self.items)

    def sub(self, idx) -> "EllipsoidMultiset":
        return EllipsoidMultiset(tuple(self.items[i] for i in idx), self.v)

    def hull(self, idx) -> HullOfEllipsoids:
        return HullOfEllipsoids(tuple(self.items[i] for i in idx))

    def to_json(self) -> dict:
        return {"v": self.v, "items": [E.to_json() for E in self.items]}

    @classmethod
    def from_json(cls, data: dict) -> "EllipsoidMultiset":
        return cls(tuple(Ellipsoid.from_json(e) for e in data["items"]), float(data["v"]))


@dataclass(frozen=True)
class TverbergCertificate:
    parts: tuple
    witness: Ellipsoid
    grid_angular: float
    cuts: int = 0
    partitions_tried: int = 0

    def verify(self, ms: EllipsoidMultiset, tol: Tolerances = DEFAULT_TOL) -> bool:
        flat = sorted(i for p in self.parts for i in p)
        if flat != list(range(ms.m)) or any(len(p) == 0 for p in self.parts):
            return False
        if self.witness.volume < ms.v * (1 - tol.vol_rel):
            return False
        grid = Tolerances(tol.feas, tol.vol_rel, self.grid_angular)
        return all(ellipsoid_in_support_body(self.witness, ms.hull(p), grid) for p in self.parts)

    def to_json(self) -> dict:
        return {"parts": [list(p) for p in self.parts], "witness": self.witness.to_json(),
                "witness_volume": self.witness.volume, "grid_angular": self.grid_angular,
                "cuts": self.cuts, "partitions_tried": self.partitions_tried}


@dataclass(frozen=True)
class WeightedFamily:
    family: ConvexFamily
    ellipsoids: EllipsoidMultiset
    weights: tuple

    def __post_init__(self):
        w = tuple(float(x) for x in self.weights)
        object.__setattr__(self, "weights", w)
        if len(w) != self.ellipsoids.m:
            raise PreconditionError("one weight per ellipsoid is required")
        if min(w) < 0:
            raise PreconditionError("weights must be nonnegative")
        if abs(sum(w) - 1.0) > 1e-9:
            raise PreconditionError(f"weights sum to {sum(w):.12g}, not 1")
        if self.family.dim != self.ellipsoids.dim:
            raise PreconditionError("family and ellipsoids differ in dimension")

    def to_json(self) -> dict:
        return {"family": self.family.to_json(), "ellipsoids": self.ellipsoids.to_json(),
                "weights": list(self.weights)}

    @classmethod
    def from_json(cls, data: dict) -> "WeightedFamily":
        return cls(ConvexFamily.from_json(data["family"]),
                   EllipsoidMultiset.from_json(data["ellipsoids"]), tuple(data["weights"]))


# ---------------------------------------------------------------- certification

def _initial_directions(d: int) -> np.ndarray:
    return unit_directions_count(d, 32 if d == 2 else 96)


def certify_hull_intersection(hulls, v: float, cfg: SolverConfig = DEFAULT_CFG,
                              tol: Tolerances = DEFAULT_TOL, max_cuts: int = MAX_CUTS):
    """Volume-``v`` ellipsoid certified inside every hull, or ``None`` if none fits.

    Returns ``(witness or None, cuts used)``. ``None`` is a proof: the polytope
    outer bound already has John volume below ``v (1 - vol_rel)``. Raises
    CertificationInconclusive when the cut budget runs out.
    """
    d = hulls[0].dim
    if d > 3:
        raise UnsupportedDimension("hull certification is limited to d <= 3")
    U0 = _initial_directions(d)
    A = [U0 for _ in hulls]
    b = [h.support(U0) for h in hulls]
    target = v * (1 - 0.5 * tol.vol_rel)
    cuts = 0
    while True:
        Q = HPolytope(np.vstack(A), np.concatenate(b), _bounded=True, _normalized=True)
        try:
            if Q.chebyshev[1] <= tol.feas:
                return None, cuts
            E = solve_max_inscribed(Q, cfg, tol).ellipsoid
        except (EmptyInterior, SolverStalled) as exc:
            log.debug("outer bound rejected: %s", exc)
            return None, cuts
        if E.volume < v * (1 - tol.vol_rel):
            return None, cuts
        cand = E.scaled((target / E.volume) ** (1.0 / d))
        violated = False
        for i, h in enumerate(hulls):
            gap, u = support_gap(cand, h, tol)
            if gap > tol.feas:
                violated = True
                A[i] = np.vstack([A[i], u])
                b[i] = np.append(b[i], h.support(u))
                cuts += 1
        if not violated:
            return cand, cuts
        if cuts > max_cuts:
            raise CertificationInconclusive(f"no certificate after {cuts} cuts")


def certify_partition(ms: EllipsoidMultiset, parts, cfg: SolverConfig = DEFAULT_CFG,
                      tol: Tolerances = DEFAULT_TOL):
    """Witness for ``parts`` (or ``None``) and the number of cuts spent."""
    return certify_hull_intersection([ms.hull(p) for p in parts], ms.v, cfg, tol)


# ---------------------------------------------------------------- partition search

def stirling2(m: int, r: int) -> int:
    S = [[0] * (r + 1) for _ in range(m + 1)]
    S[0][0] = 1
    for i in range(1, m + 1):
        for j in range(1, min(i, r) + 1):
            S[i][j] = j * S[i - 1][j] + S[i - 1][j - 1]
    return S[m][r]


def set_partitions(m: int, r: int):
    """Partitions of ``range(m)`` into ``r`` nonempty blocks, in restricted-growth order."""
    labels = [0] * m

    def rec(i, used):
        if m - i < r - used:
            return
        if i == m:
            if used == r:
                yield tuple(tuple(j for j in range(m) if labels[j] == q) for q in range(r))
            return
        for q in range(min(used + 1, r)):
            labels[i] = q
            yield from rec(i + 1, max(used, q + 1))

    if m == 0 or r < 1:
        return
    labels[0] = 0
    yield from rec(1, 1)


def _heuristic_partitions(ms: EllipsoidMultiset, r: int):
    """Round-robin assignments after sorting items by angle (and by radius) about the centroid."""
    C = np.array([E.center for E in ms.items])
    rel = C - C.mean(axis=0)
    ang = np.arctan2(rel[:, 1], rel[:, 0]) if ms.dim >= 2 else rel[:, 0]
    rad = np.linalg.norm(rel, axis=1)
    orders = [np.lexsort((np.arange(ms.m), ang)),
              np.lexsort((np.arange(ms.m), ang, -np.round(rad, 12)))]
    for order in orders:
        yield tuple(tuple(sorted(int(j) for j in order[q::r])) for q in range(r))


def _random_partitions(m: int, r: int, seed: int, tries: int):
    rng = np.random.default_rng(seed)
    for _ in range(tries):
        lab = rng.permutation(np.arange(m) % r)
        yield tuple(tuple(int(j) for j in np.flatnonzero(lab == q)) for q in range(r))


def tverberg_partition(ms: EllipsoidMultiset, r: int, cfg: SolverConfig = DEFAULT_CFG,
                       tol: Tolerances = DEFAULT_TOL, seed: int = 0,
                       random_tries: int = RANDOM_TRIES) -> TverbergCertificate:
    """First partition (in search order) whose hull intersection holds a volume-``v`` ellipsoid.

    Small searches run over all partitions in restricted-growth order; when the
    partition count exceeds ``EXHAUSTIVE_LIMIT`` two round-robin heuristics are
    tried first, then seeded random balanced partitions.
    """
    d, m = ms.dim, ms.m
    if d > 3:
        raise UnsupportedDimension("Tverberg certification is limited to d <= 3")
    if r < 1:
        raise PreconditionError("r must be positive")
    if m < tverberg_number(d, r):
        raise PreconditionError(f"{m} ellipsoids are fewer than the Tverberg number "
                                f"{tverberg_number(d, r)} for r = {r}")
    total = stirling2(m, r)
    if total <= EXHAUSTIVE_LIMIT:
        candidates = set_partitions(m, r)
    else:
        candidates = itertools.chain(_heuristic_partitions(ms, r),
                                     _random_partitions(m, r, seed, random_tries))
    tried = 0
    inconclusive = 0
    seen = set()
    for parts in candidates:
        if parts in seen:
            continue
        seen.add(parts)
        tried += 1
        try:
            witness, cuts = certify_partition(ms, parts, cfg, tol)
        except CertificationInconclusive:
            inconclusive += 1
            continue
        if witness is not None:
            return TverbergCertificate(parts, witness, tol.grid_angular, cuts, tried)
    if inconclusive:
        raise CertificationInconclusive(f"{inconclusive} of {tried} partitions were inconclusive")
    raise SearchBudgetExceeded(f"no certified partition among {tried} candidates")


def equal_parts_partition(ms: EllipsoidMultiset, cfg: SolverConfig = DEFAULT_CFG,
                          tol: Tolerances = DEFAULT_TOL, seed: int = 0) -> TverbergCertificate:
    """``b`` parts of exactly ``a`` items: partition the first ``a`` items, then top up."""
    if ms.dim != 2:
        raise UnsupportedDimension("equal-parts partitions are implemented for d = 2")
    a, b = equal_parts_sizes(ms.dim)
    if ms.m != a * b:
        raise PreconditionError(f"need exactly {a * b} ellipsoids, got {ms.m}")
    base = tverberg_partition(ms.sub(range(a)), b, cfg, tol, seed)
    parts = [list(p) for p in base.parts]
    rest = iter(range(a, a * b))
    for p in parts:
        while len(p) < a:
            p.append(next(rest))
    cert = TverbergCertificate(tuple(tuple(p) for p in parts), base.witness, base.grid_angular,
                               base.cuts, base.partitions_tried)
    if not cert.verify(ms, tol):
        raise CertificateFailure("top-up invalidated the partition certificate")
    return cert


# ---------------------------------------------------------------- selection lemma

def inner_polygon(hull: HullOfEllipsoids, n_dirs: int = INNER_DIRS) -> HPolytope:
    """Polygon through support points of a planar hull (contained in the hull)."""
    if hull.dim != 2:
        raise UnsupportedDimension("inner polygons are planar")
    U = unit_directions_count(2, n_dirs)
    C, Bs = hull._arrays
    BU = np.einsum("jrs,ks->kjr", Bs, U)                 # (K, m, 2)
    nrm = np.linalg.norm(BU, axis=2)
    j = np.argmax(U @ C.T + nrm, axis=1)
    k = np.arange(U.shape[0])
    pts = C[j] + np.einsum("krs,ks->kr", Bs[j], BU[k, j] / nrm[k, j][:, None])
    keep = [pts[0]]
    for p in pts[1:]:
        if np.linalg.norm(p - keep[-1]) > 1e-12:
            keep.append(p)
    if len(keep) > 1 and np.linalg.norm(keep[0] - keep[-1]) <= 1e-12:
        keep.pop()
    P = np.array(keep)
    E = np.roll(P, -1, axis=0) - P
    N = np.column_stack([E[:, 1], -E[:, 0]])
    nn = np.linalg.norm(N, axis=1)
    N = N / nn[:, None]
    return HPolytope(N, np.einsum("kr,kr->k", N, P), _bounded=True, _normalized=True)


def _types(ms: EllipsoidMultiset) -> tuple[list, list]:
    """Distinct ellipsoids (first occurrence order) and their multiplicities."""
    reps: list = []
    mult: list = []
    for E in ms.items:
        for t, R in enumerate(reps):
            if R.close_to(E, 1e-12):
                mult[t] += 1
                break
        else:
            reps.append(E)
            mult.append(1)
    return reps, mult


def _count_hyperedges_exact(W: Ellipsoid, reps, mult, a: int, tol: Tolerances) -> int:
    """Number of ``a``-subsets of the multiset whose hull contains ``W``."""
    t = len(reps)
    inside = {}
    total = 0
    for size in range(1, t + 1):
        for T in itertools.combinations(range(t), size):
            if sum(mult[i] for i in T) < a:
                continue
            # supersets of a containing support contain W as well
            ok = any(inside.get(T[:i] + T[i + 1:], False) for i in range(len(T)))
            if not ok:
                ok = ellipsoid_in_support_body(W, HullOfEllipsoids(tuple(reps[i] for i in T)), tol)
            inside[T] = ok
            if not ok:
                continue
            exact = 0
            for s in range(len(T) + 1):
                for U in itertools.combinations(T, s):
                    exact += (-1) ** (len(T) - s) * math.comb(sum(mult[i] for i in U), a)
            total += exact
    return total


@dataclass(frozen=True)
class SelectionResult:
    hyperedges: list
    witness: Ellipsoid
    lambda_achieved: float
    hyperedge_count: float
    exact: bool
    candidates: int = 0

    def __iter__(self):
        return iter((self.hyperedges, self.witness, self.lambda_achieved))

    def to_json(self) -> dict:
        return {"hyperedges": [list(h) for h in self.hyperedges], "witness": self.witness.to_json(),
                "witness_volume": self.witness.volume, "lambda_achieved": self.lambda_achieved,
                "hyperedge_count": self.hyperedge_count, "exact": self.exact,
                "candidates": self.candidates}


def selection_lemma(ms: EllipsoidMultiset, cfg: SolverConfig = DEFAULT_CFG,
                    tol: Tolerances = DEFAULT_TOL, seed: int = 0,
                    samples: int = 500) -> SelectionResult:
    """Many ``a``-subsets whose hulls share a volume-``v`` ellipsoid.

    Disjoint blocks of ``a b`` items give equal-parts certificates; their parts
    form a sample of the hull family, on which the lowest-ellipsoid pigeonhole
    proposes one more witness. The candidate contained in the most hulls wins.
    Counts are exact (by multiplicity classes) when the multiset has at most
    ``TYPE_LIMIT`` distinct ellipsoids and sampled otherwise.
    """
    if ms.dim != 2:
        raise UnsupportedDimension("the selection lemma is implemented for d = 2")
    a, b = equal_parts_sizes(ms.dim)
    n = ms.m
    if n < a * b:
        raise PreconditionError(f"need at least {a * b} ellipsoids, got {n}")
    sample_parts = []
    candidates = []
    for blk in range(n // (a * b)):
        idx = list(range(blk * a * b, (blk + 1) * a * b))
        cert = equal_parts_partition(ms.sub(idx), cfg, tol, seed)
        sample_parts.extend(tuple(idx[j] for j in p) for p in cert.parts)
        candidates.append(cert.witness)
    polys = [inner_polygon(ms.hull(p)) for p in sample_parts]
    try:
        res = qfh_large(ConvexFamily(tuple(polys), 2, "hull-sample"), ms.v * (1 - 0.5 * tol.vol_rel),
                        cfg, tol)
        # inner polygons lie inside the hulls, so this witness needs no refinement
        candidates.append(res.witness)
    except HellyQuantError as exc:
        log.info("pigeonhole on the hull sample produced no witness: %s", exc)

    reps, mult = _types(ms)
    exact = len(reps) <= TYPE_LIMIT
    rng = np.random.default_rng(seed)
    sampled = [tuple(sorted(int(i) for i in rng.choice(n, a, replace=False))) for _ in range(0 if exact else samples)]

    def score(W):
        if exact:
            return _count_hyperedges_exact(W, reps, mult, a, tol)
        hits = sum(ellipsoid_in_support_body(W, ms.hull(s), tol) for s in sampled)
        return hits / len(sampled) * math.comb(n, a)

    scored = [(score(W), i) for i, W in enumerate(candidates)]
    best, bi = max(scored, key=lambda t: (t[0], -t[1]))
    W = candidates[bi]
    H = [p for p in list(sample_parts) + sampled if ellipsoid_in_support_body(W, ms.hull(p), tol)]
    H = sorted(set(H))
    lam = best / math.comb(n, a)
    return SelectionResult(H, W, float(lam), best, exact, len(candidates))


# ---------------------------------------------------------------- weak epsilon-nets

@dataclass(frozen=True)
class EpsNetResult:
    net: list
    assignment: list
    iterations: int
    strategy: str
    pierced_per_step: list = field(default_factory=list)

    def verify(self, fam: ConvexFamily, tol: Tolerances = DEFAULT_TOL) -> bool:
        return all(ellipsoid_in_polytope(self.net[j], P, tol)
                   for P, j in zip(fam.members, self.assignment))

    def to_json(self) -> dict:
        return {"net": [E.to_json() for E in self.net], "assignment": list(self.assignment),
                "iterations": self.iterations, "size": len(self.net), "strategy": self.strategy,
                "pierced_per_step": list(self.pierced_per_step)}


def greedy_weak_epsilon_net(wf: WeightedFamily, eps: float, cfg: SolverConfig = DEFAULT_CFG,
                            tol: Tolerances = DEFAULT_TOL, strategy: str = "densest",
                            use_selection: bool = True) -> EpsNetResult:
    """Greedy net: pierce the first unpierced member with its best contained ellipsoid.

    ``densest`` picks the contained ellipsoid lying in the most unpierced
    members (ties: larger weight, then smaller index); ``max_weight`` picks the
    heaviest. With at least ``a b`` contained ellipsoids (d = 2) the selection
    lemma witness of that sub-multiset is also a candidate.
    """
    if not 0 < eps <= 1:
        raise PreconditionError("eps must lie in (0, 1]")
    if strategy not in ("densest", "max_weight"):
        raise PreconditionError(f"unknown strategy {strategy!r}")
    fam, items, w = wf.family, wf.ellipsoids.items, np.array(wf.weights)
    inside = np.array([[ellipsoid_in_polytope(E, P, tol) for E in items] for P in fam.members],
                      dtype=bool).reshape(fam.n, len(items))
    mass = inside.astype(float) @ w
    bad = np.flatnonzero(mass < eps - 1e-12)
    if bad.size:
        raise HypothesisViolated(f"member {int(bad[0])} carries weight {mass[bad[0]]:.6g} < eps = {eps:.6g}")
    a, b = equal_parts_sizes(fam.dim) if fam.dim == 2 else (None, None)
    unpierced = np.ones(fam.n, dtype=bool)
    assignment = [-1] * fam.n
    net: list = []
    per_step: list = []
    while unpierced.any():
        c = int(np.flatnonzero(unpierced)[0])
        X = [j for j in np.flatnonzero(inside[c]) if w[j] > 0] or list(np.flatnonzero(inside[c]))
        if strategy == "densest":
            key = lambda j: (int(np.count_nonzero(inside[:, j] & unpierced)), w[j], -j)
        else:
            key = lambda j: (w[j], int(np.count_nonzero(inside[:, j] & unpierced)), -j)
        j = max(X, key=key)
        chosen = items[j]
        hit = inside[:, j] & unpierced
        if use_selection and a is not None and len(X) >= a * b:
            try:
                W = selection_lemma(wf.ellipsoids.sub(X), cfg, tol).witness
                hitW = np.array([unpierced[i] and ellipsoid_in_polytope(W, P, tol)
                                 for i, P in enumerate(fam.members)])
                if hitW[c] and hitW.sum() > hit.sum():
                    chosen, hit = W, hitW
            except HellyQuantError as exc:
                log.info("selection witness unavailable: %s", exc)
        net.append(chosen)
        for i in np.flatnonzero(hit):
            assignment[i] = len(net) - 1
        unpierced &= ~hit
        per_step.append(int(hit.sum()))
    return EpsNetResult(net, assignment, len(net), strategy, per_step)
