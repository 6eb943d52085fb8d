"""Good-tuple enumeration, the quantitative Helly audit and fractional Helly extraction.

All pipelines run on the family in a canonical member order (members sorted
by their rounded halfspace data), so index-based tie-breaks are geometric and
results do not depend on how the input was ordered. Indices in the returned
objects always refer to the caller's order.
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .ellipsoids import (DEFAULT_CFG, SolverConfig, contains_volume_v, determining_subset,
                         lowest_ellipsoid, n_ellipsoid_params, solve_max_inscribed)
from .errors import (CertificateFailure, DimensionMismatch, EmptyInterior, EnumerationBudgetExceeded,
                     Infeasible, InvalidConfig, NoGoodTuple, NotBounded, PreconditionError,
                     SizeBoundViolated, SolverStalled, UnsupportedDimension)
from .geometry import (DEFAULT_TOL, Ellipsoid, HPolytope, Tolerances, ball_translate_in_ellipsoid,
                       ellipsoid_in_polytope, erode_by_ellipsoid, intersect_polytopes)
from .lp import lex_min_point

log = logging.getLogger(__name__)

MAX_MEMBERS = 64
TUPLE_BUDGET = 10 ** 7
SEED_RTOL = 1e-7        # relative MVIE-volume difference treated as a tie
POINT_TOL = 1e-7


@dataclass(frozen=True)
class ConvexFamily:
    members: tuple
    dim: int
    label: str = ""

    def __post_init__(self):
        members = tuple(self.members)
        object.__setattr__(self, "members", members)
        if len(members) > MAX_MEMBERS:
            raise InvalidConfig(f"families are limited to {MAX_MEMBERS} members")
        for P in members:
            if P.dim != self.dim:
                raise DimensionMismatch(f"member of dimension {P.dim} in a {self.dim}-dimensional family")
            if not P.bounded:
                raise NotBounded("family members must be bounded")

    @property
    def n(self) -> int:
        return len(self.members)

    def subfamily(self, idx, label: str | None = None) -> "ConvexFamily":
        return ConvexFamily(tuple(self.members[i] for i in idx), self.dim,
                            self.label if label is None else label)

    def to_json(self) -> dict:
        return {"label": self.label, "dim": self.dim,
                "members": [P.to_json() for P in self.members]}

    @classmethod
    def from_json(cls, data: dict) -> "ConvexFamily":
        return cls(tuple(HPolytope.from_json(m) for m in data["members"]), int(data["dim"]),
                   data.get("label", ""))


@dataclass(frozen=True)
class GoodTupleReport:
    k: int
    v: float
    good: list
    alpha: float

    def to_json(self) -> dict:
        return {"k": self.k, "v": self.v, "alpha": self.alpha,
                "good": [list(t) for t in self.good]}


@dataclass(frozen=True)
class QFHResult:
    subfamily: list
    witness: Ellipsoid
    beta_achieved: float
    seed: list
    seed_count: int
    gamma: float
    delta_min: float
    alpha: float = 0.0
    good_count: int = 0
    size_bound: float = 0.0
    extras: dict = field(default_factory=dict)

    @property
    def witness_volume(self) -> float:
        return self.witness.volume

    def verify(self, fam: ConvexFamily, tol: Tolerances = DEFAULT_TOL) -> bool:
        return all(ellipsoid_in_polytope(self.witness, fam.members[i], tol) for i in self.subfamily)

    def to_json(self) -> dict:
        return {"subfamily": list(self.subfamily), "witness": self.witness.to_json(),
                "witness_volume": self.witness_volume, "beta_achieved": self.beta_achieved,
                "seed": list(self.seed), "seed_count": self.seed_count, "gamma": self.gamma,
                "delta_min": self.delta_min, "alpha": self.alpha, "good_count": self.good_count,
                "size_bound": self.size_bound, **self.extras}


@dataclass(frozen=True)
class HellyAudit:
    k: int
    all_k_good: bool
    full_mvie_volume: float
    min_k_mvie_volume: float
    ratio: float
    suspect: bool = False

    def to_json(self) -> dict:
        return {"k": self.k, "all_k_good": self.all_k_good, "full_mvie_volume": self.full_mvie_volume,
                "min_k_mvie_volume": self.min_k_mvie_volume, "ratio": self.ratio,
                "suspect": self.suspect}


def member_key(P: HPolytope) -> tuple:
    """Order-free geometric key: sorted rounded halfspace rows."""
    return tuple(sorted(P.halfspace_set()))


def canonical_order(members) -> list:
    """Positions sorted by geometric key; ``order[c]`` is the original index of canonical ``c``."""
    keys = [member_key(P) for P in members]
    return sorted(range(len(keys)), key=lambda i: (keys[i], i))


class Workspace:
    """Per-family cache of intersections keyed by member types.

    Identical members share a type, so multisets and repeated subfamilies reuse
    one polytope object (and with it the solver caches attached to it).
    """

    def __init__(self, members, cfg: SolverConfig = DEFAULT_CFG, tol: Tolerances = DEFAULT_TOL):
        self.members = list(members)
        self.cfg = cfg
        self.tol = tol
        ids: dict = {}
        self.types = []
        for P in self.members:
            self.types.append(ids.setdefault(member_key(P), len(ids)))
        self._poly: dict = {}
        self._good: dict = {}
        self._mvie: dict = {}

    def key(self, idx) -> frozenset:
        return frozenset(self.types[i] for i in idx)

    def poly(self, idx) -> HPolytope:
        key = self.key(idx)
        P = self._poly.get(key)
        if P is None:
            rep = {}
            for i in idx:
                rep.setdefault(self.types[i], self.members[i])
            P = intersect_polytopes([rep[t] for t in sorted(rep)])
            self._poly[key] = P
        return P

    def good(self, idx, v: float) -> bool:
        key = (self.key(idx), v)
        if key not in self._good:
            self._good[key] = contains_volume_v(self.poly(idx), v, self.cfg, self.tol)
        return self._good[key]

    def mvie_volume(self, idx) -> float:
        """MVIE volume of the intersection, 0 when it has no interior."""
        key = self.key(idx)
        if key not in self._mvie:
            P = self.poly(idx)
            try:
                vol = 0.0 if P.chebyshev[1] <= self.tol.feas else solve_max_inscribed(P, self.cfg, self.tol).volume
            except (EmptyInterior, SolverStalled) as exc:
                log.warning("MVIE solve failed on %s (%s); volume taken as 0", sorted(idx), exc)
                vol = 0.0
            self._mvie[key] = vol
        return self._mvie[key]

    def mvie(self, idx) -> Ellipsoid:
        return solve_max_inscribed(self.poly(idx), self.cfg, self.tol).ellipsoid

    def lowest(self, idx, v: float) -> Ellipsoid:
        return lowest_ellipsoid(self.poly(idx), v, self.cfg, self.tol).ellipsoid


def _check_budget(n: int, k: int, budget: int = TUPLE_BUDGET) -> None:
    if math.comb(n, k) > budget:
        raise EnumerationBudgetExceeded(f"C({n},{k}) = {math.comb(n, k)} exceeds {budget}")


def _good_tuples(ws: Workspace, k: int, v: float) -> list:
    """All good k-subsets in lexicographic order; a bad prefix prunes its extensions."""
    n = len(ws.members)
    out = []

    def rec(prefix, start):
        if len(prefix) == k:
            out.append(tuple(prefix))
            return
        for j in range(start, n - (k - len(prefix)) + 1):
            cand = prefix + [j]
            if ws.good(cand, v):
                rec(cand, j + 1)

    if 0 < k <= n:
        rec([], 0)
    return out


def enumerate_good_tuples(fam: ConvexFamily, k: int, v: float, cfg: SolverConfig = DEFAULT_CFG,
                          tol: Tolerances = DEFAULT_TOL, budget: int = TUPLE_BUDGET) -> GoodTupleReport:
    """Every ``k``-subset whose intersection contains an ellipsoid of volume ``v``."""
    n = fam.n
    if not 1 <= k <= n:
        raise PreconditionError(f"tuple size {k} must lie in [1, {n}]")
    _check_budget(n, k, budget)
    ws = Workspace(fam.members, cfg, tol)
    good = _good_tuples(ws, k, v)
    return GoodTupleReport(k, float(v), good, len(good) / math.comb(n, k))


def quantitative_helly_audit(fam: ConvexFamily, v: float, cfg: SolverConfig = DEFAULT_CFG,
                             tol: Tolerances = DEFAULT_TOL, budget: int = TUPLE_BUDGET) -> HellyAudit:
    """Compare the full intersection's MVIE volume with the smallest 2d-wise one."""
    d, n = fam.dim, fam.n
    k = min(2 * d, n)
    _check_budget(n, k, budget)
    ws = Workspace(fam.members, cfg, tol)
    vols = [ws.mvie_volume(idx) for idx in itertools.combinations(range(n), k)]
    min_k = min(vols)
    full = ws.mvie_volume(range(n))
    all_good = min_k >= v * (1 - tol.vol_rel)
    ratio = full / min_k if min_k > 0 else 0.0
    suspect = all_good and full <= 0.0
    if suspect:
        log.warning("all %d-wise intersections hold volume %g but the full intersection is empty; "
                    "suspect a solver error", k, v)
    return HellyAudit(k, bool(all_good), float(full), float(min_k), float(ratio), bool(suspect))


# ---------------------------------------------------------------- classical fractional Helly

def _same_point(x, y) -> bool:
    return bool(np.max(np.abs(x - y)) <= POINT_TOL * (1.0 + np.max(np.abs(x))))


def _pad(seed, pool, size) -> tuple:
    """Complete ``seed`` to ``size`` elements with the smallest unused entries of ``pool``."""
    seed = sorted(seed)
    for j in sorted(pool):
        if len(seed) >= size:
            break
        if j not in seed:
            seed.append(j)
    return tuple(sorted(seed))


@dataclass(frozen=True)
class _FHRecord:
    subfamily: list
    point: np.ndarray
    seed: tuple
    seed_count: int
    alpha: float
    n_nonempty: int


def _fractional_helly(members, tol: Tolerances) -> _FHRecord:
    """Lex-min pigeonhole on canonical-order members; indices are positions in ``members``."""
    ws = Workspace(members, tol=tol)
    n = len(members)
    d = members[0].dim
    if n < d + 1:
        raise NoGoodTuple(f"need at least {d + 1} members")
    lexmin: dict = {}

    def nonempty(idx):
        P = ws.poly(idx)
        try:
            return not P.is_empty(tol)
        except NotBounded:
            return False

    def lm(idx):
        key = ws.key(idx)
        if key not in lexmin:
            lexmin[key] = lex_min_point(ws.poly(idx))
        return lexmin[key]

    tuples = []

    def rec(prefix, start):
        if len(prefix) == d + 1:
            tuples.append(tuple(prefix))
            return
        for j in range(start, n - (d + 1 - len(prefix)) + 1):
            if nonempty(prefix + [j]):
                rec(prefix + [j], j + 1)

    rec([], 0)
    if not tuples:
        raise NoGoodTuple("no (d+1)-tuple has a common point")
    counts: dict = {}
    for T in tuples:
        x = lm(T)
        keep = list(T)
        for i in reversed(T):
            if len(keep) <= 1:
                break
            rest = [j for j in keep if j != i]
            try:
                if _same_point(lm(rest), x):
                    keep = rest
            except Infeasible:
                continue
        if len(keep) > d:
            raise SizeBoundViolated(f"lex-min point of {T} not determined by {d} members")
        seed = _pad(keep, T, d)
        counts[seed] = counts.get(seed, 0) + 1
    best = max(counts.items(), key=lambda kv: (kv[1], tuple(-j for j in kv[0])))
    seed, count = best
    point = lm(seed)
    sub = [i for i in range(n) if members[i].contains_point(point, tol)]
    return _FHRecord(sub, point, seed, count, len(tuples) / math.comb(n, d + 1), len(tuples))


def classical_fractional_helly(fam: ConvexFamily, tol: Tolerances = DEFAULT_TOL):
    """Subfamily sharing a point, via lexicographic-minimum seeds; returns ``(indices, point)``."""
    order = canonical_order(fam.members)
    rec = _fractional_helly([fam.members[i] for i in order], tol)
    sub = sorted(order[i] for i in rec.subfamily)
    return sub, rec.point


# ---------------------------------------------------------------- quantitative pipelines

def _require_pipeline_dim(fam: ConvexFamily) -> None:
    if fam.dim < 2:
        raise UnsupportedDimension("the quantitative pipelines need d >= 2")
    if fam.dim > 4:
        raise UnsupportedDimension("the ellipsoid solvers support d <= 4")


def qfh_small(fam: ConvexFamily, v: float, cfg: SolverConfig = DEFAULT_CFG,
              tol: Tolerances = DEFAULT_TOL, budget: int = TUPLE_BUDGET) -> QFHResult:
    """Fractional Helly with a shrunken witness, seeded by minimal-MVIE 2d-subsets.

    Good sets have size 3d+1. The seed of a good set is its lexicographically
    first 2d-subset of least MVIE volume. For the most frequent seed S with
    John ellipsoid E, the witness shape is ``delta_min / d^(d-1)`` times E's,
    where ``delta_min`` is the least MVIE-volume ratio over S's good sets. The
    witness position comes from fractional Helly on the members eroded by it.
    """
    _require_pipeline_dim(fam)
    d, n = fam.dim, fam.n
    k, s = 3 * d + 1, 2 * d
    if n < k:
        raise NoGoodTuple(f"family of {n} members has no {k}-subsets")
    _check_budget(n, k, budget)
    order = canonical_order(fam.members)
    members = [fam.members[i] for i in order]
    ws = Workspace(members, cfg, tol)
    good = _good_tuples(ws, k, v)
    if not good:
        raise NoGoodTuple(f"no {k}-subset contains volume {v:g}")
    alpha = len(good) / math.comb(n, k)

    # seeds: lex-first minimal-MVIE-volume s-subset of each good set
    binom = kernels.binomial_table(n, s)
    scores = np.full(math.comb(n, s), np.inf)
    subsets: dict = {}
    for I in good:
        for S in itertools.combinations(I, s):
            r = sum(int(binom[c, j + 1]) for j, c in enumerate(S))
            if r not in subsets:
                subsets[r] = S
                scores[r] = ws.mvie_volume(S)
    ranks = kernels.first_min_seeds(np.array(good, dtype=np.int64), s, scores, binom, SEED_RTOL)
    counts: dict = {}
    for g, r in enumerate(ranks):
        counts.setdefault(int(r), []).append(g)
    best_rank = max(counts, key=lambda r: (len(counts[r]), tuple(-j for j in subsets[r])))
    seed = subsets[best_rank]
    owned = [good[g] for g in counts[best_rank]]
    seed_count = len(owned)

    E = ws.mvie(seed)
    vol_E = E.volume
    delta_min = min(1.0, min(ws.mvie_volume(I) for I in owned) / vol_E)
    shrink = delta_min / d ** (d - 1)
    L = Ellipsoid(np.zeros(d), shrink * E.shape)

    # the shrunken ball fits in every owned good set's John ellipsoid (frame of E)
    Binv = np.linalg.inv(E.shape)
    translates_ok = 0
    for I in owned:
        EI = ws.mvie(I).affine_image(Binv, -Binv @ E.center)
        if ball_translate_in_ellipsoid(EI, shrink, tol) is not None:
            translates_ok += 1

    eroded = [erode_by_ellipsoid(P, L) for P in members]
    fh = _fractional_helly(eroded, tol)
    witness = L.moved_to(fh.point)
    sub = [i for i in range(n) if ellipsoid_in_polytope(witness, members[i], tol)]
    gamma = seed_count / math.comb(n, d + 1)
    size_bound = gamma * n / (d + 1)
    if len(sub) < size_bound - 1:
        raise CertificateFailure(f"subfamily of {len(sub)} below the accounting bound {size_bound:.3f}")
    gamma_pigeon = alpha * math.comb(n, k) / math.comb(n, s) / math.comb(n, d + 1)
    extras = {"variant": "small", "v": float(v), "k": k, "john_volume": vol_E, "shrink": shrink,
              "gamma_accounting": gamma_pigeon, "translates_found": translates_ok,
              "eroded_alpha": fh.alpha, "eroded_seed": sorted(order[j] for j in fh.seed)}
    return QFHResult(sorted(order[i] for i in sub), witness, len(sub) / n,
                     sorted(order[j] for j in seed), seed_count, gamma, delta_min,
                     alpha, len(good), size_bound, extras)


def qfh_large(fam: ConvexFamily, v: float, cfg: SolverConfig = DEFAULT_CFG,
              tol: Tolerances = DEFAULT_TOL, budget: int = TUPLE_BUDGET) -> QFHResult:
    """Fractional Helly with a volume-``v`` witness, seeded by lowest-ellipsoid determining sets."""
    _require_pipeline_dim(fam)
    d, n = fam.dim, fam.n
    k = n_ellipsoid_params(d)
    if n < k:
        raise NoGoodTuple(f"family of {n} members has no {k}-subsets")
    _check_budget(n, k, budget)
    order = canonical_order(fam.members)
    members = [fam.members[i] for i in order]
    ws = Workspace(members, cfg, tol)
    good = _good_tuples(ws, k, v)
    if not good:
        raise NoGoodTuple(f"no {k}-subset contains volume {v:g}")
    alpha = len(good) / math.comb(n, k)

    counts: dict = {}
    for I in good:
        det = determining_subset([members[i] for i in I], v, cfg, tol,
                                 intersect=lambda idx, I=I: ws.poly([I[j] for j in idx]))
        seed = _pad([I[j] for j in det], I, k - 1)
        counts[seed] = counts.get(seed, 0) + 1
    seed, seed_count = max(counts.items(), key=lambda kv: (kv[1], tuple(-j for j in kv[0])))
    witness = ws.lowest(seed, v)
    sub = [i for i in range(n) if ellipsoid_in_polytope(witness, members[i], tol)]
    size_bound = 2 * alpha * n / (d * (d + 3))
    if len(sub) < size_bound - 1:
        raise CertificateFailure(f"subfamily of {len(sub)} below the bound {size_bound:.3f}")
    extras = {"variant": "large", "v": float(v), "k": k, "height": witness.height,
              "distinct_seeds": len(counts)}
    return QFHResult(sorted(order[i] for i in sub), witness, len(sub) / n,
                     sorted(order[j] for j in seed), seed_count,
                     seed_count / max(1, n - k + 1), 1.0, alpha, len(good), size_bound, extras)
