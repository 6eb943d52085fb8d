"""Ellipsoid hypergraphs, fractional transversals and the (p,q) piercing pipelines.

Vertices are lowest volume-``v`` ellipsoids of subfamily intersections; only
subfamilies of at most ``d(d+3)/2 - 1`` members are needed, since a larger
intersection shares its lowest ellipsoid with one of that size.
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .ellipsoids import DEFAULT_CFG, SolverConfig, n_ellipsoid_params
from .errors import (CertificateFailure, EnumerationBudgetExceeded, HypothesisViolated,
                     InfeasibleEdge, PreconditionError, SolverStalled, TauInfinite)
from .geometry import DEFAULT_TOL, Ellipsoid, Tolerances, ellipsoid_in_polytope
from .helly import TUPLE_BUDGET, ConvexFamily, QFHResult, Workspace, qfh_small
from .lp import GE, LE, LPProblem, solve_lp
from .tverberg import EllipsoidMultiset, EpsNetResult, WeightedFamily, greedy_weak_epsilon_net

log = logging.getLogger(__name__)

DEDUP_TOL = 1e-7
DUALITY_RTOL = 1e-7
MAX_V_ROUNDS = 10
MATCHING_DENOMINATOR = 10 ** 6


@dataclass(frozen=True)
class EllipsoidHypergraph:
    vertices: list
    edges: list
    v: float
    sources: list = field(default_factory=list)

    @property
    def n_members(self) -> int:
        return len(self.edges)

    def to_json(self) -> dict:
        return {"v": self.v, "vertices": [E.to_json() for E in self.vertices],
                "edges": [list(e) for e in self.edges],
                "sources": [list(s) for s in self.sources]}


@dataclass(frozen=True)
class FractionalTransversal:
    value: float
    phi: np.ndarray


@dataclass(frozen=True)
class FractionalMatching:
    value: float
    m: np.ndarray


@dataclass(frozen=True)
class PQParams:
    p: int
    q: int
    d: int
    v_in: float
    v_out: float | None = None

    def __post_init__(self):
        if self.v_out is None:
            object.__setattr__(self, "v_out", self.v_in)
        if self.q < 1 or self.p < self.q:
            raise PreconditionError(f"need p >= q >= 1, got p = {self.p}, q = {self.q}")
        if not 0 < self.v_out <= self.v_in:
            raise PreconditionError("need 0 < v_out <= v_in")

    @classmethod
    def for_variant(cls, variant: str, p: int, d: int, v_in: float) -> "PQParams":
        if variant == "small":
            return cls(p, 3 * d + 1, d, v_in)
        if variant == "large":
            return cls(p, n_ellipsoid_params(d), d, v_in)
        raise PreconditionError(f"unknown variant {variant!r}")

    @property
    def p_tilde(self) -> int:
        return 3 * self.d * (self.p - 1) + 1


@dataclass(frozen=True)
class TransversalCertificate:
    net: list
    assignment: list
    H_achieved: int
    nu_star: float
    v_out: float
    variant: str
    eps: float
    iterations: int
    extras: dict = field(default_factory=dict)

    def verify(self, fam: ConvexFamily, tol: Tolerances = DEFAULT_TOL) -> bool:
        if len(self.assignment) != fam.n:
            return False
        for P, j in zip(fam.members, self.assignment):
            if not 0 <= j < len(self.net) or not ellipsoid_in_polytope(self.net[j], P, tol):
                return False
        return all(E.volume >= self.v_out * (1 - tol.vol_rel) for E in self.net)

    def to_json(self) -> dict:
        return {"variant": self.variant, "H_achieved": self.H_achieved, "nu_star": self.nu_star,
                "v_out": self.v_out, "eps": self.eps, "iterations": self.iterations,
                "net": [E.to_json() for E in self.net], "assignment": list(self.assignment),
                **self.extras}


# ---------------------------------------------------------------- hypergraph

def _subset_budget(n: int, kmax: int) -> int:
    return sum(math.comb(n, k) for k in range(1, kmax + 1))


def build_ellipsoid_hypergraph(fam: ConvexFamily, v: float, cfg: SolverConfig = DEFAULT_CFG,
                               tol: Tolerances = DEFAULT_TOL, max_size: int | None = None,
                               budget: int = TUPLE_BUDGET) -> EllipsoidHypergraph:
    """Lowest volume-``v`` ellipsoids of all admissible subfamilies, with containment edges.

    ``max_size`` defaults to ``d(d+3)/2 - 1``; pass ``fam.n`` for the full
    (exponential) vertex set.
    """
    n, d = fam.n, fam.dim
    kmax = n_ellipsoid_params(d) - 1 if max_size is None else max_size
    kmax = min(kmax, n)
    if _subset_budget(n, kmax) > budget:
        raise EnumerationBudgetExceeded(f"{_subset_budget(n, kmax)} subfamilies exceed {budget}")
    ws = Workspace(fam.members, cfg, tol)
    vertices: list = []
    sources: list = []
    done: set = set()

    def add(idx):
        key = ws.key(idx)
        if key in done:
            return
        done.add(key)
        E = ws.lowest(idx, v)
        for V in vertices:
            if V.close_to(E, DEDUP_TOL):
                return
        vertices.append(E)
        sources.append(tuple(idx))

    def rec(prefix, start):
        for j in range(start, n):
            cand = prefix + [j]
            if ws.good(cand, v):
                add(cand)
                if len(cand) < kmax:
                    rec(cand, j + 1)

    rec([], 0)
    edges = [[j for j, E in enumerate(vertices) if ellipsoid_in_polytope(E, P, tol)]
             for P in fam.members]
    return EllipsoidHypergraph(vertices, edges, float(v), sources)


def incidence(hg: EllipsoidHypergraph) -> np.ndarray:
    M = np.zeros((hg.n_members, len(hg.vertices)))
    for i, e in enumerate(hg.edges):
        M[i, e] = 1.0
    return M


def fractional_transversal_duality(hg: EllipsoidHypergraph):
    """Optimal fractional transversal and matching; their values agree by LP duality."""
    empty = [i for i, e in enumerate(hg.edges) if not e]
    if empty:
        raise InfeasibleEdge(f"member {empty[0]} contains no volume-{hg.v:g} ellipsoid")
    if not hg.edges:
        raise PreconditionError("hypergraph without edges")
    M = incidence(hg)
    nm, nv = M.shape
    tr = solve_lp(LPProblem(-np.ones(nv), [(row, GE, 1.0) for row in M]))
    mt = solve_lp(LPProblem(np.ones(nm), [(col, LE, 1.0) for col in M.T], [(0.0, 1.0)] * nm))
    if not (tr.optimal and mt.optimal):
        raise SolverStalled(f"transversal LP {tr.status.value}, matching LP {mt.status.value}")
    nu_t, nu_m = -tr.objective, mt.objective
    if abs(nu_t - nu_m) > DUALITY_RTOL * (1 + abs(nu_t)):
        raise CertificateFailure(f"duality gap: transversal {nu_t!r} vs matching {nu_m!r}")
    phi = np.maximum(tr.x, 0.0)
    m = np.clip(mt.x, 0.0, 1.0)
    return FractionalTransversal(float(nu_t), phi), FractionalMatching(float(nu_m), m)


def integral_transversal_number(hg: EllipsoidHypergraph) -> int:
    """Minimum number of vertices meeting every edge (breadth-first search over member masks)."""
    n = hg.n_members
    if n > 20:
        raise EnumerationBudgetExceeded("integral transversal search is limited to 20 members")
    if any(not e for e in hg.edges):
        raise TauInfinite("some member contains no vertex")
    cover = [0] * len(hg.vertices)
    for i, e in enumerate(hg.edges):
        for j in e:
            cover[j] |= 1 << i
    cover = sorted(set(cover))
    full = (1 << n) - 1
    dist = {0: 0}
    frontier = [0]
    while frontier:
        nxt = []
        for mask in frontier:
            for c in cover:
                m2 = mask | c
                if m2 not in dist:
                    dist[m2] = dist[mask] + 1
                    if m2 == full:
                        return dist[m2]
                    nxt.append(m2)
        frontier = nxt
    return dist.get(full, 0)


# ---------------------------------------------------------------- (p,q) hypothesis

def find_pq_violation(fam: ConvexFamily, p: int, q: int, v: float, cfg: SolverConfig = DEFAULT_CFG,
                      tol: Tolerances = DEFAULT_TOL, budget: int = TUPLE_BUDGET):
    """First ``p``-subset (lexicographic) without a good ``q``-subset, or ``None``."""
    n = fam.n
    if p > n:
        return None
    if math.comb(n, p) > budget:
        raise EnumerationBudgetExceeded(f"C({n},{p}) exceeds {budget}")
    ws = Workspace(fam.members, cfg, tol)
    good_masks = []

    def rec(prefix, start):
        if len(prefix) == q:
            good_masks.append(sum(1 << i for i in prefix))
            return
        for j in range(start, n):
            if ws.good(prefix + [j], v):
                rec(prefix + [j], j + 1)

    rec([], 0)
    for S in itertools.combinations(range(n), p):
        mask = sum(1 << i for i in S)
        if not any(g & ~mask == 0 for g in good_masks):
            return S
    return None


def check_pq_hypothesis(fam: ConvexFamily, params: PQParams, cfg: SolverConfig = DEFAULT_CFG,
                        tol: Tolerances = DEFAULT_TOL) -> bool:
    """Among any ``p`` members some ``q`` share an ellipsoid of volume ``v_in``."""
    bad = find_pq_violation(fam, params.p, params.q, params.v_in, cfg, tol)
    if bad is not None:
        log.info("(p,q) condition fails on members %s", list(bad))
    return bad is None


def _require_pq(fam, params, cfg, tol) -> None:
    bad = find_pq_violation(fam, params.p, params.q, params.v_in, cfg, tol)
    if bad is not None:
        raise HypothesisViolated(f"({params.p},{params.q}) condition at volume {params.v_in:g} "
                                 f"fails on members {list(bad)}")


# ---------------------------------------------------------------- bounded fractional transversal

@dataclass(frozen=True)
class VTransversalReport:
    nu_star: float
    beta_used: float
    v_out: float
    rounds: int
    multiset_size: int
    multiplicity_scale: int
    denominator: int
    p_tilde: int
    dichotomy: bool
    transversal: FractionalTransversal
    matching: FractionalMatching
    hypergraph: EllipsoidHypergraph
    qfh: QFHResult

    def __iter__(self):
        return iter((self.nu_star, self.beta_used))

    def to_json(self) -> dict:
        return {"nu_star": self.nu_star, "beta_used": self.beta_used, "v_out": self.v_out,
                "rounds": self.rounds, "multiset_size": self.multiset_size,
                "multiplicity_scale": self.multiplicity_scale, "denominator": self.denominator,
                "p_tilde": self.p_tilde, "dichotomy": self.dichotomy,
                "vertices": len(self.hypergraph.vertices)}


def _rational_matching(m: np.ndarray) -> tuple[list, int]:
    fr = [Fraction(float(x)).limit_denominator(MATCHING_DENOMINATOR) for x in m]
    D = 1
    for f in fr:
        D = D * f.denominator // math.gcd(D, f.denominator)
    return [int(f * D) for f in fr], D


def bounded_v_transversal(fam: ConvexFamily, params: PQParams, cfg: SolverConfig = DEFAULT_CFG,
                          tol: Tolerances = DEFAULT_TOL) -> VTransversalReport:
    """Fractional ``v_out``-transversal number with the multiset accounting ``nu* <= 1/beta``.

    An optimal rational matching ``m = m~/D`` becomes a multiset holding
    ``K m~(C)`` copies of each member, with ``K`` the least integer giving some
    member at least ``3d+1`` copies. Fractional Helly (small variant) on the
    multiset yields a witness in ``beta N`` copies. ``v_out`` starts at
    ``params.v_out`` and drops to the witness volume until the two agree.
    """
    d = fam.dim
    q = 3 * d + 1
    if params.q != q:
        raise PreconditionError(f"the small-variant accounting needs q = 3d+1 = {q}")
    _require_pq(fam, params, cfg, tol)
    v_out = params.v_out
    for rnd in range(1, MAX_V_ROUNDS + 1):
        hg = build_ellipsoid_hypergraph(fam, v_out, cfg, tol)
        ft, fm = fractional_transversal_duality(hg)
        mt, D = _rational_matching(fm.m)
        K = -(-q // max(mt))
        idx = [i for i, c in enumerate(mt) for _ in range(K * c)]
        N = len(idx)
        multi = ConvexFamily(tuple(fam.members[i] for i in idx), d, "matching-multiset")
        res = qfh_small(multi, params.v_in, cfg, tol)
        w = res.witness.volume
        if w >= v_out * (1 - tol.vol_rel):
            break
        log.info("round %d: witness volume %.6g below v_out %.6g; lowering v_out", rnd, w, v_out)
        v_out = w
    else:
        raise SolverStalled(f"v_out did not settle within {MAX_V_ROUNDS} rounds")
    beta = res.beta_achieved
    # p~ members of the multiset hold 3d+1 copies of one set or p distinct sets
    dichotomy = params.p_tilde > (q - 1) * (params.p - 1)
    if ft.value > (1 + 1e-9) / beta:
        raise CertificateFailure(f"nu* = {ft.value:.9g} exceeds 1/beta = {1 / beta:.9g}")
    return VTransversalReport(ft.value, beta, v_out, rnd, N, K, D, params.p_tilde, dichotomy,
                              ft, fm, hg, res)


# ---------------------------------------------------------------- piercing

def pq_piercing(fam: ConvexFamily, params: PQParams, variant: str = "small",
                cfg: SolverConfig = DEFAULT_CFG, tol: Tolerances = DEFAULT_TOL,
                strategy: str = "densest") -> TransversalCertificate:
    """Volume-``v_out`` ellipsoids piercing every member, via a weak epsilon-net.

    The net is built from the optimal fractional transversal ``phi`` scaled to
    weights ``phi / nu*`` with ``eps = 1 / nu*``. The small variant takes
    ``v_out`` from the bounded fractional transversal; the large one keeps
    ``v_out = v_in``. A member holding no volume-``v_out`` ellipsoid surfaces
    as ``TauInfinite``.
    """
    d = fam.dim
    expect = PQParams.for_variant(variant, params.p, d, params.v_in).q
    if params.q != expect:
        raise PreconditionError(f"variant {variant} needs q = {expect}, got {params.q}")
    extras: dict = {"p": params.p, "q": params.q, "v_in": params.v_in,
                    "tolerances": tol.as_dict(), "solver": cfg.as_dict()}
    try:
        if variant == "small":
            rep = bounded_v_transversal(fam, params, cfg, tol)
            hg, ft, v_out = rep.hypergraph, rep.transversal, rep.v_out
            extras.update(beta_used=rep.beta_used, p_tilde=rep.p_tilde, v_rounds=rep.rounds,
                          multiset_size=rep.multiset_size)
        else:
            _require_pq(fam, params, cfg, tol)
            v_out = params.v_in
            hg = build_ellipsoid_hypergraph(fam, v_out, cfg, tol)
            ft, _ = fractional_transversal_duality(hg)
    except InfeasibleEdge as exc:
        raise TauInfinite(str(exc)) from exc
    nu = ft.value
    w = ft.phi / ft.phi.sum()
    ms = EllipsoidMultiset(tuple(hg.vertices), v_out)
    wf = WeightedFamily(fam, ms, tuple(w))
    mass = incidence(hg) @ w
    eps = float(min(1.0 / nu, mass.min()))
    net: EpsNetResult = greedy_weak_epsilon_net(wf, eps, cfg, tol, strategy)
    extras.update(vertices=len(hg.vertices), greedy_bound=math.ceil(nu) if nu > 0 else 0,
                  strategy=strategy)
    cert = TransversalCertificate(net.net, net.assignment, len(net.net), nu, v_out, variant, eps,
                                  net.iterations, extras)
    if not cert.verify(fam, tol):
        raise CertificateFailure("piercing assignment failed re-verification")
    return cert
