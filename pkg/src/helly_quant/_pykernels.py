"""Pure-Python/numpy implementations of the hot kernels.

Semantics match ``_ckernels.pyx`` exactly; the compiled module is preferred
when it imports.
"""
from __future__ import annotations

import itertools
import math

import numpy as np

BACKEND = "python"


def hull_support(U, C, Bs):
    """``h(u) = max_j u.c_j + |B_j u|`` for each row ``u`` of ``U``."""
    U = np.ascontiguousarray(U, dtype=float)
    lin = U @ C.T                                   # (K, m)
    quad = np.linalg.norm(np.einsum("kd,jed->kje", U, Bs), axis=2)
    return (lin + quad).max(axis=1)


def support_gap_max(U, c, B, C, Bs):
    """Index and value of ``max_k h_E(u_k) - h_hull(u_k)``."""
    U = np.ascontiguousarray(U, dtype=float)
    hE = U @ c + np.linalg.norm(U @ B, axis=1)
    gap = hE - hull_support(U, C, Bs)
    k = int(np.argmax(gap))
    return k, float(gap[k])


def _packed_index(d):
    pj, pk = [], []
    for j in range(d):
        for k in range(j + 1):
            pj.append(j)
            pk.append(k)
    return np.array(pj), np.array(pk)


_PACK_CACHE: dict = {}


def _pack(d):
    if d not in _PACK_CACHE:
        pj, pk = _packed_index(d)
        diag = np.array([j * (j + 1) // 2 + j for j in range(d)])
        last = np.array([(d - 1) * d // 2 + k for k in range(d)])
        _PACK_CACHE[d] = (pj, pk, diag, last)
    return _PACK_CACHE[d]


def barrier(x, A, b, t, mode, logfloor, d, derivs):
    """Log-barrier objective for the inscribed-ellipsoid programs.

    ``x`` packs a lower-triangular factor ``L`` (row-major, ``k <= j``) followed
    by the center ``c``. Constraints are ``|L^T a_i| + a_i.c <= b_i``.
    mode 0 minimizes ``-t log det L``; mode 1 minimizes ``t * height`` with the
    extra barrier ``log det L > logfloor``. Returns ``inf`` outside the domain;
    with ``derivs`` also returns gradient and Hessian.
    """
    pj, pk, diag_idx, last_idx = _pack(d)
    nL = pj.shape[0]
    nv = nL + d
    L = np.zeros((d, d))
    L[pj, pk] = x[:nL]
    c = x[nL:]
    dg = x[diag_idx]
    if np.any(dg <= 0):
        return (math.inf, None, None) if derivs else math.inf
    W = A @ L
    nw = np.sqrt((W * W).sum(axis=1))
    s = b - A @ c - nw
    if np.any(s <= 0):
        return (math.inf, None, None) if derivs else math.inf
    f = -np.log(s).sum()
    logdet = np.log(dg).sum()
    if mode == 0:
        f -= t * logdet
    else:
        g_vol = logdet - logfloor
        if g_vol <= 0:
            return (math.inf, None, None) if derivs else math.inf
        r = x[last_idx]
        nr = math.sqrt(float(r @ r))
        f += t * (c[d - 1] + nr) - math.log(g_vol)
    if not derivs:
        return float(f)

    What = W / nw[:, None]
    G = np.empty((A.shape[0], nv))
    G[:, :nL] = -A[:, pj] * What[:, pk]
    G[:, nL:] = -A
    inv_s = 1.0 / s
    grad = -(G.T @ inv_s)
    Gs = G * inv_s[:, None]
    H = Gs.T @ Gs
    wgt = inv_s / nw
    Aj = A[:, pj]
    Wk = What[:, pk]
    delta = (pk[:, None] == pk[None, :]).astype(float)
    HL = np.einsum("i,ip,iq->pq", wgt, Aj, Aj) * delta - np.einsum("i,ip,iq->pq", wgt, Aj * Wk, Aj * Wk)
    H[:nL, :nL] += HL

    if mode == 0:
        grad[diag_idx] -= t / dg
        H[diag_idx, diag_idx] += t / dg ** 2
    else:
        rh = r / nr
        grad[last_idx] += t * rh
        grad[nL + d - 1] += t
        H[np.ix_(last_idx, last_idx)] += t * (np.eye(d) - np.outer(rh, rh)) / nr
        inv_dg = 1.0 / dg
        grad[diag_idx] -= inv_dg / g_vol
        H[np.ix_(diag_idx, diag_idx)] += np.outer(inv_dg, inv_dg) / g_vol ** 2
        H[diag_idx, diag_idx] += inv_dg ** 2 / g_vol
    return float(f), grad, H


def colex_rank(subset, binom):
    return sum(int(binom[c, i + 1]) for i, c in enumerate(subset))


def first_min_seeds(tuples, s, scores, binom, rtol):
    """Per sorted tuple, colex rank of its lex-first ``s``-subset of minimal score.

    A later subset replaces the incumbent only when its score is smaller by more
    than ``rtol`` relative, so near-ties resolve to the lexicographically first.
    """
    tuples = np.asarray(tuples, dtype=np.int64)
    out = np.empty(tuples.shape[0], dtype=np.int64)
    for g, tup in enumerate(tuples):
        best = math.inf
        best_rank = -1
        for sub in itertools.combinations(tup, s):
            rank = colex_rank(sub, binom)
            sc = scores[rank]
            if best_rank < 0 or sc < best - rtol * abs(best):
                best = sc
                best_rank = rank
        out[g] = best_rank
    return out


def newton_direction(H, g):
    """Solve ``H dx = -g`` by Cholesky; ``None`` when ``H`` is not positive definite."""
    try:
        C = np.linalg.cholesky(H)
    except np.linalg.LinAlgError:
        return None
    y = np.linalg.solve(C, -g)
    return np.linalg.solve(C.T, y)
