"""Independent reference computations used by the tests."""
import itertools
import math

import numpy as np


def lp_max_by_vertices(c, A, b):
    """max c.x s.t. A x <= b by enumerating basic solutions (small dense problems)."""
    A = np.asarray(A, float)
    b = np.asarray(b, float)
    n = A.shape[1]
    best = -math.inf
    for rows in itertools.combinations(range(A.shape[0]), n):
        M = A[list(rows)]
        if abs(np.linalg.det(M)) < 1e-12:
            continue
        x = np.linalg.solve(M, b[list(rows)])
        if np.all(A @ x <= b + 1e-9):
            best = max(best, float(c @ x))
    return best


def fractional_transversal_oracle(incidence):
    """Minimum of sum(phi) with incidence @ phi >= 1, phi >= 0."""
    M = np.asarray(incidence, float)
    nv = M.shape[1]
    A = np.vstack([-M, -np.eye(nv)])
    b = np.concatenate([-np.ones(M.shape[0]), np.zeros(nv)])
    return -lp_max_by_vertices(-np.ones(nv), A, b)


def box_mvie_volume(lo, hi):
    """Axis-aligned box: the maximum inscribed ellipsoid has the half-widths as semi-axes."""
    w = (np.asarray(hi, float) - np.asarray(lo, float)) / 2
    if np.any(w <= 0):
        return 0.0
    d = len(w)
    return math.pi ** (d / 2) / math.gamma(d / 2 + 1) * float(np.prod(w))


def box_intersection(boxes, idx):
    lo = np.max([boxes[i][0] for i in idx], axis=0)
    hi = np.min([boxes[i][1] for i in idx], axis=0)
    return lo, hi


def steiner_inellipse_area(V):
    V = np.asarray(V, float)
    (x1, y1), (x2, y2) = V[1] - V[0], V[2] - V[0]
    tri = 0.5 * abs(x1 * y2 - x2 * y1)
    return math.pi * tri / (3 * math.sqrt(3))
