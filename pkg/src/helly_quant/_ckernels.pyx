# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled versions of the hot kernels (see _pykernels for the reference semantics)."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, log, fabs, INFINITY

cnp.import_array()

BACKEND = "cython"


cdef inline double _hull_at(const double[:] u, const double[:, :] C, const double[:, :, :] Bs, int d) noexcept nogil:
    cdef Py_ssize_t j, r, q
    cdef double best = -INFINITY
    cdef double lin, nrm, acc
    for j in range(C.shape[0]):
        lin = 0.0
        nrm = 0.0
        for r in range(d):
            lin += u[r] * C[j, r]
            acc = 0.0
            for q in range(d):
                acc += Bs[j, r, q] * u[q]
            nrm += acc * acc
        lin += sqrt(nrm)
        if lin > best:
            best = lin
    return best


def hull_support(U, C, Bs):
    cdef const double[:, :] Uv = np.ascontiguousarray(U, dtype=np.float64)
    cdef const double[:, :] Cv = np.ascontiguousarray(C, dtype=np.float64)
    cdef const double[:, :, :] Bv = np.ascontiguousarray(Bs, dtype=np.float64)
    cdef Py_ssize_t k, K = Uv.shape[0]
    cdef int d = Uv.shape[1]
    out = np.empty(K, dtype=np.float64)
    cdef double[:] ov = out
    with nogil:
        for k in range(K):
            ov[k] = _hull_at(Uv[k], Cv, Bv, d)
    return out


def support_gap_max(U, c, B, C, Bs):
    cdef const double[:, :] Uv = np.ascontiguousarray(U, dtype=np.float64)
    cdef const double[:] cv = np.ascontiguousarray(c, dtype=np.float64)
    cdef const double[:, :] Bv = np.ascontiguousarray(B, dtype=np.float64)
    cdef const double[:, :] Cv = np.ascontiguousarray(C, dtype=np.float64)
    cdef const double[:, :, :] Bsv = np.ascontiguousarray(Bs, dtype=np.float64)
    cdef Py_ssize_t k, r, q, K = Uv.shape[0]
    cdef int d = Uv.shape[1]
    cdef double best = -INFINITY, hE, acc, nrm, gap
    cdef Py_ssize_t best_k = 0
    with nogil:
        for k in range(K):
            hE = 0.0
            nrm = 0.0
            for r in range(d):
                hE += Uv[k, r] * cv[r]
                acc = 0.0
                for q in range(d):
                    acc += Bv[q, r] * Uv[k, q]
                nrm += acc * acc
            hE += sqrt(nrm)
            gap = hE - _hull_at(Uv[k], Cv, Bsv, d)
            if gap > best:
                best = gap
                best_k = k
    return int(best_k), float(best)


def barrier(x, A, b, double t, int mode, double logfloor, int d, bint derivs):
    cdef const double[:] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef const double[:, :] Av = np.ascontiguousarray(A, dtype=np.float64)
    cdef const double[:] bv = np.ascontiguousarray(b, dtype=np.float64)
    cdef Py_ssize_t m = Av.shape[0]
    cdef int nL = d * (d + 1) // 2
    cdef int nv = nL + d
    cdef int i, j, k, p, q, jj, kk
    cdef double L[4][4]
    cdef double w[4]
    cdef double what[4]
    cdef double gs[14]
    cdef int pj[10]
    cdef int pk[10]
    cdef double f = 0.0, nw, s, logdet = 0.0, gvol = 0.0, nr = 0.0, wgt, tmp
    if d > 4:
        raise ValueError("compiled barrier supports d <= 4")
    p = 0
    for j in range(d):
        for k in range(d):
            L[j][k] = 0.0
        for k in range(j + 1):
            L[j][k] = xv[p]
            pj[p] = j
            pk[p] = k
            p += 1
    for j in range(d):
        if L[j][j] <= 0.0:
            return (INFINITY, None, None) if derivs else INFINITY
        logdet += log(L[j][j])

    if mode != 0:
        gvol = logdet - logfloor
        if gvol <= 0.0:
            return (INFINITY, None, None) if derivs else INFINITY

    grad_arr = np.zeros(nv) if derivs else None
    H_arr = np.zeros((nv, nv)) if derivs else None
    cdef double[:] g
    cdef double[:, :] H
    if derivs:
        g = grad_arr
        H = H_arr

    for i in range(m):
        nw = 0.0
        for k in range(d):
            tmp = 0.0
            for j in range(k, d):
                tmp += Av[i, j] * L[j][k]
            w[k] = tmp
            nw += tmp * tmp
        nw = sqrt(nw)
        s = bv[i] - nw
        for k in range(d):
            s -= Av[i, k] * xv[nL + k]
        if s <= 0.0:
            return (INFINITY, None, None) if derivs else INFINITY
        f -= log(s)
        if not derivs:
            continue
        for k in range(d):
            what[k] = w[k] / nw
        for p in range(nL):
            gs[p] = -Av[i, pj[p]] * what[pk[p]] / s
        for k in range(d):
            gs[nL + k] = -Av[i, k] / s
        wgt = 1.0 / (s * nw)
        for p in range(nv):
            g[p] -= gs[p]
            for q in range(p + 1):
                tmp = gs[p] * gs[q]
                if p < nL and q < nL:
                    jj = pj[p]
                    kk = pj[q]
                    if pk[p] == pk[q]:
                        tmp += wgt * Av[i, jj] * Av[i, kk]
                    tmp -= wgt * Av[i, jj] * what[pk[p]] * Av[i, kk] * what[pk[q]]
                H[p, q] += tmp

    if mode == 0:
        f -= t * logdet
    else:
        nr = 0.0
        for k in range(d):
            nr += L[d - 1][k] * L[d - 1][k]
        nr = sqrt(nr)
        f += t * (xv[nL + d - 1] + nr) - log(gvol)

    if not derivs:
        return f

    cdef int base = (d - 1) * d // 2
    cdef int di, dk
    if mode == 0:
        for j in range(d):
            di = j * (j + 1) // 2 + j
            g[di] -= t / L[j][j]
            H[di, di] += t / (L[j][j] * L[j][j])
    else:
        for k in range(d):
            g[base + k] += t * L[d - 1][k] / nr
            for q in range(k + 1):
                tmp = -t * (L[d - 1][k] / nr) * (L[d - 1][q] / nr) / nr
                if q == k:
                    tmp += t / nr
                H[base + k, base + q] += tmp
        g[nL + d - 1] += t
        for j in range(d):
            di = j * (j + 1) // 2 + j
            g[di] -= 1.0 / (gvol * L[j][j])
            for k in range(j + 1):
                dk = k * (k + 1) // 2 + k
                tmp = 1.0 / (gvol * gvol * L[j][j] * L[k][k])
                if k == j:
                    tmp += 1.0 / (gvol * L[j][j] * L[j][j])
                H[di, dk] += tmp

    # mirror the lower triangle
    for p in range(nv):
        for q in range(p):
            H[q, p] = H[p, q]
    return f, grad_arr, H_arr


def first_min_seeds(tuples, int s, scores, binom, double rtol):
    cdef const long long[:, :] T = np.ascontiguousarray(tuples, dtype=np.int64)
    cdef const double[:] sc = np.ascontiguousarray(scores, dtype=np.float64)
    cdef const long long[:, :] bn = np.ascontiguousarray(binom, dtype=np.int64)
    cdef Py_ssize_t G = T.shape[0]
    cdef int k = T.shape[1]
    out = np.empty(G, dtype=np.int64)
    cdef long long[:] ov = out
    cdef int pos[16]
    cdef Py_ssize_t g
    cdef int i, r
    cdef long long rank, best_rank
    cdef double best, val
    if s > 16 or s > k:
        raise ValueError("seed size out of range")
    with nogil:
        for g in range(G):
            for i in range(s):
                pos[i] = i
            best_rank = -1
            best = INFINITY
            while True:
                rank = 0
                for i in range(s):
                    rank += bn[T[g, pos[i]], i + 1]
                val = sc[rank]
                if best_rank < 0 or val < best - rtol * fabs(best):
                    best = val
                    best_rank = rank
                # next combination in lexicographic order
                r = s - 1
                while r >= 0 and pos[r] == k - s + r:
                    r -= 1
                if r < 0:
                    break
                pos[r] += 1
                for i in range(r + 1, s):
                    pos[i] = pos[i - 1] + 1
            ov[g] = best_rank
    return out


def newton_direction(H, g):
    """Solve ``H dx = -g`` by Cholesky; ``None`` when ``H`` is not positive definite."""
    cdef const double[:, :] Hv = np.ascontiguousarray(H, dtype=np.float64)
    cdef const double[:] gv = np.ascontiguousarray(g, dtype=np.float64)
    cdef int n = Hv.shape[0]
    cdef int i, j, k
    cdef double acc
    cdef double C[16][16]
    cdef double y[16]
    if n > 16:
        raise ValueError("newton_direction supports at most 16 variables")
    out = np.empty(n, dtype=np.float64)
    cdef double[:] ov = out
    for j in range(n):
        acc = Hv[j, j]
        for k in range(j):
            acc -= C[j][k] * C[j][k]
        if acc <= 0.0:
            return None
        C[j][j] = sqrt(acc)
        for i in range(j + 1, n):
            acc = Hv[i, j]
            for k in range(j):
                acc -= C[i][k] * C[j][k]
            C[i][j] = acc / C[j][j]
    for i in range(n):
        acc = -gv[i]
        for k in range(i):
            acc -= C[i][k] * y[k]
        y[i] = acc / C[i][i]
    for i in range(n - 1, -1, -1):
        acc = y[i]
        for k in range(i + 1, n):
            acc -= C[k][i] * ov[k]
        ov[i] = acc / C[i][i]
    return out
