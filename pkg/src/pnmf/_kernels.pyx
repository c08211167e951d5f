# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops.

Every function here has a numpy twin in :mod:`pnmf._fallback` with the same
signature and return contract; :mod:`pnmf.kernels` picks one at import time.
"""
import numpy as np

from libc.math cimport fabs, sqrt


def jacobi_eigh(double[:, ::1] M, double tol, int max_sweeps, bint want_vectors):
    """Cyclic-by-row Jacobi eigenvalue iteration.

    Returns ``(eigenvalues_unsorted, V_or_None, sweeps, off_norm, converged)``.
    """
    cdef Py_ssize_t n = M.shape[0]
    cdef Py_ssize_t p, q, k
    cdef double apq, theta, t, c, s, akp, akq, fro, off, threshold
    cdef int sweep = 0
    cdef bint converged = False

    A_arr = np.array(M, dtype=np.float64, copy=True, order="C")
    cdef double[:, ::1] A = A_arr
    V_arr = np.eye(n, dtype=np.float64)
    cdef double[:, ::1] V = V_arr

    fro = 0.0
    for p in range(n):
        for q in range(n):
            fro += A[p, q] * A[p, q]
    fro = sqrt(fro)
    threshold = tol * fro

    while True:
        off = 0.0
        for p in range(n):
            for q in range(p + 1, n):
                off += A[p, q] * A[p, q]
        off = sqrt(2.0 * off)
        if off <= threshold:
            converged = True
            break
        if sweep >= max_sweeps:
            break
        sweep += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = 1.0 / (fabs(theta) + sqrt(theta * theta + 1.0))
                if theta < 0.0:
                    t = -t
                c = 1.0 / sqrt(t * t + 1.0)
                s = t * c
                for k in range(n):
                    akp = A[k, p]
                    akq = A[k, q]
                    A[k, p] = c * akp - s * akq
                    A[k, q] = s * akp + c * akq
                for k in range(n):
                    akp = A[p, k]
                    akq = A[q, k]
                    A[p, k] = c * akp - s * akq
                    A[q, k] = s * akp + c * akq
                A[p, q] = 0.0
                A[q, p] = 0.0
                if want_vectors:
                    for k in range(n):
                        akp = V[k, p]
                        akq = V[k, q]
                        V[k, p] = c * akp - s * akq
                        V[k, q] = s * akp + c * akq

    w = np.empty(n, dtype=np.float64)
    for p in range(n):
        w[p] = A[p, p]
    return w, (V_arr if want_vectors else None), sweep, off, converged


cdef inline Py_ssize_t _find(Py_ssize_t[::1] parent, Py_ssize_t x) noexcept nogil:
    while parent[x] != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


def kruskal_weights(Py_ssize_t n, Py_ssize_t[::1] ei, Py_ssize_t[::1] ej, double[::1] w):
    """MST edge weights from edges already sorted by ascending weight."""
    cdef Py_ssize_t m = ei.shape[0]
    cdef Py_ssize_t e, ri, rj, taken = 0
    parent_arr = np.arange(n, dtype=np.intp)
    rank_arr = np.zeros(n, dtype=np.intp)
    out_arr = np.empty(max(n - 1, 0), dtype=np.float64)
    cdef Py_ssize_t[::1] parent = parent_arr
    cdef Py_ssize_t[::1] rank = rank_arr
    cdef double[::1] out = out_arr
    for e in range(m):
        if taken == n - 1:
            break
        ri = _find(parent, ei[e])
        rj = _find(parent, ej[e])
        if ri == rj:
            continue
        if rank[ri] < rank[rj]:
            ri, rj = rj, ri
        parent[rj] = ri
        if rank[ri] == rank[rj]:
            rank[ri] += 1
        out[taken] = w[e]
        taken += 1
    return out_arr[:taken]


def count_components(Py_ssize_t n, Py_ssize_t[::1] ei, Py_ssize_t[::1] ej):
    """Number of connected components of the graph on n vertices with the given edges."""
    cdef Py_ssize_t m = ei.shape[0]
    cdef Py_ssize_t e, ri, rj, comps = n
    parent_arr = np.arange(n, dtype=np.intp)
    rank_arr = np.zeros(n, dtype=np.intp)
    cdef Py_ssize_t[::1] parent = parent_arr
    cdef Py_ssize_t[::1] rank = rank_arr
    for e in range(m):
        ri = _find(parent, ei[e])
        rj = _find(parent, ej[e])
        if ri == rj:
            continue
        if rank[ri] < rank[rj]:
            ri, rj = rj, ri
        parent[rj] = ri
        if rank[ri] == rank[rj]:
            rank[ri] += 1
        comps -= 1
    return comps


cdef double _subobjective_parts(
    double[:, ::1] X, double[:, ::1] W, double[:, ::1] H, double[:, ::1] HL,
    double[:, ::1] Hp, double[:, ::1] Hn, bint has_prev, bint has_next,
    double lam1, double lam2, double lam3, double[:, ::1] R,
) noexcept nogil:
    """Fills R = X - W H and returns f_t(W, H) using a precomputed HL = H L."""
    cdef Py_ssize_t p = X.shape[0], n = X.shape[1], d = W.shape[1]
    cdef Py_ssize_t i, j, a
    cdef double s, fit = 0.0, geo = 0.0, smooth = 0.0, anchor = 0.0, diff
    for i in range(p):
        for j in range(n):
            s = X[i, j]
            for a in range(d):
                s -= W[i, a] * H[a, j]
            R[i, j] = s
            fit += s * s
    for a in range(d):
        for j in range(n):
            geo += H[a, j] * HL[a, j]
            anchor += H[a, j] * H[a, j]
            if has_prev:
                diff = H[a, j] - Hp[a, j]
                smooth += diff * diff
            if has_next:
                diff = Hn[a, j] - H[a, j]
                smooth += diff * diff
    return fit + lam1 * geo + lam2 * smooth + lam3 * anchor


cdef void _laplacian_product(
    double[:, ::1] H, double[:, ::1] A, double[::1] deg, double[:, ::1] HA, double[:, ::1] HL
) noexcept nogil:
    cdef Py_ssize_t d = H.shape[0], n = H.shape[1]
    cdef Py_ssize_t a, k, j
    cdef double h
    for a in range(d):
        for j in range(n):
            HA[a, j] = 0.0
        for k in range(n):
            h = H[a, k]
            if h != 0.0:
                for j in range(n):
                    HA[a, j] += h * A[k, j]
        for j in range(n):
            HL[a, j] = H[a, j] * deg[j] - HA[a, j]


def mu_subproblem(
    double[:, ::1] X, double[:, ::1] W0, double[:, ::1] H0,
    double[:, ::1] A, double[::1] deg,
    double[:, ::1] Hprev, double[:, ::1] Hnext, bint has_prev, bint has_next,
    double lam1, double lam2, double lam3, double mu, double nu,
    double tol, int max_inner,
):
    """Inner loop of the modified multiplicative updates for one scale.

    Returns ``(W, H, trace, n_iter)``; ``trace`` holds f_t after
    every half-step (H update, then W update).
    """
    cdef Py_ssize_t p = X.shape[0], n = X.shape[1], d = W0.shape[1]
    cdef Py_ssize_t i, j, a, b
    cdef double s, g, hb, wb, den, num, extra, f_old, f_half, f_new, rel
    cdef double nb = (<double>has_prev) + (<double>has_next)
    cdef double hcoef = lam2 * nb + lam3
    cdef int it = 0

    W_arr = np.array(W0, dtype=np.float64, copy=True, order="C")
    H_arr = np.array(H0, dtype=np.float64, copy=True, order="C")
    cdef double[:, ::1] W = W_arr
    cdef double[:, ::1] H = H_arr
    cdef double[:, ::1] Hnew = np.empty((d, n), dtype=np.float64)
    cdef double[:, ::1] WtW = np.empty((d, d), dtype=np.float64)
    cdef double[:, ::1] WtX = np.empty((d, n), dtype=np.float64)
    cdef double[:, ::1] HA = np.empty((d, n), dtype=np.float64)
    cdef double[:, ::1] HL = np.empty((d, n), dtype=np.float64)
    cdef double[:, ::1] Hbar = np.empty((d, n), dtype=np.float64)
    cdef double[:, ::1] Grad = np.empty((d, n), dtype=np.float64)
    cdef double[:, ::1] HHt = np.empty((d, d), dtype=np.float64)
    cdef double[:, ::1] XHt = np.empty((p, d), dtype=np.float64)
    cdef double[:, ::1] Wbar = np.empty((p, d), dtype=np.float64)
    cdef double[:, ::1] GradW = np.empty((p, d), dtype=np.float64)
    cdef double[:, ::1] R = np.empty((p, n), dtype=np.float64)
    trace = np.empty(2 * max(max_inner, 0), dtype=np.float64)
    cdef double[::1] tr = trace

    with nogil:
        _laplacian_product(H, A, deg, HA, HL)
        f_old = _subobjective_parts(X, W, H, HL, Hprev, Hnext, has_prev, has_next,
                                    lam1, lam2, lam3, R)
        f_new = f_old
        while it < max_inner:
            # ---- H half-step
            for a in range(d):
                for b in range(d):
                    s = 0.0
                    for i in range(p):
                        s += W[i, a] * W[i, b]
                    WtW[a, b] = s
            for a in range(d):
                for j in range(n):
                    WtX[a, j] = 0.0
            for i in range(p):
                for a in range(d):
                    s = W[i, a]
                    if s != 0.0:
                        for j in range(n):
                            WtX[a, j] += s * X[i, j]
            for a in range(d):
                for j in range(n):
                    s = 0.0
                    for b in range(d):
                        s += WtW[a, b] * H[b, j]
                    num = WtX[a, j] + lam1 * HA[a, j]
                    if has_prev:
                        num += lam2 * Hprev[a, j]
                    if has_next:
                        num += lam2 * Hnext[a, j]
                    # s + ... is the positive part, num the negative part of grad / 2
                    Grad[a, j] = 2.0 * (s + lam1 * H[a, j] * deg[j] + hcoef * H[a, j] - num)
                    hb = H[a, j]
                    if Grad[a, j] < 0.0 and hb < mu:
                        hb = mu
                    Hbar[a, j] = hb
            for a in range(d):
                for j in range(n):
                    s = 0.0
                    extra = 0.0
                    for b in range(d):
                        s += WtW[a, b] * Hbar[b, j]
                        extra += WtW[a, b] * (Hbar[b, j] - H[b, j])
                    den = 2.0 * (s + lam1 * Hbar[a, j] * deg[j] + hcoef * Hbar[a, j]) + nu
                    g = Grad[a, j]
                    if g >= 0.0:
                        # H - H*g/den rewritten as a ratio of nonnegative terms
                        num = WtX[a, j] + lam1 * HA[a, j]
                        if has_prev:
                            num += lam2 * Hprev[a, j]
                        if has_next:
                            num += lam2 * Hnext[a, j]
                        Hnew[a, j] = H[a, j] * (2.0 * (num + extra) + nu) / den
                    else:
                        Hnew[a, j] = H[a, j] - Hbar[a, j] * g / den
            for a in range(d):
                for j in range(n):
                    H[a, j] = Hnew[a, j]
            _laplacian_product(H, A, deg, HA, HL)
            f_half = _subobjective_parts(X, W, H, HL, Hprev, Hnext, has_prev, has_next,
                                         lam1, lam2, lam3, R)
            tr[2 * it] = f_half

            # ---- W half-step
            for a in range(d):
                for b in range(d):
                    s = 0.0
                    for j in range(n):
                        s += H[a, j] * H[b, j]
                    HHt[a, b] = s
            for i in range(p):
                for a in range(d):
                    s = 0.0
                    for j in range(n):
                        s += X[i, j] * H[a, j]
                    XHt[i, a] = s
            for i in range(p):
                for a in range(d):
                    s = 0.0
                    for b in range(d):
                        s += W[i, b] * HHt[b, a]
                    GradW[i, a] = 2.0 * (s - XHt[i, a])
                    wb = W[i, a]
                    if GradW[i, a] < 0.0 and wb < mu:
                        wb = mu
                    Wbar[i, a] = wb
            for i in range(p):
                for a in range(d):
                    s = 0.0
                    extra = 0.0
                    for b in range(d):
                        s += Wbar[i, b] * HHt[b, a]
                        extra += (Wbar[i, b] - W[i, b]) * HHt[b, a]
                    den = 2.0 * s + nu
                    g = GradW[i, a]
                    if g >= 0.0:
                        GradW[i, a] = W[i, a] * (2.0 * (XHt[i, a] + extra) + nu) / den
                    else:
                        GradW[i, a] = W[i, a] - Wbar[i, a] * g / den
            for i in range(p):
                for a in range(d):
                    W[i, a] = GradW[i, a]
            f_new = _subobjective_parts(X, W, H, HL, Hprev, Hnext, has_prev, has_next,
                                        lam1, lam2, lam3, R)
            tr[2 * it + 1] = f_new
            it += 1
            if f_old > 0.0:
                rel = fabs(f_old - f_new) / f_old
            else:
                rel = fabs(f_old - f_new)
            f_old = f_new
            if rel < tol:
                break

    return W_arr, H_arr, trace[: 2 * it].copy(), it
