"""Pure numpy implementations of the hot kernels.

Same signatures and return contracts as the compiled ``pnmf._kernels``.
Results agree with the compiled versions to rounding, not bitwise.
"""
import numpy as np


def _round_robin_pairs(n):
    """Disjoint (p, q) pairings of a round-robin tournament; covers every pair once."""
    m = n + (n % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        ps, qs = [], []
        for k in range(m // 2):
            a, b = players[k], players[m - 1 - k]
            if a < n and b < n:
                ps.append(min(a, b))
                qs.append(max(a, b))
        rounds.append((np.array(ps, dtype=np.intp), np.array(qs, dtype=np.intp)))
        players = [players[0]] + [players[-1]] + players[1:-1]
    return rounds


def jacobi_eigh(M, tol, max_sweeps, want_vectors):
    """Cyclic Jacobi with round-robin ordering, one vectorized batch of disjoint rotations per round."""
    A = np.array(M, dtype=np.float64, copy=True)
    n = A.shape[0]
    V = np.eye(n)
    threshold = tol * np.sqrt(np.sum(A * A))
    rounds = _round_robin_pairs(n) if n > 1 else []
    sweep = 0
    converged = False
    while True:
        off = np.sqrt(2.0 * np.sum(np.triu(A, 1) ** 2))
        if off <= threshold:
            converged = True
            break
        if sweep >= max_sweeps:
            break
        sweep += 1
        for ps, qs in rounds:
            if ps.size == 0:
                continue
            apq = A[ps, qs]
            active = apq != 0.0
            if not np.any(active):
                continue
            ps, qs, apq = ps[active], qs[active], apq[active]
            theta = (A[qs, qs] - A[ps, ps]) / (2.0 * apq)
            t = 1.0 / (np.abs(theta) + np.sqrt(theta * theta + 1.0))
            t = np.where(theta < 0.0, -t, t)
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c
            # disjoint pairs commute, so the whole round is one orthogonal J
            colp, colq = A[:, ps].copy(), A[:, qs].copy()
            A[:, ps] = c * colp - s * colq
            A[:, qs] = s * colp + c * colq
            rowp, rowq = A[ps, :].copy(), A[qs, :].copy()
            A[ps, :] = c[:, None] * rowp - s[:, None] * rowq
            A[qs, :] = s[:, None] * rowp + c[:, None] * rowq
            A[ps, qs] = 0.0
            A[qs, ps] = 0.0
            if want_vectors:
                vp, vq = V[:, ps].copy(), V[:, qs].copy()
                V[:, ps] = c * vp - s * vq
                V[:, qs] = s * vp + c * vq
    return np.diag(A).copy(), (V if want_vectors else None), sweep, float(off), converged


def _find(parent, x):
    while parent[x] != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


def kruskal_weights(n, ei, ej, w):
    parent = list(range(n))
    rank = [0] * n
    out = []
    for a, b, wt in zip(ei.tolist(), ej.tolist(), w.tolist()):
        if len(out) == n - 1:
            break
        ra, rb = _find(parent, a), _find(parent, b)
        if ra == rb:
            continue
        if rank[ra] < rank[rb]:
            ra, rb = rb, ra
        parent[rb] = ra
        if rank[ra] == rank[rb]:
            rank[ra] += 1
        out.append(wt)
    return np.array(out, dtype=np.float64)


def count_components(n, ei, ej):
    parent = list(range(n))
    rank = [0] * n
    comps = n
    for a, b in zip(ei.tolist(), ej.tolist()):
        ra, rb = _find(parent, a), _find(parent, b)
        if ra == rb:
            continue
        if rank[ra] < rank[rb]:
            ra, rb = rb, ra
        parent[rb] = ra
        if rank[ra] == rank[rb]:
            rank[ra] += 1
        comps -= 1
    return comps


def _f(X, W, H, HL, Hprev, Hnext, has_prev, has_next, lam1, lam2, lam3):
    R = X - W @ H
    val = np.sum(R * R) + lam1 * np.sum(H * HL) + lam3 * np.sum(H * H)
    if has_prev:
        val += lam2 * np.sum((H - Hprev) ** 2)
    if has_next:
        val += lam2 * np.sum((Hnext - H) ** 2)
    return float(val)


def mu_subproblem(X, W0, H0, A, deg, Hprev, Hnext, has_prev, has_next,
                  lam1, lam2, lam3, mu, nu, tol, max_inner):
    W = np.array(W0, dtype=np.float64, copy=True)
    H = np.array(H0, dtype=np.float64, copy=True)
    hcoef = lam2 * (int(has_prev) + int(has_next)) + lam3
    nbsum = np.zeros_like(H)
    if has_prev:
        nbsum += Hprev
    if has_next:
        nbsum += Hnext

    HA = H @ A
    HL = H * deg - HA
    f_old = _f(X, W, H, HL, Hprev, Hnext, has_prev, has_next, lam1, lam2, lam3)
    trace = []
    it = 0
    while it < max_inner:
        WtW = W.T @ W
        num = W.T @ X + lam1 * HA + lam2 * nbsum
        grad = 2.0 * (WtW @ H + lam1 * H * deg + hcoef * H - num)
        Hbar = np.where((grad < 0.0) & (H < mu), mu, H)
        den = 2.0 * (WtW @ Hbar + lam1 * Hbar * deg + hcoef * Hbar) + nu
        extra = WtW @ (Hbar - H)
        H = np.where(grad >= 0.0, H * (2.0 * (num + extra) + nu) / den, H - Hbar * grad / den)
        HA = H @ A
        HL = H * deg - HA
        trace.append(_f(X, W, H, HL, Hprev, Hnext, has_prev, has_next, lam1, lam2, lam3))

        HHt = H @ H.T
        XHt = X @ H.T
        gradW = 2.0 * (W @ HHt - XHt)
        Wbar = np.where((gradW < 0.0) & (W < mu), mu, W)
        denW = 2.0 * (Wbar @ HHt) + nu
        extraW = (Wbar - W) @ HHt
        W = np.where(gradW >= 0.0, W * (2.0 * (XHt + extraW) + nu) / denW, W - Wbar * gradW / denW)
        f_new = _f(X, W, H, HL, Hprev, Hnext, has_prev, has_next, lam1, lam2, lam3)
        trace.append(f_new)
        it += 1
        rel = abs(f_old - f_new) / f_old if f_old > 0.0 else abs(f_old - f_new)
        f_old = f_new
        if rel < tol:
            break
    return W, H, np.array(trace, dtype=np.float64), it
