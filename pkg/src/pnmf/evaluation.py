"""Clustering of embeddings and agreement scores against reference labels."""
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import DegenerateInputError, ValidationError
from .numerics import frobenius_norm, pearson

KMEANS_MAX_ITER = 300
KMEANS_SHIFT_TOL = 1e-8


@dataclass
class KMeansResult:
    labels: np.ndarray
    inertia: float
    restart_inertias: list
    best_restart: int


@dataclass
class ClusteringReport:
    ari: float
    nmi: float
    purity: float
    accuracy: float
    k: int
    scale_index: Optional[int] = None

    @property
    def mean(self):
        return (self.ari + self.nmi + self.purity + self.accuracy) / 4.0


@dataclass
class IncrementReport:
    delta_eps: np.ndarray
    delta_L: np.ndarray
    delta_H: np.ndarray
    correlations: dict   # pair name -> PearsonResult, or the error message when degenerate


# ------------------------------------------------------------------ k-means

def _kmeanspp(X, k, rng):
    n = X.shape[0]
    centers = np.empty((k, X.shape[1]))
    centers[0] = X[rng.integers(n)]
    d2 = np.sum((X - centers[0]) ** 2, axis=1)
    for c in range(1, k):
        total = d2.sum()
        if total <= 0:
            idx = rng.integers(n)
        else:
            idx = int(np.searchsorted(np.cumsum(d2), rng.uniform(0, total), side="right"))
            idx = min(idx, n - 1)
        centers[c] = X[idx]
        d2 = np.minimum(d2, np.sum((X - centers[c]) ** 2, axis=1))
    return centers


def _sq_dists(X, C):
    return np.sum((X[:, None, :] - C[None, :, :]) ** 2, axis=2)


def _lloyd(X, centers):
    k = centers.shape[0]
    for _ in range(KMEANS_MAX_ITER):
        D = _sq_dists(X, centers)
        labels = np.argmin(D, axis=1)
        new = centers.copy()
        for c in range(k):
            members = labels == c
            if np.any(members):
                new[c] = X[members].mean(axis=0)
            else:
                # re-seed an empty cluster at the point farthest from its current center
                far = int(np.argmax(D[np.arange(X.shape[0]), labels]))
                new[c] = X[far]
                labels[far] = c
        shift = np.sqrt(np.max(np.sum((new - centers) ** 2, axis=1)))
        centers = new
        if shift < KMEANS_SHIFT_TOL:
            break
    D = _sq_dists(X, centers)
    labels = np.argmin(D, axis=1)
    inertia = float(np.sum(D[np.arange(X.shape[0]), labels]))
    return labels, inertia


def kmeans(points, k, restarts=10, seed=0, return_details=False):
    """Lloyd's k-means from ``restarts`` k-means++ seedings; keeps the lowest-inertia run.

    Ties in inertia go to the earliest restart.
    """
    X = np.asarray(points, dtype=np.float64)
    if X.ndim != 2:
        raise ValidationError("points must be an (n, d) array")
    n = X.shape[0]
    if not 1 <= k <= n:
        raise ValidationError(f"k must be in [1, {n}], got {k}")
    children = np.random.SeedSequence(seed).spawn(restarts)
    best = None
    inertias = []
    for r, child in enumerate(children):
        labels, inertia = _lloyd(X, _kmeanspp(X, k, np.random.default_rng(child)))
        inertias.append(inertia)
        if best is None or inertia < best[1]:
            best = (labels, inertia, r)
    res = KMeansResult(labels=best[0], inertia=best[1], restart_inertias=inertias, best_restart=best[2])
    return res if return_details else res.labels


# ------------------------------------------------------------------ metrics

def contingency(truth, pred):
    truth = np.asarray(truth)
    pred = np.asarray(pred)
    if truth.shape != pred.shape or truth.ndim != 1 or truth.size < 1:
        raise ValidationError("label vectors must be 1-D with equal nonzero length")
    _, ti = np.unique(truth, return_inverse=True)
    _, pi = np.unique(pred, return_inverse=True)
    M = np.zeros((ti.max() + 1, pi.max() + 1), dtype=np.int64)
    np.add.at(M, (ti, pi), 1)
    return M


def _comb2(x):
    x = np.asarray(x, dtype=np.float64)
    return x * (x - 1.0) / 2.0


def ari(truth, pred):
    M = contingency(truth, pred)
    n = M.sum()
    index = _comb2(M).sum()
    a = _comb2(M.sum(axis=1)).sum()
    b = _comb2(M.sum(axis=0)).sum()
    total = _comb2(n)
    expected = a * b / total if total > 0 else 0.0
    max_index = 0.5 * (a + b)
    if max_index == expected:
        # both partitions trivial in the same way; agreement is perfect
        return 1.0
    return float((index - expected) / (max_index - expected))


def _entropy(counts):
    p = counts[counts > 0] / counts.sum()
    return float(-np.sum(p * np.log(p)))


def nmi(truth, pred):
    """``2 I(C; L) / (H(C) + H(L))``; 0 when either labeling has one class."""
    M = contingency(truth, pred)
    if M.shape[0] < 2 or M.shape[1] < 2:
        return 0.0
    n = M.sum()
    pij = M / n
    pi = pij.sum(axis=1, keepdims=True)
    pj = pij.sum(axis=0, keepdims=True)
    nz = pij > 0
    mi = float(np.sum(pij[nz] * np.log(pij[nz] / (pi @ pj)[nz])))
    h = _entropy(M.sum(axis=1)) + _entropy(M.sum(axis=0))
    return float(min(1.0, max(0.0, 2.0 * mi / h)))


def purity(truth, pred):
    M = contingency(truth, pred)
    return float(M.max(axis=0).sum() / M.sum())


def accuracy(truth, pred):
    """Fraction matched after an optimal one-to-one relabeling of ``pred`` (Hungarian on -contingency)."""
    M = contingency(truth, pred)
    rows, cols = linear_sum_assignment(-M)
    return float(M[rows, cols].sum() / M.sum())


def score(truth, pred, scale_index=None):
    return ClusteringReport(
        ari=ari(truth, pred), nmi=nmi(truth, pred), purity=purity(truth, pred),
        accuracy=accuracy(truth, pred), k=int(len(np.unique(pred))), scale_index=scale_index,
    )


# ------------------------------------------------------------------- sweeps

def _embeddings(factors_or_H):
    if hasattr(factors_or_H, "pairs"):
        return [pr.H for pr in factors_or_H.pairs]
    return list(factors_or_H)


def sweep_scales(factors, truth, k, restarts=10, seed=0):
    """Cluster every per-scale embedding and score it.

    ``factors`` is a :class:`~pnmf.solver.MultiScaleFactors` or a list of
    ``H_t`` arrays (d, n). Returns ``(reports, best_index)`` with best chosen
    by mean score, ties to the smallest index.
    """
    truth = np.asarray(truth)
    reports = []
    for t, H in enumerate(_embeddings(factors)):
        if H.shape[1] != truth.size:
            raise ValidationError(f"labels have length {truth.size} but embeddings have {H.shape[1]} samples")
        labels = kmeans(H.T, k, restarts=restarts, seed=seed)
        reports.append(score(truth, labels, scale_index=t))
    means = [r.mean for r in reports]
    best = int(np.argmax(means))  # argmax returns the first maximum
    return reports, best


def increment_analysis(factors, graphs, scales):
    """Consecutive-scale increments of eps, L and H, and their pairwise Pearson correlations."""
    Hs = _embeddings(factors)
    eps = np.asarray(getattr(scales, "scales", scales), dtype=np.float64)
    if len(Hs) != eps.size or len(graphs) != eps.size:
        raise ValidationError("factors, graphs and scales must have equal length")
    if eps.size < 4:
        raise ValidationError("increment analysis needs at least 4 scales")
    d_eps = np.abs(np.diff(eps))
    d_L = np.array([frobenius_norm(graphs[t].laplacian - graphs[t - 1].laplacian) for t in range(1, eps.size)])
    d_H = np.array([frobenius_norm(Hs[t] - Hs[t - 1]) for t in range(1, eps.size)])
    corr = {}
    for name, (a, b) in {"eps-L": (d_eps, d_L), "L-H": (d_L, d_H), "eps-H": (d_eps, d_H)}.items():
        try:
            corr[name] = pearson(a, b)
        except DegenerateInputError as exc:
            corr[name] = str(exc)
    return IncrementReport(delta_eps=d_eps, delta_L=d_L, delta_H=d_H, correlations=corr)
