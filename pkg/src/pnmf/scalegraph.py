"""Weighted epsilon-graphs and their unnormalized Laplacians."""
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .numerics import frobenius_norm, sym_eigenvalues

DEFAULT_ALPHA = 1.5
NULLITY_TOL = 1e-8


@dataclass(frozen=True)
class ScaleGraph:
    epsilon: float
    alpha: float
    adjacency: np.ndarray
    degree: np.ndarray

    @property
    def laplacian(self):
        return np.diag(self.degree) - self.adjacency

    @property
    def n(self):
        return self.degree.size


def build_graph(dist, eps, alpha=DEFAULT_ALPHA):
    """Graph at scale ``eps``: ``A_ij = exp(-dist_ij^2 / eps^alpha)`` for ``i != j`` and ``dist_ij < eps``.

    Parameters
    ----------
    dist : (n, n) array
        Pairwise distances.
    eps : float
        Scale, > 0.
    alpha : float
        Decay exponent, > 0.
    """
    if not (eps > 0 and alpha > 0):
        raise ValidationError("eps and alpha must be positive")
    with np.errstate(over="ignore", under="ignore"):
        denom = float(np.power(float(eps), float(alpha)))
    if not np.isfinite(denom) or denom == 0.0:
        raise ValidationError(f"eps**alpha is not a usable positive number ({denom})")
    dist = np.asarray(dist, dtype=np.float64)
    mask = dist < eps
    np.fill_diagonal(mask, False)
    A = np.where(mask, np.exp(-(dist * dist) / denom), 0.0)
    # keep exact symmetry regardless of how dist was produced
    A = np.ascontiguousarray(np.triu(A, 1) + np.triu(A, 1).T)
    return ScaleGraph(epsilon=float(eps), alpha=float(alpha), adjacency=A, degree=A.sum(axis=1))


def graph_family(dist, scales, alpha=DEFAULT_ALPHA):
    return [build_graph(dist, e, alpha) for e in scales]


def nullity(L, tol=NULLITY_TOL):
    """Count of eigenvalues below ``tol * max(1, ||L||_F)``."""
    L = np.asarray(L, dtype=np.float64)
    if L.size == 0:
        return 0
    thr = tol * max(1.0, frobenius_norm(L))
    return int(np.sum(sym_eigenvalues(L) < thr))
