"""0-dimensional Vietoris-Rips persistence and the scale sets derived from it.

Edges use the strict rule ``dist < eps`` throughout, so with this convention
the connectivity count is left-continuous in ``eps``: at ``eps == d_t`` the
t-th merge has not happened yet.
"""
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import EmptyInputError, ValidationError

DEFAULT_MARGIN = 0.05
TIE_RTOL = 1e-12


@dataclass(frozen=True)
class PersistenceDiagramH0:
    """Death times of the H0 classes; every class is born at 0.

    ``deaths`` has one entry per point, ascending, and ends with
    ``delta_max`` standing in for the essential class.
    """

    deaths: np.ndarray
    delta_max: float

    def __len__(self):
        return self.deaths.size


@dataclass(frozen=True)
class ScaleSet:
    scales: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.scales, dtype=np.float64)
        if s.ndim != 1 or s.size == 0:
            raise ValidationError("a scale set needs at least one scale")
        if np.any(s <= 0) or np.any(np.diff(s) <= 0):
            raise ValidationError("scales must be positive and strictly increasing")
        object.__setattr__(self, "scales", s)

    def __len__(self):
        return self.scales.size

    def __iter__(self):
        return iter(self.scales.tolist())

    def __getitem__(self, i):
        return self.scales[i]


def _check_dist(dist):
    dist = np.ascontiguousarray(dist, dtype=np.float64)
    if dist.ndim != 2 or dist.shape[0] != dist.shape[1]:
        raise ValidationError(f"distance matrix must be square, got {dist.shape}")
    if not np.all(np.isfinite(dist)):
        raise ValidationError("distance matrix has non-finite entries")
    return dist


def _upper_edges(dist):
    n = dist.shape[0]
    iu, ju = np.triu_indices(n, k=1)
    return iu.astype(np.intp), ju.astype(np.intp), dist[iu, ju]


def delta_max(dist, margin=DEFAULT_MARGIN):
    """``(1 + margin) * max pairwise distance``; for a single point, ``margin``."""
    if margin <= 0:
        raise ValidationError("margin must be positive")
    dist = _check_dist(dist)
    if dist.shape[0] < 2:
        return float(margin)
    return float((1.0 + margin) * np.max(dist))


def compute_h0_diagram(dist, delta_max):
    """H0 death times: sorted MST edge weights (Kruskal) followed by ``delta_max``."""
    dist = _check_dist(dist)
    n = dist.shape[0]
    if n == 0:
        raise EmptyInputError("persistence of an empty point set")
    if n > 1 and not delta_max > np.max(dist):
        raise ValidationError("delta_max must exceed every pairwise distance")
    ei, ej, w = _upper_edges(dist)
    order = np.argsort(w, kind="stable")
    weights = kernels.kruskal_weights(
        n, np.ascontiguousarray(ei[order]), np.ascontiguousarray(ej[order]),
        np.ascontiguousarray(w[order]),
    )
    deaths = np.append(np.sort(weights), float(delta_max))
    return PersistenceDiagramH0(deaths=deaths, delta_max=float(delta_max))


def _dedupe(values, rtol=TIE_RTOL):
    values = np.sort(np.asarray(values, dtype=np.float64))
    keep = [values[0]]
    for v in values[1:]:
        if v - keep[-1] > rtol * abs(v):
            keep.append(v)
        else:
            # ties collapse onto the larger value so the later state is the one realized
            keep[-1] = v
    return np.array(keep)


def canonical_scale_set(diag):
    """Deduplicated death times, ascending.

    Zero deaths (coincident points) are dropped: that state is never
    realized at a positive scale.
    """
    deaths = diag.deaths[diag.deaths > 0]
    return ScaleSet(_dedupe(deaths))


def distance_scale_set(dist, delta_max):
    """All positive pairwise distances, deduplicated, with ``delta_max`` appended."""
    dist = _check_dist(dist)
    _, _, w = _upper_edges(dist)
    w = w[w > 0]
    vals = np.append(w, float(delta_max))
    return ScaleSet(_dedupe(vals))


def betti0_at(dist, eps):
    """Connected components of the graph with edges ``dist_ij < eps``."""
    dist = _check_dist(dist)
    if not eps > 0:
        raise ValidationError("eps must be positive")
    n = dist.shape[0]
    ei, ej, w = _upper_edges(dist)
    mask = w < eps
    return int(kernels.count_components(
        n, np.ascontiguousarray(ei[mask]), np.ascontiguousarray(ej[mask])))


def betti0_curve(dist, eps_values):
    """Component counts at many scales from one sorted union-find sweep over all edges.

    Independent of the MST path: every pair is processed, not just tree edges.
    """
    dist = _check_dist(dist)
    n = dist.shape[0]
    ei, ej, w = _upper_edges(dist)
    order = np.argsort(w, kind="stable")
    ei, ej, w = ei[order].tolist(), ej[order].tolist(), w[order]
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    # counts[k] = components after the first k sorted edges
    counts = np.empty(len(ei) + 1, dtype=np.int64)
    comps = n
    counts[0] = n
    for k, (a, b) in enumerate(zip(ei, ej)):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[rb] = ra
            comps -= 1
        counts[k + 1] = comps
    eps_values = np.asarray(eps_values, dtype=np.float64)
    # edges with w < eps are those before searchsorted(w, eps, 'left')
    return counts[np.searchsorted(w, eps_values, side="left")]
