"""Seeded synthetic datasets: concentric circles in a noisy ambient space, Gaussian blobs."""
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError


@dataclass
class LabeledDataset:
    X: np.ndarray          # (p, n), samples are columns
    labels: np.ndarray     # (n,)
    meta: dict = field(default_factory=dict)


def _random_plane(rng):
    normal = rng.normal(size=3)
    normal /= np.linalg.norm(normal)
    a = rng.normal(size=3)
    a -= (a @ normal) * normal
    a /= np.linalg.norm(a)
    b = np.cross(normal, a)
    return normal, a, b


def circle_points(seed=0, radii=(1.0, 2.0, 3.0, 4.0), points_per_circle=20):
    """Noiseless 3-D rings, each on a plane with a random normal; returns ``(points (n, 3), labels)``."""
    rng = np.random.default_rng(seed)
    pts, labels = [], []
    for k, r in enumerate(radii):
        _, a, b = _random_plane(rng)
        theta = 2.0 * np.pi * np.arange(points_per_circle) / points_per_circle + rng.uniform(0, 2 * np.pi)
        pts.append(r * (np.cos(theta)[:, None] * a + np.sin(theta)[:, None] * b))
        labels.extend([k] * points_per_circle)
    return np.vstack(pts), np.array(labels, dtype=np.int64), rng


def concentric_circles(seed=0, radii=(1.0, 2.0, 3.0, 4.0), points_per_circle=20,
                       noise=0.05, ambient_noise=0.05, ambient_dims=97):
    """Four concentric rings in 3-D with random plane orientations, padded with pure-noise dimensions.

    The result is shifted by its global minimum so that ``X >= 0``; the
    shift is recorded in ``meta["shift"]``.
    """
    pts, labels, rng = circle_points(seed, radii, points_per_circle)
    n = pts.shape[0]
    noisy = pts + rng.normal(scale=noise, size=pts.shape)
    extra = rng.normal(scale=ambient_noise, size=(n, ambient_dims))
    Z = np.hstack([noisy, extra])
    shift = float(-Z.min())
    X = np.ascontiguousarray((Z + shift).T)
    X[X < 0] = 0.0
    meta = dict(generator="circles", seed=seed, radii=list(radii), points_per_circle=points_per_circle,
                noise=noise, ambient_noise=ambient_noise, ambient_dims=ambient_dims, shift=shift)
    return LabeledDataset(X=X, labels=labels, meta=meta)


def gaussian_blobs(k=4, n_per=50, dim=10, separation=10.0, sigma=1.0, seed=0):
    """``k`` isotropic Gaussian clusters whose centers are pairwise at least ``separation`` apart.

    Centers sit on scaled simplex vertices (``separation / sqrt(2)`` times
    the standard basis), so every pair is exactly ``separation`` apart.
    Needs ``dim >= k``.
    """
    if k < 1:
        raise ValidationError("k must be >= 1")
    if dim < k:
        raise ValidationError("dim must be >= k so centers can be placed on a simplex")
    rng = np.random.default_rng(seed)
    centers = np.zeros((k, dim))
    centers[np.arange(k), np.arange(k)] = separation / np.sqrt(2.0)
    pts = np.vstack([c + rng.normal(scale=sigma, size=(n_per, dim)) for c in centers])
    labels = np.repeat(np.arange(k), n_per)
    shift = float(-pts.min())
    X = np.ascontiguousarray((pts + shift).T)
    X[X < 0] = 0.0
    meta = dict(generator="blobs", seed=seed, k=k, n_per=n_per, dim=dim,
                separation=separation, sigma=sigma, shift=shift)
    return LabeledDataset(X=X, labels=labels.astype(np.int64), meta=meta)
