import numpy as np
import pytest

from pnmf.datagen import circle_points, concentric_circles, gaussian_blobs
from pnmf.errors import ValidationError
from pnmf.evaluation import accuracy, kmeans


def test_circles_shape_and_shift():
    ds = concentric_circles(seed=0)
    assert ds.X.shape == (100, 80)
    assert ds.X.min() == 0.0
    assert sorted(set(ds.labels.tolist())) == [0, 1, 2, 3]
    assert np.bincount(ds.labels).tolist() == [20] * 4
    assert ds.meta["shift"] > 0 and ds.meta["seed"] == 0


def test_circles_deterministic():
    a, b = concentric_circles(seed=3), concentric_circles(seed=3)
    assert np.array_equal(a.X, b.X) and np.array_equal(a.labels, b.labels)
    assert not np.array_equal(a.X, concentric_circles(seed=4).X)


def test_noise_free_radii_recover_labels():
    pts, labels, _ = circle_points(seed=1)
    r = np.linalg.norm(pts, axis=1)
    np.testing.assert_allclose(r, (labels + 1).astype(float), rtol=1e-12)
    pred = np.digitize(r, [1.5, 2.5, 3.5])
    assert accuracy(labels, pred) >= 0.95


def test_noisy_radii_recover_labels():
    ds = concentric_circles(seed=2)
    xyz = ds.X[:3].T - ds.meta["shift"]
    pred = np.digitize(np.linalg.norm(xyz, axis=1), [1.5, 2.5, 3.5])
    assert accuracy(ds.labels, pred) >= 0.95


def test_blobs_basic():
    ds = gaussian_blobs(k=4, n_per=50, dim=10, seed=0)
    assert ds.X.shape == (10, 200) and ds.X.min() >= 0
    assert len(set(ds.labels.tolist())) == 4
    assert gaussian_blobs(k=1, n_per=5, dim=2).labels.tolist() == [0] * 5


def test_blob_centers_are_separated():
    ds = gaussian_blobs(k=4, n_per=400, dim=10, separation=10.0, sigma=1.0, seed=1)
    means = np.array([ds.X[:, ds.labels == c].mean(axis=1) for c in range(4)])
    d = np.linalg.norm(means[:, None] - means[None], axis=2)[np.triu_indices(4, 1)]
    assert d.min() >= 9.5


def test_blobs_kmeans_on_raw_data():
    ds = gaussian_blobs(k=4, n_per=50, dim=10, separation=10.0, sigma=1.0, seed=0)
    assert accuracy(ds.labels, kmeans(ds.X.T, 4, seed=0)) >= 0.99


def test_blobs_validation():
    with pytest.raises(ValidationError):
        gaussian_blobs(k=0)
    with pytest.raises(ValidationError):
        gaussian_blobs(k=5, dim=4)
