import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pnmf.errors import ValidationError
from pnmf.evaluation import (accuracy, ari, contingency, increment_analysis, kmeans, nmi, purity,
                             score, sweep_scales)
from pnmf.numerics import PearsonResult, pairwise_distances
from pnmf.scalegraph import graph_family

from _oracles import accuracy_permutations, ari_pairs


# ----------------------------------------------------------------- metrics

def test_identical_labelings():
    y = [0, 0, 1, 2, 2, 2]
    assert ari(y, y) == 1.0 and nmi(y, y) == pytest.approx(1.0) and purity(y, y) == 1.0 and accuracy(y, y) == 1.0


def test_renamed_labels():
    y = np.array([0, 0, 1, 1, 2, 2])
    z = np.array([5, 5, 3, 3, 9, 9])
    assert ari(y, z) == pytest.approx(1.0) and accuracy(y, z) == 1.0


def test_small_ari_example():
    assert ari([0, 0, 1, 1], [0, 1, 1, 1]) == pytest.approx(ari_pairs([0, 0, 1, 1], [0, 1, 1, 1]), abs=1e-14)


def test_nmi_single_class_is_zero():
    assert nmi([0, 0, 0], [0, 1, 2]) == 0.0
    assert nmi([0, 1, 2], [1, 1, 1]) == 0.0


def test_contingency_errors():
    with pytest.raises(ValidationError):
        contingency([0, 1], [0])
    with pytest.raises(ValidationError):
        contingency([], [])


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 30).flatmap(lambda n: st.tuples(st.lists(st.integers(0, 4), min_size=n, max_size=n),
                                                      st.lists(st.integers(0, 4), min_size=n, max_size=n))))
def test_metric_ranges_and_relabel_invariance(pair):
    t, p = map(np.array, pair)
    r = score(t, p)
    assert -1 <= r.ari <= 1 and 0 <= r.nmi <= 1 and 0 <= r.purity <= 1 and 0 <= r.accuracy <= 1
    assert r.purity >= r.accuracy - 1e-15
    perm = np.array([3, 0, 4, 1, 2])
    q = perm[p]
    assert ari(t, q) == pytest.approx(r.ari, abs=1e-12)
    assert nmi(t, q) == pytest.approx(r.nmi, abs=1e-12)
    assert purity(t, q) == r.purity and accuracy(t, q) == r.accuracy


def test_against_brute_force_oracles():
    rng = np.random.default_rng(0)
    for _ in range(60):
        n = int(rng.integers(2, 25))
        k = int(rng.integers(1, 6))
        t = rng.integers(0, k, size=n)
        p = rng.integers(0, int(rng.integers(1, 6)), size=n)
        assert ari(t, p) == pytest.approx(ari_pairs(t.tolist(), p.tolist()), abs=1e-12)
        assert accuracy(t, p) == pytest.approx(accuracy_permutations(t.tolist(), p.tolist()), abs=1e-15)


def test_purity_formula():
    # predicted clusters {0,1,2} and {3,4}; majority counts 2 and 1
    assert purity([0, 0, 1, 1, 2], [7, 7, 7, 8, 8]) == pytest.approx(3 / 5)


def test_nmi_known_value():
    t = [0, 0, 1, 1]
    p = [0, 0, 0, 1]
    # mutual information and entropies straight from the definition
    pij = np.array([[0.5, 0.0], [0.25, 0.25]])
    pi, pj = pij.sum(1), pij.sum(0)
    mi = sum(pij[i, j] * np.log(pij[i, j] / (pi[i] * pj[j])) for i in range(2) for j in range(2) if pij[i, j] > 0)
    h = -np.sum(pi * np.log(pi)) - np.sum(pj * np.log(pj))
    assert nmi(t, p) == pytest.approx(2 * mi / h, rel=1e-12)


def test_independent_coarse_labelings_have_small_ari():
    inside = 0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        inside += abs(ari(rng.integers(0, 3, 200), rng.integers(0, 3, 200))) < 0.2
    assert inside >= 99


# ------------------------------------------------------------------ kmeans

def test_kmeans_k1():
    pts = np.random.default_rng(1).normal(size=(10, 2))
    assert len(set(kmeans(pts, 1).tolist())) == 1


def test_kmeans_two_pairs():
    pts = np.array([[0.0, 0.0], [0.1, 0.0], [10.0, 10.0], [10.0, 10.1]])
    lab = kmeans(pts, 2)
    assert lab[0] == lab[1] and lab[2] == lab[3] and lab[0] != lab[2]


def test_kmeans_picks_lowest_inertia():
    pts = np.random.default_rng(2).normal(size=(60, 3))
    res = kmeans(pts, 4, restarts=7, seed=3, return_details=True)
    assert res.inertia <= min(res.restart_inertias) + 1e-12
    assert res.best_restart == int(np.argmin(res.restart_inertias))
    assert set(res.labels.tolist()) <= set(range(4))


def test_kmeans_deterministic_and_validated():
    pts = np.random.default_rng(4).normal(size=(30, 2))
    assert np.array_equal(kmeans(pts, 3, seed=9), kmeans(pts, 3, seed=9))
    with pytest.raises(ValidationError):
        kmeans(pts, 31)
    with pytest.raises(ValidationError):
        kmeans(pts[:, 0], 2)


def test_kmeans_duplicate_points_do_not_crash():
    pts = np.zeros((6, 2))
    pts[3:] = 1.0
    lab = kmeans(pts, 4, restarts=3)
    assert lab.shape == (6,)


# ------------------------------------------------------------------- sweeps

def test_sweep_single_scale_and_ties():
    H = np.array([[1.0, 1.1, 5.0, 5.1]])
    reports, best = sweep_scales([H], [0, 0, 1, 1], 2)
    assert len(reports) == 1 and best == 0
    reports, best = sweep_scales([H, H, H], [0, 0, 1, 1], 2)
    assert best == 0
    assert reports[best].mean >= reports[0].mean


def test_sweep_label_mismatch():
    with pytest.raises(ValidationError):
        sweep_scales([np.ones((1, 4))], [0, 1, 0], 2)


def test_increment_analysis_shapes_and_errors():
    rng = np.random.default_rng(5)
    X = rng.uniform(size=(3, 8))
    D = pairwise_distances(X)
    eps = np.quantile(D[D > 0], [0.1, 0.3, 0.5, 0.7, 0.9])
    graphs = graph_family(D, eps)
    Hs = [rng.uniform(size=(2, 8)) for _ in eps]
    rep = increment_analysis(Hs, graphs, eps)
    assert rep.delta_eps.size == rep.delta_L.size == rep.delta_H.size == 4
    assert set(rep.correlations) == {"eps-L", "L-H", "eps-H"}
    with pytest.raises(ValidationError):
        increment_analysis(Hs[:3], graphs[:3], eps[:3])


def test_increment_analysis_proportional_series():
    rng = np.random.default_rng(6)
    X = rng.uniform(size=(3, 8))
    D = pairwise_distances(X)
    eps = np.array([0.2, 0.5, 0.6, 1.0, 1.2])
    graphs = graph_family(D, eps)
    base = rng.uniform(size=(2, 8))
    Hs = [base * (1 + e) for e in eps]  # ||dH|| proportional to d eps
    corr = increment_analysis(Hs, graphs, eps).correlations["eps-H"]
    assert isinstance(corr, PearsonResult) and corr.r == pytest.approx(1.0, abs=1e-12)


def test_increment_analysis_constant_series_is_reported():
    rng = np.random.default_rng(7)
    X = rng.uniform(size=(3, 8))
    D = pairwise_distances(X)
    eps = np.array([1.0, 2.0, 3.0, 4.0])
    graphs = graph_family(D, eps)
    H = rng.uniform(size=(2, 8))
    out = increment_analysis([H, H, H, H], graphs, eps).correlations
    assert isinstance(out["eps-H"], str) and isinstance(out["L-H"], str)
