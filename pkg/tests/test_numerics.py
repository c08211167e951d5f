import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from pnmf.errors import ConvergenceError, DegenerateInputError, ValidationError
from pnmf.numerics import (frobenius_norm, pairwise_distances, pearson, sym_eigh,
                           sym_eigenvalues)

from _oracles import distances_double_loop, pearson_direct


# -------------------------------------------------------------- distances

def test_single_column_distance():
    assert pairwise_distances(np.array([[1.0], [2.0]])).tolist() == [[0.0]]


def test_three_four_five():
    D = pairwise_distances(np.array([[0.0, 3.0], [0.0, 4.0]]))
    assert D[0, 1] == 5.0 and D[1, 0] == 5.0


def test_distances_match_double_loop():
    X = np.random.default_rng(3).uniform(size=(6, 5))
    np.testing.assert_allclose(pairwise_distances(X), distances_double_loop(X), rtol=1e-14, atol=1e-15)


@pytest.mark.parametrize("bad", [np.nan, np.inf, -np.inf])
def test_distances_reject_nonfinite(bad):
    X = np.ones((2, 3))
    X[1, 2] = bad
    with pytest.raises(ValidationError):
        pairwise_distances(X)


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 4), st.integers(1, 8)),
              elements=st.floats(-1e3, 1e3)))
def test_distances_symmetric_zero_diagonal(X):
    D = pairwise_distances(X)
    assert np.array_equal(D, D.T)
    assert np.all(np.diag(D) == 0)


# ------------------------------------------------------------------ norms

def test_frobenius_examples():
    assert frobenius_norm(np.zeros((3, 2))) == 0.0
    assert frobenius_norm(np.eye(3)) == pytest.approx(math.sqrt(3), rel=1e-15)
    assert frobenius_norm(np.array([[3.0, 4.0]])) == 5.0


def test_frobenius_triangle_inequality():
    rng = np.random.default_rng(0)
    for _ in range(100):
        A, B = rng.normal(size=(2, 4, 3))
        assert frobenius_norm(A + B) <= frobenius_norm(A) + frobenius_norm(B) + 1e-12


# ---------------------------------------------------------- eigenvalues

def test_eigen_examples():
    assert sym_eigenvalues(np.eye(2)).tolist() == pytest.approx([1.0, 1.0], abs=1e-15)
    assert sym_eigenvalues(np.diag([3.0, 2.0])).tolist() == pytest.approx([2.0, 3.0], abs=1e-15)
    np.testing.assert_allclose(sym_eigenvalues(np.array([[1.0, -1.0], [-1.0, 1.0]])), [0.0, 2.0], atol=1e-14)


@pytest.mark.parametrize("n", [1, 2, 5, 17, 40])
def test_eigh_reconstruction(n):
    rng = np.random.default_rng(n)
    A = rng.normal(size=(n, n))
    M = A + A.T
    w, V = sym_eigh(M)
    assert np.all(np.diff(w) >= 0)
    assert frobenius_norm(M - V @ np.diag(w) @ V.T) <= 1e-12 * max(frobenius_norm(M), 1.0)
    np.testing.assert_allclose(V.T @ V, np.eye(n), atol=1e-12)
    np.testing.assert_allclose(w, np.linalg.eigvalsh(M), atol=1e-10 * max(1, np.abs(w).max()))


def test_eigen_rejects_asymmetric():
    with pytest.raises(ValidationError):
        sym_eigenvalues(np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_eigen_cap_raises_convergence_error():
    rng = np.random.default_rng(1)
    A = rng.normal(size=(12, 12))
    with pytest.raises(ConvergenceError) as info:
        sym_eigenvalues(A + A.T, max_sweeps=1)
    assert info.value.residual is not None and info.value.residual > 0


def test_laplacian_min_eigenvalue_nonnegative():
    from pnmf.scalegraph import build_graph
    X = np.random.default_rng(2).uniform(size=(3, 30))
    D = pairwise_distances(X)
    for eps in np.quantile(D[D > 0], [0.1, 0.5, 0.9]):
        L = build_graph(D, eps).laplacian
        assert sym_eigenvalues(L)[0] >= -1e-10 * frobenius_norm(L)


# --------------------------------------------------------------- pearson

def test_pearson_perfect():
    assert pearson([1, 2, 3], [1, 2, 3]).r == pytest.approx(1.0, abs=1e-15)
    assert pearson([1, 2, 3], [3, 2, 1]).r == pytest.approx(-1.0, abs=1e-15)
    assert pearson([1, 2, 3], [1, 2, 3]).p_value == 0.0


def test_pearson_matches_direct_formula():
    rng = np.random.default_rng(50)
    x, y = rng.uniform(size=(2, 50))
    assert abs(pearson(x, y).r - pearson_direct(x, y)) <= 1e-12


def test_pearson_p_value_matches_t_distribution():
    from scipy import stats
    rng = np.random.default_rng(7)
    for n in (3, 5, 20, 200):
        x = rng.normal(size=n)
        y = 0.3 * x + rng.normal(size=n)
        res = pearson(x, y)
        ref = stats.pearsonr(x, y)
        assert res.r == pytest.approx(ref.statistic, abs=1e-12)
        assert res.p_value == pytest.approx(ref.pvalue, rel=1e-9, abs=1e-300)
        assert 0.0 <= res.p_value <= 1.0 and res.n == n


def test_pearson_errors():
    with pytest.raises(DegenerateInputError):
        pearson([1, 1, 1], [1, 2, 3])
    with pytest.raises(ValidationError):
        pearson([1, 2], [1, 2])
    with pytest.raises(ValidationError):
        pearson([1, 2, 3], [1, 2])
