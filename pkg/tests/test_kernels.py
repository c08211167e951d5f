"""Compiled extension and numpy fallback must agree on every kernel."""
import os
import subprocess
import sys

import numpy as np
import pytest

from pnmf import kernels
from pnmf.numerics import pairwise_distances
from pnmf.persistence import _upper_edges

py = kernels.get_backend("python")
try:
    cy = kernels.get_backend("compiled")
except ImportError:  # pragma: no cover - extension not built
    cy = None

needs_ext = pytest.mark.skipif(cy is None, reason="compiled extension not built")


def sym(seed, n):
    A = np.random.default_rng(seed).normal(size=(n, n))
    return np.ascontiguousarray(A + A.T)


@pytest.mark.parametrize("backend", [py, cy] if cy is not None else [py], ids=lambda b: b.__name__)
@pytest.mark.parametrize("n", [1, 2, 3, 8, 25])
def test_jacobi_each_backend(backend, n):
    M = sym(n, n)
    w, V, sweeps, off, ok = backend.jacobi_eigh(M.copy(), 1e-12, 100, True)
    assert ok and sweeps <= 100
    np.testing.assert_allclose(np.sort(w), np.linalg.eigvalsh(M), atol=1e-10 * max(1, np.abs(M).max()))
    np.testing.assert_allclose(V @ np.diag(w) @ V.T, M, atol=1e-11 * max(1, np.abs(M).max()))
    w2, V2, *_ = backend.jacobi_eigh(M.copy(), 1e-12, 100, False)
    assert V2 is None
    np.testing.assert_allclose(np.sort(w2), np.sort(w), atol=1e-12 * max(1, np.abs(M).max()))


def edges(seed, n=30):
    D = pairwise_distances(np.random.default_rng(seed).uniform(size=(3, n)))
    ei, ej, w = _upper_edges(D)
    order = np.argsort(w, kind="stable")
    return n, np.ascontiguousarray(ei[order]), np.ascontiguousarray(ej[order]), np.ascontiguousarray(w[order])


@needs_ext
@pytest.mark.parametrize("seed", range(5))
def test_union_find_parity(seed):
    n, ei, ej, w = edges(seed)
    assert np.array_equal(py.kruskal_weights(n, ei, ej, w), cy.kruskal_weights(n, ei, ej, w))
    k = len(w) // 20
    assert py.count_components(n, ei[:k], ej[:k]) == cy.count_components(n, ei[:k], ej[:k])


@needs_ext
@pytest.mark.parametrize("seed", range(6))
def test_mu_subproblem_parity(seed):
    from pnmf.scalegraph import build_graph
    rng = np.random.default_rng(seed)
    p, n, d = 9, 7, 3
    X = rng.uniform(size=(p, n))
    D = pairwise_distances(X)
    g = build_graph(D, float(np.median(D)))
    W0, H0 = rng.uniform(size=(p, d)), rng.uniform(size=(d, n))
    H0[0, 1] = 0.0
    Hp, Hn = rng.uniform(size=(d, n)), rng.uniform(size=(d, n))
    args = (X, W0, H0, g.adjacency, g.degree, Hp, Hn, seed % 2 == 0, seed < 3,
            1.0, 2.0, 0.5, 1e-9, 1e-9, 1e-12, 50)
    Wa, Ha, ta, ia = py.mu_subproblem(*[a.copy() if isinstance(a, np.ndarray) else a for a in args])
    Wb, Hb, tb, ib = cy.mu_subproblem(*[a.copy() if isinstance(a, np.ndarray) else a for a in args])
    assert ia == ib
    np.testing.assert_allclose(Ha, Hb, rtol=1e-9, atol=1e-13)
    np.testing.assert_allclose(Wa, Wb, rtol=1e-9, atol=1e-13)
    np.testing.assert_allclose(ta, tb, rtol=1e-11)


def test_backend_env_selection():
    code = "import pnmf.kernels as k; print(k.BACKEND)"
    env = dict(os.environ, PNMF_BACKEND="python")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
    env["PNMF_BACKEND"] = "bogus"
    bad = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True)
    assert bad.returncode != 0


def test_python_backend_end_to_end_matches():
    """A small full solve under the forced fallback reproduces the default backend's objective."""
    code = (
        "import numpy as np; from pnmf import solve_pnmf, SolverConfig;"
        "X=np.random.default_rng(0).uniform(size=(5,8));"
        "r=solve_pnmf(X, SolverConfig(d=2, max_outer=3)); print(repr(float(r.objective_trace[-1])))"
    )
    vals = []
    for b in ("python", "auto"):
        env = dict(os.environ, PNMF_BACKEND=b)
        out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
        vals.append(float(out.stdout))
    assert vals[0] == pytest.approx(vals[1], rel=1e-9)
