"""Dense matrix primitives: distances, norms, symmetric eigenvalues, Pearson correlation."""
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist, squareform
from scipy.special import betainc

from . import kernels
from .errors import ConvergenceError, DegenerateInputError, ValidationError

JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100


def as_finite_matrix(M, name="matrix"):
    """Return ``M`` as a C-contiguous float64 2-D array, rejecting NaN/inf."""
    arr = np.ascontiguousarray(M, dtype=np.float64)
    if arr.ndim != 2:
        raise ValidationError(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        i, j = np.argwhere(~np.isfinite(arr))[0]
        raise ValidationError(f"{name} has a non-finite entry at ({i}, {j})")
    return arr


def pairwise_distances(X):
    """Euclidean distances between the columns of ``X``.

    Parameters
    ----------
    X : array of shape (p, n)
        Samples are columns.

    Returns
    -------
    ndarray of shape (n, n)
        Symmetric, zero diagonal.
    """
    X = as_finite_matrix(X, "X")
    n = X.shape[1]
    if n < 1:
        raise ValidationError("X needs at least one column")
    if n == 1:
        return np.zeros((1, 1))
    D = squareform(pdist(X.T, metric="euclidean"))
    return np.ascontiguousarray(D)


def frobenius_norm(M):
    M = np.asarray(M, dtype=np.float64)
    return float(np.sqrt(np.sum(M * M)))


def _check_symmetric(M):
    M = as_finite_matrix(M, "M")
    if M.shape[0] != M.shape[1]:
        raise ValidationError(f"matrix must be square, got {M.shape}")
    if not np.array_equal(M, M.T):
        # tolerate rounding-level asymmetry by symmetrizing; reject anything larger
        scale = max(frobenius_norm(M), 1.0)
        if np.max(np.abs(M - M.T)) > 1e-12 * scale:
            raise ValidationError("matrix is not symmetric")
        M = np.ascontiguousarray(0.5 * (M + M.T))
    return M


def sym_eigh(M, tol=JACOBI_TOL, max_sweeps=JACOBI_MAX_SWEEPS):
    """Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns ascending eigenvalues and the matching orthonormal eigenvectors as
    columns. Raises :class:`ConvergenceError` (carrying the off-diagonal norm)
    if ``max_sweeps`` is exhausted.
    """
    M = _check_symmetric(M)
    w, V, _, off, converged = kernels.jacobi_eigh(M, tol, max_sweeps, True)
    if not converged:
        raise ConvergenceError(f"Jacobi did not converge in {max_sweeps} sweeps", residual=off)
    order = np.argsort(w, kind="stable")
    return w[order], V[:, order]


def sym_eigenvalues(M, tol=JACOBI_TOL, max_sweeps=JACOBI_MAX_SWEEPS):
    """Ascending eigenvalues of a symmetric matrix (cyclic Jacobi)."""
    M = _check_symmetric(M)
    w, _, _, off, converged = kernels.jacobi_eigh(M, tol, max_sweeps, False)
    if not converged:
        raise ConvergenceError(f"Jacobi did not converge in {max_sweeps} sweeps", residual=off)
    return np.sort(w)


@dataclass(frozen=True)
class PearsonResult:
    r: float
    p_value: float
    n: int


def pearson(x, y):
    """Sample Pearson correlation with a two-sided Student-t p-value.

    The p-value is ``I_{df/(df+t^2)}(df/2, 1/2)`` with ``df = n - 2``, the
    regularized incomplete beta form of the t survival function.
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.shape != y.shape:
        raise ValidationError(f"length mismatch: {x.size} vs {y.size}")
    n = x.size
    if n < 3:
        raise ValidationError("pearson needs at least 3 pairs")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ValidationError("pearson input has non-finite values")
    xc = x - x.mean()
    yc = y - y.mean()
    sxx = float(np.dot(xc, xc))
    syy = float(np.dot(yc, yc))
    if sxx == 0.0 or syy == 0.0:
        raise DegenerateInputError("pearson input is constant")
    r = float(np.dot(xc, yc) / np.sqrt(sxx * syy))
    r = min(1.0, max(-1.0, r))
    df = n - 2
    if abs(r) == 1.0:
        p = 0.0
    else:
        t2 = r * r * df / (1.0 - r * r)
        p = float(betainc(0.5 * df, 0.5, df / (df + t2)))
    return PearsonResult(r=r, p_value=min(1.0, max(0.0, p)), n=n)
