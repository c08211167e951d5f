"""Backend selection for the hot kernels.

The compiled extension is used when it imports; otherwise the numpy
fallback. ``PNMF_BACKEND`` forces a choice: ``compiled``, ``python`` or
``auto`` (default). Forcing ``compiled`` without a built extension raises.
"""
import os

from . import _fallback

_requested = os.environ.get("PNMF_BACKEND", "auto").strip().lower()
if _requested not in ("auto", "compiled", "python"):
    raise ImportError(f"PNMF_BACKEND must be auto, compiled or python, got {_requested!r}")

_compiled = None
if _requested != "python":
    try:
        from . import _kernels as _compiled
    except ImportError:
        if _requested == "compiled":
            raise

if _compiled is not None:
    BACKEND = "compiled"
    jacobi_eigh = _compiled.jacobi_eigh
    kruskal_weights = _compiled.kruskal_weights
    count_components = _compiled.count_components
    mu_subproblem = _compiled.mu_subproblem
else:
    BACKEND = "python"
    jacobi_eigh = _fallback.jacobi_eigh
    kruskal_weights = _fallback.kruskal_weights
    count_components = _fallback.count_components
    mu_subproblem = _fallback.mu_subproblem


def get_backend(name):
    """Return a namespace of kernels for ``name`` in {"compiled", "python"}; used by benchmarks and tests."""
    if name == "python":
        return _fallback
    if name == "compiled":
        from . import _kernels
        return _kernels
    raise ValueError(f"unknown backend {name!r}")
