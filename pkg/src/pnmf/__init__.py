"""Persistent nonnegative matrix factorization over persistence-derived multi-scale graphs.

Typical use::

    from pnmf import SolverConfig, solve_pnmf
    factors = solve_pnmf(X, SolverConfig.simulation())
"""
__version__ = "0.1.0"

from .errors import (ConvergenceError, DegenerateInputError, EmptyInputError, InputFormatError,
                     PNMFError, ValidationError)
from .kernels import BACKEND
from .numerics import pairwise_distances, pearson, sym_eigh, sym_eigenvalues
from .persistence import (PersistenceDiagramH0, ScaleSet, betti0_at, canonical_scale_set,
                          compute_h0_diagram, delta_max, distance_scale_set)
from .scalegraph import ScaleGraph, build_graph, graph_family, nullity
from .solver import (FactorPair, MultiScaleFactors, SolverConfig, kkt_residual, nndsvda_init,
                     normalize_factors, objective, solve_gnmf, solve_nmf, solve_pnmf)
from .datagen import LabeledDataset, concentric_circles, gaussian_blobs
from .evaluation import accuracy, ari, kmeans, nmi, purity, sweep_scales
