"""Persistent NMF: objective, modified multiplicative updates and the sequential outer loop.

Plain NMF and graph-regularized NMF are the single-scale special cases with
``(lambda1, lambda2, lambda3) = (0, 0, 0)`` and ``(lam, 0, 0)``.
"""
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .errors import ValidationError
from .numerics import as_finite_matrix, pairwise_distances
from .persistence import (ScaleSet, canonical_scale_set, compute_h0_diagram,
                          delta_max, distance_scale_set)
from .scalegraph import DEFAULT_ALPHA, ScaleGraph, build_graph, graph_family

SCALE_MODES = ("canonical", "uds", "rds", "mss", "explicit")


@dataclass(frozen=True)
class SolverConfig:
    """Hyperparameters and stopping rules for :func:`solve_pnmf`.

    ``d=None`` means ``ceil(sqrt(n))``. ``scales`` is only read when
    ``scale_mode == "explicit"``. ``max_scales`` keeps every k-th canonical
    scale (always including the last) when the scale list is longer.
    """

    lambda1: float = 1.0
    lambda2: float = 1.0
    lambda3: float = 1.0
    alpha: float = DEFAULT_ALPHA
    d: Optional[int] = None
    mu: float = 1e-9
    nu: float = 1e-9
    tol_inner: float = 1e-4
    tol_outer: float = 1e-4
    max_inner: int = 200
    max_outer: int = 50
    seed: int = 0
    scale_mode: str = "canonical"
    scales: Optional[Sequence[float]] = None
    max_scales: Optional[int] = None
    margin: float = 0.05
    normalize_output: bool = True

    def __post_init__(self):
        for name in ("lambda1", "lambda2", "lambda3"):
            if getattr(self, name) < 0:
                raise ValidationError(f"{name} must be nonnegative")
        if not (self.mu > 0 and self.nu > 0):
            raise ValidationError("mu and nu must be positive")
        if not (self.tol_inner > 0 and self.tol_outer > 0):
            raise ValidationError("tolerances must be positive")
        if self.max_inner < 1 or self.max_outer < 1:
            raise ValidationError("iteration caps must be >= 1")
        if self.alpha <= 0:
            raise ValidationError("alpha must be positive")
        if self.d is not None and self.d < 1:
            raise ValidationError("d must be >= 1")
        if self.scale_mode not in SCALE_MODES:
            raise ValidationError(f"scale_mode must be one of {SCALE_MODES}")
        if self.scale_mode == "explicit" and not self.scales:
            raise ValidationError("scale_mode='explicit' needs a scales list")
        if self.max_scales is not None and self.max_scales < 1:
            raise ValidationError("max_scales must be >= 1")

    @classmethod
    def simulation(cls, **overrides):
        """Settings used for the concentric-circles experiments."""
        base = dict(lambda1=100.0, lambda2=100.0, lambda3=1.0, d=2, alpha=1.5)
        base.update(overrides)
        return cls(**base)

    @classmethod
    def clustering(cls, **overrides):
        """Settings used for clustering runs; ``d`` resolves to ``ceil(sqrt(n))``."""
        base = dict(lambda1=1.0, lambda2=1.0, lambda3=1.0, d=None, alpha=1.5)
        base.update(overrides)
        return cls(**base)

    def latent_dim(self, n):
        return self.d if self.d is not None else int(math.ceil(math.sqrt(n)))

    def to_dict(self):
        out = {k: getattr(self, k) for k in self.__dataclass_fields__}
        if out["scales"] is not None:
            out["scales"] = [float(s) for s in out["scales"]]
        return out


@dataclass
class FactorPair:
    W: np.ndarray
    H: np.ndarray
    zero_columns: tuple = ()

    def product(self):
        return self.W @ self.H


@dataclass
class ScaleContext:
    """Everything f_t needs besides (W, H): data, graph, neighbor embeddings and weights."""

    X: np.ndarray
    graph: ScaleGraph
    H_prev: Optional[np.ndarray]
    H_next: Optional[np.ndarray]
    lambda1: float
    lambda2: float
    lambda3: float

    @property
    def neighbor_count(self):
        return int(self.H_prev is not None) + int(self.H_next is not None)


@dataclass
class SubproblemExit:
    outer: int
    scale_index: int
    n_iter: int
    kkt: float
    objective: float


@dataclass
class MultiScaleFactors:
    scales: ScaleSet
    pairs: list
    objective_trace: np.ndarray
    outer_iterations: int
    outer_objectives: list = field(default_factory=list)
    raw_pairs: list = field(default_factory=list)
    trace_index: np.ndarray = None
    exits: list = field(default_factory=list)
    config: SolverConfig = None

    def __len__(self):
        return len(self.pairs)


# -------------------------------------------------------------- objectives

def validate_data(X):
    X = as_finite_matrix(X, "X")
    if X.size == 0 or X.shape[1] == 0:
        raise ValidationError("X must have at least one column")
    if np.any(X < 0):
        i, j = np.argwhere(X < 0)[0]
        raise ValidationError(f"X has a negative entry {float(X[i, j])!r} at (feature {i}, sample {j})")
    return X


def _trace_term(H, graph):
    HL = H * graph.degree - H @ graph.adjacency
    return float(np.sum(H * HL))


def objective(X, graphs, pairs, config):
    """Global objective: fit + geometric + cross-scale smoothness + anchoring terms, summed over scales."""
    total = 0.0
    for t, (g, pr) in enumerate(zip(graphs, pairs)):
        R = X - pr.W @ pr.H
        total += float(np.sum(R * R))
        total += config.lambda1 * _trace_term(pr.H, g)
        total += config.lambda3 * float(np.sum(pr.H * pr.H))
        if t > 0:
            total += config.lambda2 * float(np.sum((pr.H - pairs[t - 1].H) ** 2))
    return total


def subobjective(ctx, W, H):
    """f_t(W, H): the terms of the global objective that involve scale t."""
    R = ctx.X - W @ H
    val = float(np.sum(R * R)) + ctx.lambda1 * _trace_term(H, ctx.graph)
    val += ctx.lambda3 * float(np.sum(H * H))
    if ctx.H_prev is not None:
        val += ctx.lambda2 * float(np.sum((H - ctx.H_prev) ** 2))
    if ctx.H_next is not None:
        val += ctx.lambda2 * float(np.sum((ctx.H_next - H) ** 2))
    return val


def gradients(ctx, W, H):
    """Return ``(grad_W, grad_H)`` of f_t; absent neighbors drop out of the smoothness term."""
    E = W @ H - ctx.X
    gW = 2.0 * E @ H.T
    HL = H * ctx.graph.degree - H @ ctx.graph.adjacency
    gH = 2.0 * W.T @ E + 2.0 * ctx.lambda1 * HL + 2.0 * ctx.lambda3 * H
    for nb in (ctx.H_prev, ctx.H_next):
        if nb is not None:
            gH += 2.0 * ctx.lambda2 * (H - nb)
    return gW, gH


def kkt_residual(ctx, W, H):
    """``max |min(V, grad_V f_t)|`` over both factors; 0 exactly at a KKT point."""
    gW, gH = gradients(ctx, W, H)
    return float(max(np.max(np.abs(np.minimum(W, gW))), np.max(np.abs(np.minimum(H, gH)))))


# ------------------------------------------------------------------ updates

def _dummy_like(H):
    return np.zeros((H.shape[0], H.shape[1]))


def _run_kernel(ctx, W, H, mu, nu, tol, max_inner):
    has_prev = ctx.H_prev is not None
    has_next = ctx.H_next is not None
    Hp = np.ascontiguousarray(ctx.H_prev) if has_prev else _dummy_like(H)
    Hn = np.ascontiguousarray(ctx.H_next) if has_next else _dummy_like(H)
    return kernels.mu_subproblem(
        np.ascontiguousarray(ctx.X), np.ascontiguousarray(W), np.ascontiguousarray(H),
        ctx.graph.adjacency, np.ascontiguousarray(ctx.graph.degree), Hp, Hn, has_prev, has_next,
        float(ctx.lambda1), float(ctx.lambda2), float(ctx.lambda3), float(mu), float(nu),
        float(tol), int(max_inner),
    )


def update_step(ctx, W, H, mu=1e-9, nu=1e-9):
    """One modified multiplicative step: H first (with the old W), then W (with the new H)."""
    W1, H1, _, _ = _run_kernel(ctx, W, H, mu, nu, math.inf, 1)
    return W1, H1


def solve_subproblem(ctx, W, H, config):
    """Repeat :func:`update_step` until the relative change of f_t drops below ``tol_inner``.

    Returns ``(FactorPair, trace, n_iter)`` where ``trace`` holds f_t after
    each half-step.
    """
    W1, H1, trace, n_iter = _run_kernel(ctx, W, H, config.mu, config.nu,
                                        config.tol_inner, config.max_inner)
    return FactorPair(W1, H1), trace, n_iter


def nndsvda_init(X, d):
    """Nonnegative double SVD initialization with zeros filled by ``mean(X)``.

    Components beyond the numerical rank (or beyond ``min(p, n)``) end up
    filled with the mean as well.
    """
    X = validate_data(X)
    p, n = X.shape
    U, S, Vt = np.linalg.svd(X, full_matrices=False)
    W = np.zeros((p, d))
    H = np.zeros((d, n))
    k = min(d, S.size)
    if k > 0 and S[0] > 0:
        W[:, 0] = np.sqrt(S[0]) * np.abs(U[:, 0])
        H[0, :] = np.sqrt(S[0]) * np.abs(Vt[0, :])
    for j in range(1, k):
        x, y = U[:, j], Vt[j, :]
        xp, yp = np.maximum(x, 0), np.maximum(y, 0)
        xn, yn = np.abs(np.minimum(x, 0)), np.abs(np.minimum(y, 0))
        nxp, nyp, nxn, nyn = (np.linalg.norm(v) for v in (xp, yp, xn, yn))
        mp, mn = nxp * nyp, nxn * nyn
        if mp > mn:
            u, v, sigma = xp / nxp, yp / nyp, mp
        elif mn > 0:
            u, v, sigma = xn / nxn, yn / nyn, mn
        else:
            continue
        lbd = np.sqrt(S[j] * sigma)
        W[:, j] = lbd * u
        H[j, :] = lbd * v
    avg = X.mean()
    W[W == 0] = avg
    H[H == 0] = avg
    return FactorPair(W, H)


def normalize_factors(pair):
    """Rescale so every column of W sums to one, compensating in the rows of H.

    Columns of W that sum to zero are left unchanged and listed in
    ``zero_columns``.
    """
    W = np.array(pair.W, dtype=np.float64, copy=True)
    H = np.array(pair.H, dtype=np.float64, copy=True)
    sums = W.sum(axis=0)
    zero = tuple(int(j) for j in np.flatnonzero(sums <= 0))
    ok = sums > 0
    W[:, ok] /= sums[ok]
    H[ok, :] *= sums[ok][:, None]
    return FactorPair(W, H, zero_columns=zero)


# ------------------------------------------------------------------- scales

def _subsample(scales, cap):
    arr = np.asarray(scales)
    if cap is None or arr.size <= cap:
        return arr
    k = int(math.ceil(arr.size / cap))
    return arr[::-1][::k][::-1]


def select_scales(dist, config):
    """Scale list for ``config.scale_mode``.

    ``uds``/``rds`` draw ``|canonical|`` values from the distance-scale set
    (evenly spaced / uniformly at random), always keeping its min and max;
    ``mss`` draws one value from each interval ``(eps_{t-1}, eps_t]`` of the
    canonical set, with ``eps_0 = 0``.
    """
    dmax = delta_max(dist, config.margin)
    if config.scale_mode == "explicit":
        return ScaleSet(np.unique(np.asarray(config.scales, dtype=np.float64)))
    canon = canonical_scale_set(compute_h0_diagram(dist, dmax)).scales
    m = canon.size
    rng = np.random.default_rng(config.seed)
    if config.scale_mode == "canonical":
        out = canon
    elif config.scale_mode in ("uds", "rds"):
        delta = distance_scale_set(dist, dmax).scales
        if m == 1:
            out = delta[-1:]
        elif config.scale_mode == "uds":
            idx = np.round(np.linspace(0, delta.size - 1, m)).astype(int)
            out = delta[np.unique(idx)]
        else:
            interior = np.arange(1, delta.size - 1)
            pick = rng.choice(interior, size=m - 2, replace=False) if m > 2 else []
            idx = np.sort(np.concatenate([[0, delta.size - 1], pick]).astype(int))
            out = delta[idx]
    else:
        lo = np.concatenate([[0.0], canon[:-1]])
        u = rng.uniform(0.0, 1.0, size=m)
        out = canon - u * (canon - lo)  # in (lo, hi]
    return ScaleSet(_subsample(out, config.max_scales))


# ------------------------------------------------------------ outer solver

def _sequential_solve(X, graphs, config, init, record_kkt=True):
    n_scales = len(graphs)
    pairs = [FactorPair(init.W.copy(), init.H.copy()) for _ in range(n_scales)]
    current = objective(X, graphs, pairs, config)
    trace = [current]
    index = [(0, -1, 0)]
    outer_obj = [current]
    exits = []
    s = 0
    for s in range(1, config.max_outer + 1):
        for t in range(n_scales):
            ctx = ScaleContext(
                X=X, graph=graphs[t],
                H_prev=pairs[t - 1].H if t > 0 else None,
                H_next=pairs[t + 1].H if t + 1 < n_scales else None,
                lambda1=config.lambda1, lambda2=config.lambda2, lambda3=config.lambda3,
            )
            f_entry = subobjective(ctx, pairs[t].W, pairs[t].H)
            base = current - f_entry
            pair, sub_trace, n_iter = solve_subproblem(ctx, pairs[t].W, pairs[t].H, config)
            pairs[t] = pair
            for k, f in enumerate(sub_trace):
                trace.append(base + float(f))
                index.append((s, t, 1 + (k % 2)))
            current = trace[-1]
            exits.append(SubproblemExit(
                outer=s, scale_index=t, n_iter=int(n_iter),
                kkt=kkt_residual(ctx, pair.W, pair.H) if record_kkt else float("nan"),
                objective=float(sub_trace[-1]) if len(sub_trace) else f_entry,
            ))
        fresh = objective(X, graphs, pairs, config)
        prev = outer_obj[-1]
        outer_obj.append(fresh)
        rel = abs(prev - fresh) / prev if prev > 0 else abs(prev - fresh)
        if rel < config.tol_outer:
            break
    return pairs, np.array(trace), np.array(index, dtype=np.int64), outer_obj, exits, s


def solve_pnmf(X, config=None, graphs=None, scales=None, init=None):
    """Fit one (W_t, H_t) pair per scale by sequential alternating optimization.

    Parameters
    ----------
    X : (p, n) array, nonnegative
        Data with samples as columns.
    config : SolverConfig
    graphs, scales : optional
        Prebuilt graph family and its scale set; built from ``X`` when omitted.
    init : FactorPair, optional
        Shared starting pair; NNDSVDA when omitted.

    Returns
    -------
    MultiScaleFactors
        ``pairs`` are normalized when ``config.normalize_output`` is set;
        ``raw_pairs`` always holds the unnormalized solution.
    """
    config = config or SolverConfig()
    X = validate_data(X)
    n = X.shape[1]
    d = config.latent_dim(n)
    if graphs is None:
        if n == 1:
            scales = ScaleSet(np.array([delta_max(np.zeros((1, 1)), config.margin)]))
            graphs = [build_graph(np.zeros((1, 1)), scales[0], config.alpha)]
        else:
            dist = pairwise_distances(X)
            scales = select_scales(dist, config)
            graphs = graph_family(dist, scales, config.alpha)
    elif scales is None:
        scales = ScaleSet(np.array([g.epsilon for g in graphs]))
    if init is None:
        init = nndsvda_init(X, d)
    elif init.W.shape != (X.shape[0], d) or init.H.shape != (d, n):
        raise ValidationError(f"init shapes {init.W.shape}, {init.H.shape} do not match X and d={d}")
    pairs, trace, index, outer_obj, exits, s = _sequential_solve(X, graphs, config, init)
    out_pairs = [normalize_factors(pr) for pr in pairs] if config.normalize_output else pairs
    return MultiScaleFactors(
        scales=scales, pairs=out_pairs, objective_trace=trace, outer_iterations=s,
        outer_objectives=outer_obj, raw_pairs=pairs, trace_index=index, exits=exits,
        config=config,
    )


def _single_scale(X, d, graph, config, return_trace):
    X = validate_data(X)
    config = replace(config, d=d)
    init = nndsvda_init(X, d)
    pairs, trace, _, _, _, _ = _sequential_solve(X, [graph], config, init, record_kkt=False)
    pair = normalize_factors(pairs[0]) if config.normalize_output else pairs[0]
    return (pair, trace) if return_trace else pair


def solve_nmf(X, d, config=None, return_trace=False):
    """Plain Frobenius NMF through the same update machinery (all regularizers off)."""
    config = replace(config or SolverConfig(), lambda1=0.0, lambda2=0.0, lambda3=0.0)
    X = validate_data(X)
    n = X.shape[1]
    empty = ScaleGraph(epsilon=1.0, alpha=config.alpha, adjacency=np.zeros((n, n)), degree=np.zeros(n))
    return _single_scale(X, d, empty, config, return_trace)


def solve_gnmf(X, d, lam, graph, config=None, return_trace=False):
    """Graph-regularized NMF: fit plus ``lam * Tr(H L H^T)`` for one caller-chosen graph."""
    config = replace(config or SolverConfig(), lambda1=float(lam), lambda2=0.0, lambda3=0.0)
    return _single_scale(X, d, graph, config, return_trace)
