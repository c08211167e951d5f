"""Executable checks of the structural guarantees: scale sets, Laplacian regularity, spectra, solver behavior.

Each check returns a :class:`TheoremReport`. ``status`` is ``"pass"``,
``"fail"`` or ``"hypothesis-not-met"``; only the last one carries
``passed=True`` without asserting anything.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateInputError
from .numerics import frobenius_norm, pearson, sym_eigenvalues
from .persistence import (DEFAULT_MARGIN, betti0_curve, canonical_scale_set, compute_h0_diagram,
                          distance_scale_set)
from .scalegraph import DEFAULT_ALPHA, NULLITY_TOL, build_graph, graph_family, nullity
from .solver import ScaleContext, kkt_residual, normalize_factors

TRACE_SLACK = 1e-12
EIG_SLACK = 1e-8
KKT_FACTOR = 1e-3
STABILITY_FACTOR = 10.0


@dataclass
class TheoremReport:
    name: str
    passed: bool
    status: str
    observed: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    instance: str = ""
    notes: list = field(default_factory=list)

    def to_dict(self):
        return dict(name=self.name, passed=self.passed, status=self.status,
                    observed=self.observed, tolerances=self.tolerances,
                    instance=self.instance, notes=list(self.notes))


def _report(name, ok, observed, tolerances, instance, notes=()):
    return TheoremReport(name=name, passed=bool(ok), status="pass" if ok else "fail",
                         observed=observed, tolerances=tolerances, instance=instance,
                         notes=list(notes))


# ------------------------------------------------------------------ scale sets

def _probe_points(dist, delta_max, grid_size):
    """Uniform grid on (0, delta_max] plus one probe inside every constancy interval of the filtration.

    The component count only changes at pairwise distances, so the Delta*
    values themselves and the midpoints between them hit every interval.
    """
    grid = np.linspace(delta_max / grid_size, delta_max, grid_size)
    delta = distance_scale_set(dist, delta_max).scales
    mids = 0.5 * (delta[1:] + delta[:-1])
    return np.unique(np.concatenate([grid, delta, mids, [0.5 * delta[0]]]))


def verify_scale_set(dist, delta_max, grid_size=1000, scales=None):
    """Sufficiency, minimality and jump-point placement of a scale set (canonical by default)."""
    n = dist.shape[0]
    if scales is None:
        scales = canonical_scale_set(compute_h0_diagram(dist, delta_max)).scales
    scales = np.asarray(getattr(scales, "scales", scales), dtype=np.float64)
    probes = _probe_points(dist, delta_max, grid_size)
    needed = set(betti0_curve(dist, probes).tolist())
    at_scales = betti0_curve(dist, scales).tolist()
    realized = set(at_scales)
    missing = sorted(needed - realized)
    sufficient = not missing

    redundant = []
    for i in range(scales.size):
        others = set(at_scales[:i] + at_scales[i + 1:])
        if needed <= others:
            redundant.append(i)
    minimal = sufficient and not redundant

    # each non-final element must be a jump point: the count drops right after it
    delta = distance_scale_set(dist, delta_max).scales
    not_jumps = []
    for i, e in enumerate(scales[:-1]):
        nxt = delta[np.searchsorted(delta, e, side="right")] if e < delta[-1] else None
        if nxt is None or betti0_curve(dist, [nxt])[0] == at_scales[i]:
            not_jumps.append(i)

    ok = sufficient and minimal and not not_jumps
    return _report(
        "scale_set", ok,
        observed=dict(n_points=n, n_scales=int(scales.size), n_probes=int(probes.size),
                      missing_counts=len(missing), redundant_elements=len(redundant),
                      non_jump_elements=len(not_jumps)),
        tolerances=dict(grid_size=grid_size),
        instance=f"n={n}, delta_max={delta_max:.6g}",
        notes=[f"sufficient={sufficient}", f"minimal={minimal}"],
    )


# ------------------------------------------------------------- Laplacian regularity

def adjacent_ratios(graphs):
    eps = np.array([g.epsilon for g in graphs])
    dL = np.array([frobenius_norm(graphs[t + 1].laplacian - graphs[t].laplacian)
                   for t in range(len(graphs) - 1)])
    return np.diff(eps), dL


def verify_laplacian_lipschitz(dist, scales, samples_per_interval=3, alpha=DEFAULT_ALPHA,
                               max_intervals=500, seed=0):
    """Lipschitz ratios of L(eps) inside distance-scale intervals and across consecutive given scales.

    Passes when both maxima are finite and, inside every sampled interval,
    the largest ratio is at most 10x that interval's median.
    """
    scales = np.asarray(getattr(scales, "scales", scales), dtype=np.float64)
    top = float(np.max(dist)) if dist.size else 0.0
    dmax = float(scales[-1]) if scales[-1] > top else top * (1.0 + DEFAULT_MARGIN)
    delta = distance_scale_set(dist, dmax).scales
    k_all = np.arange(delta.size - 1)
    rng = np.random.default_rng(seed)
    if max_intervals is not None and k_all.size > max_intervals:
        k_all = np.sort(rng.choice(k_all, size=max_intervals, replace=False))
    fracs = np.arange(1, samples_per_interval + 1) / samples_per_interval
    within_max = 0.0
    worst_spread = 0.0
    for k in k_all:
        lo, hi = delta[k], delta[k + 1]
        pts = lo + fracs * (hi - lo)
        Ls = [build_graph(dist, e, alpha).laplacian for e in pts]
        ratios = []
        for i in range(len(pts)):
            for j in range(i + 1, len(pts)):
                ratios.append(frobenius_norm(Ls[i] - Ls[j]) / abs(pts[i] - pts[j]))
        ratios = np.array(ratios)
        if ratios.size:
            within_max = max(within_max, float(ratios.max()))
            med = float(np.median(ratios))
            if med > 0:
                worst_spread = max(worst_spread, float(ratios.max() / med))
    graphs = graph_family(dist, scales, alpha)
    d_eps, d_L = adjacent_ratios(graphs)
    adj = d_L / d_eps if d_eps.size else np.array([0.0])
    adjacent_max = float(adj.max())
    adjacent_spread = float(adj.max() / np.median(adj)) if np.median(adj) > 0 else math.inf
    observed = dict(within_interval_max_ratio=within_max, within_interval_max_over_median=worst_spread,
                    adjacent_max_ratio=adjacent_max, adjacent_max_over_median=adjacent_spread,
                    intervals_sampled=int(k_all.size))
    if d_eps.size >= 3:
        try:
            pr = pearson(d_eps, d_L)
            observed.update(pearson_eps_L=pr.r, pearson_eps_L_p=pr.p_value)
        except DegenerateInputError:
            pass
    ok = (math.isfinite(within_max) and math.isfinite(adjacent_max)
          and worst_spread <= STABILITY_FACTOR)
    return _report("laplacian_lipschitz", ok, observed,
                   dict(stability_factor=STABILITY_FACTOR, samples_per_interval=samples_per_interval),
                   f"n={dist.shape[0]}, scales={scales.size}, alpha={alpha}")


# --------------------------------------------------------------------- spectra

def spectra(graphs):
    return [sym_eigenvalues(g.laplacian) for g in graphs]


def verify_spectral(dist, scales, alpha=DEFAULT_ALPHA, nullity_tol=NULLITY_TOL):
    """Eigenvalue Lipschitz constant, eigenvalue monotonicity and strict nullity decrease along the scales."""
    scales = np.asarray(getattr(scales, "scales", scales), dtype=np.float64)
    graphs = graph_family(dist, scales, alpha)
    eigs = spectra(graphs)
    null = [nullity(g.laplacian, nullity_tol) for g in graphs]
    worst_mono = 0.0
    C = 0.0
    for t in range(len(graphs) - 1):
        diff = eigs[t + 1] - eigs[t]
        worst_mono = max(worst_mono, float(np.max(-diff)))
        C = max(C, float(np.max(np.abs(diff)) / (scales[t + 1] - scales[t])))
    drops = np.diff(-np.array(null)) if len(null) > 1 else np.array([1])
    mono_ok = worst_mono <= EIG_SLACK
    null_ok = bool(np.all(drops >= 1))
    lip_ok = math.isfinite(C)
    ok = mono_ok and null_ok and lip_ok
    return _report(
        "spectral", ok,
        observed=dict(eigenvalue_lipschitz_C=C, max_monotonicity_violation=worst_mono,
                      min_nullity_drop=int(drops.min()) if drops.size else 0,
                      max_nullity_drop=int(drops.max()) if drops.size else 0,
                      nullity_first=null[0], nullity_last=null[-1], n_scales=int(scales.size)),
        tolerances=dict(eigenvalue_slack=EIG_SLACK, nullity_tol=nullity_tol),
        instance=f"n={dist.shape[0]}, alpha={alpha}",
        notes=[f"monotone={mono_ok}", f"nullity_strict={null_ok}"],
    )


# ---------------------------------------------------------------------- solver

def trace_violations(trace, slack=TRACE_SLACK, scale=0.0):
    """Indices where the trace rises by more than ``slack * max(|f_t|, scale)``.

    ``scale`` is an absolute floor for traces that reach zero; relative
    slack alone flags pure roundoff there.
    """
    trace = np.asarray(trace, dtype=np.float64)
    if trace.size < 2:
        return np.zeros(0), 0.0
    excess = trace[1:] - trace[:-1] - slack * np.maximum(np.abs(trace[:-1]), scale)
    rel = (trace[1:] - trace[:-1]) / np.maximum(np.abs(trace[:-1]), 1e-300)
    return np.flatnonzero(excess > 0), float(rel.max())


def verify_solver(factors, X, trace=None, kkt_tol_inner=1e-8):
    """Half-step monotonicity of the recorded trace; KKT residual at subproblem exits when tightly converged.

    ``trace`` overrides ``factors.objective_trace`` (used for negative controls).
    """
    trace = factors.objective_trace if trace is None else np.asarray(trace, dtype=np.float64)
    bad, worst = trace_violations(trace, scale=float(np.sum(np.square(X))))
    observed = dict(trace_length=int(len(trace)), monotonicity_violations=int(bad.size),
                    max_relative_increase=worst)
    notes = []
    kkt_limit = KKT_FACTOR * (1.0 + frobenius_norm(X))
    tol_inner = factors.config.tol_inner if factors.config is not None else math.inf
    kkts = [e.kkt for e in factors.exits if math.isfinite(e.kkt)]
    if kkts:
        observed["max_exit_kkt"] = float(max(kkts))
    kkt_ok = True
    if tol_inner <= kkt_tol_inner and kkts:
        kkt_ok = max(kkts) <= kkt_limit
    else:
        notes.append(f"KKT clause not asserted (tol_inner={tol_inner:g} > {kkt_tol_inner:g})")
    ok = bad.size == 0 and kkt_ok
    return _report("solver", ok, observed,
                   dict(trace_slack=TRACE_SLACK, kkt_limit=kkt_limit),
                   f"scales={len(factors.pairs)}, outer={factors.outer_iterations}", notes)


# ------------------------------------------------------------ embedding increments

def increment_constants(X, Hs, d):
    """C_X, C_H, ell and the composite constant C of the embedding-increment bound."""
    n = X.shape[1]
    C_X = frobenius_norm(X.T @ X)
    C_H = max(frobenius_norm(H) for H in Hs)
    ell = min(float(sym_eigenvalues(H @ H.T)[0]) for H in Hs)
    if ell <= 0:
        return dict(C_X=C_X, C_H=C_H, ell=ell, C=math.inf, C1=math.inf, C2=math.inf)
    C1 = 1.0 / ell + 2.0 * C_H ** 2 / ell ** 2
    C2 = C1 * C_H + C_H / ell
    C = (C1 * math.sqrt(max(n - d, 0)) + C2 * C_H / ell) * C_X
    return dict(C_X=C_X, C_H=C_H, ell=ell, C=C, C1=C1, C2=C2)


def decay_rate(b):
    """Green's-function ratio (1 - sqrt(1 - 4 b^2)) / (2 b); 0 in the b -> 0 limit."""
    if b == 0:
        return 0.0
    return 2.0 * b / (1.0 + math.sqrt(1.0 - 4.0 * b * b))  # cancellation-free form


def verify_increment_bounds(factors, graphs, config, X, active_tol=0.0, use="normalized"):
    """Evaluate both sides of the uniform and pointwise increment bounds on the computed solution.

    Asserted only when ``lambda3 > C``, every ``H_t H_t^T`` is positive
    definite and no factor entry sits on the nonnegativity boundary
    (``<= active_tol``); otherwise the outcome is "hypothesis-not-met".

    ``use="normalized"`` evaluates the column-normalized pairs. The fit term
    is invariant under ``(W / s, s H)`` while every penalty shrinks with
    ``s``, so raw iterates drift toward ``H -> 0`` and ``ell`` with them;
    ``use="raw"`` evaluates them anyway.
    """
    if use not in ("normalized", "raw"):
        raise ValueError("use must be 'normalized' or 'raw'")
    pairs = factors.raw_pairs if use == "raw" and factors.raw_pairs else factors.pairs
    if use == "normalized" and factors.config is not None and not factors.config.normalize_output:
        pairs = [normalize_factors(p) for p in pairs]
    Hs = [p.H for p in pairs]
    d = Hs[0].shape[0]
    lam1, lam2, lam3 = config.lambda1, config.lambda2, config.lambda3
    const = increment_constants(X, Hs, d)
    C = const["C"]
    dH = np.array([frobenius_norm(Hs[t] - Hs[t - 1]) for t in range(1, len(Hs))])
    dL = np.array([frobenius_norm(graphs[t].laplacian - graphs[t - 1].laplacian) for t in range(1, len(graphs))])
    observed = dict(const)
    observed["max_delta_H"] = float(dH.max()) if dH.size else 0.0
    observed["max_delta_L"] = float(dL.max()) if dL.size else 0.0

    kkts = []
    for t, p in enumerate(pairs):
        ctx = ScaleContext(X=X, graph=graphs[t], H_prev=Hs[t - 1] if t > 0 else None,
                           H_next=Hs[t + 1] if t + 1 < len(Hs) else None,
                           lambda1=lam1, lambda2=lam2, lambda3=lam3)
        kkts.append(kkt_residual(ctx, p.W, p.H))
    observed["max_kkt"] = float(max(kkts))

    notes = []
    denom = 2.0 * lam2 + lam3 - C
    if math.isfinite(C) and denom > 0:
        a = lam1 * const["C_H"] / denom
        b = lam2 / denom
        observed.update(a=a, b=b)
        if b < 0.5:
            rho = decay_rate(b)
            observed["rho"] = rho
            amp = a / math.sqrt(1.0 - 4.0 * b * b)
            idx = np.arange(dL.size)
            rhs = np.array([amp * np.sum(rho ** np.abs(t - idx) * dL) for t in idx])
            observed["pointwise_max_lhs_minus_rhs"] = float(np.max(dH - rhs)) if dH.size else 0.0
    if lam3 > C:
        observed["uniform_rhs"] = lam1 * const["C_H"] / (lam3 - C) * observed["max_delta_L"]

    hyp = []
    if not const["ell"] > 0:
        hyp.append("H_t H_t^T singular (rank hypothesis fails)")
    if not lam3 > C:
        hyp.append(f"lambda3={lam3:g} <= C={C:.4g}")
    min_entry = min(min(float(p.W.min()), float(p.H.min())) for p in pairs)
    observed["min_factor_entry"] = min_entry
    if min_entry <= active_tol:
        hyp.append("some nonnegativity constraints are active")
    if hyp:
        notes.extend(hyp)
        return TheoremReport("increment_bounds", True, "hypothesis-not-met", observed,
                             dict(active_tol=active_tol), f"scales={len(Hs)}, d={d}, pairs={use}", notes)
    ok = observed["max_delta_H"] <= observed["uniform_rhs"]
    return _report("increment_bounds", ok, observed, dict(active_tol=active_tol),
                   f"scales={len(Hs)}, d={d}, pairs={use}", notes)
