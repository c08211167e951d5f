"""Command-line front end.

Subcommands: ``gen``, ``scales``, ``factorize``, ``evaluate``, ``verify``.
Exit codes: 0 success, 1 validation failure, 2 I/O or parse error.
``PNMF_THREADS`` caps BLAS threads (1 is the deterministic reference).
"""
import argparse
import contextlib
import glob
import json
import math
import os
import sys
import time

import numpy as np

from . import __version__, kernels
from .datagen import concentric_circles, gaussian_blobs
from .errors import InputFormatError, PNMFError, ValidationError
from .evaluation import increment_analysis, sweep_scales
from .fileio import (load_data, read_labels, read_manifest, read_matrix, read_vector,
                     sha256_file, write_labels, write_manifest, write_matrix, write_vector)
from .numerics import pairwise_distances
from .persistence import (ScaleSet, canonical_scale_set, compute_h0_diagram, delta_max,
                          distance_scale_set)
from .scalegraph import graph_family
from .solver import (FactorPair, MultiScaleFactors, SolverConfig, SubproblemExit,
                     solve_pnmf)
from .validation import (verify_increment_bounds, verify_laplacian_lipschitz, verify_scale_set,
                         verify_solver, verify_spectral)

CHECKS = ("scale", "lipschitz", "spectral", "solver", "bounds")


class CommandFailed(Exception):
    """Raised by a command whose checks ran but did not pass (exit code 1)."""


# ------------------------------------------------------------------ helpers

@contextlib.contextmanager
def thread_limit():
    value = os.environ.get("PNMF_THREADS")
    if not value:
        yield
        return
    try:
        limit = int(value)
    except ValueError:
        raise ValidationError(f"PNMF_THREADS must be an integer, got {value!r}") from None
    from threadpoolctl import threadpool_limits
    with threadpool_limits(limits=limit):
        yield


def _mkdir(path):
    os.makedirs(path, exist_ok=True)
    if not os.access(path, os.W_OK):
        raise PermissionError(13, "output directory is not writable", path)


def _manifest(command, args, inputs, outputs, out_dir, started, extra=None):
    m = dict(
        command=command,
        argv=sys.argv[1:],
        tool_version=__version__,
        backend=kernels.BACKEND,
        inputs={p: sha256_file(p) for p in inputs},
        outputs={name: sha256_file(os.path.join(out_dir, name)) for name in outputs},
        wall_clock_seconds=round(time.perf_counter() - started, 6),
        threads=os.environ.get("PNMF_THREADS"),
    )
    if extra:
        m.update(extra)
    write_manifest(os.path.join(out_dir, "manifest.json"), m)
    return m


def _add_data_args(p, required=True):
    p.add_argument("--data", required=required, help="data CSV (no header)")
    p.add_argument("--orientation", choices=("samples-rows", "features-rows"), default="samples-rows")
    p.add_argument("--log1p", action="store_true", help="apply log(1 + x) before anything else")
    p.add_argument("--top-variance-genes", type=int, default=None, metavar="K",
                   help="keep the K highest-variance features")


def _load(args, path=None):
    return load_data(path or args.data, orientation=args.orientation, log1p=args.log1p,
                     top_variance_genes=args.top_variance_genes)


def _add_solver_args(p):
    g = p.add_argument_group("solver")
    g.add_argument("--preset", choices=("simulation", "clustering"), default=None)
    g.add_argument("--d", type=int, default=None)
    g.add_argument("--lambda1", type=float, default=None)
    g.add_argument("--lambda2", type=float, default=None)
    g.add_argument("--lambda3", type=float, default=None)
    g.add_argument("--alpha", type=float, default=None)
    g.add_argument("--no-geom", action="store_true", help="same as --lambda1 0")
    g.add_argument("--no-smooth", action="store_true", help="same as --lambda2 0")
    g.add_argument("--no-anchor", action="store_true", help="same as --lambda3 0")
    g.add_argument("--scale-mode", choices=("canonical", "uds", "rds", "mss", "file"), default=None)
    g.add_argument("--scales-file", default=None, help="one scale per line, for --scale-mode file")
    g.add_argument("--max-scales", type=int, default=None)
    g.add_argument("--margin", type=float, default=None)
    g.add_argument("--tol-inner", type=float, default=None)
    g.add_argument("--tol-outer", type=float, default=None)
    g.add_argument("--max-inner", type=int, default=None)
    g.add_argument("--max-outer", type=int, default=None)
    g.add_argument("--seed", type=int, default=None)


def build_config(args):
    """Preset first, then explicit flags, then ablation switches."""
    over = {}
    for name in ("d", "lambda1", "lambda2", "lambda3", "alpha", "max_scales", "margin",
                 "tol_inner", "tol_outer", "max_inner", "max_outer", "seed"):
        v = getattr(args, name, None)
        if v is not None:
            over[name] = v
    mode = getattr(args, "scale_mode", None)
    if mode == "file":
        if not args.scales_file:
            raise ValidationError("--scale-mode file needs --scales-file")
        over["scale_mode"] = "explicit"
        over["scales"] = tuple(float(s) for s in read_vector(args.scales_file))
    elif mode is not None:
        over["scale_mode"] = mode
    if getattr(args, "no_geom", False):
        over["lambda1"] = 0.0
    if getattr(args, "no_smooth", False):
        over["lambda2"] = 0.0
    if getattr(args, "no_anchor", False):
        over["lambda3"] = 0.0
    if args.preset == "simulation":
        return SolverConfig.simulation(**over)
    if args.preset == "clustering":
        return SolverConfig.clustering(**over)
    return SolverConfig(**over)


def _config_from_manifest(m):
    cfg = dict(m["config"])
    if cfg.get("scales") is not None:
        cfg["scales"] = tuple(cfg["scales"])
    return SolverConfig(**cfg)


# ------------------------------------------------------------------- reports

def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def format_blocks(records):
    """Flat ``key=value`` blocks separated by blank lines."""
    out = []
    for rec in records:
        out.append("\n".join(f"{k}={_fmt(v)}" for k, v in rec.items()))
    return "\n\n".join(out) + "\n"


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.floating, float)):
        f = float(v)
        return f if math.isfinite(f) else str(f)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def _emit(text, out_path):
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ------------------------------------------------------------------ commands

def cmd_gen(args):
    started = time.perf_counter()
    if args.generator == "circles":
        radii = tuple(float(r) for r in args.radii.split(","))
        ds = concentric_circles(seed=args.seed, radii=radii, points_per_circle=args.points_per_circle,
                                noise=args.noise, ambient_noise=args.ambient_noise,
                                ambient_dims=args.ambient_dims)
    else:
        ds = gaussian_blobs(k=args.k, n_per=args.n_per, dim=args.dim, separation=args.separation,
                            sigma=args.sigma, seed=args.seed)
    _mkdir(args.out)
    write_matrix(os.path.join(args.out, "data.csv"), ds.X.T)
    write_labels(os.path.join(args.out, "labels.csv"), ds.labels)
    _manifest("gen", args, [], ["data.csv", "labels.csv"], args.out, started,
              dict(seeds=dict(data=args.seed), generator=ds.meta))
    return 0


def cmd_scales(args):
    started = time.perf_counter()
    X, prep = _load(args)
    dist = pairwise_distances(X)
    dmax = delta_max(dist, args.margin)
    diag = compute_h0_diagram(dist, dmax)
    canon = canonical_scale_set(diag)
    delta = distance_scale_set(dist, dmax)
    _mkdir(args.out)
    src = os.path.basename(args.data)
    prov = f"source={src} n={X.shape[1]} p={X.shape[0]} margin={args.margin!r} delta_max={dmax!r}"
    write_vector(os.path.join(args.out, "deaths.csv"), diag.deaths, f"H0 death times, ascending\n{prov}")
    write_vector(os.path.join(args.out, "lambda_star.csv"), canon.scales, f"canonical scale set\n{prov}")
    write_vector(os.path.join(args.out, "delta_star.csv"), delta.scales, f"distance scale set\n{prov}")
    _manifest("scales", args, [args.data], ["deaths.csv", "lambda_star.csv", "delta_star.csv"],
              args.out, started, dict(preprocessing=prep, margin=args.margin))
    return 0


def write_run(out_dir, factors, X):
    """Write per-scale factors, scales and the objective trace; returns the list of file names."""
    _mkdir(out_dir)
    for old in glob.glob(os.path.join(out_dir, "[HW]_*.csv")):
        os.remove(old)
    names = []
    for t, pr in enumerate(factors.pairs, start=1):
        for kind, M in (("H", pr.H.T), ("W", pr.W)):
            name = f"{kind}_{t:04d}.csv"
            write_matrix(os.path.join(out_dir, name), M)
            names.append(name)
    write_vector(os.path.join(out_dir, "scales.csv"), factors.scales.scales, "epsilon_t, ascending; row t is H_t")
    names.append("scales.csv")
    idx = factors.trace_index
    path = os.path.join(out_dir, "objective_trace.csv")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("# outer,scale,half,objective  (scale=0 marks the initial value; half 1=H, 2=W)\n")
        for (s, t, h), v in zip(idx, factors.objective_trace):
            fh.write(f"{s},{t + 1},{h},{'%.17g' % v}\n")
    names.append("objective_trace.csv")
    path = os.path.join(out_dir, "exits.csv")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("# outer,scale,n_iter,kkt,subobjective\n")
        for e in factors.exits:
            fh.write(f"{e.outer},{e.scale_index + 1},{e.n_iter},{'%.17g' % e.kkt},{'%.17g' % e.objective}\n")
    names.append("exits.csv")
    return names


def load_run(run_dir, trace_path=None):
    """Rebuild a :class:`MultiScaleFactors` (normalized pairs only) from a run directory."""
    m = read_manifest(run_dir)
    config = _config_from_manifest(m)
    scales = ScaleSet(read_vector(os.path.join(run_dir, "scales.csv")))
    pairs = []
    for t in range(1, len(scales) + 1):
        H = read_matrix(os.path.join(run_dir, f"H_{t:04d}.csv")).T
        W = read_matrix(os.path.join(run_dir, f"W_{t:04d}.csv"))
        pairs.append(FactorPair(W=W, H=np.ascontiguousarray(H)))
    T = read_matrix(trace_path or os.path.join(run_dir, "objective_trace.csv"))
    E = read_matrix(os.path.join(run_dir, "exits.csv"))
    exits = [SubproblemExit(outer=int(r[0]), scale_index=int(r[1]) - 1, n_iter=int(r[2]),
                            kkt=float(r[3]), objective=float(r[4])) for r in E]
    idx = np.column_stack([T[:, 0], T[:, 1] - 1, T[:, 2]]).astype(np.int64)
    return MultiScaleFactors(
        scales=scales, pairs=pairs, objective_trace=T[:, 3], outer_iterations=int(T[-1, 0]),
        trace_index=idx, exits=exits, config=config,
    ), m


def cmd_factorize(args):
    started = time.perf_counter()
    config = build_config(args)
    X, prep = _load(args)
    truth = None
    if args.labels:
        truth = read_labels(args.labels)
        if truth.size != X.shape[1]:
            raise ValidationError(f"labels have length {truth.size} but data has {X.shape[1]} samples")
    factors = solve_pnmf(X, config)
    names = write_run(args.out, factors, X)
    inputs = [args.data] + ([args.labels] if args.labels else []) + \
        ([args.scales_file] if args.scales_file else [])
    zero_cols = {str(t + 1): list(p.zero_columns) for t, p in enumerate(factors.pairs) if p.zero_columns}
    _manifest("factorize", args, inputs, names, args.out, started, dict(
        config=config.to_dict(), seeds=dict(solver=config.seed), preprocessing=prep,
        data_path=os.path.abspath(args.data), labels_path=os.path.abspath(args.labels) if args.labels else None,
        outer_iterations=factors.outer_iterations, n_scales=len(factors.scales),
        zero_w_columns=zero_cols,
    ))
    return 0


def _load_recorded(m, data_path):
    prep = m.get("preprocessing", {})
    return load_data(data_path, orientation=prep.get("orientation", "samples-rows"),
                     log1p=prep.get("log1p", False), top_variance_genes=prep.get("top_variance_genes"))


def cmd_evaluate(args):
    factors, m = load_run(args.run)
    truth = read_labels(args.labels)
    n = factors.pairs[0].H.shape[1]
    if truth.size != n:
        raise ValidationError(f"labels have length {truth.size} but the run has {n} samples")
    k = args.k or int(np.unique(truth).size)
    reports, best = sweep_scales(factors, truth, k, restarts=args.restarts, seed=args.seed)
    eps = factors.scales.scales
    scale_recs = [dict(record="scale", scale_index=r.scale_index + 1, epsilon=float(eps[r.scale_index]),
                       ari=r.ari, nmi=r.nmi, purity=r.purity, accuracy=r.accuracy, mean=r.mean)
                  for r in reports]
    b = reports[best]
    best_rec = dict(record="best", scale_index=best + 1, epsilon=float(eps[best]), ari=b.ari, nmi=b.nmi,
                    purity=b.purity, accuracy=b.accuracy, mean=b.mean)
    corr_recs, inc_recs = [], []
    data_path = args.data or m.get("data_path")
    if len(eps) >= 4 and data_path:
        X, _ = _load_recorded(m, data_path)
        graphs = graph_family(pairwise_distances(X), eps, factors.config.alpha)
        inc = increment_analysis(factors, graphs, eps)
        for name, res in inc.correlations.items():
            if isinstance(res, str):
                corr_recs.append(dict(record="correlation", pair=name, r="nan", p="nan", note=res))
            else:
                corr_recs.append(dict(record="correlation", pair=name, r=res.r, p=res.p_value))
        for t in range(inc.delta_eps.size):
            inc_recs.append(dict(record="increment", index=t + 1, delta_eps=inc.delta_eps[t],
                                 delta_L=inc.delta_L[t], delta_H=inc.delta_H[t]))
    if args.json:
        text = json.dumps(_jsonable(dict(scales=scale_recs, best=best_rec, correlations=corr_recs,
                                         increments=inc_recs)), indent=2) + "\n"
    else:
        text = format_blocks(scale_recs + [best_rec] + corr_recs + inc_recs)
    _emit(text, args.out)
    return 0


def _report_record(rep):
    rec = dict(record="check", name=rep.name, passed=rep.passed, status=rep.status, instance=rep.instance)
    for k, v in rep.observed.items():
        rec[f"observed.{k}"] = v
    for k, v in rep.tolerances.items():
        rec[f"tolerance.{k}"] = v
    for i, note in enumerate(rep.notes):
        rec[f"note.{i + 1}"] = note
    return rec


def run_checks(X, checks, config, factors=None, grid_size=1000, samples_per_interval=3):
    dist = pairwise_distances(X)
    dmax = delta_max(dist, config.margin)
    canon = canonical_scale_set(compute_h0_diagram(dist, dmax))
    reports = []
    if "scale" in checks:
        reports.append(verify_scale_set(dist, dmax, grid_size=grid_size))
    if "lipschitz" in checks:
        reports.append(verify_laplacian_lipschitz(dist, canon, samples_per_interval, config.alpha,
                                                  seed=config.seed))
    if "spectral" in checks:
        reports.append(verify_spectral(dist, canon, config.alpha))
    if "solver" in checks or "bounds" in checks:
        if factors is None:
            factors = solve_pnmf(X, config)
        if "solver" in checks:
            reports.append(verify_solver(factors, X))
        if "bounds" in checks:
            graphs = graph_family(dist, factors.scales, config.alpha)
            reports.append(verify_increment_bounds(factors, graphs, config, X))
    return sorted(reports, key=lambda r: r.name)


def cmd_verify(args):
    checks = [c.strip() for c in args.checks.split(",") if c.strip()]
    unknown = sorted(set(checks) - set(CHECKS))
    if unknown:
        raise ValidationError(f"unknown checks {unknown}; choose from {','.join(CHECKS)}")
    factors = None
    if args.run:
        factors, m = load_run(args.run, trace_path=args.trace)
        config = factors.config
        data_path = args.data or m.get("data_path")
        if data_path is None:
            raise ValidationError("--data is needed when the run manifest has no data path")
        X, _ = _load_recorded(m, data_path) if not args.data else _load(args)
    else:
        if args.data is None:
            raise ValidationError("verify needs --data or --run")
        config = build_config(args)
        X, _ = _load(args)
    reports = run_checks(X, checks, config, factors, args.grid_size, args.samples_per_interval)
    if args.json:
        text = json.dumps(_jsonable([r.to_dict() for r in reports]), indent=2) + "\n"
    else:
        text = format_blocks([_report_record(r) for r in reports])
    _emit(text, args.out)
    if not all(r.passed for r in reports):
        raise CommandFailed("; ".join(f"{r.name} failed" for r in reports if not r.passed))
    return 0


# -------------------------------------------------------------------- parser

def build_parser():
    ap = argparse.ArgumentParser(prog="pnmf", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"pnmf {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="write a synthetic dataset (data.csv, labels.csv)")
    p.add_argument("--generator", choices=("circles", "blobs"), default="circles")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--radii", default="1,2,3,4")
    p.add_argument("--points-per-circle", type=int, default=20)
    p.add_argument("--noise", type=float, default=0.05)
    p.add_argument("--ambient-noise", type=float, default=0.05)
    p.add_argument("--ambient-dims", type=int, default=97)
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--n-per", type=int, default=50)
    p.add_argument("--dim", type=int, default=10)
    p.add_argument("--separation", type=float, default=10.0)
    p.add_argument("--sigma", type=float, default=1.0)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("scales", help="H0 death times and the canonical / distance scale sets")
    _add_data_args(p)
    p.add_argument("--margin", type=float, default=0.05)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_scales)

    p = sub.add_parser("factorize", help="multi-scale factorization into a run directory")
    _add_data_args(p)
    p.add_argument("--labels", default=None)
    p.add_argument("--out", required=True)
    _add_solver_args(p)
    p.set_defaults(func=cmd_factorize)

    p = sub.add_parser("evaluate", help="cluster every scale of a run and score it against labels")
    p.add_argument("--run", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--data", default=None, help="override the data path recorded in the manifest")
    p.add_argument("--k", type=int, default=None, help="clusters (default: distinct labels)")
    p.add_argument("--restarts", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", action="store_true")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("verify", help="run the structural checks and report observed constants")
    _add_data_args(p, required=False)
    p.add_argument("--run", default=None, help="check a finished run instead of solving afresh")
    p.add_argument("--trace", default=None, help="replacement objective_trace.csv for --run")
    p.add_argument("--checks", default=",".join(CHECKS))
    p.add_argument("--grid-size", type=int, default=1000)
    p.add_argument("--samples-per-interval", type=int, default=3)
    p.add_argument("--json", action="store_true")
    p.add_argument("--out", default=None)
    _add_solver_args(p)
    p.set_defaults(func=cmd_verify)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        with thread_limit():
            return args.func(args)
    except CommandFailed as exc:
        print(f"pnmf: check failed: {exc}", file=sys.stderr)
        return 1
    except ValidationError as exc:
        print(f"pnmf: invalid input: {exc}", file=sys.stderr)
        return 1
    except InputFormatError as exc:
        print(f"pnmf: parse error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        where = exc.filename if exc.filename is not None else ""
        print(f"pnmf: I/O error: {where}: {exc.strerror or exc}", file=sys.stderr)
        return 2
    except PNMFError as exc:
        print(f"pnmf: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
