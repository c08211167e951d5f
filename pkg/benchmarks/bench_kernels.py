"""Time the compiled kernels against the numpy fallback on identical inputs.

Run ``python3 benchmarks/bench_kernels.py [--repeat R] [--json]``. Each
row reports the best of R wall-clock runs per backend and the speedup.
"""
import argparse
import json
import time

import numpy as np

from pnmf.kernels import get_backend
from pnmf.numerics import pairwise_distances
from pnmf.scalegraph import build_graph


def _best(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def jacobi_case(n, rng):
    A = rng.normal(size=(n, n))
    M = np.ascontiguousarray(A + A.T)
    return lambda k: k.jacobi_eigh(M.copy(), 1e-12, 100, True)


def kruskal_case(n, rng):
    D = pairwise_distances(rng.uniform(size=(3, n)))
    ei, ej = np.triu_indices(n, 1)
    w = D[ei, ej]
    order = np.argsort(w, kind="stable")
    ei, ej, w = (np.ascontiguousarray(a[order]) for a in (ei.astype(np.intp), ej.astype(np.intp), w))
    return lambda k: k.kruskal_weights(n, ei, ej, w)


def mu_case(n, rng, p=50, d=4, iters=50):
    X = rng.uniform(size=(p, n))
    D = pairwise_distances(X)
    g = build_graph(D, float(np.median(D[D > 0])))
    W0, H0 = rng.uniform(0.1, 1, size=(p, d)), rng.uniform(0.1, 1, size=(d, n))
    Hp, Hn = rng.uniform(size=(d, n)), rng.uniform(size=(d, n))
    return lambda k: k.mu_subproblem(X, W0.copy(), H0.copy(), g.adjacency, np.ascontiguousarray(g.degree),
                                     Hp, Hn, True, True, 1.0, 1.0, 1.0, 1e-9, 1e-9, 0.0, iters)


CASES = {
    "jacobi_eigh": (jacobi_case, (20, 60, 120)),
    "kruskal_weights": (kruskal_case, (100, 400, 1000)),
    "mu_subproblem": (mu_case, (50, 200)),
}


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--json", action="store_true")
    args = ap.parse_args(argv)
    try:
        compiled = get_backend("compiled")
    except ImportError:
        raise SystemExit("compiled extension not built; run pip install -e . --no-build-isolation")
    python = get_backend("python")
    rows = []
    for name, (make, sizes) in CASES.items():
        for n in sizes:
            fn = make(n, np.random.default_rng(n))
            tc = _best(lambda: fn(compiled), args.repeat)
            tp = _best(lambda: fn(python), args.repeat)
            rows.append(dict(kernel=name, n=n, compiled_s=tc, python_s=tp, speedup=tp / tc))
    if args.json:
        print(json.dumps(rows, indent=2))
    else:
        print(f"{'kernel':<16} {'n':>5} {'compiled [s]':>13} {'python [s]':>11} {'speedup':>8}")
        for r in rows:
            print(f"{r['kernel']:<16} {r['n']:>5} {r['compiled_s']:>13.5f} {r['python_s']:>11.5f} "
                  f"{r['speedup']:>7.1f}x")


if __name__ == "__main__":
    main()
