"""Time the numba kernels against their pure-numpy fallbacks.

    python benchmarks/bench_kernels.py [--nodes 20000] [--degree 80] [--e2e]

``--e2e`` additionally times a short Monte Carlo run in two subprocesses, one
with EGP_DISABLE_NUMBA=1.
"""
import argparse
import os
import subprocess
import sys
import time

import numpy as np

from egp import Graph, kernels
from egp._accel import HAS_NUMBA


def random_graph(n, degree, seed):
    rng = np.random.default_rng(seed)
    m = n * degree // 2
    return Graph.from_edges(rng.integers(0, n, size=(m, 2)), n=n)


def best_of(fn, repeat):
    fn()  # warm-up, includes JIT compile
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


_E2E = """
import time, numpy as np
from egp import Graph, backend, outcomes
from egp.estimation import Design, monte_carlo_bias
rng = np.random.default_rng(0)
g = Graph.from_edges(rng.integers(0, {n}, size=({n} * {d} // 2, 2)), n={n})
monte_carlo_bias(g, Design("linear", 0.025), outcomes.linear(), 2, 0)
t0 = time.perf_counter()
rep = monte_carlo_bias(g, Design("convex", 0.025, 0.2), outcomes.convex_exp(), {reps}, 1)
print(backend(), time.perf_counter() - t0, rep.mean_bias)
"""


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--nodes", type=int, default=20000)
    ap.add_argument("--degree", type=int, default=80)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--e2e", action="store_true")
    ap.add_argument("--reps", type=int, default=100)
    args = ap.parse_args()

    g = random_graph(args.nodes, args.degree, 0)
    rng = np.random.default_rng(1)
    w = rng.random(g.n)
    rows = np.arange(g.n, dtype=np.int64)
    egos = np.sort(rng.choice(g.n, max(2, g.n // 40), replace=False)).astype(np.int64)
    print(f"graph: n={g.n} m={g.m} egos={egos.size} numba={'yes' if HAS_NUMBA else 'no'}")

    cases = [
        ("neighbor_sums", lambda: kernels.neighbor_sums_numpy(g.indptr, g.indices, w, rows),
         (lambda: kernels._neighbor_sums_par(g.indptr, g.indices, w, rows)) if HAS_NUMBA else None),
        ("second_neighbor_pairs", lambda: kernels.second_neighbor_pairs_numpy(g.indptr, g.indices, egos),
         (lambda: kernels._second_neighbor_pairs_nb(g.indptr, g.indices, egos)) if HAS_NUMBA else None),
    ]
    print(f"{'kernel':<24}{'numpy [ms]':>12}{'numba [ms]':>12}{'speedup':>10}")
    for name, slow, fast in cases:
        t_np = best_of(slow, args.repeat)
        if fast is None:
            print(f"{name:<24}{t_np * 1e3:>12.2f}{'-':>12}{'-':>10}")
            continue
        t_nb = best_of(fast, args.repeat)
        print(f"{name:<24}{t_np * 1e3:>12.2f}{t_nb * 1e3:>12.2f}{t_np / t_nb:>9.1f}x")

    if args.e2e:
        script = _E2E.format(n=args.nodes, d=args.degree, reps=args.reps)
        for disable in (False, True):
            env = dict(os.environ)
            env.pop("EGP_DISABLE_NUMBA", None)
            if disable:
                env["EGP_DISABLE_NUMBA"] = "1"
            out = subprocess.run([sys.executable, "-c", script], env=env, capture_output=True,
                                 text=True, check=True).stdout.split()
            print(f"monte carlo ({args.reps} reps) backend={out[0]}: {float(out[1]):.2f}s, mean bias {float(out[2]):.4f}")


if __name__ == "__main__":
    main()
