#!/usr/bin/env python3
"""Benchmark the admissible-path kernels: numba backend vs pure Python.

Builds a ring-lattice connectome with jittered fiber lengths (deterministic,
seeded), runs the full cumulative build with each backend, verifies the
outputs are bit-identical, and prints the timings.

Usage:
    python benchmarks/bench_paths.py [--n 400] [--degree 3] [--r-c 6.5] [--repeat 3]
"""

import argparse
import time

import numpy as np

from tauspread import graphs
from tauspread._pathcore import get_accumulator
from tauspread.io import RawConnectome


def ring_lattice(n, degree, rng):
    edges = []
    for i in range(n):
        for k in range(1, degree + 1):
            j = (i + k) % n
            a, b = min(i, j), max(i, j)
            length = 1.0 + 0.2 * k + float(rng.uniform(-0.05, 0.05))
            count = float(rng.uniform(1.0, 8.0))
            edges.append((a, b, count, length))
    edges = sorted(set(edges))
    return RawConnectome(
        labels=tuple(f"v{i}" for i in range(n)),
        edge_index=np.array([[e[0], e[1]] for e in edges], dtype=np.int64),
        fiber_count=np.array([e[2] for e in edges]),
        fiber_length=np.array([e[3] for e in edges]),
    )


def time_backend(raw, r_c, backend, repeat):
    # warm-up compiles the numba kernel outside the timed region
    get_accumulator(backend)
    graphs.cumulative_build(raw, r_c, backend=backend)
    best = np.inf
    result = None
    for _ in range(repeat):
        start = time.perf_counter()
        result = graphs.cumulative_build(raw, r_c, backend=backend)
        best = min(best, time.perf_counter() - start)
    return best, result


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=400, help="vertex count")
    parser.add_argument("--degree", type=int, default=3, help="ring neighbors per side")
    parser.add_argument("--r-c", type=float, default=6.5, help="admissibility threshold")
    parser.add_argument("--repeat", type=int, default=3, help="timed repetitions (best-of)")
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    raw = ring_lattice(args.n, args.degree, rng)
    print(f"graph: {raw.vertex_count} vertices, {raw.edge_count} edges, r_c={args.r_c}")

    t_py, (g_py, d_py) = time_backend(raw, args.r_c, "python", args.repeat)
    t_nb, (g_nb, d_nb) = time_backend(raw, args.r_c, "numba", args.repeat)

    identical = (np.array_equal(g_py.weights, g_nb.weights)
                 and np.array_equal(d_py.d, d_nb.d))
    paths_hint = float(g_py.weights.sum())
    print(f"python backend: {t_py:8.3f} s")
    print(f"numba backend:  {t_nb:8.3f} s")
    print(f"speedup:        {t_py / t_nb:8.1f}x")
    print(f"outputs bit-identical: {identical} (weight checksum {paths_hint:.6g})")
    if not identical:
        raise SystemExit("backend outputs diverged")


if __name__ == "__main__":
    main()
