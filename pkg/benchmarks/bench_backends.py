"""Benchmark the compiled sparse kernel against the numpy fallback.

Generates a random graph, then times the raw row-sum kernel and the full
one-shot preprocessing under each available backend.

    python benchmarks/bench_backends.py --n 20000 --mean-degree 10 --d 128
"""
import argparse
import time

import numpy as np

from egomatch import backend, build_graph
from egomatch.propagation import anonymized_propagate


def random_graph(n, mean_degree, d, seed=0):
    rng = np.random.default_rng(seed)
    m = int(n * mean_degree / 2)
    pairs = rng.integers(0, n, size=(m, 2))
    return build_graph(pairs, rng.normal(size=(n, d)))


def best_of(repeats, fn):
    times = []
    for _ in range(repeats):
        started = time.perf_counter()
        fn()
        times.append(time.perf_counter() - started)
    return min(times)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=20000)
    parser.add_argument("--mean-degree", type=float, default=10.0)
    parser.add_argument("--d", type=int, default=128)
    parser.add_argument("--k", type=int, default=2)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    g = random_graph(args.n, args.mean_degree, args.d)
    v = np.random.default_rng(1).normal(size=(g.n, args.d))
    print(f"graph: n={g.n} edges={g.num_edges} d={args.d} k={args.k}")
    print(f"available backends: {', '.join(backend.available_backends())}\n")

    rows = []
    for name in backend.available_backends():
        with backend.use_backend(name):
            kernel = best_of(args.repeats,
                             lambda: backend.adj_rowsum(g.indptr, g.indices, v))
            prep = best_of(args.repeats,
                           lambda: anonymized_propagate(g, args.k))
        rows.append((name, kernel, prep))

    print(f"{'backend':<10} {'adj_rowsum':>12} {'preprocess':>12}")
    for name, kernel, prep in rows:
        print(f"{name:<10} {kernel:>11.4f}s {prep:>11.4f}s")
    if len(rows) == 2:
        base = {name: (kernel, prep) for name, kernel, prep in rows}
        k_speedup = base["python"][0] / base["compiled"][0]
        p_speedup = base["python"][1] / base["compiled"][1]
        print(f"\ncompiled speedup: {k_speedup:.2f}x kernel, "
              f"{p_speedup:.2f}x preprocess")


if __name__ == "__main__":
    main()
