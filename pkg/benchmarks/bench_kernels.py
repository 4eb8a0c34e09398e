#!/usr/bin/env python3
"""Benchmark the cohort-selection kernels: compiled extension vs numpy
fallback.

The workload mirrors the acceptance sweep: pick the winning proposal for
every size-k combination of the 45-point (price, lead, reliability) grid.

    python benchmarks/bench_kernels.py [--sizes 4,5] [--repeat 3]
"""

import argparse
import itertools
import random
import time

import numpy as np

from chainnet.kernels import available_backends

WEIGHTS = (0.5, 0.3, 0.2)


def grid_attributes():
    rows = [(float(p), float(l), r)
            for p in range(1, 6) for l in range(1, 4) for r in (0.0, 0.5, 1.0)]
    return np.array(rows, dtype=np.float64)


def combinations_of(n, size):
    flat = np.fromiter(itertools.chain.from_iterable(
        itertools.combinations(range(n), size)), dtype=np.int8)
    return flat.reshape(-1, size)


def bench_sweep(backends, sizes, repeat):
    attrs = grid_attributes()
    print(f"sweep_pick_best over the 45-point grid, weights {WEIGHTS}")
    print(f"{'size':>4} {'cohorts':>12} {'backend':>10} {'best (s)':>10} {'cohorts/s':>14}")
    for size in sizes:
        combs = combinations_of(len(attrs), size)
        reference = None
        for name, impl in backends.items():
            best = float("inf")
            for _ in range(repeat):
                t0 = time.perf_counter()
                winners = impl.sweep_pick_best(attrs, combs, *WEIGHTS)
                best = min(best, time.perf_counter() - t0)
            if reference is None:
                reference = winners
            elif not np.array_equal(reference, winners):
                raise SystemExit(f"backend disagreement at size {size}")
            rate = len(combs) / best
            print(f"{size:>4} {len(combs):>12,} {name:>10} {best:>10.4f} {rate:>14,.0f}")


def bench_scalar(backends, repeat):
    rng = random.Random(7)
    cohorts = []
    for _ in range(20_000):
        n = rng.randint(1, 6)
        cohorts.append((
            [rng.uniform(1, 5) for _ in range(n)],
            [float(rng.randint(1, 3)) for _ in range(n)],
            [rng.random() for _ in range(n)],
            list(range(n)),
        ))
    print(f"\npick_best on {len(cohorts):,} random cohorts (sizes 1-6)")
    print(f"{'backend':>10} {'best (s)':>10} {'calls/s':>14}")
    for name, impl in backends.items():
        best = float("inf")
        for _ in range(repeat):
            t0 = time.perf_counter()
            for prices, leads, rels, ranks in cohorts:
                impl.pick_best(prices, leads, rels, ranks, *WEIGHTS)
            best = min(best, time.perf_counter() - t0)
        print(f"{name:>10} {best:>10.4f} {len(cohorts) / best:>14,.0f}")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", default="4,5",
                        help="comma-separated cohort sizes to sweep (default 4,5)")
    parser.add_argument("--repeat", type=int, default=3,
                        help="timing repetitions, best-of (default 3)")
    args = parser.parse_args()
    backends = available_backends()
    print(f"backends available: {', '.join(backends)}")
    sizes = [int(s) for s in args.sizes.split(",") if s]
    bench_sweep(backends, sizes, args.repeat)
    bench_scalar(backends, args.repeat)


if __name__ == "__main__":
    main()
