#!/usr/bin/env python3
"""Compare the numba trajectory sampler against the pure-Python fallback.

Both backends read the same precomputed tables and perform the same float64
comparisons, so their trajectories must agree bit for bit; this script
checks that while timing them. Run:

    python benchmarks/sampler_bench.py [--steps N]
"""

import argparse
import os
import time

import numpy as np

from uac.couplings import (
    fixed_distance_cycle,
    k3_loops_coupling,
    srg_matching_coupling,
    tree_noncoupling_example,
)
from uac.graphs import petersen
from uac.montecarlo import build_tables, sample_path, sampler_backend


def time_backend(tables, steps, seed, pure):
    if pure:
        os.environ["UAC_PURE_NUMPY"] = "1"
    else:
        os.environ.pop("UAC_PURE_NUMPY", None)
    t0 = time.perf_counter()
    out = sample_path(tables, steps, seed)
    return out, time.perf_counter() - t0


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--steps", type=int, default=1_000_000)
    parser.add_argument("--seed", type=int, default=42)
    args = parser.parse_args()

    kernels = [
        ("fixed-distance C9 d=3", fixed_distance_cycle(9, 3)),
        ("looped K3", k3_loops_coupling()),
        ("spider control", tree_noncoupling_example()),
        ("petersen matchings", srg_matching_coupling(petersen())),
    ]

    # warm up the jit once so compilation is not billed to the first row
    warm = build_tables(kernels[0][1])
    time_backend(warm, 1000, 0, pure=False)
    print(f"default backend: {sampler_backend()}; steps per run: {args.steps}")
    print(f"{'kernel':<24} {'states':>6} {'numba':>10} {'python':>10} {'speedup':>8}  identical")
    for name, k in kernels:
        tables = build_tables(k)
        fast, t_fast = time_backend(tables, args.steps, args.seed, pure=False)
        slow, t_slow = time_backend(tables, args.steps, args.seed, pure=True)
        same = bool(np.array_equal(fast, slow))
        print(
            f"{name:<24} {len(tables.states):>6} {t_fast:>9.3f}s {t_slow:>9.3f}s "
            f"{t_slow / t_fast:>7.1f}x  {same}"
        )
        if not same:
            raise SystemExit("backends diverged; sampler determinism is broken")
    os.environ.pop("UAC_PURE_NUMPY", None)


if __name__ == "__main__":
    main()
