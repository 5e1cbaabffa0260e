"""Benchmark the jitted Newton kernel against the pure-python fallback.

Usage: python3 benchmarks/bench_kernels.py [--samples N]

Solves the z = 0 cycle program for randomly rescaled injections of the
packaged 30-bus case and for a 20-node ring, with both kernel variants.
The fallback is the exact same source un-jitted (what you get with
SYNCFLOW_NUMBA=0).
"""

import argparse
import time

import numpy as np

from syncflow import cycle_basis, grounded_factor, solve_linear
from syncflow import kernels
from syncflow.experiments import (
    _balanced_uniform,
    _with_injections,
    default_case_network,
    ring_network,
)


def instances(net, samples, seed):
    basis = cycle_basis(net)
    factor = grounded_factor(net)
    cycle_mat = basis.matrix.astype(np.float64)
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < samples:
        p = _balanced_uniform(rng, net.node_count)
        f_lin = solve_linear(_with_injections(net, p), factor=factor).flows
        peak = np.max(np.abs(f_lin) / net.couplings)
        if peak <= 0.0:
            continue
        scale = rng.uniform(0.3, 0.9) / peak
        out.append(f_lin * scale)
    z = np.zeros(basis.count)
    return cycle_mat, z, out


def bench(fn, cycle_mat, z, flows, couplings):
    start = time.perf_counter()
    for f0 in flows:
        fn(f0.copy(), cycle_mat, couplings, z, 1e-10, 200)
    return time.perf_counter() - start


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--samples", type=int, default=2000)
    args = parser.parse_args()

    cases = [("case30 (M=41, Q=12)", default_case_network()),
             ("ring20 (M=20, Q=1)", ring_network(20))]
    print(f"{args.samples} Newton solves per case/kernel "
          f"(numba available: {kernels.NUMBA_ENABLED})\n")
    for name, net in cases:
        cycle_mat, z, flows = instances(net, args.samples, seed=0)
        # warm up the jit compilation outside the timed region
        kernels.newton_cycle(flows[0].copy(), cycle_mat, net.couplings, z,
                             1e-10, 200)
        t_jit = bench(kernels.newton_cycle, cycle_mat, z, flows,
                      net.couplings)
        t_py = bench(kernels.newton_cycle_py, cycle_mat, z, flows,
                     net.couplings)
        print(f"{name}")
        print(f"  jitted : {t_jit:8.3f} s "
              f"({1e6 * t_jit / args.samples:8.1f} us/solve)")
        print(f"  python : {t_py:8.3f} s "
              f"({1e6 * t_py / args.samples:8.1f} us/solve)")
        print(f"  speedup: {t_py / t_jit:6.1f}x\n")


if __name__ == "__main__":
    main()
