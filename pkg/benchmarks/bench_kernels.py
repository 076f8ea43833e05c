"""Timing comparison of the compiled kernels against their plain bodies.

Runs each hot kernel in both variants on the same inputs and prints a
small table of best-of-N wall times.  When numba is unavailable (or
GFRAG_NO_NUMBA=1) both columns time the same function, which makes the
overhead of the harness itself visible.

Usage: python benchmarks/bench_kernels.py [--size 20000] [--repeats 7]
"""

import argparse
import time

import numpy as np

from gfrag import _kernels as K


def best_of(fn, args, repeats):
    fn(*args)  # warm-up: triggers JIT compilation on the numba variants
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def scan_args(n, rng):
    widths = rng.uniform(0.01, 0.2, size=n)
    decay = np.exp(-rng.uniform(0.0, 3.0, size=n))
    f = rng.normal(size=n)
    return widths, decay, f, 0.05


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=20000, help="scan length")
    ap.add_argument("--cells", type=int, default=400, help="grid cells for the stepper")
    ap.add_argument("--steps", type=int, default=200, help="time steps for the stepper")
    ap.add_argument("--repeats", type=int, default=7, help="timing repeats (best kept)")
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    sargs = scan_args(args.size, rng)

    n = args.cells
    step_args = (
        rng.uniform(0.0, 1.0, size=n),
        args.steps,
        0.002,
        0.25,
        rng.uniform(0.5, 1.5, size=n + 1),
        rng.uniform(0.0, 2.0, size=n),
        rng.uniform(0.0, 0.05, size=(n, n)),
        rng.uniform(0.0, 0.1, size=n),
    )

    cases = [
        ("prefix scan", K.prefix_transport_scan, K._prefix_transport_scan_py, sargs),
        ("inverse scan", K.inverse_transport_scan, K._inverse_transport_scan_py, sargs),
        ("adjoint scan", K.adjoint_transport_scan, K._adjoint_transport_scan_py, sargs),
        ("upwind steps", K.advance_upwind, K._advance_upwind_np, step_args),
    ]

    print(f"numba in use: {K.USE_NUMBA}  (size={args.size}, cells={args.cells}, steps={args.steps})")
    print(f"{'kernel':<14} {'bound [ms]':>12} {'reference [ms]':>16} {'speedup':>9}")
    for name, bound, reference, a in cases:
        tb = best_of(bound, a, args.repeats) * 1e3
        tr = best_of(reference, a, args.repeats) * 1e3
        print(f"{name:<14} {tb:12.3f} {tr:16.3f} {tr / tb:9.1f}x")


if __name__ == "__main__":
    main()
