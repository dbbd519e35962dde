"""Time the compiled and pure-Python integration kernels on the same problems.

Usage: ``python benchmarks/bench_kernel.py [--repeat N]``.  Both kernels are
run on each case and their node counts and final values are checked to agree
before timings are reported.
"""
import argparse
import time

import numpy as np

from fyamabe._backend import KERNELS
from fyamabe.integrator import integrate
from fyamabe.model import PotentialSpec, ProblemSpec

CASES = {
    "trivial n=4 h=0 r<=10": ProblemSpec(4, -2.0, PotentialSpec.zero(), r_max=10),
    "blow-up n=4 alpha=2": ProblemSpec(4, 2.0, PotentialSpec.zero(), r_max=10),
    "band n=4 h=-r r<=100": ProblemSpec(4, -1.0, PotentialSpec.power_law(-1.0, 1.0), r_max=100),
    "bounded n=8 alpha=0.5": ProblemSpec(8, 0.5, PotentialSpec.bounded_below(8), r_max=10),
}


def best_time(spec, backend, repeat):
    best = np.inf
    for _ in range(repeat):
        t = time.perf_counter()
        traj, _ = integrate(spec, events=False, backend=backend)
        best = min(best, time.perf_counter() - t)
    return best, traj


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if "cython" not in KERNELS:
        raise SystemExit("the compiled kernel is not built; run `pip install -e .` first")
    print(f"{'case':26s} {'nodes':>7s} {'python [s]':>11s} {'cython [s]':>11s} {'speed-up':>9s}")
    for name, spec in CASES.items():
        tp, a = best_time(spec, "python", args.repeat)
        tc, b = best_time(spec, "cython", args.repeat)
        if len(a.r) != len(b.r) or not np.array_equal(a.u, b.u):
            raise SystemExit(f"{name}: kernels disagree")
        print(f"{name:26s} {len(a.r):7d} {tp:11.4f} {tc:11.4f} {tp / tc:8.1f}x")


if __name__ == "__main__":
    main()
