"""Compare the numba and numpy path-evaluation backends.

    python benchmarks/bench_kernels.py [--reps 2000] [--grid-exponent 10]
"""
import argparse
import time

import numpy as np

from supchain import kernels
from supchain.processes import CppModel, KernelSpec, PowerLawIntensity, draw_jump_batch


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--reps", type=int, default=2000)
    ap.add_argument("--grid-exponent", type=int, default=10)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    grid = np.arange(2**args.grid_exponent + 1) / 2.0**args.grid_exponent
    print(f"replicates={args.reps} grid points={len(grid)} numba available={kernels.HAVE_NUMBA}")
    print(f"{'kernel':<10} {'eps':>5} {'jumps/rep':>9} {'numpy s':>9} {'numba s':>9} {'speedup':>8} {'max |diff|':>11}")
    for family in ("linear", "sinusoid", "hoelder"):
        spec = KernelSpec(family, p=0.75 if family == "hoelder" else None)
        for eps in (0.2, 0.02):
            m = CppModel(PowerLawIntensity(0.5), spec, eps)
            off, u, w = draw_jump_batch(m, 1, 0, 0, args.reps)
            run = lambda b: kernels.grid_sup(off, u, w, grid, spec.kind, spec.exponent, 0.5, True, backend=b)
            t_np, a = best_of(lambda: run("numpy"), args.repeat)
            if kernels.HAVE_NUMBA:
                run("numba")  # compile outside the timing
                t_nb, b = best_of(lambda: run("numba"), args.repeat)
                diff = float(np.max(np.abs(a - b)))
                print(f"{family:<10} {eps:>5g} {len(u) / args.reps:>9.0f} {t_np:>9.3f} {t_nb:>9.3f} "
                      f"{t_np / t_nb:>7.1f}x {diff:>11.2e}")
            else:
                print(f"{family:<10} {eps:>5g} {len(u) / args.reps:>9.0f} {t_np:>9.3f} {'-':>9}")


if __name__ == "__main__":
    main()
