"""Compiled versus numpy trajectory kernel.

Run with ``python3 benchmarks/bench_kernels.py [--n 64] [--steps 2000] [--repeat 3]``.
Prints the best wall time per backend, the speed-up and the largest
difference between the two sets of trajectories over an early window.
"""

import argparse
import time

import numpy as np

from bolzalab import hyperbolic as hyp
from bolzalab import kernels


def best_time(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, default=64, help="number of trajectories")
    p.add_argument("--steps", type=int, default=2000, help="steps per trajectory")
    p.add_argument("--dt", type=float, default=0.05)
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args(argv)

    rng = np.random.default_rng(0)
    z, theta = hyp.sample_liouville_arrays(args.n, rng)
    a, b = hyp.su_from_phase(z, theta)
    samples = args.n * (args.steps + 1)

    t_np, (z_np, th_np) = best_time(lambda: kernels.geodesic_trajectories(a, b, args.dt, args.steps, "numpy"),
                                    args.repeat)
    print(f"numpy   {t_np:9.4f} s  {samples / t_np:12.0f} samples/s")
    if not kernels.HAVE_COMPILED:
        print("cython  not built (install with the Cython build to compare)")
        return
    t_cy, (z_cy, th_cy) = best_time(lambda: kernels.geodesic_trajectories(a, b, args.dt, args.steps, "cython"),
                                    args.repeat)
    print(f"cython  {t_cy:9.4f} s  {samples / t_cy:12.0f} samples/s")
    print(f"speed-up {t_np / t_cy:.1f}x")
    # the flow is chaotic, so rounding differences grow like e^t; compare an early window
    k = min(args.steps, int(round(10.0 / args.dt))) + 1
    dz = np.abs(z_np[:, :k] - z_cy[:, :k]).max()
    dth = np.abs(np.angle(np.exp(1j * (th_np[:, :k] - th_cy[:, :k])))).max()
    print(f"first {(k - 1) * args.dt:g} time units: max |dz| {dz:.3e}  max |dtheta| {dth:.3e}")


if __name__ == "__main__":
    main()
