"""Compare the compiled and numpy geometry kernels.

    python benchmarks/bench_kernels.py [--order 64 128 256] [--nphi 4] [--repeat 5]

For each grid size the per-node kernels (Christoffel symbols, extrinsic data,
connection form) are timed on identical inputs taken from a boosted
Schwarzschild sphere, and the maximum difference between the two backends is
reported alongside a full ``compute_geometry`` timing.
"""

import argparse
import time

import numpy as np

from qlm import kernels
from qlm import surface as surf
from qlm.grid import SphereGrid
from qlm.spacetime import schwarzschild_isotropic


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def kernel_inputs(order, nphi, r0=500.0, beta=0.6):
    grid = SphereGrid(order, nphi)
    gamma = 1.0 / np.sqrt(1 - beta ** 2)
    chart = surf.boosted_sphere_chart(beta, gamma, r0)
    metric = schwarzschild_isotropic(1.0)
    th, ph = grid.mesh()
    Y, Yd, Ydd = chart.evaluate(th.ravel(), ph.ravel())
    G = metric.eval(Y)
    dG = metric.deriv(Y)
    return grid, chart, metric, G, dG, Yd, Ydd


def run_backend(mod, G, dG, Yd, Ydd):
    Ginv, gam = mod.christoffel(G, dG)
    sigma, H, J, status = mod.extrinsic(G, Ginv, gam, Yd, Ydd)
    # a smooth stand-in for the θ/φ derivative of J/|H|
    dE = np.stack([J, 0.5 * J], axis=1)
    omega = mod.connection(G, gam, Yd, J, dE, H)
    return gam, sigma, H, J, omega


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--order", type=int, nargs="+", default=[64, 128, 256])
    ap.add_argument("--nphi", type=int, default=4)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    py = kernels.get_backend("python")
    try:
        cy = kernels.get_backend("compiled")
    except ImportError:
        print("compiled extension not built; only the numpy backend is "
              "available")
        cy = None

    print(f"{'nodes':>7} {'python [ms]':>12} {'compiled [ms]':>14} "
          f"{'speedup':>8} {'max diff':>10} {'geometry [ms]':>14}")
    for order in args.order:
        grid, chart, metric, G, dG, Yd, Ydd = kernel_inputs(order, args.nphi)
        t_py, out_py = best_of(lambda: run_backend(py, G, dG, Yd, Ydd),
                               args.repeat)
        t_geo, _ = best_of(lambda: surf.compute_geometry(chart, metric, grid),
                           args.repeat)
        if cy is None:
            print(f"{G.shape[0]:>7} {1e3 * t_py:>12.3f} {'-':>14} {'-':>8} "
                  f"{'-':>10} {1e3 * t_geo:>14.3f}")
            continue
        t_cy, out_cy = best_of(lambda: run_backend(cy, G, dG, Yd, Ydd),
                               args.repeat)
        diff = max(float(np.max(np.abs(a - b)))
                   for a, b in zip(out_py, out_cy))
        print(f"{G.shape[0]:>7} {1e3 * t_py:>12.3f} {1e3 * t_cy:>14.3f} "
              f"{t_py / t_cy:>8.2f} {diff:>10.2e} {1e3 * t_geo:>14.3f}")
    print(f"active backend: {kernels.BACKEND}")


if __name__ == "__main__":
    main()
