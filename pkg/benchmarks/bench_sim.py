"""Timing comparison of the path-simulation lanes: numba vs pure numpy.

Run directly:  python benchmarks/bench_sim.py
The env flag SDL_NUMBA is toggled in-process; the first numba call pays
the JIT compile, so a warmup run precedes the timed ones.
"""

import os
import time

import numpy as np

from sdlab._accel import HAVE_NUMBA, trilinear_at
from sdlab.fields import DriftSpec
from sdlab.grid import Grid
from sdlab.sim import SimParams, simulate_paths


def run_case(paths, steps_t, dt, lane):
    os.environ["SDL_NUMBA"] = "1" if lane == "numba" else "0"
    g = Grid(3, 32, 16.0)
    b = DriftSpec("smooth-random", amp=0.5, kmax=2, seed=3).on_grid(g)
    sp = SimParams(drift=b, t=steps_t, dt=dt, paths=paths, seed=7,
                   x0=np.full(3, 8.0))
    t0 = time.perf_counter()
    res = simulate_paths(sp, payoff=lambda p: p[:, 0])
    return time.perf_counter() - t0, res.payoff_mean


def bench_interp(lane, n_pts=200_000):
    os.environ["SDL_NUMBA"] = "1" if lane == "numba" else "0"
    g = Grid(3, 32, 16.0)
    rng = np.random.default_rng(0)
    field = rng.standard_normal((3,) + g.shape)
    pts = rng.uniform(0, g.length, size=(n_pts, 3))
    t0 = time.perf_counter()
    trilinear_at(field, pts, g.n, g.h)
    return time.perf_counter() - t0


def main():
    print(f"numba importable: {HAVE_NUMBA}")
    cases = [(20_000, 0.2, 1e-3), (100_000, 0.2, 1e-3)]
    lanes = ["numba", "numpy"] if HAVE_NUMBA else ["numpy"]
    if HAVE_NUMBA:
        run_case(1_000, 0.01, 1e-3, "numba")  # JIT warmup
    print(f"{'paths':>8} {'steps':>6} " + " ".join(f"{lane:>12}" for lane in lanes))
    for paths, t, dt in cases:
        times = {}
        means = {}
        for lane in lanes:
            times[lane], means[lane] = run_case(paths, t, dt, lane)
        row = f"{paths:8d} {int(round(t / dt)):6d} "
        row += " ".join(f"{times[lane]:11.3f}s" for lane in lanes)
        print(row)
        if len(lanes) == 2:
            print(f"{'':15} speedup numba/numpy: {times['numpy'] / times['numba']:.2f}x, "
                  f"mean agreement: {abs(means['numba'] - means['numpy']):.2e}")
    print("\ntrilinear gather (200k points): "
          + ", ".join(f"{lane}: {bench_interp(lane):.3f}s" for lane in ["numpy"]))
    os.environ.pop("SDL_NUMBA", None)


if __name__ == "__main__":
    main()
