#!/usr/bin/env python3
"""Numba kernels against the numpy fallback.

Times each kernel on realistic inputs (a slit-disk mesh at the default
grading, the k <= 10^4 exponent table, the 10^6-term series) after a JIT
warm-up call, and checks that both backends agree.

    python3 benchmarks/bench_kernels.py [--h 0.05] [--repeat 5]
"""

import argparse
import time

import numpy as np

from cracktip import _kernels
from cracktip.crack import CrackGraph
from cracktip.mesh import build_mesh


def best_of(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def max_diff(a, b):
    if isinstance(a, tuple):
        return max(max_diff(x, y) for x, y in zip(a, b))
    return float(np.max(np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float))))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--h", type=float, default=0.05)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    nb, npy = _kernels.NUMBA_IMPL, _kernels.NUMPY_IMPL
    if nb is None:
        print("numba not available; nothing to compare")
        return

    mesh = build_mesh(CrackGraph.straight(65), args.h)
    rng = np.random.default_rng(0)
    vals = rng.standard_normal(mesh.nodes.shape[0])
    ks = np.arange(2, 10_001, dtype=np.float64)
    cases = {
        "solve_gamma k<=1e4": lambda impl: impl.solve_gamma(ks),
        "stiffness": lambda impl: impl.stiffness(mesh.nodes, mesh.tris),
        "gradients": lambda impl: impl.gradients(mesh.nodes, mesh.tris, vals),
        "disk_clip_areas": lambda impl: impl.disk_clip_areas(mesh.nodes, mesh.tris, 0.0, 0.0, 0.3),
        "pair_series 1e6": lambda impl: impl.pair_series(1_000_000),
    }

    print(f"mesh: {mesh.nodes.shape[0]} nodes, {mesh.tris.shape[0]} triangles (h = {args.h})")
    t0 = time.perf_counter()
    for fn in cases.values():
        fn(nb)
    print(f"JIT warm-up: {time.perf_counter() - t0:.2f}s\n")
    print(f"{'kernel':<20} {'numpy (ms)':>11} {'numba (ms)':>11} {'speedup':>8} {'max |diff|':>11}")
    for name, fn in cases.items():
        t_np, out_np = best_of(lambda: fn(npy), args.repeat)
        t_nb, out_nb = best_of(lambda: fn(nb), args.repeat)
        diff = max_diff(out_np, out_nb)
        print(f"{name:<20} {1e3 * t_np:>11.2f} {1e3 * t_nb:>11.2f} {t_np / t_nb:>7.1f}x {diff:>11.2e}")


if __name__ == "__main__":
    main()
