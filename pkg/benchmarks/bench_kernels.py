"""Line/mesh hit-count kernels: numba vs pure numpy.

    python benchmarks/bench_kernels.py --lines 200000 --repeat 3

Both backends are called explicitly (``use_numba=``), so the env flag does not
matter here. Counts are checked for equality before any timing is reported.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from finslerkit._accel import HAVE_NUMBA
from finslerkit.crofton._kernels import count_hits_brute, count_hits_bvh
from finslerkit.crofton.lines import line_generator, sample_lines
from finslerkit.crofton.mesh import flat_disc_mesh, icosphere
from finslerkit.geometry_core import rotation_matrix


def best_of(fn, repeat):
    times = []
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--lines", type=int, default=200_000)
    ap.add_argument("--brute-lines", type=int, default=2_000, help="brute force is O(lines * triangles)")
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args(argv)
    if not HAVE_NUMBA:
        print("numba not importable: only the numpy path can run")

    meshes = {
        "disc(256x8)": (flat_disc_mesh(1.0, 256, 8), 1.0),
        "icosphere(5)": (icosphere(5, 1.0, rotation_matrix([1, 2, 3], 0.7)), 1.5),
    }
    print(f"{'mesh':14s} {'kernel':6s} {'lines':>8s} {'numpy s':>9s} {'numba s':>9s} {'speedup':>8s}")
    for name, (mesh, R) in meshes.items():
        u, p = sample_lines(line_generator(args.seed, 0), args.lines, R)
        bvh = mesh.bvh
        if HAVE_NUMBA:
            count_hits_bvh(p[:16], u[:16], bvh, use_numba=True)       # compile outside the timing
            count_hits_brute(p[:16], u[:16], bvh.v0, bvh.e1, bvh.e2, use_numba=True)
        cases = [("bvh", args.lines, lambda nb, m: count_hits_bvh(p[:m], u[:m], bvh, use_numba=nb)),
                 ("brute", args.brute_lines,
                  lambda nb, m: count_hits_brute(p[:m], u[:m], bvh.v0, bvh.e1, bvh.e2, use_numba=nb))]
        for kernel, m, run in cases:
            t_np, c_np = best_of(lambda: run(False, m), args.repeat)
            if HAVE_NUMBA:
                t_nb, c_nb = best_of(lambda: run(True, m), args.repeat)
                if not np.array_equal(c_np, c_nb):
                    raise SystemExit(f"{name}/{kernel}: backends disagree on {int(np.sum(c_np != c_nb))} lines")
                print(f"{name:14s} {kernel:6s} {m:8d} {t_np:9.3f} {t_nb:9.3f} {t_np / t_nb:7.1f}x")
            else:
                print(f"{name:14s} {kernel:6s} {m:8d} {t_np:9.3f} {'-':>9s} {'-':>8s}")


if __name__ == "__main__":
    main()
