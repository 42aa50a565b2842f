"""Compare the compiled and pure-Python kernels.

    python3 benchmarks/bench_kernels.py [--h 0.04] [--repeat 3]
"""
import argparse
import time

import numpy as np

from finslerfill import _pykernels
from finslerfill.mesh import build_mesh
from finslerfill.metric import metric_from_spec

try:
    from finslerfill import _ckernels
except ImportError:  # pragma: no cover
    _ckernels = None


def _best(fn, repeat):
    best = np.inf
    out = None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def bench_solve(kern, mesh, repeat):
    g = mesh.geometry
    src = np.array([g.boundary[0]])

    def run():
        return kern.solve_field(g.nbr_ptr, g.nbr_idx, g.nbr_rev, mesh.len_in, g.pair_ptr, g.pair_a, g.pair_b,
                                g.pair_owner, mesh.pair_in, g.pend_ptr, g.pend_ids, src, np.zeros(1))[0]
    return _best(run, repeat)


def bench_hull(kern, V, n, repeat, seed=0):
    rng = np.random.default_rng(seed)
    t = np.sort(rng.uniform(0, 2 * np.pi, (V, n)), axis=1)
    pts = np.stack([np.cos(t), np.sin(t)], axis=-1)
    order = np.lexsort((pts[..., 1], pts[..., 0]), axis=-1)
    pts = np.ascontiguousarray(np.take_along_axis(pts, order[..., None], axis=1))
    mask = np.ones((V, n), dtype=np.uint8)
    return _best(lambda: kern.hull_areas(pts, mask), repeat)


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("--h", type=float, default=0.04)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    metric = metric_from_spec({"family": "conformal", "params": {"factor": "hemisphere"}})
    mesh = build_mesh(metric, args.h, 3)
    kernels = [("python", _pykernels)] + ([("cython", _ckernels)] if _ckernels else [])
    print(f"mesh h={args.h}: {mesh.geometry.n_vertices} vertices")
    print(f"{'kernel':<12}{'backend':<10}{'seconds':>10}")
    res = {}
    for name, kern in kernels:
        t, u = bench_solve(kern, mesh, args.repeat)
        res[("solve", name)] = u
        print(f"{'solve_field':<12}{name:<10}{t:>10.4f}")
    for name, kern in kernels:
        t, a = bench_hull(kern, 4000, 32, args.repeat)
        res[("hull", name)] = a
        print(f"{'hull_areas':<12}{name:<10}{t:>10.4f}")
    if _ckernels:
        print("max |difference| solve_field:", float(np.max(np.abs(res[("solve", "python")] - res[("solve", "cython")]))))
        print("max |difference| hull_areas: ", float(np.max(np.abs(res[("hull", "python")] - res[("hull", "cython")]))))


if __name__ == "__main__":
    main()
