"""Compiled kernels versus the numpy fallback on typical workloads.

Usage: python3 benchmarks/bench_kernels.py [--repeat 5]

Each row reports the best-of-``repeat`` wall time for both backends, the
speedup, and whether the outputs are bit-identical.
"""
import argparse
import timeit

import numpy as np

from mwl import _kernels_py
from mwl.graph import assemble_matrices
from mwl.studies import circle_graph
from mwl.walk import WalkSampler

try:
    from mwl import _kernels as _compiled
except ImportError:
    _compiled = None


def unit_rows(rng, n, dim):
    x = rng.standard_normal((n, dim))
    return np.ascontiguousarray(x / np.linalg.norm(x, axis=1, keepdims=True))


def workloads():
    rng = np.random.default_rng(0)
    pool = unit_rows(rng, 20_000, 3)
    verts = unit_rows(rng, 400, 3)
    points = unit_rows(rng, 200_000, 3)
    sampler = WalkSampler(assemble_matrices(circle_graph(400, 0)))
    u = np.ascontiguousarray(rng.random((10_000, 8)))
    return {
        "fps_select (20k pool, S^2, eps=0.1)": ("fps_select", (pool, 0, np.cos(0.1), 10**6)),
        "nearest_vertex (200k points, 400 verts)": ("nearest_vertex", (points, verts)),
        "walk_indices (10k walks, K=8, N=400)": (
            "walk_indices", (sampler.cum, sampler.last_nz, sampler.start_cum, sampler.start_last, u)),
    }


def same(a, b):
    if isinstance(a, tuple):
        return all(same(x, y) for x, y in zip(a, b))
    return np.array_equal(np.asarray(a), np.asarray(b))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _compiled is None:
        raise SystemExit("compiled extension not built; run pip install -e . --no-build-isolation")
    print(f"{'kernel':42s} {'compiled ms':>12s} {'python ms':>10s} {'speedup':>8s}  identical")
    for label, (name, call_args) in workloads().items():
        times = {}
        for backend, mod in (("compiled", _compiled), ("python", _kernels_py)):
            fn = getattr(mod, name)
            times[backend] = min(timeit.repeat(lambda: fn(*call_args), number=1, repeat=args.repeat))
        ident = same(getattr(_compiled, name)(*call_args), getattr(_kernels_py, name)(*call_args))
        print(f"{label:42s} {1e3 * times['compiled']:12.2f} {1e3 * times['python']:10.2f} "
              f"{times['python'] / times['compiled']:7.1f}x  {ident}")


if __name__ == "__main__":
    main()
