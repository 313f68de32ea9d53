"""Pure-numpy fallback for the compiled kernels in ``_kernels.pyx``.

Results are bit-identical to the compiled versions: inner products use the same
coordinate-ordered accumulation and ties resolve to the lowest index.
"""
import numpy as np

_CHUNK = 4096


def _dots(rows, v):
    acc = rows[:, 0] * v[0]
    for c in range(1, rows.shape[1]):
        acc = acc + rows[:, c] * v[c]
    return acc


def fps_select(pool, start, cos_stop, max_points):
    pool = np.ascontiguousarray(pool, dtype=np.float64)
    chosen = [int(start)]
    best = _dots(pool, pool[start])
    while True:
        far = int(np.argmin(best))
        lowest = float(best[far])
        if lowest > cos_stop or len(chosen) >= max_points:
            break
        chosen.append(far)
        best = np.maximum(best, _dots(pool, pool[far]))
    return np.asarray(chosen, dtype=np.int64), lowest


def nearest_vertex(points, verts):
    points = np.ascontiguousarray(points, dtype=np.float64)
    verts = np.ascontiguousarray(verts, dtype=np.float64)
    m = points.shape[0]
    idx = np.empty(m, dtype=np.int64)
    best = np.empty(m, dtype=np.float64)
    for lo in range(0, m, _CHUNK):
        block = points[lo:lo + _CHUNK]
        g = block[:, 0:1] * verts[:, 0][None, :]
        for c in range(1, points.shape[1]):
            g = g + block[:, c:c + 1] * verts[:, c][None, :]
        arg = np.argmax(g, axis=1)
        idx[lo:lo + _CHUNK] = arg
        best[lo:lo + _CHUNK] = g[np.arange(len(block)), arg]
    return idx, best


def walk_indices(cum, last_nz, start_cum, start_last, u):
    u = np.asarray(u, dtype=np.float64)
    trials, steps = u.shape
    out = np.empty((trials, steps), dtype=np.int64)
    v = np.minimum((start_cum[None, :] <= u[:, 0:1]).sum(axis=1), start_last)
    out[:, 0] = v
    for k in range(1, steps):
        nxt = (cum[v] <= u[:, k:k + 1]).sum(axis=1)
        v = np.minimum(nxt, last_nz[v])
        out[:, k] = v
    return out
