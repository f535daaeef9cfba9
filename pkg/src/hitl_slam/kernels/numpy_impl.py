"""Pure-numpy implementations of the hot kernels.

Same contracts as the compiled module; selected automatically when the
extension is unavailable or HITL_SLAM_PURE_PYTHON is set.
"""

import numpy as np

BACKEND = "numpy"

# Cell keys pack (ix, iy) into a single int64 so rasters can be compared
# with sorted-array set operations.
_KEY_SHIFT = np.int64(2**31)


def pack_cells(ix, iy):
    return ix.astype(np.int64) * np.int64(2**32) + (iy.astype(np.int64) + _KEY_SHIFT)


def unpack_cells(keys):
    iy = (keys % np.int64(2**32)) - _KEY_SHIFT
    ix = (keys - (iy + _KEY_SHIFT)) // np.int64(2**32)
    return ix, iy


def segment_sq_dists(points, p0, p1):
    """Squared distance from each row of `points` to the closed segment p0-p1."""
    points = np.asarray(points, dtype=np.float64)
    d = np.asarray(p1, dtype=np.float64) - np.asarray(p0, dtype=np.float64)
    dd = float(d @ d)
    rel = points - p0
    if dd <= 0.0:
        return np.einsum("ij,ij->i", rel, rel)
    t = np.clip((rel @ d) / dd, 0.0, 1.0)
    nearest = np.outer(t, d)
    diff = rel - nearest
    return np.einsum("ij,ij->i", diff, diff)


def cast_rays(origin, endpoints, resolution):
    """Trace rays from `origin` to each endpoint on a grid of cell size
    `resolution` anchored at the world origin.

    Returns (free_keys, occ_keys): sorted unique packed cell keys for the
    traversed cells and the endpoint cells. Free cells still include any
    cells that are also endpoints; the caller subtracts.
    """
    origin = np.asarray(origin, dtype=np.float64)
    endpoints = np.asarray(endpoints, dtype=np.float64)
    if len(endpoints) == 0:
        empty = np.empty(0, dtype=np.int64)
        return empty, empty
    inv = 1.0 / resolution
    occ_ix = np.floor(endpoints[:, 0] * inv).astype(np.int64)
    occ_iy = np.floor(endpoints[:, 1] * inv).astype(np.int64)
    occ = np.unique(pack_cells(occ_ix, occ_iy))

    deltas = endpoints - origin
    lengths = np.hypot(deltas[:, 0], deltas[:, 1])
    step = resolution * 0.25
    free_keys = []
    for k in range(len(endpoints)):
        n = int(lengths[k] / step)
        if n == 0:
            continue
        t = np.arange(n, dtype=np.float64) * (step / lengths[k])
        xs = origin[0] + deltas[k, 0] * t
        ys = origin[1] + deltas[k, 1] * t
        free_keys.append(
            pack_cells(np.floor(xs * inv).astype(np.int64), np.floor(ys * inv).astype(np.int64))
        )
    if free_keys:
        free = np.unique(np.concatenate(free_keys))
    else:
        free = np.empty(0, dtype=np.int64)
    return free, occ
