"""Compiled vs pure-numpy kernel parity and cell-key packing."""

import numpy as np
import pytest

from hitl_slam import kernels
from hitl_slam.kernels import numpy_impl


def test_pack_unpack_roundtrip():
    rng = np.random.default_rng(0)
    ix = rng.integers(-100000, 100000, 500)
    iy = rng.integers(-100000, 100000, 500)
    keys = numpy_impl.pack_cells(ix, iy)
    bx, by = numpy_impl.unpack_cells(keys)
    assert np.array_equal(bx, ix)
    assert np.array_equal(by, iy)


def test_pack_cells_unique_per_cell():
    ix = np.array([0, 0, 1, -1])
    iy = np.array([0, 1, 0, -1])
    keys = numpy_impl.pack_cells(ix, iy)
    assert len(np.unique(keys)) == 4


def test_segment_sq_dists_regions():
    p0 = np.array([0.0, 0.0])
    p1 = np.array([2.0, 0.0])
    pts = np.array([[1.0, 0.5], [-1.0, 0.0], [3.0, 0.0], [1.0, 0.0]])
    d2 = numpy_impl.segment_sq_dists(pts, p0, p1)
    assert np.allclose(d2, [0.25, 1.0, 1.0, 0.0])


def test_cast_rays_hand_traced():
    # one ray 1 m along +x at half-meter cells: free cells before the endpoint
    origin = np.array([0.25, 0.25])
    free, occ = numpy_impl.cast_rays(origin, np.array([[1.25, 0.25]]), 0.5)
    fx, fy = numpy_impl.unpack_cells(np.setdiff1d(free, occ))
    ox, oy = numpy_impl.unpack_cells(occ)
    assert (ox.tolist(), oy.tolist()) == ([2], [0])
    assert set(zip(fx.tolist(), fy.tolist())) == {(0, 0), (1, 0)}


@pytest.mark.skipif(kernels.BACKEND != "native", reason="compiled kernel unavailable")
def test_native_matches_numpy():
    rng = np.random.default_rng(42)
    for _ in range(20):
        pts = rng.uniform(-5, 5, (200, 2))
        p0, p1 = rng.uniform(-5, 5, 2), rng.uniform(-5, 5, 2)
        a = kernels.segment_sq_dists(pts, p0, p1)
        b = numpy_impl.segment_sq_dists(pts, p0, p1)
        assert np.allclose(a, b, rtol=0, atol=1e-12)

        origin = rng.uniform(-2, 2, 2)
        ends = origin + rng.uniform(-3, 3, (50, 2))
        fa, oa = kernels.cast_rays(origin, ends, 0.05)
        fb, ob = numpy_impl.cast_rays(origin, ends, 0.05)
        assert np.array_equal(fa, fb)
        assert np.array_equal(oa, ob)


def test_backend_reports_identity():
    assert kernels.BACKEND in ("native", "numpy")
