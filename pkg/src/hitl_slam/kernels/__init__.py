"""Kernel backend selection: compiled extension if built, numpy otherwise.

Set HITL_SLAM_PURE_PYTHON=1 to force the numpy backend (used by the
benchmark to compare the two).
"""

import os

if os.environ.get("HITL_SLAM_PURE_PYTHON"):
    from . import numpy_impl as _impl
else:
    try:
        from . import _native as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import numpy_impl as _impl

BACKEND = _impl.BACKEND
segment_sq_dists = _impl.segment_sq_dists
cast_rays = _impl.cast_rays
pack_cells = _impl.pack_cells
unpack_cells = _impl.unpack_cells
