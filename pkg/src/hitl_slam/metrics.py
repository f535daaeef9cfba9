"""Quantitative map evaluation: pairwise/total inconsistency and
ground-truth feature comparisons.

Inconsistency between two poses is the area one pose's rays claim free
while the other's endpoints claim occupied, on a shared grid anchored at
the world origin. Ground-truth reports re-fit named wall features from the
current map with the same weighted segment fit the stroke interpreter uses
and compare angles/distances against hand-measured truth.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import FeatureNotFound, ResolutionMismatch
from .geometry import Segment, fit_segment
from .graph import FactorGraph
from .interpret import InterpretationParams, candidate_points, e_step

DEFAULT_RESOLUTION = 0.05


@dataclass
class OccupancyRaster:
    """Free/occupied cells of one pose's scan, as packed sorted cell keys."""

    resolution: float
    free: np.ndarray   # sorted unique int64 keys
    occupied: np.ndarray
    origin: tuple = (0.0, 0.0)
    bounds: tuple = None  # (ixmin, ixmax, iymin, iymax) over all cells

    def __post_init__(self):
        if self.bounds is None:
            keys = np.concatenate([self.free, self.occupied])
            if len(keys) == 0:
                self.bounds = (0, -1, 0, -1)
            else:
                ix, iy = kernels.unpack_cells(keys)
                self.bounds = (int(ix.min()), int(ix.max()), int(iy.min()), int(iy.max()))


_SURFACE_MARGIN = 1.5   # free cells closer than margin*resolution to the
_SURFACE_GAP = 0.5      # scan's own surface are discounted; endpoint gaps
                        # wider than this (meters) are occlusion boundaries
_WALL_DEPTH = 0.15      # occupied band depth past each endpoint, meters;
                        # a fixed physical depth keeps conflict areas stable
                        # under resolution changes (one-cell-thin walls would
                        # halve the metric every time resolution halves)


def _densify_surface(pts, resolution):
    """Points sampled along the scan's endpoint polyline at half-cell pitch,
    skipping jumps wider than the occlusion gap."""
    out = [pts]
    step = 0.5 * resolution
    d = pts[1:] - pts[:-1]
    gaps = np.hypot(d[:, 0], d[:, 1])
    for k in np.nonzero((gaps > step) & (gaps <= _SURFACE_GAP))[0]:
        n = int(gaps[k] / step)
        t = np.arange(1, n + 1)[:, None] / (n + 1)
        out.append(pts[k] + t * d[k])
    return np.concatenate(out)


def rasterize_pose(graph: FactorGraph, pose_id: int, resolution: float,
                   max_range: float) -> OccupancyRaster:
    """Ray-cast one pose's scan: traversed cells free, endpoint cells occupied.

    Free cells within a small margin of the scan's own observed surface are
    discounted, so rays grazing along a wall do not mark the wall's cell row
    as free space; a noise-free map then has exactly zero inconsistency.
    """
    if resolution <= 0:
        raise ValueError("resolution must be positive")
    pts = graph.world_points(pose_id)
    origin = graph.poses[pose_id, :2]
    if len(pts):
        dist = np.hypot(pts[:, 0] - origin[0], pts[:, 1] - origin[1])
        pts = pts[dist <= max_range]
    if len(pts) < 2:
        free, occ = kernels.cast_rays(origin, pts, resolution)
        free = np.setdiff1d(free, occ, assume_unique=True)
        return OccupancyRaster(resolution, free, occ)

    dense = _densify_surface(pts, resolution)

    # the scan's free region is star-shaped about the origin, so classify
    # cell *centers* against the boundary radius interpolated at the
    # center's bearing: free inside the boundary, occupied within a fixed
    # wall depth beyond it. Center-based counting is unbiased at region
    # edges; marking every ray-touched cell would overcount by half a cell
    # along the whole boundary, making the total resolution-dependent, and
    # a touched-cell wall band thickens under rotation, breaking rigid
    # invariance. The fixed physical wall depth keeps conflict areas stable
    # when resolution changes (one-cell-thin walls would halve the metric
    # every halving).
    rel = pts - origin
    mean_dir = rel.sum(axis=0)
    shift = math.atan2(mean_dir[1], mean_dir[0])
    th = np.arctan2(rel[:, 1], rel[:, 0]) - shift
    th = np.arctan2(np.sin(th), np.cos(th))  # wrap to (-pi, pi]
    order = np.argsort(th, kind="stable")
    th_s, rb_s = th[order], np.hypot(rel[:, 0], rel[:, 1])[order]

    pad = int(math.ceil(_WALL_DEPTH / resolution)) + 1
    lo = np.floor((np.minimum(pts.min(axis=0), origin)) / resolution).astype(np.int64) - pad
    hi = np.floor((np.maximum(pts.max(axis=0), origin)) / resolution).astype(np.int64) + pad
    gx, gy = np.meshgrid(np.arange(lo[0], hi[0] + 1), np.arange(lo[1], hi[1] + 1),
                         indexing="ij")
    gx, gy = gx.ravel(), gy.ravel()
    cx = (gx + 0.5) * resolution - origin[0]
    cy = (gy + 0.5) * resolution - origin[1]
    tc = np.arctan2(cy, cx) - shift
    tc = np.arctan2(np.sin(tc), np.cos(tc))
    rc = np.hypot(cx, cy)
    inside = (tc >= th_s[0]) & (tc <= th_s[-1])
    rbound = np.interp(tc, th_s, rb_s)
    occ_mask = inside & (rc >= rbound) & (rc <= rbound + _WALL_DEPTH)
    occ = np.unique(kernels.pack_cells(gx[occ_mask], gy[occ_mask]))
    free_mask = inside & (rc < rbound)
    free = np.unique(kernels.pack_cells(gx[free_mask], gy[free_mask]))

    if len(free):
        # grazing protection: free cells within a small margin of the scan's
        # own surface are discounted, so a noise-free map has exactly zero
        # inconsistency
        from scipy.spatial import cKDTree
        ix, iy = kernels.unpack_cells(free)
        centers = np.stack([(ix + 0.5) * resolution, (iy + 0.5) * resolution], axis=1)
        margin = _SURFACE_MARGIN * resolution
        dd, _ = cKDTree(dense).query(centers, distance_upper_bound=margin)
        free = free[dd > margin]
    free = np.setdiff1d(free, occ, assume_unique=True)
    return OccupancyRaster(resolution, free, occ)


def pairwise_inconsistency(r_i: OccupancyRaster, r_j: OccupancyRaster) -> float:
    """Area free in r_i but occupied in r_j, m^2."""
    if r_i.resolution != r_j.resolution:
        raise ResolutionMismatch(f"{r_i.resolution} vs {r_j.resolution}")
    n = len(np.intersect1d(r_i.free, r_j.occupied, assume_unique=True))
    return n * r_i.resolution ** 2


def _bbox_disjoint(a: OccupancyRaster, b: OccupancyRaster) -> bool:
    ax0, ax1, ay0, ay1 = a.bounds
    bx0, bx1, by0, by1 = b.bounds
    return ax1 < bx0 or bx1 < ax0 or ay1 < by0 or by1 < ay0


def total_inconsistency(graph: FactorGraph, resolution: float = DEFAULT_RESOLUTION,
                        max_range: float = None) -> float:
    """Sum of pairwise inconsistency over ordered pose pairs i < j.

    Bounding-box culling skips pairs that cannot overlap; culled pairs
    contribute exactly zero, so the value is unchanged.
    """
    if max_range is None:
        max_range = float("inf")
    rasters = [rasterize_pose(graph, i, resolution, max_range)
               for i in range(graph.num_poses)]
    total = 0.0
    for i in range(len(rasters)):
        for j in range(i + 1, len(rasters)):
            if _bbox_disjoint(rasters[i], rasters[j]):
                continue
            total += pairwise_inconsistency(rasters[i], rasters[j])
    return total


@dataclass(frozen=True)
class FeatureSelector:
    """Where to look for a named wall feature: an approximate segment, a
    capture window and optionally the pose range allowed to contribute."""

    name: str
    segment: Segment
    neighborhood: float = 0.5
    pose_range: tuple = None  # inclusive (lo, hi) pose ids, or None for all


@dataclass(frozen=True)
class GroundTruthMeasurement:
    kind: str  # "angle" (degrees) or "distance" (meters)
    feature_1: str
    feature_2: str
    truth: float


@dataclass
class ReportRow:
    kind: str
    feature_1: str
    feature_2: str
    measured: float
    truth: float
    error: float


@dataclass
class Report:
    rows: list = field(default_factory=list)

    @property
    def mean_angular_error(self):
        vals = [r.error for r in self.rows if r.kind == "angle"]
        return float(np.mean(vals)) if vals else 0.0

    @property
    def mean_translation_error(self):
        vals = [r.error for r in self.rows if r.kind == "distance"]
        return float(np.mean(vals)) if vals else 0.0

    def summary_line(self):
        return (f"mean angular error {self.mean_angular_error:.3f} deg, "
                f"mean translation error {self.mean_translation_error:.4f} m "
                f"({len(self.rows)} samples)")

    def write(self, path):
        with open(path, "w") as fh:
            for r in self.rows:
                fh.write(f"{r.kind} {r.feature_1} {r.feature_2} "
                         f"measured {r.measured!r} truth {r.truth!r} error {r.error!r}\n")
            fh.write(self.summary_line() + "\n")


def resolve_feature(graph: FactorGraph, sel: FeatureSelector,
                    sigma: float = 0.05, min_points: int = 10) -> Segment:
    """Fit the actual map segment behind a selector with a soft-weighted fit."""
    ids, _, pts = candidate_points(graph, sel.segment, sel.neighborhood)
    if sel.pose_range is not None:
        lo, hi = sel.pose_range
        keep = (ids >= lo) & (ids <= hi)
        pts = pts[keep]
    if len(pts) < min_points:
        raise FeatureNotFound(f"{sel.name}: only {len(pts)} points in window")
    # start from an unweighted fit of the window so a map offset larger
    # than sigma cannot zero out all the responsibilities
    seg = fit_segment(pts, np.ones(len(pts)))
    for _ in range(10):
        w = e_step(pts, seg, sigma, sel.neighborhood)
        new = fit_segment(pts, w, extent_min_weight=0.5)
        if max(np.hypot(*(new.p0 - seg.p0)), np.hypot(*(new.p1 - seg.p1))) < 1e-6:
            seg = new
            break
        seg = new
    return seg


def _acute_angle_deg(d1, d2):
    dot = abs(float(np.clip(d1 @ d2, -1.0, 1.0)))
    return math.degrees(math.acos(dot))


def ground_truth_report(graph: FactorGraph, selectors, measurements) -> Report:
    """Evaluate measured-vs-truth error for each recorded measurement."""
    by_name = {s.name: s for s in selectors}
    fitted = {}
    report = Report()
    for m in measurements:
        for name in (m.feature_1, m.feature_2):
            if name not in fitted:
                if name not in by_name:
                    raise FeatureNotFound(f"no selector named {name}")
                fitted[name] = resolve_feature(graph, by_name[name])
        f1, f2 = fitted[m.feature_1], fitted[m.feature_2]
        if m.kind == "angle":
            measured = _acute_angle_deg(f1.direction, f2.direction)
            error = abs(measured - m.truth)
            error = min(error, abs(180.0 - measured - m.truth))
        elif m.kind == "distance":
            measured = abs(float((f2.cm - f1.cm) @ f1.normal))
            error = abs(measured - m.truth)
        else:
            raise ValueError(f"unknown measurement kind {m.kind!r}")
        report.rows.append(ReportRow(m.kind, m.feature_1, m.feature_2, measured, m.truth, error))
    return report
