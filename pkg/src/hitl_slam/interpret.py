"""Turn raw stroke endpoints into a populated human correction factor via EM.

Each side of the correction is fit independently: soft Gaussian
responsibilities against the current segment (E), weighted segment refit
(M), with the candidate window re-queried against the refit segment each
iteration. A uniform outlier component keeps far points from ever fully
committing, and the final hard assignment at responsibility 0.5 realizes
the inclusion/exclusion semantics of the selection sets.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DegenerateFit, InsufficientSelection
from .geometry import Segment, fit_segment
from .graph import CorrectionMode, FactorGraph, HumanCorrectionFactor

OUTLIER_WEIGHT = 0.1


@dataclass(frozen=True)
class RawCorrection:
    seg_a: Segment
    seg_b: Segment
    mode: CorrectionMode

    def __post_init__(self):
        for seg in (self.seg_a, self.seg_b):
            if seg.length <= 1e-3:
                raise ValueError("raw stroke segments must be longer than 1 mm")


@dataclass(frozen=True)
class InterpretationParams:
    sigma: float = 0.05        # std-dev of human pointing accuracy, meters
    neighborhood: float = 0.20  # candidate window half-width, meters
    t_p: int = 5               # min selected points for a pose to join X
    max_iters: int = 20
    tol: float = 1e-4          # endpoint convergence, meters

    def __post_init__(self):
        if min(self.sigma, self.neighborhood, self.t_p, self.max_iters, self.tol) <= 0:
            raise ValueError("interpretation parameters must be positive")


def candidate_points(graph: FactorGraph, seg: Segment, neighborhood: float):
    """All world-frame scan points within `neighborhood` of the segment.

    Returns (pose_ids, point_idxs, points) as parallel arrays.
    """
    nb2 = neighborhood * neighborhood
    ids, idxs, pts = [], [], []
    for scan in graph.scans:
        world = graph.world_points(scan.pose_id)
        if len(world) == 0:
            continue
        d2 = kernels.segment_sq_dists(world, seg.p0, seg.p1)
        hit = np.nonzero(d2 <= nb2)[0]
        if hit.size:
            ids.append(np.full(hit.size, scan.pose_id, dtype=np.int64))
            idxs.append(hit.astype(np.int64))
            pts.append(world[hit])
    if not ids:
        return (np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64), np.empty((0, 2)))
    return np.concatenate(ids), np.concatenate(idxs), np.concatenate(pts)


def _line_sq_dists(points, seg: Segment):
    """Squared distance to the infinite line through a segment."""
    return np.asarray((points - seg.cm) @ seg.normal) ** 2


def _responsibilities(d2, sigma, neighborhood):
    g = np.exp(-d2 / (2.0 * sigma * sigma)) / (sigma * math.sqrt(2.0 * math.pi))
    u = 1.0 / (2.0 * neighborhood)
    return (1.0 - OUTLIER_WEIGHT) * g / ((1.0 - OUTLIER_WEIGHT) * g + OUTLIER_WEIGHT * u)


def e_step(points, seg: Segment, sigma: float, neighborhood: float):
    """Responsibilities of each point under the Gaussian stroke-error model
    with a uniform outlier floor over the candidate window."""
    return _responsibilities(kernels.segment_sq_dists(points, seg.p0, seg.p1),
                             sigma, neighborhood)


def log_likelihood(points, seg: Segment, sigma: float, neighborhood: float,
                   line: bool = False) -> float:
    """Observed-data log-likelihood of the mixture over a candidate set.

    With line=True the Gaussian is over distance to the segment's infinite
    line, the model the weighted refit maximizes exactly (endpoint extent is
    bookkept separately); that is the likelihood whose EM iteration is
    provably monotone.
    """
    d2 = (_line_sq_dists(points, seg) if line
          else kernels.segment_sq_dists(points, seg.p0, seg.p1))
    g = np.exp(-d2 / (2.0 * sigma * sigma)) / (sigma * math.sqrt(2.0 * math.pi))
    u = 1.0 / (2.0 * neighborhood)
    return float(np.log((1.0 - OUTLIER_WEIGHT) * g + OUTLIER_WEIGHT * u).sum())


def m_step(points, weights) -> Segment:
    """Weighted segment refit; extent from the hard-assigned (w >= 0.5) points."""
    if float(np.sum(weights)) < 2.0:
        raise DegenerateFit("effective weight mass below 2")
    return fit_segment(points, weights, extent_min_weight=0.5)


def _clip_span(seg: Segment, stroke: Segment) -> Segment:
    """Clamp a fitted segment's extent to the stroke's span, projected onto
    the fitted line. The stroke marks *which patch* of a feature the user
    means; without this the candidate window crawls along the feature each
    iteration and the segment grows to the feature's full extent, destroying
    the stroke's locative meaning (fatal for colocation's cm matching)."""
    d = seg.direction
    c = seg.cm
    t0 = float((stroke.p0 - c) @ d)
    t1 = float((stroke.p1 - c) @ d)
    lo, hi = min(t0, t1), max(t0, t1)
    if hi - lo <= 1e-6:
        raise DegenerateFit("stroke projects to a point on the fitted line")
    return Segment(c + lo * d, c + hi * d)


def _match_endpoints(old: Segment, new: Segment) -> float:
    """Max endpoint motion, over the endpoint pairing that moves least."""
    straight = max(np.hypot(*(new.p0 - old.p0)), np.hypot(*(new.p1 - old.p1)))
    crossed = max(np.hypot(*(new.p0 - old.p1)), np.hypot(*(new.p1 - old.p0)))
    return min(straight, crossed)


def em_fit(graph: FactorGraph, seg0: Segment, params: InterpretationParams):
    """EM for one stroke: returns (segment, pose_ids, point_idxs, weights, ll_trace).

    ll_trace holds (before, after) observed-data log-likelihoods per
    iteration, both evaluated on that iteration's fixed candidate set, so
    monotonicity of the EM update is checkable directly. The iterated model
    is Gaussian over distance to the feature's line (the refit is its exact
    M-step); the capsule distance governs the candidate window and the
    final hard assignment, where the endpoint extent matters.
    """
    seg = seg0
    ids = idxs = pts = w = None
    trace = []
    for _ in range(params.max_iters):
        ids, idxs, pts = candidate_points(graph, seg, params.neighborhood)
        if len(pts) < 2:
            raise InsufficientSelection("stroke neighborhood contains fewer than 2 points")
        ll_before = log_likelihood(pts, seg, params.sigma, params.neighborhood, line=True)
        w = e_step(pts, seg, params.sigma, params.neighborhood)
        new_seg = m_step(pts, w)
        ll_after = log_likelihood(pts, new_seg, params.sigma, params.neighborhood, line=True)
        if ll_after < ll_before:
            # the refit maximizes the fixed-responsibility bound, but the
            # responsibilities come from the capsule window; near convergence
            # the mismatch inside the endpoint disks can turn a bound increase
            # into a tiny likelihood decrease -- keep the best iterate
            break
        trace.append((ll_before, ll_after))
        moved = _match_endpoints(seg, new_seg)
        seg = new_seg
        if moved < params.tol:
            break
    # final assignment against the converged segment
    ids, idxs, pts = candidate_points(graph, seg, params.neighborhood)
    w = e_step(pts, seg, params.sigma, params.neighborhood)
    keep = w >= 0.5
    return seg, ids[keep], idxs[keep], pts[keep], w[keep], trace


_RUN_GAP = 3  # pose-index gap that splits a selection into separate passes


def _runs(counts):
    """Split a {pose: point count} map into contiguous pose runs."""
    poses = sorted(counts)
    runs, cur = [], [poses[0]]
    for p in poses[1:]:
        if p - cur[-1] > _RUN_GAP:
            runs.append(cur)
            cur = []
        cur.append(p)
    runs.append(cur)
    return runs


def _trim_ordered(counts_a, counts_b, run_a, run_b):
    """Enforce max(run_a) < min(run_b) by shaving boundary poses from the
    side that loses fewer points. Returns (set_a, set_b) or None."""
    xa, xb = sorted(run_a), sorted(run_b)
    while xa and xb and xa[-1] >= xb[0]:
        if counts_a[xa[-1]] <= counts_b[xb[0]]:
            xa.pop()
        else:
            xb.pop(0)
    if not xa or not xb:
        return None
    return xa, xb


def _resolve_sides(ids_a, ids_b, t_p):
    """Pick one contiguous pose run per side, ordered in time, dropping
    whichever boundary poses cost the fewest selected points. A stroke over
    a revisited feature selects both passes; the run pairing assigns the
    early pass to side a and the late pass to side b (swapping stroke
    labels if the user drew the later feature first)."""

    def counts(ids):
        uniq, c = np.unique(ids, return_counts=True)
        return {int(p): int(n) for p, n in zip(uniq, c) if n >= t_p}

    ca, cb = counts(ids_a), counts(ids_b)
    if not ca or not cb:
        raise InsufficientSelection(
            f"pose sets empty after threshold t_p={t_p}: |X_a|={len(ca)}, |X_b|={len(cb)}")
    best = None
    for run_a in _runs(ca):
        for run_b in _runs(cb):
            for swap in (False, True):
                pair = (_trim_ordered(cb, ca, run_b, run_a) if swap
                        else _trim_ordered(ca, cb, run_a, run_b))
                if pair is None:
                    continue
                xa, xb = pair
                score = (sum((cb if swap else ca)[p] for p in xa)
                         + sum((ca if swap else cb)[p] for p in xb))
                if best is None or score > best[0]:
                    best = (score, tuple(xa), tuple(xb), swap)
    if best is None:
        raise InsufficientSelection("stroke pose ranges cannot be ordered")
    return best[1], best[2], best[3]


def interpret(graph: FactorGraph, raw: RawCorrection,
              params: InterpretationParams = InterpretationParams()) -> HumanCorrectionFactor:
    """Full stroke interpretation: EM per side, hard assignment, per-pose
    threshold filtering and temporal ordering of the two sides."""
    seg_a, ids_a, idx_a, pts_a, w_a, _ = em_fit(graph, raw.seg_a, params)
    seg_b, ids_b, idx_b, pts_b, w_b, _ = em_fit(graph, raw.seg_b, params)

    poses_a, poses_b, swap = _resolve_sides(ids_a, ids_b, params.t_p)
    stroke_a, stroke_b = raw.seg_a, raw.seg_b
    if swap:
        seg_a, seg_b = seg_b, seg_a
        ids_a, ids_b = ids_b, ids_a
        idx_a, idx_b = idx_b, idx_a
        pts_a, pts_b = pts_b, pts_a
        w_a, w_b = w_b, w_a
        stroke_a, stroke_b = stroke_b, stroke_a

    def selection(ids, idxs, pts, w, poses, seg, stroke):
        keep = np.isin(ids, poses)
        # refit the feature to its own side only, so observations rendered
        # from the other side's poses cannot skew the segment, then clamp
        # the extent back to the user's stroke span — EM may have slid the
        # segment along the feature, and the stroke marks which patch of it
        # the correction is about (colocation matches centers of mass)
        try:
            seg = _clip_span(fit_segment(pts[keep], w[keep]), stroke)
        except DegenerateFit as exc:
            raise InsufficientSelection(f"side degenerate after ordering: {exc}")
        near = kernels.segment_sq_dists(pts, seg.p0, seg.p1) <= params.neighborhood ** 2
        keep &= near
        sel = [(int(p), int(i)) for p, i in zip(ids[keep], idxs[keep])]
        return sel, seg

    sel_a, seg_a = selection(ids_a, idx_a, pts_a, w_a, poses_a, seg_a, stroke_a)
    sel_b, seg_b = selection(ids_b, idx_b, pts_b, w_b, poses_b, seg_b, stroke_b)
    overlap = set(sel_a) & set(sel_b)
    if overlap:
        sel_b = [s for s in sel_b if s not in overlap]

    return HumanCorrectionFactor(seg_a, seg_b, sel_a, sel_b, poses_a, poses_b, raw.mode)
