"""Explicit application of a human correction and error backpropagation.

compute_transform finds the rigid motion that places the second stroke's
feature correctly relative to the first for the given mode, zeroing motion
along any unconstrained dimensions. apply_rigid moves the later pose block
as a rigid body. backpropagate distributes the resulting discontinuity at
the block boundary over the intermediate chain, weighting each link by its
translation-covariance trace, so the chain composes exactly onto the moved
block.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSegment
from .geometry import Segment, Transform2D, rot2, wrap_angle
from .graph import CorrectionMode, FactorGraph


@dataclass(frozen=True)
class CorrectionPlan:
    """Rigid motion `transform` (pivot already folded into its translation)
    applied to every pose from `affected_start` to the end of the chain."""

    transform: Transform2D
    pivot: np.ndarray
    affected_start: int


def _align_angle(target_dir, source_dir) -> float:
    """Smallest rotation (mod pi, in (-pi/2, pi/2]) mapping source direction
    onto the target line; strokes carry no direction sign."""
    ang = math.atan2(target_dir[1], target_dir[0]) - math.atan2(source_dir[1], source_dir[0])
    ang = float(wrap_angle(ang))
    if ang > math.pi / 2:
        ang -= math.pi
    elif ang <= -math.pi / 2:
        ang += math.pi
    return ang


def compute_transform(seg_a: Segment, seg_b: Segment, mode: CorrectionMode) -> Transform2D:
    """World-frame rigid transform moving seg_b's feature into the relation
    `mode` asserts with seg_a. Rotation is about seg_b's center of mass."""
    if seg_a.length <= 0 or seg_b.length <= 0:
        raise DegenerateSegment("cannot correct against a zero-length segment")
    if mode is CorrectionMode.PERPENDICULARITY:
        phi = _align_angle(seg_a.normal, seg_b.direction)
    else:
        phi = _align_angle(seg_a.direction, seg_b.direction)

    pivot = seg_b.cm
    if mode is CorrectionMode.COLOCATION:
        extra = seg_a.cm - seg_b.cm
    elif mode is CorrectionMode.COLLINEARITY:
        # remove only the offset perpendicular to seg_a's infinite line
        n = seg_a.normal
        extra = -float((seg_b.cm - seg_a.cm) @ n) * n
    else:
        extra = np.zeros(2)

    R = rot2(phi)
    translation = pivot - R @ pivot + extra
    return Transform2D(phi, translation)


def apply_rigid(graph: FactorGraph, plan: CorrectionPlan) -> FactorGraph:
    """Move poses [affected_start, N) rigidly; relative structure preserved."""
    out = graph.copy()
    k = plan.affected_start
    if k < 0 or k >= out.num_poses:
        raise IndexError(f"affected_start {k} outside graph")
    A = plan.transform
    xy = out.poses[k:, :2]
    out.poses[k:, :2] = xy @ A.R.T + A.t
    out.poses[k:, 2] = wrap_angle(out.poses[k:, 2] + A.rotation)
    return out


def _interp(C: Transform2D, beta: float) -> Transform2D:
    """Linear interpolation of a correction: fraction beta of its rotation
    angle and translation vector."""
    return Transform2D(beta * C.rotation, beta * C.t)


def backpropagate(graph: FactorGraph, start_index: int, c_index: int, C: Transform2D):
    """Distribute correction C (right-composed onto pose c_index) over the
    links strictly after start_index up to c_index.

    Each link i absorbs a fraction alpha_i of C's rotation and translation,
    weighted by the trace of its translation covariance (inverse of the
    odometry information block). The incremental updates compose exactly:
    U_1 ... U_n == C.

    Returns (graph', updates). If the range is empty the input graph is
    returned unchanged with no updates.
    """
    if c_index <= start_index:
        return graph, []
    out = graph.copy()
    links = range(start_index, c_index)  # link k connects pose k to k+1
    factors = {f.i: f for f in graph.odometry}
    weights = []
    for k in links:
        f = factors.get(k)
        if f is None:
            weights.append(1.0)
        else:
            cov = np.linalg.inv(f.info)
            weights.append(float(np.trace(cov[:2, :2])))
    w = np.asarray(weights)
    beta = np.concatenate([[0.0], np.cumsum(w) / w.sum()])
    beta[-1] = 1.0

    updates = []
    prev = Transform2D.identity()
    for n, k in enumerate(links, start=1):
        cur = _interp(C, beta[n])
        updates.append(prev.inverse().compose(cur))
        prev = cur
        # pose k+1 moves by the interpolated correction, right-composed
        pose_t = Transform2D(out.poses[k + 1, 2], out.poses[k + 1, :2])
        moved = pose_t.compose(cur)
        out.poses[k + 1, :2] = moved.t
        out.poses[k + 1, 2] = moved.rotation
    return out, updates


def _pose_transform(poses, i) -> Transform2D:
    return Transform2D(poses[i, 2], poses[i, :2])


def reconcile_odometry(graph: FactorGraph, old_poses) -> list:
    """Fold pose-estimate changes into the relative-pose measurements.

    The explicit correction and backpropagation are updates to the relative
    transformations between poses, not merely to the estimates; each chain
    link whose relative estimate changed has its measurement z composed
    with the same relative change, so the link's residual is preserved and
    the joint optimization refines the corrected configuration instead of
    reverting it. Returns the indices of the updated links.
    """
    updated = []
    for f in graph.odometry:
        rel_old = _pose_transform(old_poses, f.i).inverse().compose(
            _pose_transform(old_poses, f.j))
        rel_new = _pose_transform(graph.poses, f.i).inverse().compose(
            _pose_transform(graph.poses, f.j))
        delta = rel_old.inverse().compose(rel_new)
        if abs(delta.rotation) > 1e-12 or abs(delta.translation[0]) > 1e-12 \
                or abs(delta.translation[1]) > 1e-12:
            f.z = f.z.compose(delta)
            updated.append(f.i)
    return updated


def discontinuity_correction(pre_rigid: FactorGraph, post_rigid: FactorGraph, b0: int) -> Transform2D:
    """Correction C at pose c = b0-1 that restores the original relative
    transform between c and the (moved) first pose of the corrected block."""
    c = b0 - 1
    cp = Transform2D(pre_rigid.poses[c, 2], pre_rigid.poses[c, :2])
    b_old = Transform2D(pre_rigid.poses[b0, 2], pre_rigid.poses[b0, :2])
    b_new = Transform2D(post_rigid.poses[b0, 2], post_rigid.poses[b0, :2])
    a_cb = cp.inverse().compose(b_old)  # original relative transform c -> b0
    target_c = b_new.compose(a_cb.inverse())
    return cp.inverse().compose(target_c)
