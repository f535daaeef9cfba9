"""The factor graph: poses, scans, odometry chain and human correction factors."""

import copy
import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import UnknownPose
from .geometry import Pose2D, Segment, Transform2D, rot2, wrap_angle


class CorrectionMode(enum.Enum):
    COLOCATION = "colocation"
    COLLINEARITY = "collinearity"
    PERPENDICULARITY = "perpendicularity"
    PARALLELISM = "parallelism"


@dataclass
class Scan:
    """2D point cloud in the sensor frame, attached to one pose."""

    pose_id: int
    points: np.ndarray  # (M, 2)

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float).reshape(-1, 2)


@dataclass
class RelativePoseFactor:
    i: int
    j: int
    z: Transform2D
    info: np.ndarray  # 3x3 symmetric positive definite

    def __post_init__(self):
        self.info = np.asarray(self.info, dtype=float).reshape(3, 3)


@dataclass
class HumanCorrectionFactor:
    """Interpreted stroke pair: fitted segments, selected observations, pose
    sets and the geometric relation the human asserted between them."""

    seg_a: Segment
    seg_b: Segment
    sel_a: list  # [(pose_id, point_idx), ...]
    sel_b: list
    poses_a: tuple  # sorted pose ids
    poses_b: tuple
    mode: CorrectionMode


@dataclass
class FactorGraph:
    poses: np.ndarray  # (N, 3) of x, y, theta
    scans: list
    odometry: list
    human_factors: list = field(default_factory=list)

    def __post_init__(self):
        self.poses = np.asarray(self.poses, dtype=float).reshape(-1, 3)

    @property
    def num_poses(self):
        return len(self.poses)

    def pose(self, i) -> Pose2D:
        if not 0 <= i < len(self.poses):
            raise UnknownPose(f"pose {i} outside [0, {len(self.poses)})")
        return Pose2D(*self.poses[i])

    def world_points(self, pose_id) -> np.ndarray:
        """Scan points of one pose transformed into the world frame."""
        if not 0 <= pose_id < len(self.poses):
            raise UnknownPose(f"pose {pose_id} outside [0, {len(self.poses)})")
        x, y, theta = self.poses[pose_id]
        pts = np.empty((0, 2))
        for scan in self.scans:
            if scan.pose_id == pose_id:
                pts = scan.points
                break
        return pts @ rot2(theta).T + np.array([x, y])

    def scan_for(self, pose_id):
        for scan in self.scans:
            if scan.pose_id == pose_id:
                return scan
        return None

    def copy(self):
        return copy.deepcopy(self)

    def normalize_angles(self):
        self.poses[:, 2] = wrap_angle(self.poses[:, 2])


def validate(graph: FactorGraph) -> list:
    """Check all structural invariants; violations are returned, not raised."""
    out = []
    n = graph.num_poses
    if n < 2:
        out.append("TooFewPoses")
    covered = set()
    for f in graph.odometry:
        if f.j != f.i + 1:
            out.append(f"ChainBreak({f.i},{f.j})")
        if not (0 <= f.i < n and 0 <= f.j < n):
            out.append(f"FactorOutOfRange({f.i},{f.j})")
            continue
        covered.add(f.i)
        info = f.info
        if not np.allclose(info, info.T, atol=1e-9):
            out.append(f"AsymmetricInformation({f.i},{f.j})")
        elif np.linalg.eigvalsh(info).min() <= 0:
            out.append(f"NonPositiveInformation({f.i},{f.j})")
    if covered != set(range(n - 1)):
        missing = sorted(set(range(n - 1)) - covered)
        if missing:
            out.append(f"ChainGap({missing[0]})")
    for s in graph.scans:
        if not 0 <= s.pose_id < n:
            out.append(f"ScanUnknownPose({s.pose_id})")
    for k, h in enumerate(graph.human_factors):
        if not h.poses_a or not h.poses_b:
            out.append(f"EmptyPoseSet(h{k})")
            continue
        if max(h.poses_a) >= min(h.poses_b):
            out.append(f"OrderingViolation(h{k})")
        if set(h.sel_a) & set(h.sel_b):
            out.append(f"OverlappingSelection(h{k})")
        for pid in h.poses_a:
            if sum(1 for p, _ in h.sel_a if p == pid) < 1:
                out.append(f"UnsupportedPose(h{k},{pid})")
        if h.seg_a.length <= 0 or h.seg_b.length <= 0:
            out.append(f"DegenerateSegment(h{k})")
    return out
