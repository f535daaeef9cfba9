"""SE(2) algebra, point-segment distance and weighted segment fitting.

All angles are radians normalized to (-pi, pi]; all lengths are meters.
"""

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import DegenerateFit, DegenerateSegment


def wrap_angle(theta):
    """Normalize an angle (or array of angles) to (-pi, pi]."""
    w = np.mod(np.asarray(theta, dtype=float) + np.pi, 2.0 * np.pi) - np.pi
    return np.where(w == -np.pi, np.pi, w)[()]  # half-open on the left


def rot2(theta):
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def drot2(theta):
    """Derivative of rot2 with respect to theta."""
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[-s, -c], [c, -s]])


PERP = np.array([[0.0, -1.0], [1.0, 0.0]])  # 90 degree CCW rotation


@dataclass(frozen=True)
class Pose2D:
    x: float
    y: float
    theta: float

    def __post_init__(self):
        object.__setattr__(self, "theta", float(wrap_angle(self.theta)))

    @property
    def xy(self):
        return np.array([self.x, self.y])

    def as_transform(self):
        return Transform2D(self.theta, (self.x, self.y))

    def to_array(self):
        return np.array([self.x, self.y, self.theta])


@dataclass(frozen=True)
class Transform2D:
    """Rigid transform: p -> R(rotation) @ p + translation."""

    rotation: float
    translation: tuple = (0.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "rotation", float(wrap_angle(self.rotation)))
        t = np.asarray(self.translation, dtype=float)
        object.__setattr__(self, "translation", (float(t[0]), float(t[1])))

    @property
    def t(self):
        return np.array(self.translation)

    @property
    def R(self):
        return rot2(self.rotation)

    def apply(self, points):
        return np.asarray(points, dtype=float) @ self.R.T + self.t

    def compose(self, other):
        """self then-applied-after other: (self * other)(p) = self(other(p))."""
        return Transform2D(self.rotation + other.rotation, self.R @ other.t + self.t)

    def inverse(self):
        return Transform2D(-self.rotation, -(self.R.T @ self.t))

    def matrix(self):
        m = np.eye(3)
        m[:2, :2] = self.R
        m[:2, 2] = self.t
        return m

    @staticmethod
    def identity():
        return Transform2D(0.0, (0.0, 0.0))

    @staticmethod
    def from_matrix(m):
        return Transform2D(np.arctan2(m[1, 0], m[0, 0]), (m[0, 2], m[1, 2]))


def compose(a: Pose2D, rel: Transform2D) -> Pose2D:
    """Chain a relative motion onto a pose: a (+) rel."""
    xy = a.xy + rot2(a.theta) @ rel.t
    return Pose2D(xy[0], xy[1], a.theta + rel.rotation)


def relative(a: Pose2D, b: Pose2D) -> Transform2D:
    """The transform rel with compose(a, rel) == b."""
    d = rot2(a.theta).T @ (b.xy - a.xy)
    return Transform2D(b.theta - a.theta, d)


@dataclass(frozen=True)
class Segment:
    p0: np.ndarray
    p1: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "p0", np.asarray(self.p0, dtype=float).copy())
        object.__setattr__(self, "p1", np.asarray(self.p1, dtype=float).copy())

    @property
    def cm(self):
        return 0.5 * (self.p0 + self.p1)

    @property
    def length(self):
        return float(np.hypot(*(self.p1 - self.p0)))

    @property
    def direction(self):
        d = self.p1 - self.p0
        n = np.hypot(*d)
        if n == 0.0:
            raise DegenerateSegment("zero-length segment has no direction")
        return d / n

    @property
    def normal(self):
        """Unit normal, left of the p0 -> p1 direction."""
        return PERP @ self.direction

    def transformed(self, t: Transform2D):
        return Segment(t.apply(self.p0), t.apply(self.p1))


def point_segment_sq_dist(p, seg: Segment) -> float:
    """Squared Euclidean distance from p to the nearest point of the closed segment."""
    return float(kernels.segment_sq_dists(np.asarray(p, dtype=float)[None, :], seg.p0, seg.p1)[0])


def _principal_direction(scatter):
    """Unit eigenvector of the larger eigenvalue of a 2x2 symmetric matrix,
    sign-canonicalized toward +x then +y; isotropic ties resolve to +x."""
    evals, evecs = np.linalg.eigh(scatter)
    if abs(evals[1] - evals[0]) <= 1e-12 * max(abs(evals[1]), 1e-300):
        return np.array([1.0, 0.0])
    d = evecs[:, 1]  # eigh sorts ascending
    if d[0] < 0 or (abs(d[0]) < 1e-15 and d[1] < 0):
        d = -d
    return d


def fit_segment(points, weights, extent_min_weight=0.0) -> Segment:
    """Weighted total-least-squares segment through a point set.

    The line passes through the weighted centroid along the principal axis
    of the weighted scatter; endpoints are the extremal projections of the
    points with weight >= extent_min_weight (all positive-weight points by
    default). p0 -> p1 runs along the canonical (+x, then +y) direction.
    """
    pts = np.asarray(points, dtype=float)
    w = np.asarray(weights, dtype=float)
    if pts.ndim != 2 or len(pts) != len(w):
        raise ValueError("points and weights must have matching length")
    mask = w > 0.0
    if mask.sum() < 2:
        raise DegenerateFit("need at least two points with positive weight")
    pts, w = pts[mask], w[mask]
    wsum = w.sum()
    centroid = (w[:, None] * pts).sum(axis=0) / wsum
    rel = pts - centroid
    scatter = (rel * w[:, None]).T @ rel / wsum
    if np.trace(scatter) <= 1e-24:
        raise DegenerateFit("all points coincident")
    d = _principal_direction(scatter)

    ext = w >= extent_min_weight if extent_min_weight > 0.0 else slice(None)
    proj = rel[ext] @ d
    if proj.size < 2:
        raise DegenerateFit("fewer than two points define the segment extent")
    lo, hi = proj.min(), proj.max()
    if hi - lo <= 0.0:
        raise DegenerateFit("zero segment extent")
    return Segment(centroid + lo * d, centroid + hi * d)
