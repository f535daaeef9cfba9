"""Factor-graph structure, world-point transforms and validation."""

import math

import numpy as np
import pytest

from hitl_slam.errors import UnknownPose
from hitl_slam.geometry import Segment, Transform2D
from hitl_slam.graph import (CorrectionMode, FactorGraph, HumanCorrectionFactor,
                             RelativePoseFactor, Scan, validate)


def chain(n=3, theta=0.0):
    poses = np.array([[float(i), 0.0, theta] for i in range(n)])
    scans = [Scan(i, np.array([[1.0, 0.0]])) for i in range(n)]
    odom = [RelativePoseFactor(i, i + 1, Transform2D(0.0, (1.0, 0.0)), np.eye(3) * 100)
            for i in range(n - 1)]
    return FactorGraph(poses, scans, odom)


def test_world_points_identity_pose():
    g = chain()
    assert np.allclose(g.world_points(0), [[1.0, 0.0]])


def test_world_points_quarter_turn():
    g = FactorGraph(np.array([[2.0, 3.0, math.pi / 2], [0, 0, 0]]),
                    [Scan(0, np.array([[1.0, 0.0]]))],
                    [RelativePoseFactor(0, 1, Transform2D.identity(), np.eye(3))])
    assert np.allclose(g.world_points(0), [[2.0, 4.0]])


def test_world_points_roundtrip():
    rng = np.random.default_rng(2)
    for _ in range(20):
        pose = rng.uniform(-5, 5, 3)
        pts = rng.uniform(-2, 2, (10, 2))
        g = FactorGraph(np.array([pose, pose]), [Scan(0, pts)],
                        [RelativePoseFactor(0, 1, Transform2D.identity(), np.eye(3))])
        world = g.world_points(0)
        t = Transform2D(pose[2], pose[:2])
        assert np.allclose(t.inverse().apply(world), pts, atol=1e-9)


def test_world_points_unknown_pose():
    with pytest.raises(UnknownPose):
        chain().world_points(99)


def test_validate_clean_graph():
    assert validate(chain()) == []


def test_validate_chain_break():
    g = chain(4)
    g.odometry[1] = RelativePoseFactor(1, 3, Transform2D.identity(), np.eye(3))
    out = validate(g)
    assert any(v.startswith("ChainBreak(1,3)") for v in out)


def test_validate_ordering_violation():
    g = chain(6)
    h = HumanCorrectionFactor(Segment((0, 0), (1, 0)), Segment((0, 1), (1, 1)),
                              [(2, 0), (3, 0)], [(3, 0), (4, 0)],
                              (2, 3), (3, 4), CorrectionMode.COLOCATION)
    g.human_factors.append(h)
    out = validate(g)
    assert any("OrderingViolation" in v for v in out)


def test_validate_bad_information():
    g = chain()
    g.odometry[0].info = np.array([[1.0, 2.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    assert any("AsymmetricInformation" in v for v in validate(g))
    g2 = chain()
    g2.odometry[0].info = np.diag([1.0, -1.0, 1.0])
    assert any("NonPositiveInformation" in v for v in validate(g2))


def test_validate_is_pure():
    g = chain()
    before = g.poses.copy()
    validate(g)
    validate(g)
    assert np.array_equal(g.poses, before)


def test_copy_is_deep():
    g = chain()
    g2 = g.copy()
    g2.poses[0, 0] = 99.0
    g2.scans[0].points[0, 0] = 99.0
    assert g.poses[0, 0] == 0.0
    assert g.scans[0].points[0, 0] == 1.0
