"""Joint optimization: residuals, Jacobians, LM behavior, information matrix."""

import math

import numpy as np
import pytest

from hitl_slam.geometry import Pose2D, Segment, Transform2D, rot2, wrap_angle
from hitl_slam.graph import (CorrectionMode, FactorGraph, HumanCorrectionFactor,
                             RelativePoseFactor, Scan)
from hitl_slam.optimizer import (Problem, ResidualWeights, SolverParams,
                                 information_matrix, optimize,
                                 pose_block_pattern, residual_human,
                                 residual_relative, total_cost)

W = ResidualWeights()


def consistent_chain(n=4):
    poses = np.array([[float(i), 0.0, 0.0] for i in range(n)])
    scans = [Scan(i, np.array([[0.0, 1.0], [0.5, 1.0]])) for i in range(n)]
    odom = [RelativePoseFactor(i, i + 1, Transform2D(0.0, (1.0, 0.0)), np.eye(3) * 100)
            for i in range(n - 1)]
    return FactorGraph(poses, scans, odom)


def random_graph(rng, n=6, modes=(CorrectionMode.COLOCATION,)):
    poses = np.column_stack([rng.uniform(-3, 3, (n, 2)), rng.uniform(-2, 2, n)])
    scans = [Scan(i, rng.uniform(-2, 2, (8, 2))) for i in range(n)]
    odom = [RelativePoseFactor(i, i + 1,
                               Transform2D(rng.uniform(-1, 1), rng.uniform(-1, 1, 2)),
                               np.diag(rng.uniform(10, 200, 3)))
            for i in range(n - 1)]
    g = FactorGraph(poses, scans, odom)
    for mode in modes:
        sel_a = [(p, i) for p in (0, 1) for i in range(4)]
        sel_b = [(p, i) for p in (n - 2, n - 1) for i in range(4)]
        h = HumanCorrectionFactor(
            Segment(rng.uniform(-2, 2, 2), rng.uniform(-2, 2, 2)),
            Segment(rng.uniform(-2, 2, 2), rng.uniform(-2, 2, 2)),
            sel_a, sel_b, (0, 1), (n - 2, n - 1), mode)
        g.human_factors.append(h)
    return g


# -------------------------------------------------------------- residuals

def test_residual_relative_satisfied_is_zero():
    f = RelativePoseFactor(0, 1, Transform2D(0.3, (1.0, 0.5)), np.eye(3))
    a = Pose2D(0.2, -0.1, 0.4)
    bt = a.as_transform().compose(f.z)
    b = Pose2D(bt.t[0], bt.t[1], bt.rotation)
    assert np.allclose(residual_relative(f, a, b), 0.0, atol=1e-12)


def test_residual_relative_x_displacement():
    f = RelativePoseFactor(0, 1, Transform2D.identity(), np.eye(3))
    r = residual_relative(f, Pose2D(0, 0, 0), Pose2D(0.1, 0.0, 0.0))
    assert np.allclose(r, [0.1, 0.0, 0.0], atol=1e-12)


def test_residual_relative_monotone_in_perturbation():
    rng = np.random.default_rng(4)
    f = RelativePoseFactor(0, 1, Transform2D(0.2, (1.0, 0.0)), np.diag([50, 50, 200]))
    a = Pose2D(0.5, 0.5, 0.3)
    bt = a.as_transform().compose(f.z)
    direction = rng.uniform(-1, 1, 3)
    prev = -1.0
    for s in np.linspace(0.0, 0.5, 11):
        d = s * direction
        b = Pose2D(bt.t[0] + d[0], bt.t[1] + d[1], bt.rotation + d[2])
        norm = float(np.linalg.norm(residual_relative(f, a, b)))
        assert norm >= prev - 1e-12
        prev = norm


def _two_wall_graph(y_b=0.0, theta_b=0.0):
    """Two poses, each observing 4 points on its own horizontal wall patch;
    side b's wall sits at y=y_b rotated theta_b about its center (2.5, y_b)."""
    poses = np.array([[0.0, 1.0, 0.0], [2.0, 1.0, 0.0]])
    xs = np.linspace(0.0, 1.0, 4)
    pts_a = np.stack([xs, np.zeros(4)], axis=1) - poses[0, :2]
    cm = np.array([2.5, y_b])
    R = rot2(theta_b)
    wall_b = cm + (np.stack([xs + 2.0, np.full(4, y_b)], axis=1) - cm) @ R.T
    pts_b = wall_b - poses[1, :2]
    scans = [Scan(0, pts_a), Scan(1, pts_b)]
    odom = [RelativePoseFactor(0, 1, Transform2D(0.0, (2.0, 0.0)), np.eye(3) * 100)]
    g = FactorGraph(poses, scans, odom)
    seg_a = Segment((0.0, 0.0), (1.0, 0.0))
    p0 = cm + (np.array([2.0, y_b]) - cm) @ R.T
    p1 = cm + (np.array([3.0, y_b]) - cm) @ R.T
    seg_b = Segment(p0, p1)
    sel_a = [(0, i) for i in range(4)]
    sel_b = [(1, i) for i in range(4)]
    return g, seg_a, seg_b, sel_a, sel_b


def test_residual_human_exact_fit_is_zero():
    g, seg_a, seg_b, sel_a, sel_b = _two_wall_graph()
    seg = Segment((0.0, 0.0), (3.0, 0.0))
    h = HumanCorrectionFactor(seg, seg, sel_a, sel_b, (0,), (1,),
                              CorrectionMode.COLOCATION)
    g.human_factors.append(h)
    ra, rb, rp = residual_human(h, g, W)
    assert ra < 2e-6 and rb < 2e-6 and abs(rp) < 5e-6


def test_residual_human_collinearity_offset():
    g, seg_a, seg_b, sel_a, sel_b = _two_wall_graph(y_b=0.25)
    h = HumanCorrectionFactor(seg_a, seg_b, sel_a, sel_b, (0,), (1,),
                              CorrectionMode.COLLINEARITY)
    g.human_factors.append(h)
    _, _, rp = residual_human(h, g, W)
    assert rp == pytest.approx(W.k1 * 0.25, abs=1e-9)


def test_residual_human_perpendicular_is_zero_when_perpendicular():
    g, seg_a, _, sel_a, sel_b = _two_wall_graph()
    seg_b = Segment((2.5, -0.5), (2.5, 0.5))
    h = HumanCorrectionFactor(seg_a, seg_b, sel_a, sel_b, (0,), (1,),
                              CorrectionMode.PERPENDICULARITY)
    g.human_factors.append(h)
    _, _, rp = residual_human(h, g, W)
    assert abs(rp) < 1e-9


def test_residual_human_parallel_rotation_cost():
    theta = math.radians(20)
    g, seg_a, seg_b, sel_a, sel_b = _two_wall_graph(theta_b=theta)
    h = HumanCorrectionFactor(seg_a, seg_b, sel_a, sel_b, (0,), (1,),
                              CorrectionMode.PARALLELISM)
    g.human_factors.append(h)
    _, _, rp = residual_human(h, g, W)
    assert rp == pytest.approx(W.k2 * (1.0 - math.cos(theta)), abs=1e-9)


def test_parallel_perpendicular_swap_invariance():
    rng = np.random.default_rng(19)
    for mode in (CorrectionMode.PARALLELISM, CorrectionMode.PERPENDICULARITY):
        g = random_graph(rng, modes=(mode,))
        h = g.human_factors[0]
        swapped = HumanCorrectionFactor(h.seg_b, h.seg_a, h.sel_b, h.sel_a,
                                        h.poses_b, h.poses_a, h.mode)
        _, _, rp1 = residual_human(h, g, W)
        _, _, rp2 = residual_human(swapped, g, W)
        assert rp1 == pytest.approx(rp2, abs=1e-9)


# -------------------------------------------------------------- jacobians

def test_jacobian_matches_central_differences():
    rng = np.random.default_rng(99)
    step = 1e-6
    for trial in range(12):
        mode = list(CorrectionMode)[trial % 4]
        g = random_graph(rng, modes=(mode,))
        prob = Problem(g)
        x = prob.pack()
        r, J = prob.evaluate(x)
        J = J.toarray()
        for col in rng.choice(prob.n_params, size=10, replace=False):
            xp, xm = x.copy(), x.copy()
            xp[col] += step
            xm[col] -= step
            rp, _ = prob.evaluate(xp, with_jac=False)
            rm, _ = prob.evaluate(xm, with_jac=False)
            fd = (rp - rm) / (2 * step)
            scale = np.maximum(np.abs(fd), np.abs(J[:, col]))
            err = np.abs(J[:, col] - fd) / np.where(scale > 1e-6, scale, 1.0)
            assert err.max() < 1e-5


# ------------------------------------------------------------- optimize

def test_optimize_zero_cost_graph_unchanged():
    g = consistent_chain()
    res = optimize(g)
    assert res.final_cost <= 1e-12
    assert np.allclose(res.graph.poses, g.poses, atol=SolverParams().param_tol)


def test_optimize_monotone_and_descending():
    rng = np.random.default_rng(5)
    g = random_graph(rng)
    res = optimize(g)
    assert res.final_cost <= res.initial_cost + 1e-12
    assert res.final_cost == pytest.approx(total_cost(res.graph), rel=1e-9)


def test_optimize_gauge_equivariance():
    rng = np.random.default_rng(23)
    g = random_graph(rng)
    res = optimize(g)
    t = Transform2D(0.9, (2.0, -1.0))
    g2 = g.copy()
    g2.poses[:, :2] = g2.poses[:, :2] @ t.R.T + t.t
    g2.poses[:, 2] = wrap_angle(g2.poses[:, 2] + t.rotation)
    for h in g2.human_factors:
        h.seg_a = h.seg_a.transformed(t)
        h.seg_b = h.seg_b.transformed(t)
    res2 = optimize(g2)
    expect = res.graph.poses.copy()
    expect[:, :2] = expect[:, :2] @ t.R.T + t.t
    expect[:, 2] = wrap_angle(expect[:, 2] + t.rotation)
    assert np.allclose(res2.graph.poses[:, :2], expect[:, :2], atol=1e-6)
    assert np.allclose(wrap_angle(res2.graph.poses[:, 2] - expect[:, 2]), 0.0, atol=1e-6)


def test_optimize_pulls_poses_toward_odometry():
    g = consistent_chain(5)
    g.poses[2:, :2] += [0.3, -0.2]  # kink the chain away from its measurements
    res = optimize(g)
    assert res.final_cost < 1e-10
    assert np.allclose(res.graph.poses, consistent_chain(5).poses, atol=1e-4)


# ------------------------------------------------------- information matrix

def test_information_matrix_block_tridiagonal_without_human_factors():
    g = consistent_chain(6)
    H = information_matrix(g)
    pat = pose_block_pattern(H, 6)
    expect = np.zeros((6, 6), dtype=bool)
    for i in range(6):
        for j in range(6):
            expect[i, j] = abs(i - j) <= 1
    assert np.array_equal(pat, expect)


def test_information_matrix_structural_oracle_with_human_factor():
    rng = np.random.default_rng(3)
    g = random_graph(rng, n=8)
    H = information_matrix(g)
    pat = pose_block_pattern(H, 8)
    # structural oracle: union over factors of their variable cross-products
    expect = np.zeros((8, 8), dtype=bool)
    for f in g.odometry:
        for a in (f.i, f.j):
            for b in (f.i, f.j):
                expect[a, b] = True
    for h in g.human_factors:
        involved = set(p for p, _ in h.sel_a) | set(p for p, _ in h.sel_b)
        for a in involved:
            for b in involved:
                expect[a, b] = True
    assert np.array_equal(pat, expect)


def test_information_matrix_symmetry():
    rng = np.random.default_rng(31)
    g = random_graph(rng)
    H = information_matrix(g).toarray()
    assert np.allclose(H, H.T, atol=1e-9)
