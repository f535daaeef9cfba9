"""File formats round-trip bit-exactly; synthetic generators match their own
ground truth when noise is removed."""

import numpy as np
import pytest

from hitl_slam import dataset, metrics
from hitl_slam.errors import ParseError, VersionMismatch
from hitl_slam.geometry import Segment
from hitl_slam.graph import CorrectionMode
from hitl_slam.interpret import RawCorrection


@pytest.fixture(scope="module")
def room():
    cfg = dataset.LostPosesConfig(trans_noise=0.002, rot_noise=0.008, seed=5)
    return dataset.generate_lost_poses(cfg)


# ------------------------------------------------------------- round-trips

def test_graph_round_trip_bit_exact(room, tmp_path):
    graph, meta, _, _ = room
    p1, p2 = tmp_path / "a.graph", tmp_path / "b.graph"
    dataset.save_graph(graph, p1, meta)
    g2, meta2 = dataset.load_graph(p1)
    assert meta2 == meta
    assert np.array_equal(g2.poses, graph.poses)
    assert len(g2.scans) == len(graph.scans)
    for s1, s2 in zip(graph.scans, g2.scans):
        assert s1.pose_id == s2.pose_id
        assert np.array_equal(s1.points, s2.points)
    for f1, f2 in zip(graph.odometry, g2.odometry):
        assert (f1.i, f1.j) == (f2.i, f2.j)
        assert np.array_equal(np.asarray(f1.z.t), np.asarray(f2.z.t))
        assert f1.z.rotation == f2.z.rotation
        assert np.array_equal(f1.info, f2.info)
    # a second save of the reloaded graph is byte-identical
    dataset.save_graph(g2, p2, meta2)
    assert p1.read_bytes() == p2.read_bytes()


def test_script_round_trip_bit_exact(tmp_path):
    rng = np.random.default_rng(7)
    raws = [RawCorrection(Segment(rng.uniform(-5, 5, 2), rng.uniform(-5, 5, 2)),
                          Segment(rng.uniform(-5, 5, 2), rng.uniform(-5, 5, 2)),
                          mode)
            for mode in CorrectionMode]
    p1, p2 = tmp_path / "a.script", tmp_path / "b.script"
    dataset.save_script(raws, p1)
    loaded = dataset.load_script(p1)
    assert [r.mode for r in loaded] == [r.mode for r in raws]
    for r1, r2 in zip(raws, loaded):
        for s1, s2 in ((r1.seg_a, r2.seg_a), (r1.seg_b, r2.seg_b)):
            assert np.array_equal(np.asarray(s1.p0), np.asarray(s2.p0))
            assert np.array_equal(np.asarray(s1.p1), np.asarray(s2.p1))
    dataset.save_script(loaded, p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_truth_round_trip_bit_exact(room, tmp_path):
    _, _, selectors, measurements = room
    p1, p2 = tmp_path / "a.truth", tmp_path / "b.truth"
    dataset.save_truth(selectors, measurements, p1)
    sel2, meas2 = dataset.load_truth(p1)
    assert meas2 == measurements
    assert [s.name for s in sel2] == [s.name for s in selectors]
    assert [s.pose_range for s in sel2] == [s.pose_range for s in selectors]
    dataset.save_truth(sel2, meas2, p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_checked_in_fixtures_load(repo_fixtures=None):
    import pathlib
    fx = pathlib.Path(__file__).resolve().parents[1] / "fixtures"
    for stem in ("lost_poses", "bent_hallway"):
        graph, meta = dataset.load_graph(fx / f"{stem}.graph")
        assert graph.num_poses > 10 and "max_range" in meta
        raws = dataset.load_script(fx / f"{stem}.script")
        assert 2 <= len(raws) <= 5
        selectors, measurements = dataset.load_truth(fx / f"{stem}.truth")
        assert selectors and measurements


# ------------------------------------------------------------ parse errors

def _write(tmp_path, text, name="f"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_empty_file_rejected(tmp_path):
    with pytest.raises(ParseError):
        dataset.load_graph(_write(tmp_path, ""))


def test_bad_magic_rejected(tmp_path):
    with pytest.raises(ParseError):
        dataset.load_graph(_write(tmp_path, "NOPE 1\n"))


def test_version_mismatch(tmp_path):
    with pytest.raises(VersionMismatch):
        dataset.load_graph(_write(tmp_path, "HITLG 99\nPOSE 0 0.0 0.0 0.0\n"))


def test_unknown_tag_reports_line_and_offset(tmp_path):
    p = _write(tmp_path, "HITLG 1\nPOSE 0 0.0 0.0 0.0\nBOGUS 1 2\n")
    with pytest.raises(ParseError) as exc:
        dataset.load_graph(p)
    assert ":3" in str(exc.value) and "offset" in str(exc.value)


def test_truncated_scan_rejected(tmp_path):
    p = _write(tmp_path, "HITLG 1\nPOSE 0 0.0 0.0 0.0\nSCAN 0 2 1.0 2.0\n")
    with pytest.raises(ParseError):
        dataset.load_graph(p)


def test_non_contiguous_pose_ids_rejected(tmp_path):
    p = _write(tmp_path, "HITLG 1\nPOSE 0 0.0 0.0 0.0\nPOSE 2 1.0 0.0 0.0\n")
    with pytest.raises(ParseError):
        dataset.load_graph(p)


def test_script_unknown_mode_rejected(tmp_path):
    p = _write(tmp_path, "HITLS 1\nCORR teleport 0 0 1 0 0 1 1 1\n")
    with pytest.raises(ParseError):
        dataset.load_script(p)


def test_comments_and_blank_lines_ignored(tmp_path):
    p = _write(tmp_path, "HITLG 1\n\n# a comment\nPOSE 0 1.5 -2.0 0.25\n")
    graph, _ = dataset.load_graph(p)
    assert np.array_equal(graph.poses, [[1.5, -2.0, 0.25]])


# -------------------------------------------------------------- generators

def test_lost_poses_config_rejects_long_laser():
    with pytest.raises(ValueError):
        dataset.LostPosesConfig(laser_range=7.0)


def test_lost_poses_noise_free_matches_truth():
    cfg = dataset.LostPosesConfig(trans_noise=1e-12, rot_noise=1e-12)
    graph, _, selectors, measurements = dataset.generate_lost_poses(cfg)
    rep = metrics.ground_truth_report(graph, selectors, measurements)
    assert rep.mean_translation_error < 1e-6
    assert rep.mean_angular_error < 1e-6


def test_lost_poses_scans_respect_range():
    graph, meta, _, _ = dataset.generate_lost_poses()
    r = float(meta["max_range"])
    for s in graph.scans:
        if len(s.points):
            assert np.hypot(s.points[:, 0], s.points[:, 1]).max() <= r + 1e-9


def test_lost_poses_walls_drift_apart():
    # with noise on, the revisited wall lands visibly away from truth
    graph, _, selectors, measurements = dataset.generate_lost_poses()
    rep = metrics.ground_truth_report(graph, selectors, measurements)
    width = [r for r in rep.rows
             if r.kind == "distance" and r.feature_1 == "west"][0]
    assert width.error >= 0.1


def test_bent_hallway_noise_free_bend_angle():
    # the estimated chain kinks by exactly the injected bias at the midpoint,
    # while the scans themselves still come from the straight true hallway
    cfg = dataset.BentHallwayConfig(trans_noise=1e-12, rot_noise=1e-12)
    graph, _, _, _ = dataset.generate_bent_hallway(cfg)
    mid = graph.num_poses // 2
    assert np.allclose(graph.poses[:mid, 2], 0.0, atol=1e-9)
    assert np.allclose(graph.poses[mid + 1:, 2], cfg.bias, atol=1e-9)


def test_bent_hallway_zero_bias_is_straight():
    cfg = dataset.BentHallwayConfig(bias=0.0, trans_noise=1e-12, rot_noise=1e-12)
    graph, _, selectors, measurements = dataset.generate_bent_hallway(cfg)
    rep = metrics.ground_truth_report(graph, selectors, measurements)
    assert rep.mean_angular_error < 1e-6


def test_generation_is_deterministic():
    g1, _, _, _ = dataset.generate_lost_poses()
    g2, _, _, _ = dataset.generate_lost_poses()
    assert np.array_equal(g1.poses, g2.poses)
    for s1, s2 in zip(g1.scans, g2.scans):
        assert np.array_equal(s1.points, s2.points)
